//! Desk-scale studies: stationary-phase rate, CGO decay and threshold, forward
//! checks, stability curve, reconstruction identity and uniqueness sweep.
//!
//! Every study is a pure function of an [`ExperimentConfig`]; outputs are returned
//! as in-memory artifacts (CSV bytes, SVG text, a JSON summary) plus a pass flag.
//! Every CSV row carries the resolved configuration hash.

use crate::cgo::{build_cgo, decay_threshold, growth_check, remainder_report, CgoSolution, Side};
use crate::error::{Error, Result};
use crate::fit::{loglog_slope, loglog_slope_tail};
use crate::forward::{
    assemble_dn, boundary_pairing, cauchy_distance_data, pairing, probe_traces, DirichletSolver, DNMap,
};
use crate::grid::{extend_zero, lp_norm, make_grid, Domain, Field, Grid2D, Potential, Support, C64};
use crate::io::{heatmap_svg, loglog_svg, to_csv};
use crate::phase::{stat_phase_errors, PhaseParams};
use crate::potentials::{spectral_field, Bump};
use crate::recon::{
    identity_check, reconstruct_from_dn, relative_error_on, scan_points, stability_bound, tau_schedule, TauChoice,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
    pub domain: Domain,
    /// Radius bound `R` of the admissible domains.
    pub radius: f64,
}

impl GridSpec {
    pub fn unit_disk(n: usize, half_width: f64) -> Self {
        GridSpec { n, half_width, domain: Domain::unit_disk(), radius: 1.0 }
    }

    pub fn build(&self) -> Result<Arc<Grid2D>> {
        make_grid(self.half_width, self.n, self.domain, self.radius)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatPhaseConfig {
    pub grid: GridSpec,
    pub s_values: Vec<f64>,
    pub fields_per_s: usize,
    pub taus: Vec<f64>,
    pub pad: usize,
    /// Largest allowed `measured / bound`.
    pub ratio_limit: f64,
    /// Allowed distance of the fitted slope from `-s/2`.
    pub slope_tolerance: f64,
}

impl Default for StatPhaseConfig {
    fn default() -> Self {
        StatPhaseConfig {
            grid: GridSpec::unit_disk(256, 2.0),
            s_values: vec![0.25, 0.75, 1.0],
            fields_per_s: 5,
            taus: (0..9).map(|i| 4.0 * 2f64.powi(i)).collect(),
            pad: 2,
            ratio_limit: 1.25,
            slope_tolerance: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CgoConfig {
    pub grid: GridSpec,
    pub bump: Bump,
    /// Scan points `[x1, x2]` for the sup over `z0`.
    pub z0s: Vec<[f64; 2]>,
    pub taus: Vec<f64>,
    /// Integrability exponent for the `L^4`-type threshold.
    pub p: f64,
    /// `R` in the growth bound `C e^{4 R^2 tau}`.
    pub growth_radius: f64,
    /// Bump amplitudes for the threshold study.
    pub amplitudes: Vec<f64>,
    pub threshold_bracket: [f64; 2],
    pub threshold_rel_tol: f64,
}

impl Default for CgoConfig {
    fn default() -> Self {
        CgoConfig {
            grid: GridSpec::unit_disk(128, 1.25),
            bump: Bump::standard(),
            z0s: vec![[0.0, 0.0], [0.3, 0.2], [0.0, -0.4], [0.5, 0.0]],
            taus: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            p: 4.0,
            growth_radius: 1.25,
            amplitudes: vec![0.0, 20.0, 40.0, 80.0],
            threshold_bracket: [0.25, 1024.0],
            threshold_rel_tol: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardConfig {
    pub grid: GridSpec,
    pub bump: Bump,
    /// Resolutions for the manufactured-solution order study.
    pub order_resolutions: Vec<usize>,
    pub max_mode: usize,
    pub mode_tolerance: f64,
    pub symmetry_tolerance: f64,
    /// Relative noise level added to emitted DN maps.
    pub noise: f64,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig {
            grid: GridSpec::unit_disk(128, 1.25),
            bump: Bump::standard(),
            order_resolutions: vec![64, 128, 256],
            max_mode: 4,
            mode_tolerance: 0.03,
            symmetry_tolerance: 1e-6,
            noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconConfig {
    pub grid: GridSpec,
    /// Potential `q1` of the identity check and the unknown of data reconstruction.
    pub bump: Bump,
    /// Potential `q2` of the identity check.
    pub partner: Bump,
    pub tau: f64,
    /// Stride (in nodes) of the identity-check scan.
    pub stride: usize,
    pub defect_tolerance: f64,
    /// Color scale `[lo, hi]` of the heatmaps.
    pub heatmap_scale: [f64; 2],
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            grid: GridSpec::unit_disk(128, 1.25),
            bump: Bump::standard(),
            partner: Bump { center: [-0.2, 0.15], radius: 0.4, power: 3, amplitude: 0.5 },
            tau: 64.0,
            stride: 8,
            defect_tolerance: 0.02,
            heatmap_scale: [-1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub grid: GridSpec,
    pub base: Bump,
    pub perturbation: Bump,
    /// Perturbation sizes; the first is the calibration anchor.
    pub epsilons: Vec<f64>,
    pub s: f64,
    pub alpha: f64,
    pub slack: f64,
    pub noise: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            grid: GridSpec::unit_disk(64, 1.25),
            base: Bump::standard(),
            perturbation: Bump { center: [-0.2, 0.15], radius: 0.4, power: 3, amplitude: 1.0 },
            epsilons: vec![1e-1, 1e-2, 1e-3, 1e-4],
            s: 1.0,
            alpha: 0.5,
            slack: 3.0,
            noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniquenessConfig {
    /// Squared radius of the disk domain.
    pub rho_squared: f64,
    pub n: usize,
    /// Half-width of the grid in units of the disk radius.
    pub half_width_factor: f64,
    /// The unknown, in unit-disk coordinates; rescaled onto the disk of radius `rho`.
    pub bump: Bump,
    pub taus: Vec<f64>,
    pub reduction_factor: f64,
    /// Relative tolerance for "nonincreasing".
    pub monotone_slack: f64,
    /// Relative inner radii for the diagnostic region errors.
    pub inner_radii: Vec<f64>,
    pub heatmap_scale: [f64; 2],
}

impl Default for UniquenessConfig {
    fn default() -> Self {
        UniquenessConfig {
            rho_squared: 1.0 / 32.0,
            n: 128,
            half_width_factor: 1.25,
            bump: Bump { center: [0.1, -0.05], radius: 1.0, power: 2, amplitude: 0.05 },
            taus: vec![8.0, 16.0, 32.0, 64.0, 128.0],
            reduction_factor: 3.0,
            monotone_slack: 0.02,
            inner_radii: vec![0.75, 0.5],
            heatmap_scale: [0.0, 1.6],
        }
    }
}

/// Resolved configuration of every study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: String,
    pub statphase: StatPhaseConfig,
    pub cgo: CgoConfig,
    pub forward: ForwardConfig,
    pub recon: ReconConfig,
    pub stability: StabilityConfig,
    pub uniqueness: UniquenessConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 20_150_601,
            output_dir: "out".into(),
            statphase: StatPhaseConfig::default(),
            cgo: CgoConfig::default(),
            forward: ForwardConfig::default(),
            recon: ReconConfig::default(),
            stability: StabilityConfig::default(),
            uniqueness: UniquenessConfig::default(),
        }
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, taus) in [
            ("statphase.taus", &self.statphase.taus),
            ("cgo.taus", &self.cgo.taus),
            ("uniqueness.taus", &self.uniqueness.taus),
        ] {
            if taus.is_empty() || !strictly_increasing(taus) || taus[0] <= 0.0 {
                return bad(format!("{name} must be positive and strictly increasing"));
            }
        }
        if self.stability.epsilons.is_empty() || self.stability.epsilons.iter().any(|&e| e <= 0.0) {
            return bad("stability.epsilons must be nonempty and positive".into());
        }
        if !(self.stability.alpha > 0.0 && self.stability.alpha < 1.0) {
            return bad(format!("stability.alpha must lie in (0,1), got {}", self.stability.alpha));
        }
        if self.statphase.s_values.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return bad("statphase.s_values must lie in [0,1]".into());
        }
        if self.statphase.fields_per_s == 0 || self.recon.stride == 0 {
            return bad("fields_per_s and stride must be positive".into());
        }
        if self.forward.noise < 0.0 || self.stability.noise < 0.0 {
            return bad("noise levels must be >= 0".into());
        }
        if !(self.uniqueness.rho_squared > 0.0) {
            return bad("uniqueness.rho_squared must be positive".into());
        }
        Ok(())
    }

    /// Hex SHA-256 prefix of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Seed derived from the global seed and a study-local tag.
    pub fn derived_seed(&self, tag: &str, k: u64) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(tag.as_bytes());
        h.update(k.to_le_bytes());
        u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
    }
}

/// One named output file.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn csv<T: Serialize>(name: &str, rows: &[T]) -> Result<Self> {
        Ok(Artifact { name: name.into(), bytes: to_csv(rows)? })
    }

    fn text(name: &str, s: String) -> Self {
        Artifact { name: name.into(), bytes: s.into_bytes() }
    }

    fn json<T: Serialize>(name: &str, v: &T) -> Result<Self> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        Ok(Artifact::text(name, s))
    }
}

/// A named pass/fail check with the measured value and its limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Check { name: name.into(), pass, detail }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
}

impl ExperimentOutput {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

fn potential(grid: &Arc<Grid2D>, b: &Bump) -> Result<Potential> {
    Potential::from_field(b.field(grid))
}

fn l2(f: &Field) -> f64 {
    lp_norm(&f.restrict_to_x(), 2.0)
}

// ---------------------------------------------------------------- stationary phase

#[derive(Debug, Clone, Serialize)]
struct StatPhaseRow {
    config_hash: String,
    family_s: f64,
    field: usize,
    tau: f64,
    s: f64,
    measured_error: f64,
    bound: f64,
    ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
struct StatPhaseFitRow {
    config_hash: String,
    s: f64,
    fitted_slope: f64,
    target_slope: f64,
    max_ratio: f64,
}

/// Measured `||Q - S_tau Q||` against `2 tau^{-s/2} ||Q||_{W^s_2}` for random fields
/// of each smoothness, with a slope fit on the family RMS error.
pub fn run_statphase_rate(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let c = &cfg.statphase;
    let hash = cfg.hash();
    let grid = c.grid.build()?;
    let jobs: Vec<(usize, f64, usize)> = c
        .s_values
        .iter()
        .enumerate()
        .flat_map(|(si, &s)| (0..c.fields_per_s).map(move |k| (si, s, k)))
        .collect();
    let results: Vec<Result<Vec<_>>> = jobs
        .par_iter()
        .map(|&(si, s, k)| {
            let seed = cfg.derived_seed("statphase", (si * 1000 + k) as u64);
            let q = extend_zero(&spectral_field(&grid, s, seed))?;
            stat_phase_errors(&q, &c.taus, s, c.pad)
        })
        .collect();
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut checks = Vec::new();
    let mut per_job = Vec::new();
    for r in results {
        per_job.push(r?);
    }
    for &s in &c.s_values {
        let family: Vec<(usize, &Vec<_>)> = jobs
            .iter()
            .zip(&per_job)
            .filter(|((_, fs, _), _)| *fs == s)
            .map(|((_, _, k), e)| (*k, e))
            .collect();
        let mut rms = vec![0.0; c.taus.len()];
        let mut max_ratio: f64 = 0.0;
        for (k, errs) in &family {
            for (t, e) in errs.iter().enumerate() {
                rows.push(StatPhaseRow {
                    config_hash: hash.clone(),
                    family_s: s,
                    field: *k,
                    tau: e.tau,
                    s: e.s,
                    measured_error: e.measured,
                    bound: e.bound,
                    ratio: e.ratio(),
                });
                rms[t] += e.measured * e.measured / family.len() as f64;
                max_ratio = max_ratio.max(e.ratio());
            }
        }
        let rms: Vec<f64> = rms.iter().map(|v| v.sqrt()).collect();
        let slope = loglog_slope_tail(&c.taus, &rms).unwrap_or(f64::NAN);
        let target = -s / 2.0;
        checks.push(Check::new(
            &format!("statphase ratio s={s}"),
            max_ratio <= c.ratio_limit,
            format!("max ratio {max_ratio:.4} (limit {})", c.ratio_limit),
        ));
        checks.push(Check::new(
            &format!("statphase slope s={s}"),
            (slope - target).abs() <= c.slope_tolerance,
            format!("slope {slope:.4}, target {target} +- {}", c.slope_tolerance),
        ));
        fits.push(StatPhaseFitRow { config_hash: hash.clone(), s, fitted_slope: slope, target_slope: target, max_ratio });
    }
    Ok(ExperimentOutput {
        artifacts: vec![Artifact::csv("statphase.csv", &rows)?, Artifact::csv("statphase_fit.csv", &fits)?],
        checks,
    })
}

// ---------------------------------------------------------------- CGO

#[derive(Debug, Clone, Serialize)]
struct CgoRow {
    config_hash: String,
    tau: f64,
    z0_re: f64,
    z0_im: f64,
    terms: usize,
    max_ratio: f64,
    geometric_decay: bool,
    remainder_l2: f64,
    remainder_l4: f64,
    w12_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
struct ThresholdRow {
    config_hash: String,
    amplitude: f64,
    lp_norm: f64,
    tau_threshold: Option<f64>,
}

fn cgo_sweep(q: &Potential, z0s: &[[f64; 2]], taus: &[f64]) -> Result<Vec<CgoSolution>> {
    let grid = q.grid();
    let jobs: Vec<(f64, C64)> =
        taus.iter().flat_map(|&t| z0s.iter().map(move |z| (t, C64::new(z[0], z[1])))).collect();
    jobs.par_iter()
        .map(|&(tau, z0)| build_cgo(q, &PhaseParams::new(grid, tau, z0, 1)?, Side::Phase))
        .collect()
}

/// Series decay, remainder rates and growth for the configured bump, plus the
/// exactness of the `q = 0` case.
pub fn run_cgo_decay(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let c = &cfg.cgo;
    let hash = cfg.hash();
    let grid = c.grid.build()?;
    let q = potential(&grid, &c.bump)?;
    let sweep = cgo_sweep(&q, &c.z0s, &c.taus)?;
    let rows: Vec<CgoRow> = sweep
        .iter()
        .map(|s| {
            let gx = grid.clone();
            CgoRow {
                config_hash: hash.clone(),
                tau: s.params.tau,
                z0_re: s.params.z0.re,
                z0_im: s.params.z0.im,
                terms: s.truncation(),
                max_ratio: s.diagnostics.ratios.iter().cloned().fold(0.0, f64::max),
                geometric_decay: s.diagnostics.geometric_decay,
                remainder_l2: crate::grid::lp_norm_on(&s.remainder, 2.0, |i| gx.in_x(i)),
                remainder_l4: crate::grid::lp_norm_on(&s.remainder, 4.0, |i| gx.in_x(i)),
                w12_norm: crate::forward::w12_norm(&s.u),
            }
        })
        .collect();
    let report = remainder_report(&sweep, c.p)?;
    let growth = growth_check(&sweep, c.growth_radius);

    // q = 0: the series is exactly the leading exponential.
    let zero = Potential::zero(&grid);
    let z0 = C64::new(c.z0s[0][0], c.z0s[0][1]);
    let s0 = build_cgo(&zero, &PhaseParams::new(&grid, c.taus[c.taus.len() - 1], z0, 1)?, Side::Phase)?;
    let lead = crate::cgo::leading_factor(&grid, &s0.params, Side::Phase);
    let exact = s0.u.values() == lead.values() && s0.remainder.max_abs() == 0.0;

    // Geometric decay at every tau above the smallest one at which it holds for all z0.
    let above: Vec<&CgoSolution> = {
        let ok_tau: Vec<f64> = c
            .taus
            .iter()
            .copied()
            .filter(|&t| sweep.iter().filter(|s| s.params.tau == t).all(|s| s.diagnostics.geometric_decay))
            .collect();
        let first = ok_tau.first().copied().unwrap_or(f64::INFINITY);
        sweep.iter().filter(|s| s.params.tau >= first).collect()
    };
    let decay = !above.is_empty() && above.iter().all(|s| s.diagnostics.geometric_decay);
    let checks = vec![
        Check::new("cgo zero potential exact", exact, format!("max |r| = {}", s0.remainder.max_abs())),
        Check::new(
            "cgo geometric decay above threshold",
            decay,
            format!("{} solutions above the measured threshold", above.len()),
        ),
        Check::new(
            "cgo remainder L2 exponent",
            report.trivial || report.l2_exponent <= crate::cgo::RemainderReport::l2_threshold(),
            format!("{:.4} (limit {})", report.l2_exponent, crate::cgo::RemainderReport::l2_threshold()),
        ),
        Check::new(
            "cgo remainder L4 exponent",
            report.trivial || report.l4_exponent <= report.l4_threshold(),
            format!("{:.4} (limit {:.4})", report.l4_exponent, report.l4_threshold()),
        ),
        Check::new("cgo growth bound", growth, format!("R = {}", c.growth_radius)),
    ];
    let svg = loglog_svg(
        "sup remainder norms vs tau",
        &report.taus,
        &[("L2", report.l2.clone()), ("L4", report.l4.clone())],
        &format!("config {hash}"),
    );
    Ok(ExperimentOutput {
        artifacts: vec![
            Artifact::csv("cgo_sweep.csv", &rows)?,
            Artifact::json("cgo_remainder.json", &report)?,
            Artifact::json("cgo_diagnostics.json", &sweep.iter().map(|s| s.report(&q)).collect::<Vec<_>>())?,
            Artifact::text("cgo_remainder.svg", svg),
        ],
        checks,
    })
}

/// Smallest `tau` with geometric decay for amplitude-scaled copies of the bump.
pub fn run_cgo_threshold(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let c = &cfg.cgo;
    let hash = cfg.hash();
    let grid = c.grid.build()?;
    let z0 = C64::new(c.z0s[0][0], c.z0s[0][1]);
    let rows: Vec<ThresholdRow> = c
        .amplitudes
        .par_iter()
        .map(|&a| {
            let q = potential(&grid, &c.bump.with_amplitude(a))?;
            let t = decay_threshold(
                &q,
                z0,
                Side::Phase,
                c.threshold_bracket[0],
                c.threshold_bracket[1],
                c.threshold_rel_tol,
            )?;
            Ok(ThresholdRow { config_hash: hash.clone(), amplitude: a, lp_norm: lp_norm(q.field(), c.p), tau_threshold: t })
        })
        .collect::<Result<_>>()?;
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.amplitude.partial_cmp(&b.amplitude).expect("finite"));
    let ts: Vec<Option<f64>> = sorted.iter().map(|r| r.tau_threshold).collect();
    let found = ts.iter().all(|t| t.is_some());
    let ts: Vec<f64> = ts.into_iter().flatten().collect();
    let nondecreasing = found && ts.windows(2).all(|w| w[0] <= w[1]);
    let zero_ok = sorted.iter().filter(|r| r.amplitude == 0.0).all(|r| r.tau_threshold == Some(0.0));
    let mut doubling = true;
    for a in &sorted {
        for b in &sorted {
            if a.amplitude > 0.0 && b.amplitude == 2.0 * a.amplitude {
                doubling &= matches!((a.tau_threshold, b.tau_threshold), (Some(x), Some(y)) if y > x);
            }
        }
    }
    Ok(ExperimentOutput {
        artifacts: vec![Artifact::csv("cgo_threshold.csv", &rows)?],
        checks: vec![
            Check::new("threshold found in bracket", found, format!("{ts:?}")),
            Check::new("threshold zero at zero amplitude", zero_ok, "amplitude 0 contracts for every tau".into()),
            Check::new("threshold nondecreasing in amplitude", nondecreasing, format!("{ts:?}")),
            Check::new("threshold grows when amplitude doubles", doubling, "compared over amplitude pairs (a, 2a)".into()),
        ],
    })
}

// ---------------------------------------------------------------- forward

#[derive(Debug, Clone, Serialize)]
struct ForwardRow {
    config_hash: String,
    quantity: String,
    n: usize,
    value: f64,
    reference: f64,
}

/// Manufactured-solution order, DN symmetry and disk eigenmodes.
pub fn run_forward_checks(cfg: &ExperimentConfig) -> Result<(ExperimentOutput, DNMap)> {
    let c = &cfg.forward;
    let hash = cfg.hash();
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for &n in &c.order_resolutions {
        let grid = GridSpec { n, ..c.grid }.build()?;
        let q = Potential::from_field(Field::from_fn(&grid, Support::X, |_, _| C64::new(-1.0, 0.0)))?;
        let f = grid.sample_boundary(|x, _| C64::new(x.exp(), 0.0));
        let u = DirichletSolver::new(&q)?.solve(&f)?;
        let exact = Field::from_fn(&grid, Support::X, |x, _| C64::new(x.exp(), 0.0));
        let e = l2(&u.sub(&exact)) / l2(&exact);
        rows.push(ForwardRow { config_hash: hash.clone(), quantity: "manufactured_error".into(), n, value: e, reference: 0.0 });
        errs.push(e);
        hs.push(grid.h());
    }
    let order = loglog_slope(&hs, &errs).unwrap_or(f64::NAN);

    let grid = c.grid.build()?;
    let q = potential(&grid, &c.bump)?;
    let dn_q = assemble_dn(&q)?;
    let sym = dn_q.symmetry_defect();
    rows.push(ForwardRow { config_hash: hash.clone(), quantity: "symmetry_defect".into(), n: grid.n(), value: sym, reference: 0.0 });
    let mut modes_ok = true;
    let mut worst: f64 = 0.0;
    if let Domain::Disk { radius } = grid.domain() {
        let dn0 = assemble_dn(&Potential::zero(&grid))?;
        for k in 1..=c.max_mode {
            let f = grid.sample_boundary(|x, y| C64::new((k as f64 * y.atan2(x)).cos(), 0.0));
            let lam = dn0.rayleigh_quotient(&f).re;
            let exact = k as f64 / radius;
            let rel = (lam - exact).abs() / exact;
            worst = worst.max(rel);
            modes_ok &= rel <= c.mode_tolerance;
            rows.push(ForwardRow {
                config_hash: hash.clone(),
                quantity: format!("disk_mode_{k}"),
                n: grid.n(),
                value: lam,
                reference: exact,
            });
        }
    }
    let dn_out = if c.noise > 0.0 { dn_q.with_noise(c.noise, cfg.derived_seed("forward-noise", 0)) } else { dn_q };
    let out = ExperimentOutput {
        artifacts: vec![Artifact::csv("forward.csv", &rows)?],
        checks: vec![
            Check::new("forward order", (order - 2.0).abs() <= 0.5, format!("fitted order {order:.3}")),
            Check::new(
                "DN symmetry",
                sym <= c.symmetry_tolerance,
                format!("defect {sym:.3e} (limit {:.1e})", c.symmetry_tolerance),
            ),
            Check::new("disk DN modes", modes_ok, format!("worst relative error {worst:.4}")),
        ],
    };
    Ok((out, dn_out))
}

// ---------------------------------------------------------------- pairing identities

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairingSummary {
    pub equal_pair_pairing: f64,
    pub volume: [f64; 2],
    pub boundary: [f64; 2],
    pub relative_mismatch: f64,
    pub probe_sup: f64,
    pub data_distance: f64,
}

/// Discrete integration-by-parts identities between volume and boundary pairings,
/// and the probe-family inequality against the data-side distance.
pub fn pairing_study(q1: &Potential, q2: &Potential, f1: &[C64], f2: &[C64], probes: &[Vec<C64>]) -> Result<PairingSummary> {
    let s1 = DirichletSolver::new(q1)?;
    let s2 = DirichletSolver::new(q2)?;
    let dn1 = s1.assemble_dn()?;
    let dn2 = s2.assemble_dn()?;
    let u1 = s1.solve(f1)?;
    let u2 = s2.solve(f2)?;
    let same = pairing(q1, q1, &u1, &u1).norm();
    let vol = pairing(q1, q2, &u1, &u2);
    let bnd = boundary_pairing(&dn1, &dn2, f1, f2)?;
    let probe_sup = crate::forward::probe_distance(q1, q2, probes)?;
    // Equal potentials make both sides vanish; report the absolute boundary value then.
    let relative_mismatch = if vol.norm() > 0.0 { (vol - bnd).norm() / vol.norm() } else { bnd.norm() };
    Ok(PairingSummary {
        equal_pair_pairing: same,
        volume: [vol.re, vol.im],
        boundary: [bnd.re, bnd.im],
        relative_mismatch,
        probe_sup,
        data_distance: cauchy_distance_data(&dn1, &dn2)?,
    })
}

/// Default probe family: harmonic polynomials up to degree 3 and exponential
/// solutions at a few `(tau, z0)`.
pub fn default_probes(grid: &Grid2D) -> Vec<Vec<C64>> {
    probe_traces(grid, &[1.0, 4.0], &[C64::new(0.0, 0.0), C64::new(0.3, -0.2)], 3)
}

// ---------------------------------------------------------------- reconstruction

/// Term-by-term identity check and data-driven reconstruction at one `tau`.
pub fn run_recon_identity(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let c = &cfg.recon;
    let hash = cfg.hash();
    let grid = c.grid.build()?;
    let q1 = potential(&grid, &c.bump)?;
    let q2 = potential(&grid, &c.partner)?;
    let report = identity_check(&q1, &q2, c.tau, c.stride)?;
    let rel = report.relative_defect().unwrap_or(f64::NAN);
    let tail_ok = report.terms.tail <= 0.5 * report.q_norm;
    let mut artifacts =
        vec![Artifact::json("recon_identity.json", &serde_json::json!({ "config_hash": hash, "report": report }))?];
    if let Some(f) = &report.recon_field {
        artifacts.push(Artifact { name: "recon_identity.bfld".into(), bytes: crate::io::encode_field(f) });
    }
    Ok(ExperimentOutput {
        artifacts,
        checks: vec![
            Check::new(
                "identity defect",
                rel <= c.defect_tolerance,
                format!("relative defect {rel:.3e} (limit {})", c.defect_tolerance),
            ),
            Check::new(
                "identity tail term",
                tail_ok,
                format!("tail {:.3e} vs half norm {:.3e}", report.terms.tail, 0.5 * report.q_norm),
            ),
        ],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconRow {
    pub config_hash: String,
    pub tau: f64,
    pub region: String,
    pub relative_error: f64,
    pub recon_l2: f64,
}

/// Reconstructs `q - q_ref` from two DN maps over a list of `tau`, writing error
/// rows when the truth is given.
pub fn recon_sweep(
    dn_q: &DNMap,
    dn_ref: &DNMap,
    q_ref: &Potential,
    taus: &[f64],
    truth: Option<&Field>,
    hash: &str,
) -> Result<(Vec<ReconRow>, Vec<Field>)> {
    let grid = dn_q.grid().clone();
    let nodes = scan_points(&grid);
    let mut rows = Vec::new();
    let mut fields = Vec::new();
    for &tau in taus {
        let rec = reconstruct_from_dn(dn_q, dn_ref, q_ref, tau)?;
        let rl2: f64 = (nodes.iter().map(|&i| rec.at(i).norm_sqr()).sum::<f64>() * grid.h().powi(2)).sqrt();
        let err = truth.map(|t| relative_error_on(&rec, t, &nodes)).unwrap_or(f64::NAN);
        rows.push(ReconRow { config_hash: hash.into(), tau, region: "scan".into(), relative_error: err, recon_l2: rl2 });
        fields.push(rec);
    }
    Ok((rows, fields))
}

// ---------------------------------------------------------------- stability

#[derive(Debug, Clone, Serialize)]
struct StabilityRow {
    config_hash: String,
    epsilon: f64,
    data_distance: f64,
    true_difference: f64,
    bound: f64,
    tau_case: u8,
    tau: Option<f64>,
    holds: bool,
}

/// Data distance, true `L^2` difference and the calibrated two-branch bound over a
/// sweep of perturbation sizes.
pub fn run_stability_curve(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let c = &cfg.stability;
    let hash = cfg.hash();
    let grid = c.grid.build()?;
    let q1 = potential(&grid, &c.base)?;
    let pert = c.perturbation.field(&grid);
    let dn1 = assemble_dn(&q1)?;
    let points: Vec<(f64, f64, f64)> = c
        .epsilons
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let q2 = Potential::from_field(q1.field().add(&pert.scale(C64::new(eps, 0.0))))?;
            let mut dn2 = assemble_dn(&q2)?;
            if c.noise > 0.0 {
                dn2 = dn2.with_noise(c.noise, cfg.derived_seed("stability-noise", k as u64));
            }
            let d = cauchy_distance_data(&dn1, &dn2)?;
            Ok((eps, d, eps * l2(&pert)))
        })
        .collect::<Result<_>>()?;
    let (_, d0, diff0) = points[0];
    let shape0 = stability_bound(d0, c.s, 1.0)?;
    let calib = diff0 / shape0;
    let mut rows = Vec::new();
    let mut holds_all = true;
    for (k, &(eps, d, diff)) in points.iter().enumerate() {
        let bound = stability_bound(d, c.s, calib)?;
        let holds = diff <= c.slack * bound;
        if k > 0 {
            holds_all &= holds;
        }
        let choice = tau_schedule(d, c.grid.radius, c.alpha)?;
        rows.push(StabilityRow {
            config_hash: hash.clone(),
            epsilon: eps,
            data_distance: d,
            true_difference: diff,
            bound,
            tau_case: choice.case(),
            tau: choice.tau(),
            holds,
        });
    }
    let ds: Vec<f64> = points.iter().map(|p| p.1).collect();
    let eps: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&a, &b| eps[a].partial_cmp(&eps[b]).expect("finite"));
    let monotone = order.windows(2).all(|w| ds[w[0]] < ds[w[1]]);
    let svg = loglog_svg(
        "stability: true difference, bound and data distance vs epsilon",
        &eps,
        &[
            ("difference", points.iter().map(|p| p.2).collect()),
            ("bound", rows.iter().map(|r| r.bound).collect()),
            ("distance", ds.clone()),
        ],
        &format!("config {hash}"),
    );
    Ok(ExperimentOutput {
        artifacts: vec![Artifact::csv("stability.csv", &rows)?, Artifact::text("stability.svg", svg)],
        checks: vec![
            Check::new("stability bound holds", holds_all, format!("calibrated C = {calib:.4e}")),
            Check::new("distance increasing in epsilon", monotone, format!("{ds:?}")),
            Check::new(
                "tau rule cases",
                matches!(tau_schedule(1.0, 1.0, 0.5)?, TauChoice::Trivial),
                "d = 1 falls in the trivial case".into(),
            ),
        ],
    })
}

// ---------------------------------------------------------------- uniqueness

#[derive(Debug, Clone, Serialize)]
struct UniquenessRow {
    config_hash: String,
    tau: f64,
    region: String,
    data_error: f64,
    statphase_error: f64,
}

/// Reconstruction error of a small bump on a scaled disk over the `tau` grid, with
/// `q_ref = 0`. Also reports the error of the ideal stationary-phase average and
/// errors on inner sub-disks.
pub fn run_uniqueness(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let c = &cfg.uniqueness;
    let hash = cfg.hash();
    let rho = c.rho_squared.sqrt();
    let grid = make_grid(c.half_width_factor * rho, c.n, Domain::Disk { radius: rho }, rho)?;
    let q = potential(&grid, &c.bump.scaled(rho))?;
    let zero = Potential::zero(&grid);
    let dn_q = assemble_dn(&q)?;
    let dn_0 = assemble_dn(&zero)?;
    let nodes = scan_points(&grid);
    let regions: Vec<(String, Vec<usize>)> = std::iter::once(("scan".to_string(), nodes.clone()))
        .chain(c.inner_radii.iter().map(|&f| {
            let sub = nodes.iter().copied().filter(|&i| grid.z(i).norm() < f * rho).collect();
            (format!("inner_{f}"), sub)
        }))
        .collect();
    let truth = q.field().clone();
    let mut rows = Vec::new();
    let mut scan_errors = Vec::new();
    let mut last = None;
    for &tau in &c.taus {
        let rec = reconstruct_from_dn(&dn_q, &dn_0, &zero, tau)?;
        let ideal = crate::phase::stat_phase_apply(&extend_zero(&truth)?, tau, 1, crate::phase::StatPhaseMode::Multiplier { pad: 4 })?;
        for (name, sub) in &regions {
            let e = relative_error_on(&rec, &truth, sub);
            if name == "scan" {
                scan_errors.push(e);
            }
            rows.push(UniquenessRow {
                config_hash: hash.clone(),
                tau,
                region: name.clone(),
                data_error: e,
                statphase_error: relative_error_on(&ideal, &truth, sub),
            });
        }
        last = Some(rec);
    }
    let reduction = scan_errors[0] / scan_errors[scan_errors.len() - 1];
    let monotone = scan_errors.windows(2).all(|w| w[1] <= w[0] * (1.0 + c.monotone_slack));
    let mut artifacts = vec![Artifact::csv("uniqueness.csv", &rows)?];
    artifacts.push(Artifact::text(
        "uniqueness_error.svg",
        loglog_svg("relative reconstruction error vs tau", &c.taus, &[("scan", scan_errors.clone())], &format!("config {hash}")),
    ));
    if let Some(rec) = last {
        let scale = c.heatmap_scale;
        let meta = format!("config {hash}; reconstruction at tau = {}", c.taus[c.taus.len() - 1]);
        artifacts.push(Artifact::text("uniqueness_recon.svg", heatmap_svg(&rec, scale[0], scale[1], &meta)));
        artifacts.push(Artifact::text("uniqueness_truth.svg", heatmap_svg(&truth, scale[0], scale[1], &format!("config {hash}; truth"))));
        artifacts.push(Artifact { name: "uniqueness_recon.bfld".into(), bytes: crate::io::encode_field(&rec) });
    }
    Ok(ExperimentOutput {
        artifacts,
        checks: vec![
            Check::new("uniqueness error nonincreasing", monotone, format!("{scan_errors:?}")),
            Check::new(
                "uniqueness total reduction",
                reduction >= c.reduction_factor,
                format!("reduction {reduction:.3} (required {})", c.reduction_factor),
            ),
        ],
    })
}
