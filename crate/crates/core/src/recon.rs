//! The reconstruction identity evaluated term by term, reconstruction of a
//! potential difference from DN data, and the stability-side `tau` rule and bound.

use crate::cauchy::{d_inv, dbar_inv};
use crate::cgo::{build_cgo, CgoSolution, Side};
use crate::error::{Error, Result};
use crate::forward::DNMap;
use crate::grid::{Field, Grid2D, Potential, Support, C64, ZERO};
use crate::phase::{weight, PhaseParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Width of the excluded boundary collar, in grid spacings.
pub const COLLAR_CELLS: f64 = 4.0;

/// Scan nodes at least `4h` inside X.
pub fn scan_points(grid: &Grid2D) -> Vec<usize> {
    grid.scan_nodes(COLLAR_CELLS * grid.h())
}

/// `L^2`-type magnitudes of each term over the evaluated scan points.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TermMagnitudes {
    /// `Q(x0) - (2 tau/pi) sum e Q`.
    pub statphase_defect: f64,
    /// `(2 tau/pi) sum u1 Q u2`.
    pub central_pairing: f64,
    /// Correction built from `dbar_inv Q` and the conjugate-side first term.
    pub corr_dbar: f64,
    /// Correction built from `d_inv Q` and the phase-side first term.
    pub corr_d: f64,
    /// `(2 tau/pi) sum e Q (p1 p2 + r1 + r2)`.
    pub tail: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconReport {
    pub tau: f64,
    pub terms: TermMagnitudes,
    /// `||Q||` over the same scan points.
    pub q_norm: f64,
    /// `||LHS - sum of terms||` over the scan points (identity check only).
    pub identity_defect: Option<f64>,
    /// `||recon - truth|| / ||truth||` over the scan points, when the truth is known.
    pub l2_error: Option<f64>,
    pub points_evaluated: usize,
    #[serde(skip)]
    pub recon_field: Option<Field>,
}

impl ReconReport {
    pub fn relative_defect(&self) -> Option<f64> {
        self.identity_defect.map(|d| if self.q_norm > 0.0 { d / self.q_norm } else { d })
    }
}

/// Per-point values of every term of the identity.
#[derive(Debug, Clone, Copy, Default)]
struct PointTerms {
    lhs: C64,
    statphase_defect: C64,
    central: C64,
    corr_dbar: C64,
    corr_d: C64,
    tail: C64,
}

impl PointTerms {
    fn defect(&self) -> C64 {
        self.lhs - (self.statphase_defect + self.central + self.corr_dbar + self.corr_d + self.tail)
    }
}

/// Evaluates every term of the reconstruction identity for
/// `Q = q1 - q2` at every `stride`-th scan point (stride along both axes), using
/// phase-side CGO solutions for `q1` and conjugate-side ones for `q2`.
pub fn identity_check(q1: &Potential, q2: &Potential, tau: f64, stride: usize) -> Result<ReconReport> {
    let grid = q1.grid().clone();
    if !grid.same_as(q2.grid()) {
        return Err(Error::GridMismatch("potentials live on different grids".into()));
    }
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let c = 2.0 * tau / PI * h2;
    let q = q1.field().sub(q2.field());
    let f1 = dbar_inv(q1.field());
    let g2 = d_inv(q2.field());
    let dbar_q = dbar_inv(&q);
    let d_q = d_inv(&q);
    let all = scan_points(&grid);
    let points: Vec<usize> = all
        .iter()
        .copied()
        .filter(|&idx| (idx / n) % stride == 0 && (idx % n) % stride == 0)
        .collect();
    let x_nodes: Vec<usize> = (0..grid.len()).filter(|&i| grid.in_x(i) && q.at(i) != ZERO).collect();

    let values: Vec<Result<PointTerms>> = points
        .par_iter()
        .map(|&idx| {
            let z0 = grid.z(idx);
            let params = PhaseParams::new(&grid, tau, z0, 1)?;
            let s1 = build_cgo(q1, &params, Side::Phase)?;
            let s2 = build_cgo(q2, &params, Side::ConjugatePhase)?;
            let e = weight(&grid, &params);
            let (c1, c2) = (f1.at(idx), g2.at(idx));
            let p1 = s1.correction();
            let p2 = s2.correction();
            let mut t = PointTerms { lhs: q.at(idx), ..Default::default() };
            let (mut stat, mut t3, mut t4, mut tail) = (ZERO, ZERO, ZERO, ZERO);
            for &i in &x_nodes {
                let eq = e.at(i) * q.at(i);
                stat += eq;
                tail += eq * (p1.at(i) * p2.at(i) + s1.remainder.at(i) + s2.remainder.at(i));
                t.central += s1.u.at(i) * q.at(i) * s2.u.at(i);
            }
            // The Cauchy corrections range over all of X, not only supp Q.
            for i in (0..grid.len()).filter(|&i| grid.in_x(i)) {
                t3 += dbar_q.at(i) * (g2.at(i) - c2) * e.at(i);
                t4 += d_q.at(i) * (f1.at(i) - c1) * e.at(i);
            }
            t.statphase_defect = t.lhs - c * stat;
            t.central *= c;
            t.corr_dbar = -0.25 * c * t3;
            t.corr_d = -0.25 * c * t4;
            t.tail = -c * tail;
            Ok(t)
        })
        .collect();
    let values: Vec<PointTerms> = values.into_iter().collect::<Result<_>>()?;

    // Each evaluated point stands for `stride^2` scan cells.
    let cell = h2 * (all.len() as f64 / points.len().max(1) as f64);
    let norm = |f: &dyn Fn(&PointTerms) -> C64| (cell * values.iter().map(|v| f(v).norm_sqr()).sum::<f64>()).sqrt();
    let terms = TermMagnitudes {
        statphase_defect: norm(&|v| v.statphase_defect),
        central_pairing: norm(&|v| v.central),
        corr_dbar: norm(&|v| v.corr_dbar),
        corr_d: norm(&|v| v.corr_d),
        tail: norm(&|v| v.tail),
    };
    let q_norm = norm(&|v| v.lhs);
    let defect = norm(&|v| v.defect());
    let mut recon = vec![ZERO; grid.len()];
    for (&idx, v) in points.iter().zip(&values) {
        recon[idx] = v.central;
    }
    let err = norm(&|v| v.central - v.lhs);
    Ok(ReconReport {
        tau,
        terms,
        q_norm,
        identity_defect: Some(defect),
        l2_error: Some(if q_norm > 0.0 { err / q_norm } else { err }),
        points_evaluated: points.len(),
        recon_field: Some(Field::from_values(&grid, recon, Support::X)?),
    })
}

/// Boundary values of the two CGO families at `z0` for the reference potential.
fn cgo_traces(q_ref: &Potential, tau: f64, z0: C64) -> Result<(Vec<C64>, Vec<C64>)> {
    let grid = q_ref.grid();
    let n = grid.n();
    let sample = |s: &CgoSolution| grid.boundary_nodes().iter().map(|b| s.u.at(b.i * n + b.j)).collect::<Vec<_>>();
    if q_ref.is_zero() {
        let tr = |conj: bool| {
            grid.sample_boundary(|x, y| {
                let w = C64::new(x, y) - z0;
                let phi = if conj { (w * w).conj() } else { w * w };
                (C64::i() * tau * phi).exp()
            })
        };
        return Ok((tr(false), tr(true)));
    }
    let params = PhaseParams::new(grid, tau, z0, 1)?;
    let s1 = build_cgo(q_ref, &params, Side::Phase)?;
    let s2 = build_cgo(q_ref, &params, Side::ConjugatePhase)?;
    Ok((sample(&s1), sample(&s2)))
}

/// Approximate `(q - q_ref)(x0)` on the scan nodes from DN data:
/// `-(2 tau / pi) sum_b w_b u1_b ((dn_q - dn_ref) u2)_b`, with `u1`, `u2` the
/// phase- and conjugate-side CGO traces of `q_ref` (plain exponentials when
/// `q_ref = 0`). Nodes outside the scan set are zero.
pub fn reconstruct_from_dn(dn_q: &DNMap, dn_ref: &DNMap, q_ref: &Potential, tau: f64) -> Result<Field> {
    let grid: Arc<Grid2D> = dn_q.grid().clone();
    if !grid.same_as(dn_ref.grid()) || !grid.same_as(q_ref.grid()) || dn_q.size() != dn_ref.size() {
        return Err(Error::GridMismatch("DN maps and reference potential must share one grid".into()));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let nb = dn_q.size();
    let diff = dn_q.matrix() - dn_ref.matrix();
    // Row-major copy for a cache-friendly matrix-vector loop.
    let rows: Vec<C64> = (0..nb).flat_map(|r| (0..nb).map(move |c| (r, c))).map(|(r, c)| diff[(r, c)]).collect();
    let w: Vec<f64> = grid.boundary_nodes().iter().map(|b| b.weight).collect();
    let points = scan_points(&grid);
    let scale = -2.0 * tau / PI;
    let vals: Vec<Result<C64>> = points
        .par_iter()
        .map(|&idx| {
            let (f1, f2) = cgo_traces(q_ref, tau, grid.z(idx))?;
            let mut acc = ZERO;
            for r in 0..nb {
                let row = &rows[r * nb..(r + 1) * nb];
                let lf: C64 = row.iter().zip(&f2).map(|(a, b)| a * b).sum();
                acc += w[r] * f1[r] * lf;
            }
            Ok(scale * acc)
        })
        .collect();
    let mut out = vec![ZERO; grid.len()];
    for (&idx, v) in points.iter().zip(vals) {
        out[idx] = v?;
    }
    Field::from_values(&grid, out, Support::X)
}

/// `||recon - truth|| / ||truth||` over the scan nodes (plain `l^2`, `h^2` cancels).
pub fn relative_scan_error(recon: &Field, truth: &Field) -> f64 {
    relative_error_on(recon, truth, &scan_points(recon.grid()))
}

pub fn relative_error_on(recon: &Field, truth: &Field, nodes: &[usize]) -> f64 {
    let num: f64 = nodes.iter().map(|&i| (recon.at(i) - truth.at(i)).norm_sqr()).sum();
    let den: f64 = nodes.iter().map(|&i| truth.at(i).norm_sqr()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Outcome of the `tau` rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum TauChoice {
    /// Small data distance: `tau = (alpha / R0)(1 + ln(1/d))`, `R0 = 8 R^2 + 1`.
    Logarithmic { tau: f64 },
    /// `d >= 1`: the trivial bound applies and no `tau` is selected.
    Trivial,
}

impl TauChoice {
    pub fn case(&self) -> u8 {
        match self {
            TauChoice::Logarithmic { .. } => 1,
            TauChoice::Trivial => 2,
        }
    }

    pub fn tau(&self) -> Option<f64> {
        match self {
            TauChoice::Logarithmic { tau } => Some(*tau),
            TauChoice::Trivial => None,
        }
    }
}

pub fn tau_schedule(d: f64, r: f64, alpha: f64) -> Result<TauChoice> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(d >= 0.0) {
        return Err(Error::InvalidParameter(format!("data distance must be >= 0, got {d}")));
    }
    if d >= 1.0 {
        return Ok(TauChoice::Trivial);
    }
    let r0 = 8.0 * r * r + 1.0;
    Ok(TauChoice::Logarithmic { tau: alpha / r0 * (1.0 + (1.0 / d).ln()) })
}

/// `C (1 + ln(1/d))^{-s/2}` for `d < 1` and `C d` for `d >= 1`.
pub fn stability_bound(d: f64, s: f64, c: f64) -> Result<f64> {
    if s == 0.5 {
        return Err(Error::InvalidParameter("s = 1/2 is excluded from the stability estimate".into()));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!("s must lie in (0,1], got {s}")));
    }
    if !(d >= 0.0) || !(c >= 0.0) {
        return Err(Error::InvalidParameter(format!("need d >= 0 and C >= 0, got d={d}, C={c}")));
    }
    if d >= 1.0 {
        return Ok(c * d);
    }
    if d == 0.0 {
        return Ok(0.0);
    }
    Ok(c * (1.0 + (1.0 / d).ln()).powf(-s / 2.0))
}
