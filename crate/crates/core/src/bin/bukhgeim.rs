//! Command line front end. Exit codes: 0 pass, 1 operational error, 2 property violation.

use bukhgeim::experiments::{
    default_probes, pairing_study, recon_sweep, run_cgo_decay, run_cgo_threshold, run_forward_checks,
    run_recon_identity, run_stability_curve, run_statphase_rate, run_uniqueness, Artifact, Check,
    ExperimentConfig, ExperimentOutput,
};
use bukhgeim::fit::log_space;
use bukhgeim::io::{heatmap_svg, read_dn, to_csv, write_atomic, write_dn, write_json_atomic};
use bukhgeim::{Error, Potential, Result, C64};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Component, Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "bukhgeim", version, about = "CGO, stationary-phase and DN-map experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides BUKHGEIM_OUT and the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary-phase error against its Sobolev bound.
    Statphase(Common),
    /// CGO series decay, remainder rates, growth and threshold.
    Cgo(Common),
    /// Forward solver checks and DN-map export.
    Forward {
        #[command(flatten)]
        common: Common,
        /// Write the DN map of the configured potential (relative to the output directory).
        #[arg(long)]
        emit_dn: Option<PathBuf>,
        /// Relative noise level added to the emitted DN map.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Reconstruction identity, or reconstruction from DN files.
    Recon {
        #[command(flatten)]
        common: Common,
        /// DN map of the unknown potential.
        #[arg(long)]
        dn: Option<PathBuf>,
        /// DN map of the reference potential (zero potential assumed).
        #[arg(long, requires = "dn")]
        dn_ref: Option<PathBuf>,
        /// Single tau for reconstruction from DN files
        #[arg(long, conflicts_with = "tau_sweep")]
        tau: Option<f64>,
        /// `a:b:n`, n logarithmically spaced values from a to b.
        #[arg(long)]
        tau_sweep: Option<String>,
    },
    /// Stability curve over perturbation sizes.
    Stability(Common),
    /// Reconstruction error over the tau grid.
    Uniqueness(Common),
}

#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    config_path: Option<String>,
    config_sha256: Option<String>,
    config_hash: String,
    outputs: Vec<String>,
    wall_clock_seconds: f64,
    checks: Vec<Check>,
    versions: Versions,
}

#[derive(Serialize)]
struct Versions {
    bukhgeim: &'static str,
    file_format: u32,
}

struct Run {
    name: &'static str,
    cfg: ExperimentConfig,
    config_path: Option<PathBuf>,
    config_sha: Option<String>,
    out: PathBuf,
    start: Instant,
    written: Vec<String>,
}

impl Run {
    fn new(name: &'static str, common: &Common) -> Result<Option<Self>> {
        let (cfg, config_sha) = match &common.config {
            Some(p) => {
                let bytes = std::fs::read(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                let text = String::from_utf8(bytes.clone()).map_err(|e| Error::Config(e.to_string()))?;
                let sha: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
                (ExperimentConfig::from_json(&text)?, Some(sha))
            }
            None => (ExperimentConfig::default(), None),
        };
        if common.print_config {
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            return Ok(None);
        }
        if let Some(w) = common.workers {
            if w == 0 {
                return Err(Error::InvalidParameter("--workers must be positive".into()));
            }
            // Ignore a second initialization (the pool is global).
            let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
        }
        let out = common
            .out
            .clone()
            .or_else(|| std::env::var_os("BUKHGEIM_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
        std::fs::create_dir_all(&out)?;
        Ok(Some(Run {
            name,
            cfg,
            config_path: common.config.clone(),
            config_sha,
            out,
            start: Instant::now(),
            written: Vec::new(),
        }))
    }

    /// Resolves `rel` inside the output directory, refusing paths that escape it.
    fn target(&self, rel: &Path) -> Result<PathBuf> {
        let rel = if rel.is_absolute() {
            rel.strip_prefix(&self.out)
                .map_err(|_| Error::InvalidParameter(format!("{} is outside the output directory", rel.display())))?
                .to_path_buf()
        } else {
            rel.to_path_buf()
        };
        if rel.components().any(|c| !matches!(c, Component::Normal(_) | Component::CurDir)) {
            return Err(Error::InvalidParameter(format!("{} escapes the output directory", rel.display())));
        }
        Ok(self.out.join(rel))
    }

    fn write(&mut self, a: &Artifact) -> Result<()> {
        let path = self.target(Path::new(&a.name))?;
        write_atomic(&path, &a.bytes)?;
        self.written.push(path.display().to_string());
        Ok(())
    }

    fn write_all(&mut self, out: &ExperimentOutput) -> Result<()> {
        for a in &out.artifacts {
            self.write(a)?;
        }
        Ok(())
    }

    fn finish(mut self, checks: Vec<Check>) -> Result<u8> {
        let manifest_path = self.out.join(format!("manifest_{}.json", self.name));
        self.written.push(manifest_path.display().to_string());
        let manifest = RunManifest {
            subcommand: self.name.into(),
            config_path: self.config_path.as_ref().map(|p| p.display().to_string()),
            config_sha256: self.config_sha.clone(),
            config_hash: self.cfg.hash(),
            outputs: self.written.clone(),
            wall_clock_seconds: self.start.elapsed().as_secs_f64(),
            checks: checks.clone(),
            versions: Versions { bukhgeim: env!("CARGO_PKG_VERSION"), file_format: bukhgeim::io::FORMAT_VERSION },
        };
        write_json_atomic(&manifest_path, &manifest)?;
        let mut pass = true;
        for c in &checks {
            eprintln!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            pass &= c.pass;
        }
        Ok(if pass { 0 } else { 2 })
    }
}

fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::InvalidParameter(format!("--tau-sweep expects a:b:n, got {s}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(a > 0.0 && b >= a && n >= 1) {
        return Err(bad());
    }
    Ok(log_space(a, b, n))
}

fn simple(name: &'static str, common: &Common, f: fn(&ExperimentConfig) -> Result<ExperimentOutput>) -> Result<u8> {
    let Some(mut run) = Run::new(name, common)? else { return Ok(0) };
    let out = f(&run.cfg)?;
    run.write_all(&out)?;
    run.finish(out.checks)
}

fn cgo(common: &Common) -> Result<u8> {
    let Some(mut run) = Run::new("cgo", common)? else { return Ok(0) };
    let decay = run_cgo_decay(&run.cfg)?;
    let threshold = run_cgo_threshold(&run.cfg)?;
    run.write_all(&decay)?;
    run.write_all(&threshold)?;
    run.finish(decay.checks.into_iter().chain(threshold.checks).collect())
}

fn forward(common: &Common, emit_dn: Option<PathBuf>, noise: Option<f64>) -> Result<u8> {
    let Some(mut run) = Run::new("forward", common)? else { return Ok(0) };
    if let Some(n) = noise {
        if !(n >= 0.0) {
            return Err(Error::InvalidParameter(format!("--noise must be >= 0, got {n}")));
        }
        run.cfg.forward.noise = n;
    }
    let emit = emit_dn.map(|p| run.target(&p)).transpose()?;
    let (out, dn) = run_forward_checks(&run.cfg)?;
    run.write_all(&out)?;
    let mut checks = out.checks;

    let grid = run.cfg.forward.grid.build()?;
    let q1 = Potential::zero(&grid);
    let q2 = Potential::from_field(run.cfg.forward.bump.with_amplitude(0.1 * run.cfg.forward.bump.amplitude).field(&grid))?;
    let f1 = grid.sample_boundary(|x, y| C64::new(x, y));
    let f2 = grid.sample_boundary(|x, y| C64::new(1.0 + x * y, 0.0));
    let summary = pairing_study(&q1, &q2, &f1, &f2, &default_probes(&grid))?;
    run.write(&Artifact {
        name: "forward_pairing.json".into(),
        bytes: serde_json::to_vec_pretty(&serde_json::json!({ "config_hash": run.cfg.hash(), "pairing": summary }))?,
    })?;
    checks.push(Check {
        name: "equal potentials pair to zero".into(),
        pass: summary.equal_pair_pairing == 0.0,
        detail: format!("{}", summary.equal_pair_pairing),
    });
    checks.push(Check {
        name: "boundary pairing matches volume pairing".into(),
        pass: summary.relative_mismatch <= 0.01,
        detail: format!("relative mismatch {:.3e}", summary.relative_mismatch),
    });
    checks.push(Check {
        name: "probe pairings below data distance".into(),
        pass: summary.probe_sup <= 1.05 * summary.data_distance,
        detail: format!("probe sup {:.4e}, distance {:.4e}", summary.probe_sup, summary.data_distance),
    });
    if let Some(path) = emit {
        write_dn(&path, &dn)?;
        run.written.push(path.display().to_string());
    }
    run.finish(checks)
}

fn recon(common: &Common, dn: Option<PathBuf>, dn_ref: Option<PathBuf>, tau: Option<f64>, sweep: Option<String>) -> Result<u8> {
    let Some(mut run) = Run::new("recon", common)? else { return Ok(0) };
    let explicit = tau.is_some() || sweep.is_some();
    let taus = match (tau, sweep) {
        (Some(t), _) => vec![t],
        (None, Some(s)) => parse_sweep(&s)?,
        (None, None) => vec![run.cfg.recon.tau],
    };
    let hash = run.cfg.hash();
    let scale = run.cfg.recon.heatmap_scale;
    let mut checks = Vec::new();
    let (dn_q, dn_0, truth) = match (dn, dn_ref) {
        (Some(a), Some(b)) => (read_dn(&a)?, read_dn(&b)?, None),
        (Some(a), None) => {
            let dq = read_dn(&a)?;
            let d0 = bukhgeim::forward::assemble_dn(&Potential::zero(dq.grid()))?;
            (dq, d0, None)
        }
        (None, _) => {
            let identity = run_recon_identity(&run.cfg)?;
            run.write_all(&identity)?;
            checks.extend(identity.checks);
            // Synthetic data reconstruction on the configured grid is opt-in: on the
            // unit disk the exponential traces exceed f64 range for moderate tau.
            if !explicit {
                return run.finish(checks);
            }
            let grid = run.cfg.recon.grid.build()?;
            let q = Potential::from_field(run.cfg.recon.bump.field(&grid))?;
            let dq = bukhgeim::forward::assemble_dn(&q)?;
            let d0 = bukhgeim::forward::assemble_dn(&Potential::zero(&grid))?;
            (dq, d0, Some(q.field().clone()))
        }
    };
    let q_ref = Potential::zero(dn_0.grid());
    let (rows, fields) = recon_sweep(&dn_q, &dn_0, &q_ref, &taus, truth.as_ref(), &hash)?;
    run.write(&Artifact { name: "recon_sweep.csv".into(), bytes: to_csv(&rows)? })?;
    for (t, f) in taus.iter().zip(&fields) {
        let stem = format!("recon_tau{t:.4}");
        run.write(&Artifact { name: format!("{stem}.bfld"), bytes: bukhgeim::io::encode_field(f) })?;
        let meta = format!("config {hash}; tau = {t}");
        run.write(&Artifact { name: format!("{stem}.svg"), bytes: heatmap_svg(f, scale[0], scale[1], &meta).into_bytes() })?;
    }
    run.finish(checks)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved for property violations here.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Statphase(c) => simple("statphase", &c, run_statphase_rate),
        Command::Cgo(c) => cgo(&c),
        Command::Forward { common, emit_dn, noise } => forward(&common, emit_dn, noise),
        Command::Recon { common, dn, dn_ref, tau, tau_sweep } => recon(&common, dn, dn_ref, tau, tau_sweep),
        Command::Stability(c) => simple("stability", &c, run_stability_curve),
        Command::Uniqueness(c) => simple("uniqueness", &c, run_uniqueness),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
