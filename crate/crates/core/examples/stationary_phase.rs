//! Stationary-phase convolution: error against the smoothness bound, and the two
//! evaluation modes side by side.
//!
//! ```text
//! cargo run --release --example stationary_phase
//! ```

use bukhgeim::fit::loglog_slope_tail;
use bukhgeim::grid::{extend_zero, lp_norm};
use bukhgeim::phase::{lattice_chirp_tau, stat_phase_apply, stat_phase_errors, StatPhaseMode};
use bukhgeim::potentials::{random_gaussians, spectral_field};
use bukhgeim::{make_grid, Domain};

fn main() -> bukhgeim::Result<()> {
    let g = make_grid(2.0, 256, Domain::unit_disk(), 1.0)?;
    let taus: Vec<f64> = (0..9).map(|i| 4.0 * 2f64.powi(i)).collect();
    for s in [0.25, 0.75, 1.0] {
        let q = extend_zero(&spectral_field(&g, s, 11))?;
        let errs = stat_phase_errors(&q, &taus, s, 2)?;
        let measured: Vec<f64> = errs.iter().map(|e| e.measured).collect();
        let slope = loglog_slope_tail(&taus, &measured).unwrap_or(f64::NAN);
        let worst = errs.iter().map(|e| e.ratio()).fold(0.0, f64::max);
        println!("s = {s:<4}  fitted slope {slope:+.3} (expected {:+.3})  max error/bound {worst:.3}", -s / 2.0);
    }

    // The two modes agree to round-off where the sampled chirp is periodic on
    // the padded lattice; elsewhere they differ by periodization and aliasing.
    let g = make_grid(1.5, 64, Domain::unit_disk(), 1.0)?;
    let q = extend_zero(&random_gaussians(&g, 1, 4, 0.6, (0.08, 0.3)))?;
    let pad = 4;
    let lattice = lattice_chirp_tau(&g, pad);
    for tau in [lattice, 2.0, 8.0, 32.0] {
        let m = stat_phase_apply(&q, tau, 1, StatPhaseMode::Multiplier { pad })?;
        let d = stat_phase_apply(&q, tau, 1, StatPhaseMode::Quadrature)?;
        println!("tau {tau:>8.4}: multiplier vs quadrature {:.3e}", lp_norm(&m.sub(&d), 2.0) / lp_norm(&d, 2.0));
    }
    Ok(())
}
