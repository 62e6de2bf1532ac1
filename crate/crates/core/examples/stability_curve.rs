//! Logarithmic stability: data distance, true difference and the calibrated
//! bound over shrinking perturbations, plus the `tau` rule for each distance.
//!
//! ```text
//! cargo run --release --example stability_curve
//! ```

use bukhgeim::experiments::{run_stability_curve, ExperimentConfig};
use bukhgeim::recon::{stability_bound, tau_schedule};

fn main() -> bukhgeim::Result<()> {
    let cfg = ExperimentConfig::default();
    let out = run_stability_curve(&cfg)?;
    let csv = out.artifact("stability.csv").expect("stability.csv");
    print!("{}", String::from_utf8_lossy(&csv.bytes));
    for c in &out.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }

    println!("\nshape of the bound with C = 1, s = 1:");
    for d in [0.5, 1e-2, 1e-4, 1e-8, 1e-16] {
        let tau = tau_schedule(d, 1.0, 0.5)?.tau().map_or("none".to_string(), |t| format!("{t:.4}"));
        println!("d = {d:.0e}: bound {:.4}, tau {tau}", stability_bound(d, 1.0, 1.0)?);
    }
    Ok(())
}
