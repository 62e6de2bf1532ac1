//! Reconstruction error against `tau` for a small bump on the scaled disk,
//! with the error of the ideal stationary-phase average for comparison.
//!
//! ```text
//! cargo run --release --example uniqueness_sweep -- [N]
//! ```

use bukhgeim::experiments::{run_uniqueness, ExperimentConfig};

fn main() -> bukhgeim::Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(n) = std::env::args().nth(1) {
        cfg.uniqueness.n = n.parse().map_err(|_| bukhgeim::Error::InvalidParameter(format!("bad N: {n}")))?;
    }
    let out = run_uniqueness(&cfg)?;
    let csv = out.artifact("uniqueness.csv").expect("uniqueness.csv");
    let mut rd = csv::Reader::from_reader(csv.bytes.as_slice());
    println!("{:>6} {:>10} {:>12} {:>12}", "tau", "region", "data error", "ideal error");
    for row in rd.records() {
        let row = row.map_err(bukhgeim::Error::from)?;
        println!("{:>6} {:>10} {:>12.4} {:>12.4}", &row[1], &row[2], row[3].parse::<f64>().unwrap_or(f64::NAN), row[4].parse::<f64>().unwrap_or(f64::NAN));
    }
    for c in &out.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}
