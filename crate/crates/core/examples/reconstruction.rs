//! The reconstruction identity term by term, then reconstruction from DN data.
//!
//! ```text
//! cargo run --release --example reconstruction -- [output dir]
//! ```

use bukhgeim::experiments::recon_sweep;
use bukhgeim::forward::{assemble_dn, disk_radius_for};
use bukhgeim::io::{heatmap_svg, write_atomic};
use bukhgeim::potentials::Bump;
use bukhgeim::recon::identity_check;
use bukhgeim::{make_grid, Domain, Potential};
use std::path::PathBuf;

fn main() -> bukhgeim::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("bukhgeim-examples"));

    let g = make_grid(1.25, 128, Domain::unit_disk(), 1.0)?;
    let q1 = Potential::from_field(Bump::standard().field(&g))?;
    let q2 = Potential::from_field(Bump { center: [-0.2, 0.15], radius: 0.4, power: 3, amplitude: 0.5 }.field(&g))?;
    println!("{:>5} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "tau", "statphase", "central", "corr_dbar", "corr_d", "tail", "defect");
    for tau in [16.0, 64.0] {
        let r = identity_check(&q1, &q2, tau, 16)?;
        let t = r.terms;
        println!(
            "{tau:>5} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e}",
            t.statphase_defect,
            t.central_pairing,
            t.corr_dbar,
            t.corr_d,
            t.tail,
            r.relative_defect().unwrap_or(f64::NAN)
        );
    }

    // Data-driven reconstruction on a small disk, where the exponential traces
    // stay within double precision over the whole tau range.
    let rho = (1.0f64 / 32.0).sqrt();
    let g = make_grid(1.25 * rho, 64, disk_radius_for(rho * rho), rho)?;
    let truth = Bump { center: [0.1, -0.05], radius: 1.0, power: 2, amplitude: 0.05 }.scaled(rho).field(&g);
    let q = Potential::from_field(truth.clone())?;
    let zero = Potential::zero(&g);
    let taus = [8.0, 16.0, 32.0, 64.0];
    let (rows, fields) = recon_sweep(&assemble_dn(&q)?, &assemble_dn(&zero)?, &zero, &taus, Some(&truth), "example")?;
    for r in &rows {
        println!("tau {:>4}: relative error {:.4}", r.tau, r.relative_error);
    }
    let path = out.join("reconstruction.svg");
    write_atomic(&path, heatmap_svg(fields.last().expect("one field per tau"), 0.0, 1.6, "tau = 64").as_bytes())?;
    println!("heatmap written to {}", path.display());
    Ok(())
}
