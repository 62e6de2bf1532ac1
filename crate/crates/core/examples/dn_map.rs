//! Dirichlet problems, the DN map and its file format.
//!
//! Solves the manufactured problem `q = -1`, `u = e^x` at three resolutions,
//! checks the disk eigenmodes of the free DN map, and round-trips a noisy DN map
//! through a `DNMP` file.
//!
//! ```text
//! cargo run --release --example dn_map -- [output dir]
//! ```

use bukhgeim::forward::{assemble_dn, cauchy_distance_data, eigenvalue_guard, solve_dirichlet};
use bukhgeim::io::{read_dn, write_dn};
use bukhgeim::potentials::Bump;
use bukhgeim::{make_grid, Domain, Field, Potential, Support, C64};
use std::path::PathBuf;

fn main() -> bukhgeim::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("bukhgeim-examples"));

    for n in [64, 128, 256] {
        let g = make_grid(1.25, n, Domain::unit_disk(), 1.0)?;
        let q = Potential::from_field(Field::from_fn(&g, Support::X, |_, _| C64::new(-1.0, 0.0)))?;
        let u = solve_dirichlet(&q, &g.sample_boundary(|x, _| C64::new(x.exp(), 0.0)))?;
        let err = (0..g.len())
            .filter(|&i| g.in_x(i))
            .map(|i| (u.at(i) - g.point(i).0.exp()).norm())
            .fold(0.0, f64::max);
        println!("N={n:<4} max error of e^x: {err:.3e}");
    }

    let g = make_grid(1.25, 128, Domain::unit_disk(), 1.0)?;
    let dn0 = assemble_dn(&Potential::zero(&g))?;
    for k in 1..=4 {
        let f = g.sample_boundary(|x, y| C64::new((k as f64 * y.atan2(x)).cos(), 0.0));
        println!("mode {k}: Rayleigh quotient {:.4} (continuum {k})", dn0.rayleigh_quotient(&f).re);
    }

    let q = Potential::from_field(Bump::standard().field(&g))?;
    println!("guard passes for the bump: {}", eigenvalue_guard(&q));
    let dn = assemble_dn(&q)?;
    println!("symmetry defect {:.2e}, data distance to q = 0: {:.4e}", dn.symmetry_defect(), cauchy_distance_data(&dn, &dn0)?);

    let path = out.join("bump.dnmp");
    write_dn(&path, &dn.with_noise(1e-3, 1))?;
    let back = read_dn(&path)?;
    println!("wrote {} ({} boundary nodes, noise {})", path.display(), back.size(), back.noise_level());
    Ok(())
}
