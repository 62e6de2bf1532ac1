//! CGO solutions with the quadratic phase, built by the Neumann series.
//!
//! Prints the term norms and successive ratios for the standard bump at a few
//! `tau`, the remainder decay rates, and the smallest `tau` at which the series
//! contracts for amplitude-scaled copies of the bump.
//!
//! ```text
//! cargo run --release --example cgo_solutions
//! ```

use bukhgeim::cgo::{build_cgo, decay_threshold, remainder_report, residual, Side};
use bukhgeim::phase::PhaseParams;
use bukhgeim::potentials::Bump;
use bukhgeim::{make_grid, Domain, Potential, C64};

fn main() -> bukhgeim::Result<()> {
    let g = make_grid(1.25, 128, Domain::unit_disk(), 1.0)?;
    let q = Potential::from_field(Bump::standard().field(&g))?;
    let z0 = C64::new(0.3, 0.2);

    // The residual is dominated by the five-point truncation error of the chirp,
    // which grows like tau^2 h^2; the series itself contracts much faster.
    let mut sweep = Vec::new();
    for tau in [4.0, 8.0, 16.0, 32.0, 64.0] {
        let s = build_cgo(&q, &PhaseParams::new(&g, tau, z0, 1)?, Side::Phase)?;
        let ratios: Vec<String> = s.diagnostics.ratios.iter().take(4).map(|r| format!("{r:.3}")).collect();
        println!(
            "tau {tau:>4}: {:>2} terms, first ratios [{}], residual {:.3e}",
            s.truncation(),
            ratios.join(", "),
            residual(&s, &q)
        );
        sweep.push(s);
    }
    let r = remainder_report(&sweep, 4.0)?;
    println!("remainder exponents: L2 {:.3} (limit {}), L4 {:.3} (limit {:.3})", r.l2_exponent, bukhgeim::cgo::RemainderReport::l2_threshold(), r.l4_exponent, r.l4_threshold());

    for amp in [0.0, 20.0, 40.0, 80.0] {
        let qa = Potential::from_field(Bump::standard().with_amplitude(amp).field(&g))?;
        let t = decay_threshold(&qa, C64::new(0.0, 0.0), Side::Phase, 0.25, 1024.0, 0.02)?;
        println!("amplitude {amp:>4}: contraction from tau = {}", t.map_or("none in bracket".into(), |t| format!("{t:.3}")));
    }
    Ok(())
}
