//! Cauchy transforms over the unit disk.
//!
//! Checks the disk-indicator identity `dbar_inv(1_X) = conj(z)` at three
//! resolutions, the left-inverse defect on a smooth bump, and a randomized
//! operator-norm probe for an admissible and an excluded exponent pair.
//!
//! ```text
//! cargo run --release --example cauchy_transform
//! ```

use bukhgeim::cauchy::{dbar, dbar_inv, operator_norm_probe, CauchyOp, OutputNorm, ProbeMode, ProbeSpec};
use bukhgeim::grid::lp_norm_on;
use bukhgeim::potentials::Bump;
use bukhgeim::{make_grid, Domain, Field, Support, C64};

fn main() -> bukhgeim::Result<()> {
    println!("{:>5} {:>14} {:>14}", "N", "identity err", "left-inv err");
    for n in [64, 128, 256] {
        let g = make_grid(1.25, n, Domain::unit_disk(), 1.0)?;
        let on_x = |f: &Field| lp_norm_on(f, 2.0, |i| g.in_x(i));

        let one = Field::from_fn(&g, Support::X, |_, _| C64::new(1.0, 0.0));
        let zbar = Field::from_fn(&g, Support::WholeGrid, |x, y| C64::new(x, -y));
        let ident = on_x(&dbar_inv(&one).sub(&zbar)) / on_x(&zbar);

        // Stay two cells away from the staircase edge, where the difference stencil
        // straddles the jump of the zero extension.
        let q = Bump::standard().field(&g);
        let keep = |i: usize| {
            let (x, y) = g.point(i);
            g.in_x(i) && g.distance_to_boundary(x, y) >= 2.0 * g.h()
        };
        let back = dbar(&dbar_inv(&q));
        let defect = lp_norm_on(&back.sub(&q), 2.0, keep) / lp_norm_on(&q, 2.0, keep);
        println!("{n:>5} {ident:>14.4e} {defect:>14.4e}");
    }

    let spec = |p_in, q_out, mode| ProbeSpec {
        op: CauchyOp::DbarInv,
        p_in,
        q_out,
        trials: 12,
        seed: 7,
        mode,
        output: OutputNorm::Lebesgue,
    };
    println!("\nnorm probes (largest ratio over concentrated test functions):");
    for n in [64, 128, 256] {
        let g = make_grid(1.25, n, Domain::unit_disk(), 1.0)?;
        let bounded = operator_norm_probe(&g, &spec(2.0, 4.0, ProbeMode::Bounded))?;
        let excluded = operator_norm_probe(&g, &spec(1.0, 6.0, ProbeMode::Unboundedness))?;
        println!("N={n:<4} L2 -> L4: {bounded:.4}   L1 -> L6 (excluded): {excluded:.4}");
    }
    Ok(())
}
