use bukhgeim::fit::loglog_slope_tail;
use bukhgeim::forward::{assemble_dn, disk_radius_for};
use bukhgeim::grid::{extend_zero, sobolev_norm};
use bukhgeim::potentials::Bump;
use bukhgeim::recon::{
    identity_check, reconstruct_from_dn, relative_scan_error, scan_points, stability_bound, tau_schedule, TauChoice,
};
use bukhgeim::{make_grid, Domain, Grid2D, Potential};
use proptest::prelude::*;
use std::sync::Arc;

fn disk(n: usize) -> Arc<Grid2D> {
    make_grid(1.25, n, Domain::unit_disk(), 1.0).unwrap()
}

fn bump(g: &Arc<Grid2D>, amplitude: f64) -> Potential {
    Potential::from_field(Bump::standard().with_amplitude(amplitude).field(g)).unwrap()
}

#[test]
fn equal_potentials_give_an_exact_zero() {
    let g = disk(64);
    let q = bump(&g, 1.0);
    let r = identity_check(&q, &q, 8.0, 8).unwrap();
    let t = r.terms;
    assert_eq!(r.q_norm, 0.0);
    assert_eq!(r.identity_defect, Some(0.0));
    for v in [t.statphase_defect, t.central_pairing, t.corr_dbar, t.corr_d, t.tail] {
        assert_eq!(v, 0.0);
    }
    assert!(identity_check(&q, &q, 8.0, 0).is_err());
    assert!(identity_check(&q, &bump(&disk(128), 1.0), 8.0, 8).is_err());
}

#[test]
fn terms_sum_to_the_potential_difference() {
    let g = disk(64);
    let (q1, q2) = (bump(&g, 0.5), Potential::zero(&g));
    for tau in [2.0, 8.0] {
        for (a, b) in [(&q1, &q2), (&q2, &q1)] {
            let r = identity_check(a, b, tau, 4).unwrap();
            assert!(r.relative_defect().unwrap() <= 1e-10, "{:?}", r.relative_defect());
        }
    }
}

#[test]
fn corrections_decay_while_the_phase_is_resolved() {
    // At N = 128 the phase oscillation stays below the grid Nyquist frequency for tau <= 32.
    let g = disk(128);
    let taus = [4.0, 8.0, 16.0, 32.0];
    let q = bump(&g, 0.01);
    let zero = Potential::zero(&g);
    let dbar: Vec<f64> = taus.iter().map(|&t| identity_check(&zero, &q, t, 16).unwrap().terms.corr_dbar).collect();
    let d: Vec<f64> = taus.iter().map(|&t| identity_check(&q, &zero, t, 16).unwrap().terms.corr_d).collect();
    let (sa, sb) = (loglog_slope_tail(&taus, &dbar).unwrap(), loglog_slope_tail(&taus, &d).unwrap());
    println!("corr_dbar {dbar:?} exponent {sa:.3}; corr_d {d:?} exponent {sb:.3}");
    assert!(sa <= -0.3 && sb <= -0.3);
}

#[test]
fn stationary_phase_defect_within_smoothness_bound() {
    let g = disk(128);
    let q = bump(&g, 0.1);
    let m = sobolev_norm(&extend_zero(q.field()).unwrap(), 1.0).unwrap();
    for tau in [4.0, 16.0, 32.0] {
        let r = identity_check(&q, &Potential::zero(&g), tau, 8).unwrap();
        let bound = 2.5 * tau.powf(-0.5) * m;
        println!("tau {tau}: defect {:.4e} bound {bound:.4e}", r.terms.statphase_defect);
        assert!(r.terms.statphase_defect <= bound);
    }
}

#[test]
fn tail_is_small_for_weak_potentials() {
    let g = disk(128);
    let q = bump(&g, 0.1);
    for tau in [8.0, 16.0, 32.0] {
        let r = identity_check(&q, &Potential::zero(&g), tau, 8).unwrap();
        println!("tau {tau}: tail {:.4e} |Q| {:.4e}", r.terms.tail, r.q_norm);
        assert!(r.terms.tail <= 0.5 * r.q_norm);
    }
}

#[test]
fn reconstruction_from_identical_maps_is_zero() {
    let g = disk(64);
    let dn = assemble_dn(&bump(&g, 1.0)).unwrap();
    let r = reconstruct_from_dn(&dn, &dn, &Potential::zero(&g), 4.0).unwrap();
    assert_eq!(r.max_abs(), 0.0);
    assert!(reconstruct_from_dn(&dn, &dn, &Potential::zero(&g), 0.0).is_err());
    let other = assemble_dn(&Potential::zero(&disk(128))).unwrap();
    assert!(reconstruct_from_dn(&dn, &other, &Potential::zero(&g), 4.0).is_err());
}

#[test]
fn reconstruction_is_linear_for_small_potentials() {
    let g = make_grid(0.25, 64, disk_radius_for(1.0 / 32.0), 32f64.powf(-0.5)).unwrap();
    let b = Bump::standard().scaled(32f64.powf(-0.5));
    let dn0 = assemble_dn(&Potential::zero(&g)).unwrap();
    let recon = |amp: f64| {
        let q = Potential::from_field(b.with_amplitude(amp).field(&g)).unwrap();
        reconstruct_from_dn(&assemble_dn(&q).unwrap(), &dn0, &Potential::zero(&g), 8.0).unwrap()
    };
    let (one, two) = (recon(0.01), recon(0.02));
    let nodes = scan_points(&g);
    let norm = |f: &bukhgeim::Field| nodes.iter().map(|&i| f.at(i).norm_sqr()).sum::<f64>().sqrt();
    let ratio = norm(&two) / norm(&one);
    println!("doubling ratio {ratio:.4}");
    assert!((1.8..=2.2).contains(&ratio));
    let truth = b.with_amplitude(0.01).field(&g);
    println!("relative error at tau 8: {:.4}", relative_scan_error(&one, &truth));
}

#[test]
fn tau_schedule_examples() {
    assert_eq!(tau_schedule(1.0, 1.0, 0.5).unwrap(), TauChoice::Trivial);
    assert_eq!(tau_schedule(2.0, 1.0, 0.5).unwrap().case(), 2);
    let t = tau_schedule((-1.0f64).exp(), 1.0, 0.5).unwrap();
    assert_eq!(t.case(), 1);
    assert!((t.tau().unwrap() - 1.0 / 9.0).abs() <= 1e-15);
    let lo = tau_schedule(1e-6, 1.0, 0.5).unwrap().tau().unwrap();
    let hi = tau_schedule(1e-3, 1.0, 0.5).unwrap().tau().unwrap();
    assert!(lo > hi);
    for bad in [0.0, 1.0, -0.2, f64::NAN] {
        assert!(tau_schedule(0.1, 1.0, bad).is_err());
    }
    assert!(tau_schedule(-0.1, 1.0, 0.5).is_err());
}

#[test]
fn stability_bound_examples() {
    assert_eq!(stability_bound(2.0, 1.0, 3.0).unwrap(), 6.0);
    let v = stability_bound((-1.0f64).exp(), 1.0, 3.0).unwrap();
    assert!((v - 3.0 / 2f64.sqrt()).abs() <= 1e-14);
    assert_eq!(stability_bound(0.0, 1.0, 3.0).unwrap(), 0.0);
    assert!(stability_bound(0.1, 0.5, 1.0).is_err());
    assert!(stability_bound(0.1, 0.0, 1.0).is_err());
    assert!(stability_bound(0.1, 1.5, 1.0).is_err());
}

proptest! {
    #[test]
    fn tau_is_linear_in_alpha(d in 1e-12f64..0.999, r in 0.1f64..3.0, a in 0.01f64..0.49) {
        let one = tau_schedule(d, r, a).unwrap().tau().unwrap();
        let two = tau_schedule(d, r, 2.0 * a).unwrap().tau().unwrap();
        prop_assert!((two / one - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn bound_nonincreasing_in_s(d in 1e-12f64..0.999, s1 in 0.01f64..1.0, s2 in 0.01f64..1.0) {
        prop_assume!(s1 != 0.5 && s2 != 0.5);
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        prop_assert!(stability_bound(d, hi, 1.0).unwrap() <= stability_bound(d, lo, 1.0).unwrap());
    }

    #[test]
    fn bound_nondecreasing_in_d(d1 in 1e-12f64..0.999, d2 in 1e-12f64..0.999, s in 0.6f64..1.0) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(stability_bound(lo, s, 1.0).unwrap() <= stability_bound(hi, s, 1.0).unwrap());
    }
}
