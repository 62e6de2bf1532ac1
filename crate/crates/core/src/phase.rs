//! The quadratic phase `(z - z0)^2`, its unimodular weights, the conjugated
//! Cauchy operator and the stationary-phase convolution.

use crate::cauchy::{d_inv, dbar_inv};
use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::{sobolev_norm, Field, Grid2D, Support, C64, ZERO};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub tau: f64,
    pub z0: C64,
    /// `+1` or `-1`.
    pub sign: i8,
}

impl PhaseParams {
    /// Checks `tau >= 0`, `sign = +-1` and that `z0` lies inside X.
    pub fn new(grid: &Grid2D, tau: f64, z0: C64, sign: i8) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!("tau must be finite and >= 0, got {tau}")));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidParameter(format!("sign must be +1 or -1, got {sign}")));
        }
        if !grid.domain().contains(z0.re, z0.im) {
            return Err(Error::InvalidParameter(format!("z0 = {z0} is not inside X")));
        }
        Ok(PhaseParams { tau, z0, sign })
    }

    pub fn flipped(self) -> Self {
        PhaseParams { sign: -self.sign, ..self }
    }

    fn s(&self) -> f64 {
        self.sign as f64
    }
}

/// `(z - z0)^2` on every node.
pub fn phi(grid: &Arc<Grid2D>, z0: C64) -> Field {
    Field::from_fn(grid, Support::WholeGrid, |x, y| {
        let w = C64::new(x, y) - z0;
        w * w
    })
}

/// `e^{i sign tau (Phi + conj Phi)} = e^{2 i sign tau Re Phi}`.
pub fn weight(grid: &Arc<Grid2D>, params: &PhaseParams) -> Field {
    let (a, b) = (params.z0.re, params.z0.im);
    let k = 2.0 * params.s() * params.tau;
    Field::from_fn(grid, Support::WholeGrid, |x, y| {
        C64::from_polar(1.0, k * ((x - a).powi(2) - (y - b).powi(2)))
    })
}

/// `e^{i sign tau Phi}`, the holomorphic CGO factor.
pub fn phase_factor(grid: &Arc<Grid2D>, params: &PhaseParams) -> Field {
    let st = params.s() * params.tau;
    Field::from_fn(grid, Support::WholeGrid, |x, y| {
        let w = C64::new(x, y) - params.z0;
        (C64::i() * st * w * w).exp()
    })
}

/// `(1/2) conj(w) d_inv(g w)` with `w` the phase weight.
pub fn r_tilde(g: &Field, params: &PhaseParams) -> Field {
    let w = weight(g.grid(), params);
    d_inv(&g.mul(&w)).mul(&w.conj()).scale(C64::new(0.5, 0.0))
}

/// Mirror of [`r_tilde`] with `dbar_inv`, used for the conjugate-phase solutions.
pub fn r_tilde_bar(g: &Field, params: &PhaseParams) -> Field {
    let w = weight(g.grid(), params);
    dbar_inv(&g.mul(&w)).mul(&w.conj()).scale(C64::new(0.5, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StatPhaseMode {
    /// Closed-form Fourier multiplier on a grid zero-padded by `pad`.
    Multiplier { pad: usize },
    /// Direct Riemann sum over the grid (separable, `O(N^3)`).
    Quadrature,
}

impl Default for StatPhaseMode {
    fn default() -> Self {
        StatPhaseMode::Multiplier { pad: 2 }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

/// Closed-form multiplier `exp(-i sign (xi1^2 - xi2^2) / (8 tau))`.
pub fn chirp_multiplier(xi1: f64, xi2: f64, tau: f64, sign: i8) -> C64 {
    C64::from_polar(1.0, -(sign as f64) * (xi1 * xi1 - xi2 * xi2) / (8.0 * tau))
}

fn padded_spectrum(q: &Field, pad: usize) -> (usize, Vec<C64>) {
    let grid = q.grid();
    let n = grid.n();
    let m = pad * n;
    let mut buf = vec![ZERO; m * m];
    for i in 0..n {
        buf[i * m..i * m + n].copy_from_slice(&q.values()[i * n..(i + 1) * n]);
    }
    Fft2::plan(m).forward(&mut buf);
    (m, buf)
}

fn padded_frequency(k: usize, m: usize, h: f64) -> f64 {
    2.0 * PI * crate::fft::signed_index(k, m) as f64 / (m as f64 * h)
}

/// Smallest `tau` at which the sampled chirp is periodic on the `pad * N` lattice.
/// There the discrete transform of the sampled chirp equals the closed-form
/// multiplier, so both [`StatPhaseMode`]s agree to round-off. At other `tau` they
/// differ by the periodization of the chirp (small `tau`) and by aliasing (large `tau`).
pub fn lattice_chirp_tau(grid: &Grid2D, pad: usize) -> f64 {
    let h = grid.h();
    PI / (2.0 * (pad * grid.n()) as f64 * h * h)
}

/// `x0 -> (2 tau / pi) sum_x h^2 e^{i sign tau ((z - z0)^2 + conj)} Q(x)` on the grid nodes.
pub fn stat_phase_apply(q: &Field, tau: f64, sign: i8, mode: StatPhaseMode) -> Result<Field> {
    check_tau(tau)?;
    if q.support() != Support::WholeGrid {
        return Err(Error::Support("stat_phase_apply expects a whole-grid field".into()));
    }
    let grid = q.grid();
    let (n, h) = (grid.n(), grid.h());
    match mode {
        StatPhaseMode::Multiplier { pad } => {
            if pad == 0 || !pad.is_power_of_two() {
                return Err(Error::InvalidParameter(format!("pad must be a power of two, got {pad}")));
            }
            let (m, mut buf) = padded_spectrum(q, pad);
            for (idx, v) in buf.iter_mut().enumerate() {
                let (k1, k2) = (padded_frequency(idx / m, m, h), padded_frequency(idx % m, m, h));
                *v *= chirp_multiplier(k1, k2, tau, sign);
            }
            Fft2::plan(m).inverse(&mut buf);
            let mut out = vec![ZERO; n * n];
            for i in 0..n {
                out[i * n..(i + 1) * n].copy_from_slice(&buf[i * m..i * m + n]);
            }
            Field::from_values(grid, out, Support::WholeGrid)
        }
        StatPhaseMode::Quadrature => {
            // The kernel is e^{2 i s tau h^2 (d1^2 - d2^2)} in index offsets d.
            let st = 2.0 * sign as f64 * tau * h * h;
            let k1: Vec<C64> = (0..n).map(|d| C64::from_polar(1.0, st * (d * d) as f64)).collect();
            let k2: Vec<C64> = k1.iter().map(|v| v.conj()).collect();
            let vals = q.values();
            // First pass along x2, then x1.
            let mut tmp = vec![ZERO; n * n];
            for i in 0..n {
                for b in 0..n {
                    let mut acc = ZERO;
                    for j in 0..n {
                        acc += k2[b.abs_diff(j)] * vals[i * n + j];
                    }
                    tmp[i * n + b] = acc;
                }
            }
            let c = 2.0 * tau / PI * h * h;
            let mut out = vec![ZERO; n * n];
            for a in 0..n {
                for b in 0..n {
                    let mut acc = ZERO;
                    for i in 0..n {
                        acc += k1[a.abs_diff(i)] * tmp[i * n + b];
                    }
                    out[a * n + b] = c * acc;
                }
            }
            Field::from_values(grid, out, Support::WholeGrid)
        }
    }
}

/// Measured stationary-phase error and the corresponding `W^s_2` bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatPhaseError {
    pub tau: f64,
    pub s: f64,
    pub measured: f64,
    pub bound: f64,
}

impl StatPhaseError {
    pub fn ratio(&self) -> f64 {
        if self.bound == 0.0 {
            0.0
        } else {
            self.measured / self.bound
        }
    }
}

/// `||Q - S_tau Q||_{L^2}` over the padded torus (Plancherel, no truncation to the
/// original window) together with `2 tau^{-s/2} ||Q||_{W^s_2}`.
pub fn stat_phase_error(q: &Field, tau: f64, s: f64, pad: usize) -> Result<StatPhaseError> {
    Ok(stat_phase_errors(q, &[tau], s, pad)?[0])
}

/// [`stat_phase_error`] over several `tau` values, sharing one transform.
pub fn stat_phase_errors(q: &Field, taus: &[f64], s: f64, pad: usize) -> Result<Vec<StatPhaseError>> {
    for &t in taus {
        check_tau(t)?;
    }
    let w = sobolev_norm(q, s)?;
    let grid = q.grid();
    let h = grid.h();
    let (m, spec) = padded_spectrum(q, pad);
    let scale = spec.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(taus
        .iter()
        .map(|&tau| {
            let measured = if scale == 0.0 {
                0.0
            } else {
                let acc: f64 = spec
                    .iter()
                    .enumerate()
                    .map(|(idx, v)| {
                        let (k1, k2) = (padded_frequency(idx / m, m, h), padded_frequency(idx % m, m, h));
                        let d = (k1 * k1 - k2 * k2) / (8.0 * tau);
                        // |1 - e^{-i d}| = 2 |sin(d/2)|
                        4.0 * (0.5 * d).sin().powi(2) * (v / scale).norm_sqr()
                    })
                    .sum();
                // ||f||^2 = sum |h^2 FFT|^2 / (M h)^2
                scale * h * h * acc.sqrt() / (m as f64 * h)
            };
            StatPhaseError { tau, s, measured, bound: 2.0 * tau.powf(-s / 2.0) * w }
        })
        .collect())
}

/// `(|1 - e^{-2i(xi1^2 - xi2^2)}|, 2^{1+s/2} |xi|^s)`, the left side evaluated through
/// `sqrt(4 sin^2(xi1^2 - xi2^2))`.
pub fn multiplier_bound_check(xi: (f64, f64), s: f64) -> (f64, f64) {
    let lhs = (4.0 * (xi.0 * xi.0 - xi.1 * xi.1).sin().powi(2)).sqrt();
    let r = xi.0.hypot(xi.1);
    let rhs = 2f64.powf(1.0 + s / 2.0) * if s == 0.0 { 1.0 } else { r.powf(s) };
    (lhs, rhs)
}
