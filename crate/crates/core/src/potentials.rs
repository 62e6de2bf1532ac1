//! Test potentials and field families: compact bumps, Gaussians and
//! spectrally shaped random fields of prescribed smoothness.

use crate::fft::Fft2;
use crate::grid::{Field, Grid2D, Support, C64, ZERO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// `amplitude * (1 - |x - c|^2 / radius^2)_+^power`, restricted to X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
    pub power: i32,
    pub amplitude: f64,
}

impl Bump {
    /// Smooth bump used as the default unknown on the unit disk.
    pub fn standard() -> Self {
        Bump { center: [0.1, -0.05], radius: 0.5, power: 3, amplitude: 1.0 }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let r2 = ((x - self.center[0]).powi(2) + (y - self.center[1]).powi(2)) / self.radius.powi(2);
        if r2 >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - r2).powi(self.power)
        }
    }

    pub fn field(&self, grid: &Arc<Grid2D>) -> Field {
        Field::from_fn(grid, Support::X, |x, y| C64::new(self.value(x, y), 0.0))
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// The same bump on a domain scaled by `factor`, keeping `tau * length^2` invariants:
    /// lengths scale by `factor`, the amplitude by `factor^-2`.
    pub fn scaled(&self, factor: f64) -> Self {
        Bump {
            center: [self.center[0] * factor, self.center[1] * factor],
            radius: self.radius * factor,
            power: self.power,
            amplitude: self.amplitude / (factor * factor),
        }
    }
}

/// `amplitude * exp(-|x - c|^2 / (2 width^2))`, restricted to X.
pub fn gaussian(grid: &Arc<Grid2D>, center: (f64, f64), width: f64, amplitude: C64) -> Field {
    Field::from_fn(grid, Support::X, |x, y| {
        amplitude * (-((x - center.0).powi(2) + (y - center.1).powi(2)) / (2.0 * width * width)).exp()
    })
}

/// Sum of a few random Gaussian bumps (random centers with `|c| <= center_radius`,
/// widths in `widths`, unit-scale complex amplitudes), restricted to X.
pub fn random_gaussians(
    grid: &Arc<Grid2D>,
    seed: u64,
    count: usize,
    center_radius: f64,
    widths: (f64, f64),
) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<_> = (0..count)
        .map(|_| {
            let r = center_radius * rng.gen::<f64>().sqrt();
            let t = 2.0 * PI * rng.gen::<f64>();
            let w = rng.gen_range(widths.0..=widths.1);
            let a = C64::from_polar(rng.gen_range(0.5..1.5), 2.0 * PI * rng.gen::<f64>());
            ((r * t.cos(), r * t.sin()), w, a)
        })
        .collect();
    let mut f = Field::zeros(grid, Support::X);
    for (c, w, a) in params {
        f = f.add(&gaussian(grid, c, w, a));
    }
    f
}

/// Random real field of Sobolev smoothness about `s`: unit-modulus random-phase
/// spectrum shaped by `(1 + |xi|^2)^{-(1+s)/2}`, real part, times the cutoff
/// `(1 - |x|^2/rho^2)_+^2` with `rho` the domain extent. Normalized to unit `L^2`.
pub fn spectral_field(grid: &Arc<Grid2D>, s: f64, seed: u64) -> Field {
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf: Vec<C64> = (0..n * n)
        .map(|idx| {
            let (k1, k2) = (grid.frequency(idx / n), grid.frequency(idx % n));
            C64::from_polar((1.0 + k1 * k1 + k2 * k2).powf(-(1.0 + s) / 2.0), 2.0 * PI * rng.gen::<f64>())
        })
        .collect();
    Fft2::plan(n).inverse(&mut buf);
    let rho = grid.domain().extent();
    let mut f = Field::zeros(grid, Support::X);
    {
        let vals = f.values_mut();
        for (idx, v) in vals.iter_mut().enumerate() {
            let (x, y) = grid.point(idx);
            let c = (1.0 - (x * x + y * y) / (rho * rho)).max(0.0).powi(2);
            *v = if grid.in_x(idx) { C64::new(buf[idx].re * c, 0.0) } else { ZERO };
        }
    }
    let norm = crate::grid::lp_norm(&f, 2.0);
    if norm > 0.0 {
        f = f.scale(C64::new(1.0 / norm, 0.0));
    }
    f
}
