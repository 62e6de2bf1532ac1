//! Area-integral inverses of the Wirtinger derivatives over X, their finite
//! difference counterparts and randomized operator-norm probes.
//!
//! `dbar_inv(g)(z) = (1/pi) sum_cells g(zeta) * integral_{cell} dA / (z - zeta)`, with the
//! kernel integrated exactly over each grid cell, then applied as a zero-padded
//! `2N x 2N` FFT convolution (no periodic wrap).

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::{lp_norm, Field, Grid2D, Support, C64, ZERO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Antiderivative of `x / (x^2 + y^2)` in both variables, with its continuous
/// limits on the axes.
fn cell_primitive(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    let a = if r2 > 0.0 { 0.5 * y * r2.ln() } else { 0.0 };
    let b = if x != 0.0 { x * (y / x).atan() } else { 0.0 };
    a + b
}

/// Exact integral of `1/(x + i y)` over the square of side `h` centered at `(cx, cy)`.
pub fn cell_integral(cx: f64, cy: f64, h: f64) -> C64 {
    let (x0, x1) = (cx - 0.5 * h, cx + 0.5 * h);
    let (y0, y1) = (cy - 0.5 * h, cy + 0.5 * h);
    let rect = |f: &dyn Fn(f64, f64) -> f64| f(x1, y1) - f(x0, y1) - f(x1, y0) + f(x0, y0);
    let re = rect(&cell_primitive);
    let im = rect(&|x, y| cell_primitive(y, x));
    C64::new(re, -im)
}

/// Tabulated Cauchy kernel on the `2N x 2N` offset lattice of a grid.
#[derive(Debug)]
pub struct CauchyKernel {
    n: usize,
    h: f64,
    /// `(1/pi) * cell integral` at each offset, FFT order.
    table: Vec<C64>,
    /// Forward FFT of `table`.
    spectrum: Vec<C64>,
}

impl CauchyKernel {
    pub fn new(n: usize, h: f64) -> Self {
        let m = 2 * n;
        let offset = |a: usize| if a < n { a as f64 } else { a as f64 - m as f64 };
        let mut table = vec![ZERO; m * m];
        for a in 0..m {
            for b in 0..m {
                if a == n || b == n {
                    continue;
                }
                table[a * m + b] = cell_integral(offset(a) * h, offset(b) * h, h) / PI;
            }
        }
        let mut spectrum = table.clone();
        Fft2::plan(m).forward(&mut spectrum);
        CauchyKernel { n, h, table, spectrum }
    }

    /// Shared kernel for a grid (cached by resolution and spacing).
    pub fn for_grid(grid: &Grid2D) -> Arc<CauchyKernel> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<CauchyKernel>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (grid.n(), grid.h().to_bits());
        if let Some(k) = cache.lock().expect("kernel cache poisoned").get(&key) {
            return k.clone();
        }
        let kernel = Arc::new(CauchyKernel::new(grid.n(), grid.h()));
        cache.lock().expect("kernel cache poisoned").entry(key).or_insert(kernel).clone()
    }

    /// Kernel of `dbar_inv` at integer offset `(di, dj)`, `|di|, |dj| < N`.
    pub fn kernel_dbar(&self, di: i64, dj: i64) -> C64 {
        let m = 2 * self.n as i64;
        let wrap = |d: i64| ((d % m + m) % m) as usize;
        self.table[wrap(di) * m as usize + wrap(dj)]
    }

    /// Kernel of `d_inv`, the complex conjugate of [`CauchyKernel::kernel_dbar`].
    pub fn kernel_d(&self, di: i64, dj: i64) -> C64 {
        self.kernel_dbar(di, dj).conj()
    }

    /// Cell-average value at the singular offset; zero by the kernel's odd symmetry.
    pub fn origin_cell_value(&self) -> C64 {
        self.table[0] / (self.h * self.h)
    }

    fn convolve(&self, g: &[C64], mask: &[bool]) -> Vec<C64> {
        let (n, m) = (self.n, 2 * self.n);
        let mut buf = vec![ZERO; m * m];
        for i in 0..n {
            for j in 0..n {
                if mask[i * n + j] {
                    buf[i * m + j] = g[i * n + j];
                }
            }
        }
        let plan = Fft2::plan(m);
        plan.forward(&mut buf);
        for (v, k) in buf.iter_mut().zip(&self.spectrum) {
            *v *= k;
        }
        plan.inverse(&mut buf);
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            out[i * n..(i + 1) * n].copy_from_slice(&buf[i * m..i * m + n]);
        }
        out
    }
}

/// `dbar^{-1} g`: integrates `g` over X only (values outside X are ignored) and
/// returns a whole-grid field.
pub fn dbar_inv(g: &Field) -> Field {
    let grid = g.grid();
    let kernel = CauchyKernel::for_grid(grid);
    let out = kernel.convolve(g.values(), grid.interior_mask());
    Field::from_values(grid, out, Support::WholeGrid).expect("shape preserved")
}

/// `d^{-1} g = conj(dbar^{-1} conj g)`.
pub fn d_inv(g: &Field) -> Field {
    dbar_inv(&g.conj()).conj()
}

fn partials(f: &Field) -> (Vec<C64>, Vec<C64>) {
    let grid = f.grid();
    let (n, h) = (grid.n(), grid.h());
    let v = f.values();
    let at = |i: usize, j: usize| v[i * n + j];
    let diff = |get: &dyn Fn(usize) -> C64, k: usize| -> C64 {
        if k == 0 {
            (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h)
        } else if k == n - 1 {
            (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * h)
        } else {
            (get(k + 1) - get(k - 1)) / (2.0 * h)
        }
    };
    let mut dx = vec![ZERO; n * n];
    let mut dy = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            dx[i * n + j] = diff(&|k| at(k, j), i);
            dy[i * n + j] = diff(&|k| at(i, k), j);
        }
    }
    (dx, dy)
}

/// Centered-difference `d/dzbar = (d_x + i d_y) / 2`.
pub fn dbar(f: &Field) -> Field {
    let (dx, dy) = partials(f);
    let v = dx.iter().zip(&dy).map(|(a, b)| 0.5 * (a + C64::i() * b)).collect();
    Field::from_values(f.grid(), v, Support::WholeGrid).expect("shape preserved")
}

/// Centered-difference `d/dz = (d_x - i d_y) / 2`.
pub fn d(f: &Field) -> Field {
    let (dx, dy) = partials(f);
    let v = dx.iter().zip(&dy).map(|(a, b)| 0.5 * (a - C64::i() * b)).collect();
    Field::from_values(f.grid(), v, Support::WholeGrid).expect("shape preserved")
}

/// Discrete `W^1_p` norm: `L^p` of the field plus `L^p` of its difference gradient, over X.
pub fn w1p_norm(f: &Field, p: f64) -> f64 {
    let (dx, dy) = partials(f);
    let grad = Field::from_values(
        f.grid(),
        dx.iter().zip(&dy).map(|(a, b)| C64::new(a.norm().hypot(b.norm()), 0.0)).collect(),
        Support::X,
    )
    .expect("shape preserved");
    lp_norm(&f.restrict_to_x(), p) + lp_norm(&grad, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CauchyOp {
    DbarInv,
    DInv,
}

impl CauchyOp {
    pub fn apply(self, g: &Field) -> Field {
        match self {
            CauchyOp::DbarInv => dbar_inv(g),
            CauchyOp::DInv => d_inv(g),
        }
    }
}

/// Which side of the admissibility boundary a probe is meant to explore.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeMode {
    /// Admissible exponents; smooth random trials. Evidence of boundedness.
    Bounded,
    /// Excluded exponents; trials concentrate at the grid scale. Evidence of blow-up.
    Unboundedness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputNorm {
    /// `L^gamma(X)` output (`L^p -> L^gamma` boundedness).
    Lebesgue,
    /// `W^1_gamma(X)` surrogate via the difference gradient (`gamma = p`).
    Sobolev1,
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeSpec {
    pub op: CauchyOp,
    pub p_in: f64,
    pub q_out: f64,
    pub trials: usize,
    pub seed: u64,
    pub mode: ProbeMode,
    pub output: OutputNorm,
}

/// Whether `(p, gamma)` lies in the range where the operator is bounded.
pub fn admissible(p: f64, gamma: f64, output: OutputNorm) -> bool {
    match output {
        OutputNorm::Lebesgue => {
            let upper = if p >= 2.0 { f64::INFINITY } else { 2.0 * p / (2.0 - p) };
            (1.0..=2.0).contains(&p) && gamma > 1.0 && gamma < upper
        }
        OutputNorm::Sobolev1 => p > 1.0 && p.is_finite() && gamma == p,
    }
}

/// Randomized lower estimate of the operator norm, `sup ||op g|| / ||g||_p` over seeded trials.
pub fn operator_norm_probe(grid: &Arc<Grid2D>, spec: &ProbeSpec) -> Result<f64> {
    if spec.trials == 0 {
        return Err(Error::InvalidParameter("operator_norm_probe needs at least one trial".into()));
    }
    if !(spec.p_in >= 1.0) || !(spec.q_out > 1.0) {
        return Err(Error::Inadmissible {
            p: spec.p_in,
            gamma: spec.q_out,
            reason: "exponents must satisfy p >= 1 and gamma > 1".into(),
        });
    }
    let ok = admissible(spec.p_in, spec.q_out, spec.output);
    match (spec.mode, ok) {
        (ProbeMode::Bounded, false) => {
            return Err(Error::Inadmissible {
                p: spec.p_in,
                gamma: spec.q_out,
                reason: "outside the boundedness range; use ProbeMode::Unboundedness".into(),
            })
        }
        (ProbeMode::Unboundedness, true) => {
            return Err(Error::Inadmissible {
                p: spec.p_in,
                gamma: spec.q_out,
                reason: "pair is admissible, nothing to refute".into(),
            })
        }
        _ => {}
    }
    let extent = grid.domain().extent();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut best: f64 = 0.0;
    for _ in 0..spec.trials {
        let bumps = rng.gen_range(1..=3);
        let mut params = Vec::with_capacity(bumps);
        for _ in 0..bumps {
            let r = 0.6 * extent * rng.gen::<f64>().sqrt();
            let t = 2.0 * PI * rng.gen::<f64>();
            let width = match spec.mode {
                ProbeMode::Bounded => extent * rng.gen_range(0.08..0.4),
                ProbeMode::Unboundedness => grid.h() * [0.5, 1.0, 2.0][rng.gen_range(0..3)],
            };
            let amp = C64::from_polar(rng.gen_range(0.5..1.5), 2.0 * PI * rng.gen::<f64>());
            params.push((r * t.cos(), r * t.sin(), width, amp));
        }
        let g = Field::from_fn(grid, Support::X, |x, y| {
            params
                .iter()
                .map(|&(cx, cy, w, a)| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * w * w)).exp())
                .sum()
        });
        let denom = lp_norm(&g, spec.p_in);
        if denom == 0.0 {
            continue;
        }
        let out = spec.op.apply(&g);
        let num = match spec.output {
            OutputNorm::Lebesgue => lp_norm(&out.restrict_to_x(), spec.q_out),
            OutputNorm::Sobolev1 => w1p_norm(&out, spec.q_out),
        };
        best = best.max(num / denom);
    }
    Ok(best)
}
