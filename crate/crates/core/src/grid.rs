//! Uniform grids on `[-L, L]^2`, complex fields, spectral transforms and the
//! discrete norms used throughout the crate.

use crate::error::{Error, Result};
use crate::fft::{signed_index, Fft2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// The domain X. Both shapes are centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Disk { radius: f64 },
    /// Corners violate the smooth-boundary setting; kept for experiments only.
    Square { half_side: f64 },
}

impl Domain {
    pub fn unit_disk() -> Self {
        Domain::Disk { radius: 1.0 }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Domain::Disk { radius } => x * x + y * y < radius * radius,
            Domain::Square { half_side } => x.abs() < half_side && y.abs() < half_side,
        }
    }

    /// Radius of the smallest origin-centered disk containing the closure of X.
    pub fn extent(&self) -> f64 {
        match *self {
            Domain::Disk { radius } => radius,
            Domain::Square { half_side } => half_side * 2f64.sqrt(),
        }
    }

    /// Outward unit normal of the boundary piece nearest to `(x, y)`.
    pub fn outward_normal(&self, x: f64, y: f64) -> (f64, f64) {
        match *self {
            Domain::Disk { .. } => {
                let r = x.hypot(y);
                if r == 0.0 {
                    (1.0, 0.0)
                } else {
                    (x / r, y / r)
                }
            }
            Domain::Square { .. } => {
                if x.abs() >= y.abs() {
                    (x.signum(), 0.0)
                } else {
                    (0.0, y.signum())
                }
            }
        }
    }

    fn positive_size(&self) -> bool {
        match *self {
            Domain::Disk { radius } => radius > 0.0,
            Domain::Square { half_side } => half_side > 0.0,
        }
    }
}

/// A grid node just outside X that is a 4-neighbour of an interior node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    /// Angle in `(-pi, pi]`, the curve parameter.
    pub angle: f64,
    pub normal: (f64, f64),
    /// Flux weight `h * sum |e . nu|` over the edges to interior neighbours.
    pub weight: f64,
}

/// Uniform `N x N` grid with nodes `x_j = -L + j h`, `h = 2L/N`.
#[derive(Debug, Clone)]
pub struct Grid2D {
    l: f64,
    n: usize,
    h: f64,
    domain: Domain,
    r_enclosing: f64,
    mask: Vec<bool>,
    boundary: Vec<BoundaryNode>,
    /// Trapezoid weights in the angle parameter, summing to 2 pi.
    angle_weights: Vec<f64>,
}

const NEIGHBOURS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Validated grid constructor.
pub fn make_grid(l: f64, n: usize, domain: Domain, r: f64) -> Result<Arc<Grid2D>> {
    Grid2D::new(l, n, domain, r).map(Arc::new)
}

impl Grid2D {
    pub fn new(l: f64, n: usize, domain: Domain, r: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {l}")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("N must be a power of two >= 16, got {n}")));
        }
        if !domain.positive_size() {
            return Err(Error::InvalidGrid("domain size must be positive".into()));
        }
        let h = 2.0 * l / n as f64;
        if domain.extent() > r {
            return Err(Error::InvalidGrid(format!(
                "domain extent {} exceeds enclosing radius {r}",
                domain.extent()
            )));
        }
        // The last node sits at L - h, so the usable half width is L - h.
        if r + 4.0 * h > l - h {
            return Err(Error::InvalidGrid(format!(
                "margin rule violated: R + 4h = {} > L - h = {}",
                r + 4.0 * h,
                l - h
            )));
        }
        let coord = |k: usize| -l + h * k as f64;
        let mut mask = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                mask[i * n + j] = domain.contains(coord(i), coord(j));
            }
        }
        let mut boundary = Vec::new();
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                if mask[i * n + j] {
                    continue;
                }
                let (x, y) = (coord(i), coord(j));
                let normal = domain.outward_normal(x, y);
                let mut weight = 0.0;
                for (di, dj) in NEIGHBOURS {
                    let (a, b) = ((i as i64 - di) as usize, (j as i64 - dj) as usize);
                    if mask[a * n + b] {
                        weight += h * (normal.0 * di as f64 + normal.1 * dj as f64).abs();
                    }
                }
                let touches = NEIGHBOURS.iter().any(|&(di, dj)| {
                    mask[(i as i64 + di) as usize * n + (j as i64 + dj) as usize]
                });
                if touches {
                    boundary.push(BoundaryNode { i, j, x, y, angle: y.atan2(x), normal, weight });
                }
            }
        }
        boundary.sort_by(|a, b| {
            a.angle
                .total_cmp(&b.angle)
                .then((a.x.hypot(a.y)).total_cmp(&b.x.hypot(b.y)))
        });
        if boundary.len() < 3 {
            return Err(Error::InvalidGrid("domain is not resolved by the grid".into()));
        }
        let nb = boundary.len();
        let mut angle_weights = vec![0.0; nb];
        for k in 0..nb {
            let prev = boundary[(k + nb - 1) % nb].angle;
            let next = boundary[(k + 1) % nb].angle;
            let mut span = next - prev;
            if span <= 0.0 {
                span += 2.0 * PI;
            }
            angle_weights[k] = 0.5 * span;
        }
        Ok(Grid2D { l, n, h, domain, r_enclosing: r, mask, boundary, angle_weights })
    }

    pub fn half_width(&self) -> f64 {
        self.l
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn domain(&self) -> Domain {
        self.domain
    }
    pub fn enclosing_radius(&self) -> f64 {
        self.r_enclosing
    }
    pub fn len(&self) -> usize {
        self.n * self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
    pub fn coord(&self, k: usize) -> f64 {
        -self.l + self.h * k as f64
    }
    pub fn point(&self, idx: usize) -> (f64, f64) {
        (self.coord(idx / self.n), self.coord(idx % self.n))
    }
    pub fn z(&self, idx: usize) -> C64 {
        let (x, y) = self.point(idx);
        C64::new(x, y)
    }
    pub fn interior_mask(&self) -> &[bool] {
        &self.mask
    }
    pub fn in_x(&self, idx: usize) -> bool {
        self.mask[idx]
    }
    pub fn boundary_nodes(&self) -> &[BoundaryNode] {
        &self.boundary
    }
    /// Trapezoid weights of the angle parametrization (sum 2 pi).
    pub fn boundary_angle_weights(&self) -> &[f64] {
        &self.angle_weights
    }
    /// Total flux weight of the discrete boundary, the discrete curve length.
    pub fn boundary_length(&self) -> f64 {
        self.boundary.iter().map(|b| b.weight).sum()
    }

    /// Distance from a point inside X to its boundary.
    pub fn distance_to_boundary(&self, x: f64, y: f64) -> f64 {
        match self.domain {
            Domain::Disk { radius } => radius - x.hypot(y),
            Domain::Square { half_side } => (half_side - x.abs()).min(half_side - y.abs()),
        }
    }

    /// Interior node nearest to `z0`.
    pub fn nearest_node(&self, z0: C64) -> usize {
        let k = |v: f64| (((v + self.l) / self.h).round().max(0.0) as usize).min(self.n - 1);
        k(z0.re) * self.n + k(z0.im)
    }

    /// Interior nodes at least `collar` away from the boundary of X.
    pub fn scan_nodes(&self, collar: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&idx| {
                let (x, y) = self.point(idx);
                self.mask[idx] && self.distance_to_boundary(x, y) >= collar
            })
            .collect()
    }

    /// Angular frequency of FFT bin `k` for this grid's spacing.
    pub fn frequency(&self, k: usize) -> f64 {
        2.0 * PI * signed_index(k, self.n) as f64 / (self.n as f64 * self.h)
    }

    /// Samples `f(x, y)` on the ordered boundary nodes.
    pub fn sample_boundary(&self, f: impl Fn(f64, f64) -> C64) -> Vec<C64> {
        self.boundary.iter().map(|b| f(b.x, b.y)).collect()
    }

    pub fn same_as(&self, other: &Grid2D) -> bool {
        self.n == other.n && self.l == other.l && self.domain == other.domain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    WholeGrid,
    /// Zero outside the interior mask.
    X,
}

/// Complex samples on a grid, row-major with the first index along `x_1`.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid2D>,
    values: Vec<C64>,
    support: Support,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid2D>, support: Support) -> Self {
        Field { grid: grid.clone(), values: vec![ZERO; grid.len()], support }
    }

    /// Builds a field from values; X-supported input is masked.
    pub fn from_values(grid: &Arc<Grid2D>, values: Vec<C64>, support: Support) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        let mut f = Field { grid: grid.clone(), values, support };
        if support == Support::X {
            f.apply_mask();
        }
        Ok(f)
    }

    pub fn from_fn(grid: &Arc<Grid2D>, support: Support, f: impl Fn(f64, f64) -> C64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                if support == Support::X && !grid.in_x(idx) {
                    ZERO
                } else {
                    let (x, y) = grid.point(idx);
                    f(x, y)
                }
            })
            .collect();
        Field { grid: grid.clone(), values, support }
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }
    pub fn values(&self) -> &[C64] {
        &self.values
    }
    pub fn support(&self) -> Support {
        self.support
    }
    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Mutable access; X-supported fields are re-masked by [`Field::finish_edit`].
    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn finish_edit(&mut self) {
        if self.support == Support::X {
            self.apply_mask();
        }
    }

    fn apply_mask(&mut self) {
        for (v, &m) in self.values.iter_mut().zip(self.grid.interior_mask()) {
            if !m {
                *v = ZERO;
            }
        }
    }

    /// Multiplies by the indicator of X and tags the result X-supported.
    pub fn restrict_to_x(&self) -> Field {
        let mut f = self.clone();
        f.support = Support::X;
        f.apply_mask();
        f
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Field {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v = f(*v);
        }
        out.finish_edit();
        out
    }

    pub fn conj(&self) -> Field {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, c: C64) -> Field {
        self.map(|v| v * c)
    }

    fn combine(&self, other: &Field, op: impl Fn(C64, C64) -> C64, support: Support) -> Field {
        assert!(self.grid.same_as(&other.grid), "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect();
        let mut f = Field { grid: self.grid.clone(), values, support };
        f.finish_edit();
        f
    }

    pub fn add(&self, other: &Field) -> Field {
        let s = if self.support == Support::X && other.support == Support::X {
            Support::X
        } else {
            Support::WholeGrid
        };
        self.combine(other, |a, b| a + b, s)
    }

    pub fn sub(&self, other: &Field) -> Field {
        let s = if self.support == Support::X && other.support == Support::X {
            Support::X
        } else {
            Support::WholeGrid
        };
        self.combine(other, |a, b| a - b, s)
    }

    /// Pointwise product; X-supported if either factor is.
    pub fn mul(&self, other: &Field) -> Field {
        let s = if self.support == Support::X || other.support == Support::X {
            Support::X
        } else {
            Support::WholeGrid
        };
        self.combine(other, |a, b| a * b, s)
    }

    pub fn at(&self, idx: usize) -> C64 {
        self.values[idx]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Riemann sum `h^2 sum f` over the support.
    pub fn integral(&self) -> C64 {
        let h2 = self.grid.h() * self.grid.h();
        self.values.iter().sum::<C64>() * h2
    }
}

/// Zero extension: identical values, tagged as a whole-grid field.
pub fn extend_zero(f: &Field) -> Result<Field> {
    if f.support != Support::X {
        return Err(Error::Support("extend_zero expects an X-supported field".into()));
    }
    let mut out = f.clone();
    out.support = Support::WholeGrid;
    Ok(out)
}

/// Scaled transform `F(xi) = h^2 sum f(x) e^{-i x.xi}` on the FFT frequency lattice.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Arc<Grid2D>,
    values: Vec<C64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }
    pub fn values(&self) -> &[C64] {
        &self.values
    }
    /// Frequency vector of bin `idx`.
    pub fn xi(&self, idx: usize) -> (f64, f64) {
        let n = self.grid.n();
        (self.grid.frequency(idx / n), self.grid.frequency(idx % n))
    }
}

pub fn dft(f: &Field) -> Result<Spectrum> {
    if f.support != Support::WholeGrid {
        return Err(Error::Support("dft expects a whole-grid field (apply extend_zero)".into()));
    }
    let g = f.grid.clone();
    let n = g.n();
    let mut buf = f.values.clone();
    Fft2::plan(n).forward(&mut buf);
    let h2 = g.h() * g.h();
    let l = g.half_width();
    for (idx, v) in buf.iter_mut().enumerate() {
        let s = g.frequency(idx / n) + g.frequency(idx % n);
        *v *= C64::from_polar(h2, l * s);
    }
    Ok(Spectrum { grid: g, values: buf })
}

pub fn idft(s: &Spectrum) -> Field {
    let g = s.grid.clone();
    let n = g.n();
    let h2 = g.h() * g.h();
    let l = g.half_width();
    let mut buf: Vec<C64> = s
        .values
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let sum = g.frequency(idx / n) + g.frequency(idx % n);
            v * C64::from_polar(1.0 / h2, -l * sum)
        })
        .collect();
    Fft2::plan(n).inverse(&mut buf);
    Field { grid: g, values: buf, support: Support::WholeGrid }
}

/// `sqrt(sum (1+|xi|^2)^s |F|^2) / (N h)`, Plancherel-consistent with [`lp_norm`].
pub fn sobolev_norm(f: &Field, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("sobolev index must lie in [0,1], got {s}")));
    }
    let spec = dft(f)?;
    Ok(weighted_spectral_norm(&spec, |k1, k2| (1.0 + k1 * k1 + k2 * k2).powf(s)))
}

pub(crate) fn weighted_spectral_norm(spec: &Spectrum, weight: impl Fn(f64, f64) -> f64) -> f64 {
    let scale = spec.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let acc: f64 = spec
        .values
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let (k1, k2) = spec.xi(idx);
            weight(k1, k2) * (v / scale).norm_sqr()
        })
        .sum();
    let g = &spec.grid;
    scale * acc.sqrt() / (g.n() as f64 * g.h())
}

/// Riemann-sum `L^p` norm over the field's support; `p = f64::INFINITY` gives the max.
pub fn lp_norm(f: &Field, p: f64) -> f64 {
    assert!(p >= 1.0, "lp_norm needs p >= 1");
    let g = &f.grid;
    let mask = g.interior_mask();
    let vals = f.values.iter().zip(mask).filter(|(_, &m)| m || f.support == Support::WholeGrid);
    let scale = vals.clone().map(|(v, _)| v.norm()).fold(0.0, f64::max);
    if p.is_infinite() || scale == 0.0 {
        return scale;
    }
    let acc: f64 = vals.map(|(v, _)| (v.norm() / scale).powf(p)).sum();
    scale * (acc * g.h() * g.h()).powf(1.0 / p)
}

/// `L^p` norm restricted to nodes where `keep` holds.
pub fn lp_norm_on(f: &Field, p: f64, keep: impl Fn(usize) -> bool) -> f64 {
    let idx: Vec<usize> = (0..f.values.len()).filter(|&i| keep(i)).collect();
    let scale = idx.iter().map(|&i| f.values[i].norm()).fold(0.0, f64::max);
    if p.is_infinite() || scale == 0.0 {
        return scale;
    }
    let acc: f64 = idx.iter().map(|&i| (f.values[i].norm() / scale).powf(p)).sum();
    let h = f.grid.h();
    scale * (acc * h * h).powf(1.0 / p)
}

/// Fourier coefficients `g_k`, `k in [-floor(nB/2), ceil(nB/2) - 1]`, of a boundary
/// trace. The curve parameter is `t_b = 2 pi b / nB` along the angle-ordered nodes, so
/// the transform is an exact discrete Fourier pair and the Gram matrices it induces
/// are definite. Staircase nodes are close to equispaced in arc length, so a single
/// angular mode stays within a fraction of a percent of a single coefficient.
pub fn boundary_fourier(grid: &Grid2D, g: &[C64]) -> Result<Vec<(i64, C64)>> {
    let nb = grid.boundary_nodes().len();
    if g.len() != nb {
        return Err(Error::GridMismatch(format!("trace has {} samples, boundary has {nb}", g.len())));
    }
    let total: f64 = grid.boundary_angle_weights().iter().sum();
    if (total - 2.0 * PI).abs() > 1e-9 {
        return Err(Error::InvalidGrid("boundary curve is not closed".into()));
    }
    let mut buf = g.to_vec();
    rustfft::FftPlanner::new().plan_fft_forward(nb).process(&mut buf);
    Ok(boundary_modes(nb)
        .map(|k| (k, buf[k.rem_euclid(nb as i64) as usize] / nb as f64))
        .collect())
}

/// Mode numbers used by [`boundary_fourier`].
pub fn boundary_modes(nb: usize) -> impl Iterator<Item = i64> {
    let lo = -((nb / 2) as i64);
    lo..lo + nb as i64
}

/// Circle-Fourier norm `sqrt(|Gamma| sum (1+k^2)^{order} |g_k|^2)`, for `order = +-1/2`.
pub fn boundary_sobolev_norm(grid: &Grid2D, g: &[C64], order: f64) -> Result<f64> {
    let coeffs = boundary_fourier(grid, g)?;
    let acc: f64 = coeffs
        .iter()
        .map(|(k, c)| (1.0 + (*k as f64).powi(2)).powf(order) * c.norm_sqr())
        .sum();
    Ok((grid.boundary_length() * acc).sqrt())
}

/// An X-supported potential with its declared regularity data.
#[derive(Debug, Clone)]
pub struct Potential {
    field: Field,
    /// Smoothness index in `[0, 1]`.
    pub s: f64,
    /// Integrability exponent, `> 2`.
    pub p: f64,
    /// Declared a-priori bound on the `W^s_2` norm.
    pub m: Option<f64>,
}

impl Potential {
    pub fn new(field: Field, s: f64, p: f64, m: Option<f64>) -> Result<Self> {
        if field.support() != Support::X {
            return Err(Error::Support("a potential must be X-supported".into()));
        }
        if !(0.0..=1.0).contains(&s) || !(p > 2.0) {
            return Err(Error::InvalidParameter(format!("need s in [0,1] and p > 2, got s={s}, p={p}")));
        }
        if let Some(bound) = m {
            let measured = sobolev_norm(&extend_zero(&field)?, s)?;
            if measured > bound {
                return Err(Error::InvalidParameter(format!(
                    "measured W^s_2 norm {measured:.4e} exceeds declared bound {bound:.4e}"
                )));
            }
        }
        if !lp_norm(&field, p).is_finite() {
            return Err(Error::InvalidParameter("potential has non-finite L^p norm".into()));
        }
        Ok(Potential { field, s, p, m })
    }

    /// Potential with default metadata `s = 1`, `p = 4` and no declared bound.
    pub fn from_field(field: Field) -> Result<Self> {
        Potential::new(field, 1.0, 4.0, None)
    }

    pub fn zero(grid: &Arc<Grid2D>) -> Self {
        Potential { field: Field::zeros(grid, Support::X), s: 1.0, p: 4.0, m: None }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn grid(&self) -> &Arc<Grid2D> {
        self.field.grid()
    }

    pub fn is_zero(&self) -> bool {
        self.field.values().iter().all(|v| *v == ZERO)
    }

    pub fn is_real(&self) -> bool {
        self.field.values().iter().all(|v| v.im == 0.0)
    }

    /// Hex SHA-256 prefix of the raw samples, used to tag DN maps.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for v in self.field.values() {
            hasher.update(v.re.to_le_bytes());
            hasher.update(v.im.to_le_bytes());
        }
        hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
