//! Dirichlet problems for `Delta u + q u = 0` on the staircase domain, the DN map,
//! the invertibility guard, the data-side Cauchy distance and the pairing identities.
//!
//! Unknowns are the interior-mask nodes; Dirichlet data live on the ordered
//! boundary nodes (exterior 4-neighbours of interior nodes). The normal
//! derivative is the discrete Green flux
//! `flux_b(u) = sum_{i in N(b) interior} (u_b - u_i)` divided by the node's flux
//! weight, which makes the weighted DN matrix exactly symmetric for real `q` and
//! turns the boundary pairing into an exact discrete integration by parts.

use crate::error::{Error, Result};
use crate::grid::{boundary_fourier, boundary_modes, Domain, Field, Grid2D, Potential, Support, C64, ZERO};
use crate::linalg::{BandMatrix, BandedLu};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

const NONE: usize = usize::MAX;
const NEIGHBOURS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Index maps between grid nodes, unknowns and boundary nodes.
#[derive(Debug, Clone)]
struct Layout {
    interior: Vec<usize>,
    unknown_of: Vec<usize>,
    boundary_of: Vec<usize>,
    bandwidth: usize,
}

impl Layout {
    fn new(grid: &Grid2D) -> Self {
        let n = grid.n();
        let interior: Vec<usize> = (0..grid.len()).filter(|&i| grid.in_x(i)).collect();
        let mut unknown_of = vec![NONE; grid.len()];
        for (k, &idx) in interior.iter().enumerate() {
            unknown_of[idx] = k;
        }
        let mut boundary_of = vec![NONE; grid.len()];
        for (k, b) in grid.boundary_nodes().iter().enumerate() {
            boundary_of[b.i * n + b.j] = k;
        }
        let mut bandwidth = 0;
        for (k, &idx) in interior.iter().enumerate() {
            for nb in neighbours(idx, n) {
                let u = unknown_of[nb];
                if u != NONE {
                    bandwidth = bandwidth.max(u.abs_diff(k));
                }
            }
        }
        Layout { interior, unknown_of, boundary_of, bandwidth }
    }
}

fn neighbours(idx: usize, n: usize) -> impl Iterator<Item = usize> {
    let (i, j) = ((idx / n) as i64, (idx % n) as i64);
    NEIGHBOURS.into_iter().filter_map(move |(di, dj)| {
        let (a, b) = (i + di, j + dj);
        (a >= 0 && b >= 0 && a < n as i64 && b < n as i64).then(|| a as usize * n + b as usize)
    })
}

/// Factored 5-point operator `h^2 (Delta_h + q)` on the interior nodes.
#[derive(Debug, Clone)]
pub struct DirichletSolver {
    grid: Arc<Grid2D>,
    q: Potential,
    layout: Arc<Layout>,
    matrix: BandMatrix,
    lu: BandedLu,
}

fn layout_for(grid: &Grid2D) -> Arc<Layout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64, String), Arc<Layout>>>> = OnceLock::new();
    let key = (grid.n(), grid.half_width().to_bits(), format!("{:?}", grid.domain()));
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    cache.lock().expect("layout cache poisoned").entry(key).or_insert_with(|| Arc::new(Layout::new(grid))).clone()
}

fn assemble(grid: &Grid2D, layout: &Layout, q: &Potential) -> BandMatrix {
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let m = layout.interior.len();
    let bw = layout.bandwidth;
    let mut a = BandMatrix::new(m, bw, bw);
    for (k, &idx) in layout.interior.iter().enumerate() {
        a.add(k, k, C64::new(-4.0, 0.0) + h2 * q.field().at(idx));
        for nb in neighbours(idx, n) {
            let u = layout.unknown_of[nb];
            if u != NONE {
                a.add(k, u, C64::new(1.0, 0.0));
            }
        }
    }
    a
}

impl DirichletSolver {
    pub fn new(q: &Potential) -> Result<Self> {
        let grid = q.grid().clone();
        let layout = layout_for(&grid);
        let matrix = assemble(&grid, &layout, q);
        let lu = matrix.factor()?;
        if lu.pivot_ratio() < 1e-13 {
            return Err(Error::Singular(format!(
                "pivot ratio {:.3e}: zero is (nearly) a Dirichlet eigenvalue",
                lu.pivot_ratio()
            )));
        }
        Ok(DirichletSolver { grid, q: q.clone(), layout, matrix, lu })
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }

    pub fn potential(&self) -> &Potential {
        &self.q
    }

    pub fn unknowns(&self) -> usize {
        self.layout.interior.len()
    }

    fn rhs(&self, f: &[C64]) -> Vec<C64> {
        let n = self.grid.n();
        self.layout
            .interior
            .iter()
            .map(|&idx| {
                neighbours(idx, n)
                    .filter(|&nb| self.layout.unknown_of[nb] == NONE)
                    .map(|nb| -f[self.layout.boundary_of[nb]])
                    .sum()
            })
            .collect()
    }

    /// Solves with boundary trace `f`; the result carries the solution on interior
    /// nodes, `f` on boundary nodes and zero elsewhere.
    pub fn solve(&self, f: &[C64]) -> Result<Field> {
        let nb = self.grid.boundary_nodes().len();
        if f.len() != nb {
            return Err(Error::GridMismatch(format!("trace has {} samples, boundary has {nb}", f.len())));
        }
        let b = self.rhs(f);
        let mut x = self.lu.solve(&b);
        // One step of iterative refinement keeps the residual at round-off level.
        let r: Vec<C64> = self.matrix.matvec(&x).iter().zip(&b).map(|(ax, bb)| bb - ax).collect();
        let dx = self.lu.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        let bnorm = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let rnorm = self
            .matrix
            .matvec(&x)
            .iter()
            .zip(&b)
            .map(|(ax, bb)| (bb - ax).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if bnorm > 0.0 && rnorm > 1e-10 * bnorm {
            return Err(Error::Singular(format!("relative residual {:.3e} above 1e-10", rnorm / bnorm)));
        }
        let mut vals = vec![ZERO; self.grid.len()];
        for (k, &idx) in self.layout.interior.iter().enumerate() {
            vals[idx] = x[k];
        }
        for (k, b) in self.grid.boundary_nodes().iter().enumerate() {
            vals[b.i * self.grid.n() + b.j] = f[k];
        }
        Field::from_values(&self.grid, vals, Support::WholeGrid)
    }

    /// Green flux `sum (u_b - u_i)` at every boundary node.
    pub fn flux(&self, u: &Field) -> Vec<C64> {
        let n = self.grid.n();
        self.grid
            .boundary_nodes()
            .iter()
            .map(|b| {
                let idx = b.i * n + b.j;
                neighbours(idx, n)
                    .filter(|&nb| self.layout.unknown_of[nb] != NONE)
                    .map(|nb| u.at(idx) - u.at(nb))
                    .sum()
            })
            .collect()
    }

    /// `Lambda_q f`: flux divided by the boundary flux weights.
    pub fn dn_apply(&self, f: &[C64]) -> Result<Vec<C64>> {
        let u = self.solve(f)?;
        Ok(self
            .flux(&u)
            .iter()
            .zip(self.grid.boundary_nodes())
            .map(|(fl, b)| fl / b.weight)
            .collect())
    }

    /// Interior solutions for several traces at once, row-interleaved
    /// (`out[unknown * traces.len() + c]`), refined to relative residual `<= 1e-10`.
    pub fn solve_block(&self, traces: &[Vec<C64>]) -> Result<Vec<C64>> {
        let k = traces.len();
        let m = self.unknowns();
        let mut b = vec![ZERO; m * k];
        for (c, f) in traces.iter().enumerate() {
            for (row, v) in self.rhs(f).into_iter().enumerate() {
                b[row * k + c] = v;
            }
        }
        let mut x = b.clone();
        self.lu.solve_many(&mut x, k);
        for pass in 0..2 {
            let ax = self.matrix.matvec_many(&x, k);
            let mut r: Vec<C64> = b.iter().zip(&ax).map(|(bb, a)| bb - a).collect();
            let worst = (0..k)
                .map(|c| {
                    let rn = (0..m).map(|i| r[i * k + c].norm_sqr()).sum::<f64>().sqrt();
                    let bn = (0..m).map(|i| b[i * k + c].norm_sqr()).sum::<f64>().sqrt();
                    if bn > 0.0 { rn / bn } else { 0.0 }
                })
                .fold(0.0, f64::max);
            if worst <= 1e-13 {
                break;
            }
            if pass == 1 && worst > 1e-10 {
                return Err(Error::Singular(format!("relative residual {worst:.3e} above 1e-10")));
            }
            self.lu.solve_many(&mut r, k);
            x.iter_mut().zip(&r).for_each(|(xi, di)| *xi += di);
        }
        Ok(x)
    }

    /// Dense DN matrix, one column per boundary hat function.
    pub fn assemble_dn(&self) -> Result<DNMap> {
        const CHUNK: usize = 64;
        let nb = self.grid.boundary_nodes().len();
        let n = self.grid.n();
        let starts: Vec<usize> = (0..nb).step_by(CHUNK).collect();
        let blocks: Vec<Vec<Vec<C64>>> = starts
            .into_par_iter()
            .map(|start| {
                let k = CHUNK.min(nb - start);
                let traces: Vec<Vec<C64>> = (0..k)
                    .map(|c| {
                        let mut e = vec![ZERO; nb];
                        e[start + c] = C64::new(1.0, 0.0);
                        e
                    })
                    .collect();
                let x = self.solve_block(&traces)?;
                Ok((0..k)
                    .map(|c| {
                        self.grid
                            .boundary_nodes()
                            .iter()
                            .enumerate()
                            .map(|(bi, node)| {
                                let idx = node.i * n + node.j;
                                let ub = if bi == start + c { 1.0 } else { 0.0 };
                                let fl: C64 = neighbours(idx, n)
                                    .filter_map(|nbr| {
                                        let u = self.layout.unknown_of[nbr];
                                        (u != NONE).then(|| ub - x[u * k + c])
                                    })
                                    .sum();
                                fl / node.weight
                            })
                            .collect()
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        let cols: Vec<Vec<C64>> = blocks.into_iter().flatten().collect();
        let matrix = DMatrix::from_fn(nb, nb, |r, c| cols[c][r]);
        Ok(DNMap { grid: self.grid.clone(), matrix, q_fingerprint: self.q.fingerprint(), noise_level: 0.0 })
    }

    /// Smallest singular value of the interior operator, by inverse iteration on `A^H A`.
    /// `A` is complex symmetric, so `A^{-H} y = conj(A^{-1} conj y)`.
    pub fn smallest_singular_value(&self, iterations: usize) -> f64 {
        let m = self.unknowns();
        let mut x: Vec<C64> = (0..m).map(|k| C64::new(1.0 + (k % 7) as f64 * 0.1, (k % 3) as f64 * 0.1)).collect();
        let mut est = 0.0;
        for _ in 0..iterations {
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            let mut y: Vec<C64> = x.iter().map(|v| v.conj()).collect();
            self.lu.solve_in_place(&mut y);
            y.iter_mut().for_each(|v| *v = v.conj());
            self.lu.solve_in_place(&mut y);
            est = norm(&y);
            x = y;
        }
        1.0 / est.sqrt()
    }

    /// Largest singular value of the interior operator, by power iteration on `A^H A`.
    pub fn operator_norm(&self, iterations: usize) -> f64 {
        let m = self.unknowns();
        let mut x: Vec<C64> = (0..m).map(|k| C64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect();
        let mut est = 0.0;
        for _ in 0..iterations {
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            let y = self.matrix.matvec(&x);
            let y: Vec<C64> = y.iter().map(|v| v.conj()).collect();
            let y: Vec<C64> = self.matrix.matvec(&y).iter().map(|v| v.conj()).collect();
            est = norm(&y);
            x = y;
        }
        est.sqrt()
    }
}

fn norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Solution of the Dirichlet problem for `q` with trace `f`.
pub fn solve_dirichlet(q: &Potential, f: &[C64]) -> Result<Field> {
    DirichletSolver::new(q)?.solve(f)
}

/// DN map of `q`.
pub fn assemble_dn(q: &Potential) -> Result<DNMap> {
    DirichletSolver::new(q)?.assemble_dn()
}

/// Default relative guard threshold on `sigma_min / ||A||`.
pub const GUARD_THRESHOLD: f64 = 1e-8;

/// True when zero is safely away from the spectrum of the discrete `Delta + q`.
pub fn eigenvalue_guard(q: &Potential) -> bool {
    eigenvalue_guard_with(q, GUARD_THRESHOLD)
}

pub fn eigenvalue_guard_with(q: &Potential, threshold: f64) -> bool {
    let grid = q.grid();
    let layout = layout_for(grid);
    let matrix = assemble(grid, &layout, q);
    let lu = match matrix.factor() {
        Ok(lu) => lu,
        Err(_) => return false,
    };
    let solver = DirichletSolver { grid: grid.clone(), q: q.clone(), layout, matrix, lu };
    let smin = solver.smallest_singular_value(40);
    let smax = solver.operator_norm(40);
    smin.is_finite() && smin >= threshold * smax
}

/// Dense boundary map `f -> d_nu u`, tagged with the potential's fingerprint.
#[derive(Debug, Clone)]
pub struct DNMap {
    grid: Arc<Grid2D>,
    matrix: DMatrix<C64>,
    q_fingerprint: String,
    noise_level: f64,
}

impl DNMap {
    pub fn from_matrix(grid: &Arc<Grid2D>, matrix: DMatrix<C64>, q_fingerprint: String, noise_level: f64) -> Result<Self> {
        let nb = grid.boundary_nodes().len();
        if matrix.nrows() != nb || matrix.ncols() != nb {
            return Err(Error::GridMismatch(format!(
                "DN matrix is {}x{}, grid has {nb} boundary nodes",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(DNMap { grid: grid.clone(), matrix, q_fingerprint, noise_level })
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
    pub fn q_fingerprint(&self) -> &str {
        &self.q_fingerprint
    }
    pub fn noise_level(&self) -> f64 {
        self.noise_level
    }
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        let v = &self.matrix * DVector::from_column_slice(f);
        v.as_slice().to_vec()
    }

    /// `||W L - (W L)^T||_F / ||W L||_F` with `W` the boundary flux weights.
    pub fn symmetry_defect(&self) -> f64 {
        let w = DVector::from_iterator(self.size(), self.grid.boundary_nodes().iter().map(|b| C64::new(b.weight, 0.0)));
        let wl = DMatrix::from_diagonal(&w) * &self.matrix;
        (&wl - wl.transpose()).norm() / wl.norm()
    }

    /// Adds i.i.d. complex Gaussian entries with Frobenius norm about `level * ||L||_F`.
    pub fn with_noise(&self, level: f64, seed: u64) -> DNMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nb = self.size();
        let sigma = level * self.matrix.norm() / nb as f64;
        let mut m = self.matrix.clone();
        for c in 0..nb {
            for r in 0..nb {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                m[(r, c)] += C64::new(re, im) * (sigma / 2f64.sqrt());
            }
        }
        DNMap { matrix: m, noise_level: level, ..self.clone() }
    }

    fn check_same_grid(&self, other: &DNMap) -> Result<()> {
        if !self.grid.same_as(&other.grid) || self.size() != other.size() {
            return Err(Error::GridMismatch("DN maps live on different grids".into()));
        }
        Ok(())
    }

    /// Weighted Rayleigh quotient `<L f, f>_w / <f, f>_w` (bilinear, `f` real in practice).
    pub fn rayleigh_quotient(&self, f: &[C64]) -> C64 {
        let lf = self.apply(f);
        let w = self.grid.boundary_nodes().iter().map(|b| b.weight);
        let (mut num, mut den) = (ZERO, ZERO);
        for ((a, b), w) in lf.iter().zip(f).zip(w) {
            num += w * a * b.conj();
            den += w * b * b.conj();
        }
        num / den
    }
}

/// Gram matrix of the boundary `W^{order}` norm: `|Gamma| V^H diag((1+k^2)^order) V`
/// with `V` the coefficient map of [`boundary_fourier`]. Circulant in the node index.
pub fn boundary_gram(grid: &Grid2D, order: f64) -> Result<DMatrix<C64>> {
    let nb = grid.boundary_nodes().len();
    // Validates the curve; the coefficients of the first unit trace are not needed.
    boundary_fourier(grid, &vec![ZERO; nb])?;
    let scale = grid.boundary_length() / (nb * nb) as f64;
    let row: Vec<C64> = (0..nb)
        .map(|m| {
            boundary_modes(nb)
                .map(|k| {
                    let w = (1.0 + (k as f64).powi(2)).powf(order);
                    C64::from_polar(w, 2.0 * PI * (k * m as i64) as f64 / nb as f64)
                })
                .sum::<C64>()
                * scale
        })
        .collect();
    Ok(DMatrix::from_fn(nb, nb, |a, b| row[(a + nb - b) % nb]))
}

/// Largest `lambda` with `A x = lambda B x`, `A` Hermitian PSD, `B` Hermitian PD.
fn max_generalized_eigenvalue(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<f64> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("boundary Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("Cholesky factor not invertible".into()))?;
    let mut m = &linv * a * linv.adjoint();
    // Symmetrize against round-off before the Hermitian eigensolver.
    m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = m.symmetric_eigen();
    Ok(eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

/// Discrete `W^1_2(X)` norm: `h^2 sum_X |u|^2` plus squared differences over
/// every edge with an interior endpoint.
pub fn w12_norm(u: &Field) -> f64 {
    let grid = u.grid();
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let mut mass = 0.0;
    let mut grad = 0.0;
    let scale = u.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    for idx in 0..grid.len() {
        if !grid.in_x(idx) {
            continue;
        }
        mass += (u.at(idx) / scale).norm_sqr();
        for nb in neighbours(idx, n) {
            // Count interior-interior edges once and interior-boundary edges once.
            if !grid.in_x(nb) || nb > idx {
                grad += ((u.at(idx) - u.at(nb)) / scale).norm_sqr();
            }
        }
    }
    scale * (h2 * mass + grad).sqrt()
}

/// Discrete trace constant `max ||f||_{1/2} / ||u||_{W^1_2}` over all fields with
/// trace `f`; the minimum-norm extension solves `Delta u - u = 0`.
pub fn trace_constant(grid: &Arc<Grid2D>) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64, String), f64>>> = OnceLock::new();
    let key = (grid.n(), grid.half_width().to_bits(), format!("{:?}", grid.domain()));
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("trace cache poisoned").get(&key) {
        return Ok(*v);
    }
    let minus_one = Potential::from_field(Field::from_fn(grid, Support::X, |_, _| C64::new(-1.0, 0.0)))?;
    let dn = assemble_dn(&minus_one)?;
    let w = DVector::from_iterator(dn.size(), grid.boundary_nodes().iter().map(|b| C64::new(b.weight, 0.0)));
    let energy = DMatrix::from_diagonal(&w) * dn.matrix();
    let energy = (&energy + energy.adjoint()) * C64::new(0.5, 0.0);
    let bplus = boundary_gram(grid, 0.5)?;
    // max f^H B+ f / f^H S f
    let t2 = max_generalized_eigenvalue(&bplus, &energy)?;
    let t = t2.sqrt();
    cache.lock().expect("trace cache poisoned").insert(key, t);
    Ok(t)
}

/// Operator norm of `dn1 - dn2` from boundary `W^{1/2}` to `W^{-1/2}`.
pub fn dn_difference_norm(dn1: &DNMap, dn2: &DNMap) -> Result<f64> {
    dn1.check_same_grid(dn2)?;
    let d = dn1.matrix() - dn2.matrix();
    if d.iter().all(|v| *v == ZERO) {
        return Ok(0.0);
    }
    let bminus = boundary_gram(dn1.grid(), -0.5)?;
    let bplus = boundary_gram(dn1.grid(), 0.5)?;
    let a = d.adjoint() * bminus * &d;
    let a = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    Ok(max_generalized_eigenvalue(&a, &bplus)?.max(0.0).sqrt())
}

/// `||Tr||^2 * ||dn1 - dn2||_{1/2 -> -1/2}`, the data-side bound on the Cauchy-data distance.
pub fn cauchy_distance_data(dn1: &DNMap, dn2: &DNMap) -> Result<f64> {
    let norm = dn_difference_norm(dn1, dn2)?;
    if norm == 0.0 {
        return Ok(0.0);
    }
    let t = trace_constant(dn1.grid())?;
    Ok(t * t * norm)
}

/// `h^2 sum_X u1 (q1 - q2) u2` (bilinear).
pub fn pairing(q1: &Potential, q2: &Potential, u1: &Field, u2: &Field) -> C64 {
    let grid = q1.grid();
    let h2 = grid.h() * grid.h();
    let mut acc = ZERO;
    for idx in 0..grid.len() {
        if grid.in_x(idx) {
            let dq = q1.field().at(idx) - q2.field().at(idx);
            if dq != ZERO {
                acc += u1.at(idx) * dq * u2.at(idx);
            }
        }
    }
    acc * h2
}

/// `sum_b w_b f1_b ((L2 - L1) f2)_b`, the boundary form of [`pairing`].
pub fn boundary_pairing(dn1: &DNMap, dn2: &DNMap, f1: &[C64], f2: &[C64]) -> Result<C64> {
    dn1.check_same_grid(dn2)?;
    let nb = dn1.size();
    if f1.len() != nb || f2.len() != nb {
        return Err(Error::GridMismatch("trace length differs from boundary size".into()));
    }
    let a = dn2.apply(f2);
    let b = dn1.apply(f2);
    Ok(dn1
        .grid()
        .boundary_nodes()
        .iter()
        .enumerate()
        .map(|(k, node)| node.weight * f1[k] * (a[k] - b[k]))
        .sum())
}

/// Largest normalized pairing `|pairing| / (||u1|| ||u2||)` over probe traces, with
/// `u_i` the discrete solutions for `q_i`. A lower estimate of the Cauchy-data distance.
pub fn probe_distance(q1: &Potential, q2: &Potential, traces: &[Vec<C64>]) -> Result<f64> {
    let s1 = DirichletSolver::new(q1)?;
    let s2 = DirichletSolver::new(q2)?;
    let u1: Vec<Field> = traces.iter().map(|f| s1.solve(f)).collect::<Result<_>>()?;
    let u2: Vec<Field> = traces.iter().map(|f| s2.solve(f)).collect::<Result<_>>()?;
    let n1: Vec<f64> = u1.iter().map(w12_norm).collect();
    let n2: Vec<f64> = u2.iter().map(w12_norm).collect();
    let mut best: f64 = 0.0;
    for (a, na) in u1.iter().zip(&n1) {
        for (b, nb) in u2.iter().zip(&n2) {
            best = best.max(pairing(q1, q2, a, b).norm() / (na * nb));
        }
    }
    Ok(best)
}

/// Harmonic-polynomial and exponential probe traces `z^k`, `conj(z)^k` and
/// `e^{i tau (z - z0)^2}` restricted to the boundary.
pub fn probe_traces(grid: &Grid2D, taus: &[f64], centers: &[C64], max_degree: u32) -> Vec<Vec<C64>> {
    let mut out = Vec::new();
    for k in 0..=max_degree {
        out.push(grid.sample_boundary(|x, y| C64::new(x, y).powu(k)));
        if k > 0 {
            out.push(grid.sample_boundary(|x, y| C64::new(x, -y).powu(k)));
        }
    }
    for &t in taus {
        for &c in centers {
            out.push(grid.sample_boundary(|x, y| {
                let w = C64::new(x, y) - c;
                (C64::i() * t * w * w).exp()
            }));
        }
    }
    out
}

/// Smallest Dirichlet eigenvalue of `-Delta_h` on the staircase domain (inverse iteration).
pub fn first_dirichlet_eigenvalue(grid: &Arc<Grid2D>) -> Result<f64> {
    let zero = Potential::zero(grid);
    let solver = DirichletSolver::new(&zero)?;
    let m = solver.unknowns();
    let mut x = vec![C64::new(1.0, 0.0); m];
    let mut mu = 0.0;
    for _ in 0..200 {
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let mut y = x.clone();
        solver.lu.solve_in_place(&mut y);
        // A^{-1} has eigenvalue -1/(h^2 lambda) for the smallest lambda of -Delta_h.
        let new_mu = x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        if (new_mu - mu).abs() <= 1e-14 * new_mu.abs() {
            mu = new_mu;
            break;
        }
        mu = new_mu;
        x = y;
    }
    let h2 = grid.h() * grid.h();
    Ok(-1.0 / (mu * h2))
}

/// Scaled copy of the unit-disk geometry: returns the disk radius for `rho^2`.
pub fn disk_radius_for(rho_squared: f64) -> Domain {
    Domain::Disk { radius: rho_squared.sqrt() }
}
