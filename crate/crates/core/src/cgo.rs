//! Complex geometric optics solutions `u = e^{i tau Phi} sum_j (-1)^j U_j` built by
//! the Neumann series of the conjugated Cauchy operator, with remainder, residual
//! and growth diagnostics.

use crate::cauchy::{d_inv, dbar_inv};
use crate::error::{Error, Result};
use crate::fit::loglog_slope_tail;
use crate::forward::w12_norm;
use crate::grid::{lp_norm_on, Field, Grid2D, Potential, Support, C64, ONE};
use crate::phase::{r_tilde, r_tilde_bar, PhaseParams};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Stop once `||U_J|| <= TAIL_TOLERANCE * ||U_1||`.
pub const TAIL_TOLERANCE: f64 = 1e-10;
/// Hard cap on the number of correction terms.
pub const MAX_TERMS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `e^{i tau Phi}` times a series in `R_tilde` of `dbar_inv`.
    Phase,
    /// `e^{i tau conj(Phi)}` times the mirrored series (`d_inv` and `dbar_inv` swapped).
    ConjugatePhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiagnostics {
    /// `||U_j||_{L^2(X)}` for `j = 0..=J`.
    pub norms: Vec<f64>,
    /// `||U_j|| / ||U_{j-1}||` for `j = 2..=J`.
    pub ratios: Vec<f64>,
    /// All recorded ratios are at most one half.
    pub geometric_decay: bool,
    /// The tail tolerance was reached before the term cap.
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct CgoSolution {
    pub params: PhaseParams,
    pub side: Side,
    /// `U_0 = 1, U_1, ..., U_J`.
    pub terms: Vec<Field>,
    /// `sum_{j >= 2} (-1)^j U_j`.
    pub remainder: Field,
    pub u: Field,
    pub diagnostics: SeriesDiagnostics,
}

impl CgoSolution {
    pub fn truncation(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
        self.u.grid()
    }

    /// `(-1) U_1 + remainder`: the full correction to the leading term.
    pub fn correction(&self) -> Field {
        self.remainder.sub(&self.terms[1])
    }

    pub fn report(&self, q: &Potential) -> CgoReport {
        let grid = self.grid();
        let in_x = |i: usize| grid.in_x(i);
        CgoReport {
            tau: self.params.tau,
            z0: [self.params.z0.re, self.params.z0.im],
            side: self.side,
            truncation: self.truncation(),
            norms: self.diagnostics.norms.clone(),
            ratios: self.diagnostics.ratios.clone(),
            residual: residual(self, q),
            remainder: RemainderNorms {
                l2: lp_norm_on(&self.remainder, 2.0, in_x),
                l4: lp_norm_on(&self.remainder, 4.0, in_x),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderNorms {
    pub l2: f64,
    pub l4: f64,
}

/// Diagnostics record written as JSON by the command line front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgoReport {
    pub tau: f64,
    pub z0: [f64; 2],
    pub side: Side,
    #[serde(rename = "J")]
    pub truncation: usize,
    pub norms: Vec<f64>,
    pub ratios: Vec<f64>,
    pub residual: f64,
    pub remainder: RemainderNorms,
}

fn l2_x(f: &Field) -> f64 {
    let grid = f.grid().clone();
    lp_norm_on(f, 2.0, |i| grid.in_x(i))
}

/// `e^{i sign tau Phi}` on the phase side, `e^{i sign tau conj(Phi)}` on the other.
pub fn leading_factor(grid: &Arc<Grid2D>, params: &PhaseParams, side: Side) -> Field {
    let st = params.sign as f64 * params.tau;
    Field::from_fn(grid, Support::WholeGrid, |x, y| {
        let w = C64::new(x, y) - params.z0;
        let phi = match side {
            Side::Phase => w * w,
            Side::ConjugatePhase => (w * w).conj(),
        };
        (C64::i() * st * phi).exp()
    })
}

/// Builds the CGO solution for `q` by iterating the Neumann series until the tail
/// tolerance or the term cap. Three consecutive ratios `>= 1` abort with
/// [`Error::NonConvergence`].
pub fn build_cgo(q: &Potential, params: &PhaseParams, side: Side) -> Result<CgoSolution> {
    let grid = q.grid().clone();
    if !(params.tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {}", params.tau)));
    }
    if !grid.domain().contains(params.z0.re, params.z0.im) {
        return Err(Error::InvalidParameter(format!("z0 = {} is not inside X", params.z0)));
    }
    let qf = q.field();
    let inv: fn(&Field) -> Field = match side {
        Side::Phase => dbar_inv,
        Side::ConjugatePhase => d_inv,
    };
    let conjugated = |g: &Field| match side {
        Side::Phase => r_tilde(g, params),
        Side::ConjugatePhase => r_tilde_bar(g, params),
    };
    let half = C64::new(0.5, 0.0);

    let f = inv(qf);
    let c = f.at(grid.nearest_node(params.z0));
    let u1 = conjugated(&f.map(|v| (v - c) * 0.5));
    let mut terms = vec![Field::from_fn(&grid, Support::WholeGrid, |_, _| ONE), u1];
    let mut norms = vec![l2_x(&terms[0]), l2_x(&terms[1])];
    let mut ratios = Vec::new();
    let first = norms[1];
    let mut converged = first == 0.0;
    let mut above_one = 0;
    while !converged && terms.len() <= MAX_TERMS {
        let prev = terms.last().expect("nonempty");
        let next = conjugated(&inv(&qf.mul(prev)).scale(half));
        let nn = l2_x(&next);
        let ratio = nn / norms[norms.len() - 1];
        terms.push(next);
        norms.push(nn);
        ratios.push(ratio);
        above_one = if ratio >= 1.0 { above_one + 1 } else { 0 };
        if above_one >= 3 {
            let worst = ratios.iter().cloned().fold(0.0, f64::max);
            return Err(Error::NonConvergence {
                tau: params.tau,
                j: terms.len() - 3,
                // Ratios shrink roughly like tau^{-1/2}; aim for one half.
                hint: params.tau * (2.0 * worst).powi(2),
            });
        }
        converged = nn <= TAIL_TOLERANCE * first;
    }

    let mut remainder = Field::zeros(&grid, Support::WholeGrid);
    for (j, t) in terms.iter().enumerate().skip(2) {
        remainder = if j % 2 == 0 { remainder.add(t) } else { remainder.sub(t) };
    }
    let series = terms[0].sub(&terms[1]).add(&remainder);
    let u = leading_factor(&grid, params, side).mul(&series);
    let geometric_decay = ratios.iter().all(|&r| r <= 0.5);
    Ok(CgoSolution {
        params: *params,
        side,
        terms,
        remainder,
        u,
        diagnostics: SeriesDiagnostics { norms, ratios, geometric_decay, converged },
    })
}

/// Nodes whose full 5-point stencil stays at least two cells inside X.
fn residual_nodes(grid: &Grid2D) -> Vec<usize> {
    grid.scan_nodes(2.0 * grid.h())
}

/// `||Delta_h u + q u||_{L^2} / ||u||_{L^2}` over interior nodes with a two-cell margin.
pub fn residual(sol: &CgoSolution, q: &Potential) -> f64 {
    residual_of(&sol.u, q)
}

pub fn residual_of(u: &Field, q: &Potential) -> f64 {
    let grid = u.grid();
    let (n, h) = (grid.n(), grid.h());
    let nodes = residual_nodes(grid);
    let scale = nodes.iter().map(|&i| u.at(i).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for &idx in &nodes {
        let lap = (u.at(idx + n) + u.at(idx - n) + u.at(idx + 1) + u.at(idx - 1) - u.at(idx) * 4.0) / (h * h);
        let r = lap + q.field().at(idx) * u.at(idx);
        num += (r / scale).norm_sqr();
        den += (u.at(idx) / scale).norm_sqr();
    }
    (num / den).sqrt()
}

/// Sup-over-`z0` remainder norms per `tau` and their fitted decay exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub taus: Vec<f64>,
    pub l2: Vec<f64>,
    pub l4: Vec<f64>,
    /// Fitted exponent of `sup ||r||_{L^2}` (smallest tau dropped); zero when `r = 0`.
    pub l2_exponent: f64,
    pub l4_exponent: f64,
    /// Integrability exponent `p` used for the `L^4` threshold.
    pub p: f64,
    /// `r` vanished identically so the exponents are placeholders.
    pub trivial: bool,
}

impl RemainderReport {
    pub fn l2_threshold() -> f64 {
        -1.4
    }

    /// `-(1/2 + 1/(2p)) + 0.1`.
    pub fn l4_threshold(&self) -> f64 {
        -(0.5 + 1.0 / (2.0 * self.p)) + 0.1
    }

    pub fn passes(&self) -> bool {
        self.trivial || (self.l2_exponent <= Self::l2_threshold() && self.l4_exponent <= self.l4_threshold())
    }
}

/// Groups a sweep of solutions by `tau` and fits the decay of the sup-over-`z0`
/// remainder norms. Needs at least four distinct `tau` values.
pub fn remainder_report(sweep: &[CgoSolution], p: f64) -> Result<RemainderReport> {
    let mut taus: Vec<f64> = sweep.iter().map(|s| s.params.tau).collect();
    taus.sort_by(|a, b| a.partial_cmp(b).expect("finite tau"));
    taus.dedup();
    if taus.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "remainder sweep needs at least 4 tau values, got {}",
            taus.len()
        )));
    }
    let mut l2 = vec![0.0; taus.len()];
    let mut l4 = vec![0.0; taus.len()];
    for s in sweep {
        let k = taus.iter().position(|&t| t == s.params.tau).expect("tau present");
        let grid = s.grid().clone();
        l2[k] = f64::max(l2[k], lp_norm_on(&s.remainder, 2.0, |i| grid.in_x(i)));
        l4[k] = f64::max(l4[k], lp_norm_on(&s.remainder, 4.0, |i| grid.in_x(i)));
    }
    let trivial = l2.iter().all(|&v| v == 0.0);
    let (l2_exponent, l4_exponent) = if trivial {
        (0.0, 0.0)
    } else {
        (
            loglog_slope_tail(&taus, &l2).unwrap_or(f64::NAN),
            loglog_slope_tail(&taus, &l4).unwrap_or(f64::NAN),
        )
    };
    Ok(RemainderReport { taus, l2, l4, l2_exponent, l4_exponent, p, trivial })
}

/// Checks `sup_z0 ||u||_{W^1_2} <= C e^{4 R^2 tau}` over a sweep, with `C`
/// calibrated at the smallest `tau` (comparison done on logarithms).
pub fn growth_check(sweep: &[CgoSolution], r: f64) -> bool {
    let mut taus: Vec<f64> = sweep.iter().map(|s| s.params.tau).collect();
    taus.sort_by(|a, b| a.partial_cmp(b).expect("finite tau"));
    taus.dedup();
    let logs: Vec<f64> = taus
        .iter()
        .map(|&t| {
            sweep
                .iter()
                .filter(|s| s.params.tau == t)
                .map(|s| w12_norm(&s.u).ln())
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let Some(&l0) = logs.first() else {
        return true;
    };
    let log_c = l0 - 4.0 * r * r * taus[0];
    taus.iter()
        .zip(&logs)
        .all(|(&t, &l)| l.is_finite() && l <= log_c + 4.0 * r * r * t + 1e-9 * (1.0 + l.abs()))
}

/// Smallest `tau` on `[lo, hi]` (to relative precision `rel`) at which every
/// recorded series ratio is at most one half. Assumes the property is monotone in
/// `tau`; returns `None` if it fails at `hi`, and `lo` if it already holds there.
pub fn decay_threshold(q: &Potential, z0: C64, side: Side, lo: f64, hi: f64, rel: f64) -> Result<Option<f64>> {
    if q.is_zero() {
        return Ok(Some(0.0));
    }
    let grid = q.grid();
    let holds = |tau: f64| -> Result<bool> {
        let params = PhaseParams::new(grid, tau, z0, 1)?;
        match build_cgo(q, &params, side) {
            Ok(s) => Ok(s.diagnostics.geometric_decay),
            Err(Error::NonConvergence { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    if !holds(hi)? {
        return Ok(None);
    }
    if holds(lo)? {
        return Ok(Some(lo));
    }
    let (mut a, mut b) = (lo, hi);
    while b / a > 1.0 + rel {
        let m = (a * b).sqrt();
        if holds(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(Some(b))
}
