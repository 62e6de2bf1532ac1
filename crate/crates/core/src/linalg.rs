//! Banded LU with partial pivoting for the finite-difference systems.

use crate::error::{Error, Result};
use crate::grid::{C64, ONE, ZERO};

/// LU factors of a square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `i` stores columns `i - kl ..= i + kl + ku`; the extra `kl` columns hold
/// fill-in created by row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    a: Vec<C64>,
    piv: Vec<usize>,
    min_pivot: f64,
    max_pivot: f64,
}

/// Band matrix under assembly.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    a: Vec<C64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, a: vec![ZERO; n * width] }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i},{j}) outside the band");
        let s = self.slot(i, j);
        self.a[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if j + self.kl < i || j > i + self.ku {
            ZERO
        } else {
            self.a[self.slot(i, j)]
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        self.matvec_many(x, 1)
    }

    /// `A X` for `nrhs` column vectors stored row-interleaved (`x[row * nrhs + c]`).
    pub fn matvec_many(&self, x: &[C64], nrhs: usize) -> Vec<C64> {
        let mut out = vec![ZERO; self.n * nrhs];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let row = &mut out[i * nrhs..(i + 1) * nrhs];
            for j in lo..=hi {
                let a = self.a[self.slot(i, j)];
                if a == ZERO {
                    continue;
                }
                for (o, v) in row.iter_mut().zip(&x[j * nrhs..(j + 1) * nrhs]) {
                    *o += a * v;
                }
            }
        }
        out
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn factor(&self) -> Result<BandedLu> {
        let (n, kl, ku, width) = (self.n, self.kl, self.ku, self.width);
        let mut a = self.a.clone();
        let mut piv = vec![0; n];
        let slot = |i: usize, j: usize| i * width + (j + kl - i);
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot: f64 = 0.0;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a[slot(k, k)].norm();
            for r in k + 1..=last {
                let v = a[slot(r, k)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            piv[k] = p;
            if best == 0.0 {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            min_pivot = min_pivot.min(best);
            max_pivot = max_pivot.max(best);
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    a.swap(slot(k, j), slot(p, j));
                }
            }
            let pivot = a[slot(k, k)];
            for r in k + 1..=last {
                let sr = slot(r, k);
                if a[sr] == ZERO {
                    continue;
                }
                let l = a[sr] / pivot;
                a[sr] = l;
                for j in k + 1..=jmax {
                    let u = a[slot(k, j)];
                    if u != ZERO {
                        a[slot(r, j)] -= l * u;
                    }
                }
            }
        }
        Ok(BandedLu { n, kl, ku, width, a, piv, min_pivot, max_pivot })
    }
}

impl BandedLu {
    pub fn size(&self) -> usize {
        self.n
    }

    /// Ratio of the smallest to the largest pivot magnitude.
    pub fn pivot_ratio(&self) -> f64 {
        self.min_pivot / self.max_pivot
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [C64]) {
        let (n, kl, ku, width) = (self.n, self.kl, self.ku, self.width);
        let slot = |i: usize, j: usize| i * width + (j + kl - i);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == ZERO {
                continue;
            }
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] -= self.a[slot(r, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + kl + ku).min(n - 1);
            let mut acc = b[k];
            for j in k + 1..=jmax {
                acc -= self.a[slot(k, j)] * b[j];
            }
            b[k] = acc / self.a[slot(k, k)];
        }
    }

    /// Solves for `nrhs` right-hand sides stored row-interleaved (`b[row * nrhs + c]`).
    pub fn solve_many(&self, b: &mut [C64], nrhs: usize) {
        let (n, kl, ku, width) = (self.n, self.kl, self.ku, self.width);
        let slot = |i: usize, j: usize| i * width + (j + kl - i);
        let mut tmp = vec![ZERO; nrhs];
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                tmp.copy_from_slice(&b[p * nrhs..(p + 1) * nrhs]);
                b.copy_within(k * nrhs..(k + 1) * nrhs, p * nrhs);
                b[k * nrhs..(k + 1) * nrhs].copy_from_slice(&tmp);
            }
            let (head, tail) = b.split_at_mut((k + 1) * nrhs);
            let bk = &head[k * nrhs..];
            for r in k + 1..=(k + kl).min(n - 1) {
                let l = self.a[slot(r, k)];
                if l == ZERO {
                    continue;
                }
                let off = (r - k - 1) * nrhs;
                for (t, v) in tail[off..off + nrhs].iter_mut().zip(bk) {
                    *t -= l * v;
                }
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + kl + ku).min(n - 1);
            let (head, tail) = b.split_at_mut((k + 1) * nrhs);
            let bk = &mut head[k * nrhs..];
            for j in k + 1..=jmax {
                let u = self.a[slot(k, j)];
                if u == ZERO {
                    continue;
                }
                let off = (j - k - 1) * nrhs;
                for (t, v) in bk.iter_mut().zip(&tail[off..off + nrhs]) {
                    *t -= u * v;
                }
            }
            let inv = ONE / self.a[slot(k, k)];
            bk.iter_mut().for_each(|v| *v *= inv);
        }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
