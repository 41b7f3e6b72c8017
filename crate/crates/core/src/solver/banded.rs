//! Banded LU with partial pivoting for the sparse KKT systems of the solver.

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored row-wise
/// with room for the `kl` extra super-diagonals created by row interchanges.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    a: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, a: vec![0.0; n * width] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku, "({i},{j}) outside band");
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.kl + self.ku {
            return 0.0;
        }
        self.a[self.idx(i, j)]
    }

    /// Adds `v` at `(i, j)`; the entry must lie within the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i},{j}) outside band kl={} ku={}", self.kl, self.ku);
        let k = self.idx(i, j);
        self.a[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// In-place factorization.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let span = kl + self.ku;
        let mut pivots = vec![0usize; n];
        let mut lower = vec![0.0; n * kl.max(1)];
        let scale = self.a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for r in k + 1..=last_row {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= 1e-18 * scale {
                return Err(Error::IllConditioned(format!("zero pivot at row {k} of {n}")));
            }
            pivots[k] = p;
            let last_col = (k + span).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.a.swap(a, b);
                }
            }
            let piv = self.a[self.idx(k, k)];
            for r in k + 1..=last_row {
                let ir = self.idx(r, k);
                let m = self.a[ir] / piv;
                self.a[ir] = 0.0;
                lower[k * kl + (r - k - 1)] = m;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        let src = self.a[self.idx(k, j)];
                        let dst = self.idx(r, j);
                        self.a[dst] -= m * src;
                    }
                }
            }
        }
        Ok(BandLu { u: self, lower, pivots })
    }
}

/// Factors of a [`BandMatrix`].
#[derive(Clone, Debug)]
pub struct BandLu {
    u: BandMatrix,
    lower: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.u.n;
        let kl = self.u.kl;
        let span = kl + self.u.ku;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                x[r] -= self.lower[k * kl + (r - k - 1)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for j in k + 1..=(k + span).min(n - 1) {
                acc -= self.u.get(k, j) * x[j];
            }
            x[k] = acc / self.u.get(k, k);
        }
        x
    }
}

/// Solves a symmetric positive definite tridiagonal system; `diag` has length `n`, `off` length `n-1`.
pub fn solve_tridiagonal_spd(diag: &[f64], off: &[f64], b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut denom = diag[0];
    c[0] = if n > 1 { off[0] / denom } else { 0.0 };
    d[0] = b[0] / denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = off[i] / denom;
        }
        d[i] = (b[i] - off[i - 1] * d[i - 1]) / denom;
    }
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}
