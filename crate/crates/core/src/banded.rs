//! Banded matrices with an LU factorization (partial pivoting).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    // row-major, row i stores columns i-kl ..= i+ku
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku || i >= self.n || j >= self.n {
            None
        } else {
            Some(i * (self.kl + self.ku + 1) + (j + self.kl - i))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` at `(i, j)`. Panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] = v;
    }

    pub fn clear_row(&mut self, i: usize) {
        let w = self.kl + self.ku + 1;
        self.data[i * w..(i + 1) * w].iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc += self.get(i, j) * xj;
            }
            *yi = acc;
        }
        y
    }

    pub fn lu(&self) -> Result<BandLu> {
        BandLu::factor(self)
    }
}

/// LU factors of a band matrix. Row interchanges widen the upper band to
/// `kl + ku`, as in LAPACK's `gbtrf`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku2: usize,
    // row i stores U columns i ..= i+ku2 and L multipliers below in `lower`
    upper: Vec<f64>,
    lower: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn factor(a: &BandMatrix) -> Result<Self> {
        let n = a.n;
        let kl = a.kl;
        let ku2 = a.kl + a.ku;
        let w = kl + ku2 + 1;
        // working rows: row i holds columns i-kl ..= i+ku2
        let mut work = vec![0.0; n * w];
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + a.ku).min(n - 1);
            for j in lo..=hi {
                work[i * w + (j + kl - i)] = a.get(i, j);
            }
        }
        let at = |i: usize, j: usize| i * w + (j + kl - i);
        let mut pivots = vec![0; n];
        let mut lower = vec![0.0; n * kl.max(1)];
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = work[at(k, k)].abs();
            for i in k + 1..=last {
                let v = work[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-14 * scale || !best.is_finite() {
                return Err(Error::Singular("band LU"));
            }
            pivots[k] = p;
            let right = (k + ku2).min(n - 1);
            if p != k {
                for j in k..=right {
                    work.swap(at(k, j), at(p, j));
                }
            }
            let piv = work[at(k, k)];
            for i in k + 1..=last {
                let m = work[at(i, k)] / piv;
                lower[k * kl + (i - k - 1)] = m;
                if m != 0.0 {
                    for j in k + 1..=right {
                        work[at(i, j)] -= m * work[at(k, j)];
                    }
                }
                work[at(i, k)] = 0.0;
            }
        }
        let uw = ku2 + 1;
        let mut upper = vec![0.0; n * uw];
        for i in 0..n {
            for j in i..=(i + ku2).min(n - 1) {
                upper[i * uw + (j - i)] = work[at(i, j)];
            }
        }
        Ok(Self { n, kl, ku2, upper, lower, pivots })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                x[i] -= self.lower[k * self.kl + (i - k - 1)] * xk;
            }
        }
        let uw = self.ku2 + 1;
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..=(i + self.ku2).min(n - 1) {
                acc -= self.upper[i * uw + (j - i)] * x[j];
            }
            x[i] = acc / self.upper[i * uw];
        }
        x
    }
}
