//! Symmetric banded storage with an in-place Cholesky solve.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix: `data[i * (bw + 1) + k] = A[i][i - k]`.
#[derive(Debug, Clone)]
pub(crate) struct SymBanded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub(crate) fn new(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    /// Adds `v` to `A[i][j]` (and by symmetry `A[j][i]`); call once per pair.
    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(r - c <= self.bw, "entry outside band");
        self.data[r * (self.bw + 1) + (r - c)] += v;
    }

    #[inline]
    fn at(&self, r: usize, k: usize) -> f64 {
        self.data[r * (self.bw + 1) + k]
    }

    /// Factors in place and solves `A x = b`.
    pub(crate) fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        let (n, bw) = (self.n, self.bw);
        let stride = bw + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = self.at(i, i - j);
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= self.at(i, i - k) * self.at(j, j - k);
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite(i));
                    }
                    self.data[i * stride] = crate::math::sqrt(s);
                } else {
                    self.data[i * stride + (i - j)] = s / self.at(j, 0);
                }
            }
        }
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.at(i, i - k) * x[k];
            }
            x[i] = s / self.at(i, 0);
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n.min(i + bw + 1) {
                s -= self.at(k, k - i) * x[k];
            }
            x[i] = s / self.at(i, 0);
        }
        Ok(x)
    }
}
