//! Cholesky factorization for symmetric positive definite banded matrices.
//!
//! The implicit diffusion substeps solve (I - gamma B) u = rhs where B is
//! the assembled divergence-form operator: tridiagonal in 1D, pentadiagonal
//! with bandwidth nx in 2D. A lower-band Cholesky factorization is computed
//! once per scenario and reused for every step.

/// Symmetric matrix stored by its lower bands: `band(r, d)` is entry
/// (r, r - d) for d in 0..=bw.
#[derive(Debug, Clone)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, row: usize, diag: usize) -> usize {
        row * (self.bw + 1) + diag
    }

    /// Add `value` at (row, col) with col <= row.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(col <= row && row - col <= self.bw);
        let d = row - col;
        let i = self.idx(row, d);
        self.data[i] += value;
    }

    pub fn cholesky(&self) -> BandedCholesky {
        let n = self.n;
        let bw = self.bw;
        let mut l = vec![0.0; n * (bw + 1)];
        for r in 0..n {
            let c_lo = r.saturating_sub(bw);
            for c in c_lo..=r {
                let mut sum = self.data[self.idx(r, r - c)];
                let k_lo = c_lo.max(c.saturating_sub(bw));
                for k in k_lo..c {
                    sum -= l[r * (bw + 1) + (r - k)] * l[c * (bw + 1) + (c - k)];
                }
                if r == c {
                    assert!(sum > 0.0, "matrix is not positive definite at row {r}");
                    l[r * (bw + 1)] = sum.sqrt();
                } else {
                    l[r * (bw + 1) + (r - c)] = sum / l[c * (bw + 1)];
                }
            }
        }
        BandedCholesky { n, bw, l }
    }
}

/// Lower-triangular banded Cholesky factor L with A = L L^T.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    /// Solve A x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        debug_assert_eq!(b.len(), n);
        // Forward: L y = b.
        for r in 0..n {
            let c_lo = r.saturating_sub(bw);
            let mut sum = b[r];
            for c in c_lo..r {
                sum -= self.l[r * (bw + 1) + (r - c)] * b[c];
            }
            b[r] = sum / self.l[r * (bw + 1)];
        }
        // Backward: L^T x = y.
        for r in (0..n).rev() {
            let mut sum = b[r];
            let c_hi = (r + bw).min(n - 1);
            for c in (r + 1)..=c_hi {
                sum -= self.l[c * (bw + 1) + (c - r)] * b[c];
            }
            b[r] = sum / self.l[r * (bw + 1)];
        }
    }
}
