//! Dense square matrices and the pointwise dissipativity criteria.
//!
//! A matrix `M` is dissipative with respect to a vector norm when the
//! semigroup `e^{tM}` is a contraction for that norm for all `t >= 0`.
//! For the `l1`, `l2` and `linf` norms this has exact algebraic
//! characterizations (column sums, eigenvalues of the Hermitian part, row
//! sums); for other exponents only a sampling falsifier is provided.

use ndarray::{Array1, Array2};
use ndarray_linalg::{EighInto, SVDInto, UPLO};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expm;

/// Eigenvalue tolerance for "<= 0" tests on symmetric/Hermitian parts.
pub const TOL_EIG: f64 = 1e-10;

/// Slack allowed on `||e^{tM}|| <= 1` in the brute-force contraction oracle.
pub const ORACLE_SLACK: f64 = 1e-9;

/// The three norms with exact induced operator norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PNorm {
    One,
    Two,
    Inf,
}

impl std::fmt::Display for PNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PNorm::One => write!(f, "1"),
            PNorm::Two => write!(f, "2"),
            PNorm::Inf => write!(f, "inf"),
        }
    }
}

/// Dense N x N complex matrix; the carrier of every pointwise criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Array2<Complex64>,
    real: bool,
}

impl SquareMatrix {
    pub fn from_complex(data: Array2<Complex64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c || r == 0 {
            return Err(Error::ShapeMismatch {
                context: format!("expected square matrix with n >= 1, got {r} x {c}"),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteEntry);
        }
        let real = data.iter().all(|z| z.im == 0.0);
        Ok(Self { n: r, data, real })
    }

    pub fn from_real(data: Array2<f64>) -> Result<Self> {
        Self::from_complex(data.mapv(|x| Complex64::new(x, 0.0)))
    }

    /// Convenience constructor from row slices of real entries.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut data = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch {
                    context: format!("row {i} has {} entries, expected {n}", row.len()),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                data[[i, j]] = Complex64::new(x, 0.0);
            }
        }
        Self::from_complex(data)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: Array2::zeros((n, n)),
            real: true,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            data: Array2::eye(n),
            real: true,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[[i, j]]
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_complex(self.data.mapv(|z| c * z)).expect("scaling preserves finiteness")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::ShapeMismatch {
                context: format!("cannot add {} x {} to {} x {}", self.n, self.n, other.n, other.n),
            });
        }
        Self::from_complex(&self.data + &other.data)
    }

    /// Hermitian part (M + M*)/2; equals the symmetric part for real input.
    pub fn hermitian_part(&self) -> Array2<Complex64> {
        let adj = self.data.t().mapv(|z| z.conj());
        (&self.data + &adj).mapv(|z| 0.5 * z)
    }

    fn require_real(&self, operation: &'static str) -> Result<()> {
        if self.real {
            Ok(())
        } else {
            Err(Error::ComplexNotSupported { operation })
        }
    }

    /// All off-diagonal entries nonnegative (real matrices only).
    pub fn is_quasi_positive(&self) -> Result<bool> {
        Ok(self.quasi_positive_margin()? >= 0.0)
    }

    /// Smallest off-diagonal entry; nonnegative exactly when quasi-positive.
    pub fn quasi_positive_margin(&self) -> Result<f64> {
        self.require_real("quasi-positivity")?;
        let mut margin = f64::INFINITY;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    margin = margin.min(self.data[[i, j]].re);
                }
            }
        }
        // N = 1 has no off-diagonal entries and is trivially quasi-positive.
        Ok(if margin.is_finite() { margin } else { 0.0 })
    }

    /// Column criterion: c_kk <= -sum_{j != k} |c_jk| for every column k.
    pub fn is_l1_dissipative(&self) -> Result<bool> {
        Ok(self.l1_margin()? >= 0.0)
    }

    /// min_k ( -sum_{j != k} |c_jk| - c_kk ); nonnegative iff l1-dissipative.
    pub fn l1_margin(&self) -> Result<f64> {
        self.require_real("l1-dissipativity")?;
        let mut margin = f64::INFINITY;
        for k in 0..self.n {
            let off: f64 = (0..self.n)
                .filter(|&j| j != k)
                .map(|j| self.data[[j, k]].re.abs())
                .sum();
            margin = margin.min(-off - self.data[[k, k]].re);
        }
        Ok(margin)
    }

    /// Row criterion: c_kk <= -sum_{j != k} |c_kj| for every row k.
    pub fn is_linf_dissipative(&self) -> Result<bool> {
        Ok(self.linf_margin()? >= 0.0)
    }

    pub fn linf_margin(&self) -> Result<f64> {
        self.require_real("linf-dissipativity")?;
        let mut margin = f64::INFINITY;
        for k in 0..self.n {
            let off: f64 = (0..self.n)
                .filter(|&j| j != k)
                .map(|j| self.data[[k, j]].re.abs())
                .sum();
            margin = margin.min(-off - self.data[[k, k]].re);
        }
        Ok(margin)
    }

    /// Every eigenvalue of the Hermitian part is <= TOL_EIG (scaled).
    pub fn is_l2_dissipative(&self) -> bool {
        self.l2_margin() >= -TOL_EIG * self.eig_scale()
    }

    /// -lambda_max of the Hermitian part; nonnegative iff l2-dissipative
    /// in exact arithmetic.
    pub fn l2_margin(&self) -> f64 {
        -self.hermitian_part_max_eig()
    }

    pub fn hermitian_part_max_eig(&self) -> f64 {
        let herm = self.hermitian_part();
        let (vals, _) = herm
            .eigh_into(UPLO::Lower)
            .expect("Hermitian eigensolve cannot fail on finite input");
        vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn eig_scale(&self) -> f64 {
        self.max_abs().max(1.0)
    }

    /// Exact induced operator norm for p in {1, 2, inf}.
    pub fn operator_norm(&self, p: PNorm) -> f64 {
        match p {
            PNorm::One => (0..self.n)
                .map(|k| (0..self.n).map(|j| self.data[[j, k]].norm()).sum::<f64>())
                .fold(0.0, f64::max),
            PNorm::Inf => (0..self.n)
                .map(|k| (0..self.n).map(|j| self.data[[k, j]].norm()).sum::<f64>())
                .fold(0.0, f64::max),
            PNorm::Two => {
                let (_, s, _) = self
                    .data
                    .clone()
                    .svd_into(false, false)
                    .expect("SVD cannot fail on finite input");
                s.iter().copied().fold(0.0, f64::max)
            }
        }
    }

    /// Matrix exponential e^{tM} for t >= 0 (scaling and squaring).
    pub fn matrix_exp(&self, t: f64) -> Result<SquareMatrix> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::NegativeTime { t });
        }
        let scaled = self.data.mapv(|z| t * z);
        SquareMatrix::from_complex(expm::expm(&scaled))
    }

    /// Brute-force contraction check: `||e^{tM}||_p <= 1 + slack` on every
    /// grid point. This is the independent oracle for the algebraic
    /// dissipativity criteria. A reliable grid includes a point t <= 1e-3,
    /// since violations of dissipativity show up at small times first.
    pub fn contractivity_oracle(&self, p: PNorm, t_grid: &[f64]) -> Result<(bool, Option<f64>)> {
        if t_grid.is_empty() || t_grid.iter().any(|&t| t < 0.0 || !t.is_finite()) {
            return Err(Error::InvalidTimeGrid);
        }
        for &t in t_grid {
            let norm = self.matrix_exp(t)?.operator_norm(p);
            if norm > 1.0 + ORACLE_SLACK {
                return Ok((false, Some(t)));
            }
        }
        Ok((true, None))
    }

    /// Sampling falsifier for lp-dissipativity, p in [1, inf). Evaluates
    /// phi(xi) = (sgn xi . |xi|^{p-1})^T M xi over seeded unit-sphere
    /// samples, all sign-pattern corner vectors (N <= 8), eigenvectors of
    /// the symmetric part and a hill-climbing polish. A positive value
    /// disproves dissipativity; a clean sweep is evidence, not proof.
    pub fn is_lp_dissipative_numeric(
        &self,
        p: f64,
        sampler: &SampleSpec,
    ) -> Result<(bool, Option<Array1<f64>>)> {
        self.require_real("numeric lp-dissipativity")?;
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidExponent { p });
        }
        let tol = TOL_EIG * self.eig_scale();
        let n = self.n;
        let mut best_val = f64::NEG_INFINITY;
        let mut best_xi: Option<Array1<f64>> = None;
        let mut consider = |xi: &Array1<f64>, best_val: &mut f64, best_xi: &mut Option<Array1<f64>>| {
            let nrm = lp_norm(xi, p);
            if nrm == 0.0 {
                return;
            }
            let xi = xi.mapv(|x| x / nrm);
            let val = self.lp_form(&xi, p);
            if val > *best_val {
                *best_val = val;
                *best_xi = Some(xi);
            }
        };

        // Corner vectors: all sign patterns in {-1,0,1}^n, n <= 8.
        if n <= 8 {
            let total = 3usize.pow(n as u32);
            for code in 1..total {
                let mut xi = Array1::zeros(n);
                let mut c = code;
                for x in xi.iter_mut() {
                    *x = [0.0, 1.0, -1.0][c % 3];
                    c /= 3;
                }
                consider(&xi, &mut best_val, &mut best_xi);
            }
        }

        // Eigenvectors of the symmetric part; exact maximizers for p = 2
        // and good starting directions otherwise.
        let herm = self.hermitian_part().mapv(|z| z.re);
        if let Ok((_, vecs)) = herm.eigh_into(UPLO::Lower) {
            for col in vecs.columns() {
                consider(&col.to_owned(), &mut best_val, &mut best_xi);
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
        for _ in 0..sampler.count {
            let xi = Array1::from_iter((0..n).map(|_| standard_normal(&mut rng)));
            consider(&xi, &mut best_val, &mut best_xi);
        }

        // Local polish around the best direction found so far.
        if let Some(seed_xi) = best_xi.clone() {
            let mut current = seed_xi;
            let mut step = 0.5;
            for _ in 0..200 {
                let perturbed = Array1::from_iter(
                    current
                        .iter()
                        .map(|&x| x + step * standard_normal(&mut rng)),
                );
                let nrm = lp_norm(&perturbed, p);
                if nrm > 0.0 {
                    let candidate = perturbed.mapv(|x| x / nrm);
                    if self.lp_form(&candidate, p) > self.lp_form(&current, p) {
                        current = candidate;
                    } else {
                        step *= 0.95;
                    }
                }
            }
            consider(&current, &mut best_val, &mut best_xi);
        }

        if best_val > tol {
            Ok((false, best_xi))
        } else {
            Ok((true, None))
        }
    }

    fn lp_form(&self, xi: &Array1<f64>, p: f64) -> f64 {
        let n = self.n;
        let mut val = 0.0;
        for j in 0..n {
            if xi[j] == 0.0 {
                continue;
            }
            let dual = xi[j].signum() * xi[j].abs().powf(p - 1.0);
            let mut row = 0.0;
            for k in 0..n {
                row += self.data[[j, k]].re * xi[k];
            }
            val += dual * row;
        }
        val
    }

    /// Aggregate of the pointwise criteria with margins. The exact checks
    /// for p in {1, inf} and quasi-positivity apply to real matrices only;
    /// for complex input those verdicts are `None`.
    pub fn dissipativity_report(
        &self,
        numeric_ps: &[f64],
        sampler: &SampleSpec,
    ) -> Result<DissipativityReport> {
        let (l1, linf, quasi_positive) = if self.real {
            (
                Some(self.l1_margin()?),
                Some(self.linf_margin()?),
                Some(self.quasi_positive_margin()?),
            )
        } else {
            (None, None, None)
        };
        let mut numeric = Vec::with_capacity(numeric_ps.len());
        if self.real {
            for &p in numeric_ps {
                let (ok, witness) = self.is_lp_dissipative_numeric(p, sampler)?;
                numeric.push(NumericVerdict {
                    p,
                    dissipative: ok,
                    witness: witness.map(|w| w.to_vec()),
                });
            }
        }
        Ok(DissipativityReport {
            l1: l1.map(|m| m >= 0.0),
            l2: self.is_l2_dissipative(),
            linf: linf.map(|m| m >= 0.0),
            quasi_positive: quasi_positive.map(|m| m >= 0.0),
            numeric,
            l1_margin: l1,
            l2_margin: self.l2_margin(),
            linf_margin: linf,
            quasi_positive_margin: quasi_positive,
        })
    }
}

fn lp_norm(xi: &Array1<f64>, p: f64) -> f64 {
    if p.is_infinite() {
        xi.iter().map(|x| x.abs()).fold(0.0, f64::max)
    } else {
        xi.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms per call keeps the stream simple and seeded.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Sample budget and seed for the numeric lp falsifier.
#[derive(Debug, Clone, Copy)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            count: 10_000,
            seed: 0,
        }
    }
}

/// Verdict of the numeric falsifier for one exponent.
#[derive(Debug, Clone)]
pub struct NumericVerdict {
    pub p: f64,
    /// "No violation found"; marked numeric because it is not a proof.
    pub dissipative: bool,
    pub witness: Option<Vec<f64>>,
}

/// Outcomes of all pointwise dissipativity checks on one matrix, with the
/// distance of each verdict to its decision boundary.
#[derive(Debug, Clone)]
pub struct DissipativityReport {
    pub l1: Option<bool>,
    pub l2: bool,
    pub linf: Option<bool>,
    pub quasi_positive: Option<bool>,
    pub numeric: Vec<NumericVerdict>,
    pub l1_margin: Option<f64>,
    pub l2_margin: f64,
    pub linf_margin: Option<f64>,
    pub quasi_positive_margin: Option<f64>,
}

/// The dyadic time grid 2^-10, ..., 2^4 used by the contraction oracle.
pub fn dyadic_time_grid() -> Vec<f64> {
    (-10..=4).map(|k| (k as f64).exp2()).collect()
}
