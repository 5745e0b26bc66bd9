//! Finite-volume assembly of the divergence-form diffusion operators
//! div(A_k grad u) with Neumann boundary conditions.
//!
//! Cell-centered fluxes with harmonic-mean face coefficients give a
//! symmetric operator whose rows sum to zero exactly: constants are
//! equilibria, off-diagonal entries are nonnegative and the diagonal is
//! nonpositive (an M-matrix up to sign), which is what makes the implicit
//! Euler step positivity preserving.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::banded::SymBanded;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Per-equation, per-axis, per-cell diffusion coefficients. In 1D there is
/// one axis; in 2D the two axes carry the diagonal anisotropy pair
/// (a^xx, a^yy).
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionField {
    grid: Grid,
    coeffs: Vec<Vec<Vec<f64>>>,
}

/// Outcome of the coercivity estimate.
#[derive(Debug, Clone, Copy)]
pub struct CoercivityReport {
    /// Smallest coefficient over all cells, axes and equations.
    pub nu: f64,
    /// Set when nu is small against the mean coefficient; the scenario is
    /// accepted but close to losing uniform ellipticity.
    pub near_degenerate: bool,
}

impl DiffusionField {
    pub fn new(grid: Grid, coeffs: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let d = grid.dimension();
        let cells = grid.cell_count();
        if coeffs.is_empty() {
            return Err(Error::ShapeMismatch {
                context: "need at least one equation".into(),
            });
        }
        for (k, eq) in coeffs.iter().enumerate() {
            if eq.len() != d || eq.iter().any(|axis| axis.len() != cells) {
                return Err(Error::ShapeMismatch {
                    context: format!("equation {k}: expected {d} axes x {cells} cells"),
                });
            }
        }
        Ok(Self { grid, coeffs })
    }

    /// Same coefficient function for every equation and axis.
    pub fn isotropic<F>(grid: Grid, n_eq: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(f64, f64) -> f64,
    {
        let cells = grid.cell_count();
        let d = grid.dimension();
        let mut per_axis = vec![vec![0.0; cells]; d];
        for j in 0..cells {
            let (x, y) = grid.center(j);
            let v = f(x, y);
            for axis in per_axis.iter_mut() {
                axis[j] = v;
            }
        }
        let coeffs = vec![per_axis; n_eq];
        Self::new(grid, coeffs)
    }

    pub fn constant(grid: Grid, n_eq: usize, value: f64) -> Result<Self> {
        Self::isotropic(grid, n_eq, |_, _| value)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn equations(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficient(&self, eq: usize, axis: usize, cell: usize) -> f64 {
        self.coeffs[eq][axis][cell]
    }

    /// Whether A_1 = ... = A_N cellwise (within rounding).
    pub fn identical(&self) -> bool {
        let first = &self.coeffs[0];
        self.coeffs.iter().skip(1).all(|eq| {
            eq.iter().zip(first.iter()).all(|(a, b)| {
                a.iter()
                    .zip(b.iter())
                    .all(|(x, y)| (x - y).abs() <= 1e-14 * x.abs().max(y.abs()).max(1.0))
            })
        })
    }

    /// nu = min over cells, axes and equations; errors when not positive.
    pub fn coercivity_check(&self) -> Result<CoercivityReport> {
        let mut nu = f64::INFINITY;
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut worst_cell = 0;
        for eq in &self.coeffs {
            for axis in eq {
                for (j, &a) in axis.iter().enumerate() {
                    if a < nu {
                        nu = a;
                        worst_cell = j;
                    }
                    sum += a;
                    count += 1;
                }
            }
        }
        if !(nu > 0.0) {
            return Err(Error::CoercivityViolation {
                cell: worst_cell,
                value: nu,
            });
        }
        let mean = sum / count as f64;
        Ok(CoercivityReport {
            nu,
            near_degenerate: nu <= 0.1 * mean,
        })
    }

    pub fn assemble(&self, eq: usize) -> DiscreteOperator {
        assemble_diffusion(&self.grid, &self.coeffs[eq])
    }

    pub fn assemble_all(&self) -> Vec<DiscreteOperator> {
        (0..self.equations()).map(|k| self.assemble(k)).collect()
    }
}

fn harmonic_mean(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Assemble one equation's operator from its per-axis cell coefficients.
/// Interior face i+1/2 carries the flux a_{i+1/2} (u_{i+1} - u_i) / h with
/// the harmonic mean of the adjacent cells; boundary faces carry none.
pub fn assemble_diffusion(grid: &Grid, axis_coeffs: &[Vec<f64>]) -> DiscreteOperator {
    let cells = grid.cell_count();
    let nx = grid.cells_along(0);
    let mut couplings: Vec<(usize, usize, f64)> = Vec::new();

    // x-direction faces.
    let hx2 = grid.spacing(0) * grid.spacing(0);
    let rows = cells / nx;
    for iy in 0..rows {
        for ix in 0..nx - 1 {
            let j = iy * nx + ix;
            let w = harmonic_mean(axis_coeffs[0][j], axis_coeffs[0][j + 1]) / hx2;
            couplings.push((j, j + 1, w));
        }
    }

    // y-direction faces (2D only).
    if grid.dimension() == 2 {
        let ny = grid.cells_along(1);
        let hy2 = grid.spacing(1) * grid.spacing(1);
        for iy in 0..ny - 1 {
            for ix in 0..nx {
                let j = iy * nx + ix;
                let w = harmonic_mean(axis_coeffs[1][j], axis_coeffs[1][j + nx]) / hy2;
                couplings.push((j, j + nx, w));
            }
        }
    }

    DiscreteOperator::from_stencil(cells, couplings)
}

/// Sparse symmetric operator with zero row sums, nonpositive diagonal and
/// nonnegative off-diagonals, stored as CSR.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    n: usize,
    bandwidth: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl DiscreteOperator {
    /// Build from positive face couplings. Each row stores its off-diagonal
    /// entries (column-sorted) followed by the diagonal, which is the
    /// negative of the off-diagonal sum accumulated in that exact order;
    /// applying the operator to a constant therefore gives zero to the last
    /// bit.
    fn from_stencil(n: usize, couplings: Vec<(usize, usize, f64)>) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(4); n];
        let mut bandwidth = 0;
        for (i, j, w) in couplings {
            rows[i].push((j, w));
            rows[j].push((i, w));
            bandwidth = bandwidth.max(j - i);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            let mut off_sum = 0.0;
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
                off_sum += v;
            }
            cols.push(r);
            vals.push(-off_sum);
            row_ptr.push(cols.len());
        }
        Self {
            n,
            bandwidth,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn apply_complex(&self, u: &Array1<Complex64>) -> Array1<Complex64> {
        let mut out = Array1::zeros(self.n);
        for r in 0..self.n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * u[self.cols[k]];
            }
            out[r] = acc;
        }
        out
    }

    pub fn apply_real(&self, u: &[f64], out: &mut [f64]) {
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * u[self.cols[k]];
            }
            out[r] = acc;
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut dense = Array2::zeros((self.n, self.n));
        for (r, c, v) in self.entries() {
            dense[[r, c]] += v;
        }
        dense
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for (r, _, v) in self.entries() {
            sums[r] += v;
        }
        sums
    }

    /// Banded form of I - gamma * B; positive definite for gamma >= 0.
    pub fn shifted_identity_banded(&self, gamma: f64) -> SymBanded {
        let mut a = SymBanded::zeros(self.n, self.bandwidth);
        for r in 0..self.n {
            a.add(r, r, 1.0);
        }
        for (r, c, v) in self.entries() {
            if c <= r {
                a.add(r, c, -gamma * v);
            }
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray_linalg::Eigh;
    use ndarray_linalg::UPLO;

    #[test]
    fn constants_are_equilibria() {
        let grid = Grid::line(1.0, 16).unwrap();
        let field = DiffusionField::isotropic(grid, 1, |x, _| 1.0 + x).unwrap();
        let op = field.assemble(0);
        let ones = Array1::from_elem(op.n(), Complex64::new(1.0, 0.0));
        let out = op.apply_complex(&ones);
        assert!(out.iter().all(|z| z.norm() == 0.0), "row sums must vanish exactly");
    }

    #[test]
    fn unit_coefficient_stencil() {
        let n = 8;
        let grid = Grid::line(1.0, n).unwrap();
        let op = DiffusionField::constant(grid, 1, 1.0).unwrap().assemble(0);
        let dense = op.to_dense();
        let h2 = (1.0 / n as f64).powi(2);
        // Interior row: (1, -2, 1) / h^2.
        assert!((dense[[3, 2]] - 1.0 / h2).abs() < 1e-12);
        assert!((dense[[3, 3]] + 2.0 / h2).abs() < 1e-12);
        assert!((dense[[3, 4]] - 1.0 / h2).abs() < 1e-12);
        // Boundary row: (-1, 1) / h^2.
        assert!((dense[[0, 0]] + 1.0 / h2).abs() < 1e-12);
        assert!((dense[[0, 1]] - 1.0 / h2).abs() < 1e-12);
    }

    #[test]
    fn m_matrix_sign_pattern_and_symmetry() {
        let grid = Grid::rectangle(1.0, 2.0, 6, 5).unwrap();
        let field = DiffusionField::isotropic(grid, 1, |x, y| 1.0 + x + 0.5 * y).unwrap();
        let op = field.assemble(0);
        let dense = op.to_dense();
        for r in 0..op.n() {
            for c in 0..op.n() {
                if r == c {
                    assert!(dense[[r, c]] <= 0.0);
                } else {
                    assert!(dense[[r, c]] >= 0.0);
                    assert!((dense[[r, c]] - dense[[c, r]]).abs() < 1e-12);
                }
            }
        }
        for s in op.row_sums() {
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn operator_is_negative_semidefinite_with_constant_kernel() {
        let grid = Grid::line(1.0, 24).unwrap();
        let field = DiffusionField::isotropic(grid, 1, |x, _| 0.5 + x * x).unwrap();
        let dense = field.assemble(0).to_dense();
        let (vals, _) = dense.eigh(UPLO::Lower).unwrap();
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(max <= 1e-10);
        // Kernel is exactly the constants: one eigenvalue at zero.
        let zeros = vals.iter().filter(|v| v.abs() < 1e-8).count();
        assert_eq!(zeros, 1);
    }

    #[test]
    fn smallest_nonzero_laplacian_eigenvalue_near_pi_squared() {
        let n = 64;
        let grid = Grid::line(1.0, n).unwrap();
        let dense = DiffusionField::constant(grid, 1, 1.0)
            .unwrap()
            .assemble(0)
            .to_dense();
        let (vals, _) = dense.eigh(UPLO::Lower).unwrap();
        let mut sorted: Vec<f64> = vals.iter().map(|v| -v).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lambda1 = sorted[1];
        let pi2 = std::f64::consts::PI.powi(2);
        assert!(
            (lambda1 - pi2).abs() / pi2 < 0.01,
            "lambda_1 = {lambda1}, pi^2 = {pi2}"
        );
    }

    #[test]
    fn coercivity_examples() {
        let grid = Grid::line(1.0, 64).unwrap();
        let h = 1.0 / 64.0;

        let report = DiffusionField::constant(grid.clone(), 2, 1.0)
            .unwrap()
            .coercivity_check()
            .unwrap();
        assert_eq!(report.nu, 1.0);
        assert!(!report.near_degenerate);

        let report = DiffusionField::isotropic(grid.clone(), 1, |x, _| 1.0 + x)
            .unwrap()
            .coercivity_check()
            .unwrap();
        assert!((report.nu - (1.0 + h / 2.0)).abs() < 1e-14);
        assert!(!report.near_degenerate);

        // a(x) = x is positive at cell centers but degenerates as h -> 0.
        let report = DiffusionField::isotropic(grid.clone(), 1, |x, _| x)
            .unwrap()
            .coercivity_check()
            .unwrap();
        assert!((report.nu - h / 2.0).abs() < 1e-14);
        assert!(report.near_degenerate);

        let err = DiffusionField::isotropic(grid, 1, |x, _| x - 0.5)
            .unwrap()
            .coercivity_check();
        assert!(matches!(err, Err(Error::CoercivityViolation { .. })));
    }

    #[test]
    fn identical_detects_per_equation_differences() {
        let grid = Grid::line(1.0, 8).unwrap();
        let same = DiffusionField::isotropic(grid.clone(), 3, |x, _| 1.0 + x).unwrap();
        assert!(same.identical());
        let cells = grid.cell_count();
        let mixed = DiffusionField::new(
            grid,
            vec![
                vec![vec![1.0; cells]],
                vec![vec![2.0; cells]],
            ],
        )
        .unwrap();
        assert!(!mixed.identical());
    }
}
