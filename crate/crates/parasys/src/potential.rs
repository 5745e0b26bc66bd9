//! Spatially varying matrix potentials V: Omega -> C^{NxN} on a grid and
//! their pointwise-aggregated classification.
//!
//! Every criterion is evaluated at each grid cell; "almost everywhere" on
//! the continuum becomes "at every cell" here. The classification report
//! collects everything the convergence cascade needs: dissipativity
//! verdicts, a strictly positive common kernel vector when one exists, a
//! simultaneous diagonalizer when one exists, and the coupling graph.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, EigVals, Inverse, SVDInto};
use num_complex::Complex64;
use serde::Serialize;

use crate::eigen::{nullspace, nullspace_real, sort_eigenvalues};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::matrix::{SquareMatrix, TOL_EIG};
use crate::simplex::max_min_combination;

/// Entries closer than this are treated as equal when testing constancy of
/// the field.
const CONSTANT_TOL: f64 = 1e-14;

/// Grid-indexed map x -> V(x) with cached realness and constancy flags.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    grid: Grid,
    n_comp: usize,
    cells: Vec<SquareMatrix>,
    real_valued: bool,
    constant: bool,
}

impl PotentialField {
    pub fn new(grid: Grid, cells: Vec<SquareMatrix>) -> Result<Self> {
        if cells.len() != grid.cell_count() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "{} cell matrices for a grid of {} cells",
                    cells.len(),
                    grid.cell_count()
                ),
            });
        }
        let n_comp = cells[0].n();
        if cells.iter().any(|m| m.n() != n_comp) {
            return Err(Error::ShapeMismatch {
                context: "all cell matrices must share one size".into(),
            });
        }
        let real_valued = cells.iter().all(|m| m.is_real());
        let first = &cells[0];
        let constant = cells.iter().all(|m| {
            m.data()
                .iter()
                .zip(first.data().iter())
                .all(|(a, b)| (a - b).norm() <= CONSTANT_TOL)
        });
        Ok(Self {
            grid,
            n_comp,
            cells,
            real_valued,
            constant,
        })
    }

    pub fn constant_potential(grid: Grid, m: SquareMatrix) -> Result<Self> {
        let cells = vec![m; grid.cell_count()];
        Self::new(grid, cells)
    }

    pub fn from_fn<F>(grid: Grid, mut f: F) -> Result<Self>
    where
        F: FnMut(f64, f64) -> SquareMatrix,
    {
        let cells = (0..grid.cell_count())
            .map(|j| {
                let (x, y) = grid.center(j);
                f(x, y)
            })
            .collect();
        Self::new(grid, cells)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.n_comp
    }

    pub fn cell(&self, j: usize) -> &SquareMatrix {
        &self.cells[j]
    }

    pub fn cell_matrices(&self) -> &[SquareMatrix] {
        &self.cells
    }

    pub fn is_real(&self) -> bool {
        self.real_valued
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let cells = self.cells.iter().map(|m| m.scale(c)).collect();
        Self::new(self.grid.clone(), cells).expect("scaling preserves shape")
    }

    /// max over cells of the spectral norm of V(x).
    pub fn max_spectral_norm(&self) -> f64 {
        self.cells
            .iter()
            .map(|m| m.operator_norm(crate::matrix::PNorm::Two))
            .fold(0.0, f64::max)
    }

    /// Run every pointwise criterion on every cell and aggregate.
    pub fn classify(&self) -> ClassificationReport {
        let real_ae = self.real_valued;
        let mut quasi_positive_ae = real_ae;
        let mut l1_ae = real_ae;
        let mut linf_ae = real_ae;
        let mut l2_ae = true;
        for m in &self.cells {
            if real_ae {
                quasi_positive_ae &= m.is_quasi_positive().expect("real checked");
                l1_ae &= m.is_l1_dissipative().expect("real checked");
                linf_ae &= m.is_linf_dissipative().expect("real checked");
            }
            l2_ae &= m.is_l2_dissipative();
        }
        ClassificationReport {
            real_ae,
            constant: self.constant,
            quasi_positive_ae,
            l1_ae,
            l2_ae,
            linf_ae,
            positive_kernel_vector: self.positive_kernel_vector(),
            diagonalizer: self.simultaneous_diagonalizer(),
            coupling_irreducible: self.coupling_graph_irreducible(),
            potential: self.clone(),
        }
    }

    /// Orthonormal basis of the common kernel of (i beta - V(x)) over all
    /// cells, from the SVD of the stacked matrix.
    pub fn common_kernel(&self, beta: f64) -> Vec<Array1<Complex64>> {
        let n = self.n_comp;
        let cells = self.cells.len();
        let mut stacked = Array2::zeros((cells * n, n));
        let shift = Complex64::new(0.0, beta);
        for (j, m) in self.cells.iter().enumerate() {
            for r in 0..n {
                for c in 0..n {
                    let mut v = -m.entry(r, c);
                    if r == c {
                        v += shift;
                    }
                    stacked[[j * n + r, c]] = v;
                }
            }
        }
        let tol = 1e-8 * (beta.abs() + self.max_spectral_norm());
        nullspace(stacked.view(), tol)
    }

    /// Real vectors z with V(x) z = 0 at every cell (the real common
    /// kernel at beta = 0), as an orthonormal basis.
    pub fn real_zero_kernel(&self) -> Vec<Array1<f64>> {
        let n = self.n_comp;
        let cells = self.cells.len();
        let rows = if self.real_valued { cells * n } else { 2 * cells * n };
        let mut stacked = Array2::zeros((rows, n));
        for (j, m) in self.cells.iter().enumerate() {
            for r in 0..n {
                for c in 0..n {
                    stacked[[j * n + r, c]] = m.entry(r, c).re;
                    if !self.real_valued {
                        stacked[[(cells + j) * n + r, c]] = m.entry(r, c).im;
                    }
                }
            }
        }
        let tol = 1e-8 * self.max_spectral_norm().max(1e-300);
        nullspace_real(stacked.view(), tol)
    }

    /// Candidate frequencies beta for which i*beta could be a common
    /// eigenvalue: a nontrivial common kernel of (i beta - V) forces
    /// i beta into the spectrum at the reference cell, so the spectrum
    /// there exhausts the search. Real potentials have conjugate-symmetric
    /// spectra, so only beta > 0 is reported for them; complex potentials
    /// report both signs.
    pub fn imaginary_eigen_candidates(&self) -> Vec<f64> {
        self.imaginary_eigen_candidates_at(0)
    }

    pub fn imaginary_eigen_candidates_at(&self, reference_cell: usize) -> Vec<f64> {
        let m = &self.cells[reference_cell];
        let scale = m.max_abs().max(1.0);
        let tol = TOL_EIG * scale;
        let eigs = crate::eigen::spectrum(m);
        let mut betas: Vec<f64> = eigs
            .iter()
            .filter(|z| z.re.abs() <= tol)
            .map(|z| z.im)
            .filter(|&b| if self.real_valued { b > tol } else { b.abs() > tol })
            .collect();
        betas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        betas.dedup_by(|a, b| (*a - *b).abs() <= tol);
        betas
    }

    /// Strictly positive vector in the real common kernel at beta = 0, or
    /// `None`. One-dimensional kernels are sign-normalized and tested;
    /// higher-dimensional ones are searched by maximizing the minimum
    /// component over the coefficient box with a small LP.
    pub fn positive_kernel_vector(&self) -> Option<Array1<f64>> {
        let basis = self.real_zero_kernel();
        if basis.is_empty() {
            return None;
        }
        let candidate: Array1<f64> = if basis.len() == 1 {
            basis[0].clone()
        } else {
            let cols: Vec<Vec<f64>> = basis.iter().map(|v| v.to_vec()).collect();
            let (_, combined) = max_min_combination(&cols)?;
            Array1::from_vec(combined)
        };
        let sup = candidate.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let min = candidate.iter().copied().fold(f64::INFINITY, f64::min);
        if sup > 0.0 && min > 1e-9 * sup {
            Some(candidate.mapv(|x| x / sup))
        } else {
            None
        }
    }

    /// A single invertible U with U V(x) U^{-1} diagonal at every cell,
    /// together with the diagonal eigenvalue curves, or `None`. The
    /// eigenvector basis is taken from the cell whose matrix has the best
    /// separated eigenvalues; a defective reference matrix gives `None`.
    pub fn simultaneous_diagonalizer(&self) -> Option<Diagonalizer> {
        let n = self.n_comp;
        let scale = self.max_spectral_norm();
        let tol = 1e-8 * scale.max(1e-300);

        let reference = self.best_separated_cell();
        let (mut vals, vecs) = self.cells[reference].data().eig().ok()?;

        // Order eigenpairs by descending real then imaginary part so curve
        // indices are reproducible.
        let mut order: Vec<usize> = (0..n).collect();
        {
            let mut keys: Vec<Complex64> = vals.to_vec();
            sort_eigenvalues(&mut keys);
            order.sort_by_key(|&i| {
                keys.iter()
                    .position(|k| (k - vals[i]).norm() < 1e-12 * (1.0 + vals[i].norm()))
                    .unwrap_or(n)
            });
        }
        let mut w = Array2::zeros((n, n));
        for (col, &i) in order.iter().enumerate() {
            for r in 0..n {
                w[[r, col]] = vecs[[r, i]];
            }
        }
        let sorted_vals: Vec<Complex64> = order.iter().map(|&i| vals[i]).collect();
        for (i, v) in sorted_vals.iter().enumerate() {
            vals[i] = *v;
        }

        // A defective reference shows up as a numerically singular
        // eigenvector matrix.
        let (_, s, _) = w.clone().svd_into(false, false).ok()?;
        let smax = s.iter().copied().fold(0.0, f64::max);
        let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
        if !(smin > 0.0) || smax / smin > 1e12 {
            return None;
        }

        let w_inv = w.inv().ok()?;
        let cells = self.cells.len();
        let mut curves = Array2::zeros((cells, n));
        for (j, m) in self.cells.iter().enumerate() {
            let d = w_inv.dot(m.data()).dot(&w);
            for r in 0..n {
                for c in 0..n {
                    if r == c {
                        curves[[j, r]] = d[[r, r]];
                    } else if d[[r, c]].norm() > tol {
                        return None;
                    }
                }
            }
        }
        Some(Diagonalizer {
            transform: w_inv,
            transform_inv: w,
            curves,
        })
    }

    fn best_separated_cell(&self) -> usize {
        if self.n_comp == 1 || self.constant {
            return 0;
        }
        let mut best = 0;
        let mut best_sep = f64::NEG_INFINITY;
        for (j, m) in self.cells.iter().enumerate() {
            let Ok(vals) = m.data().eigvals() else {
                continue;
            };
            let mut sep = f64::INFINITY;
            for a in 0..self.n_comp {
                for b in (a + 1)..self.n_comp {
                    sep = sep.min((vals[a] - vals[b]).norm());
                }
            }
            if sep > best_sep {
                best_sep = sep;
                best = j;
            }
        }
        best
    }

    /// Whether the digraph with an edge j -> k wherever the component
    /// V_jk is nonzero on some cell is strongly connected (self-loops
    /// ignored; single-component systems are trivially irreducible).
    pub fn coupling_graph_irreducible(&self) -> bool {
        let n = self.n_comp;
        if n == 1 {
            return true;
        }
        let mut adj = vec![vec![false; n]; n];
        for m in &self.cells {
            for j in 0..n {
                for k in 0..n {
                    if j != k && m.entry(j, k).norm() > CONSTANT_TOL {
                        adj[j][k] = true;
                    }
                }
            }
        }
        reachable_from(&adj, 0) && reachable_from(&transpose(&adj), 0)
    }
}

fn transpose(adj: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    let mut t = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            t[j][i] = adj[i][j];
        }
    }
    t
}

fn reachable_from(adj: &[Vec<bool>], start: usize) -> bool {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for (w, &edge) in adj[v].iter().enumerate() {
            if edge && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Simultaneous diagonalization data: `transform` is the U with
/// U V(x) U^{-1} diagonal; `curves[(j, k)]` is the k-th eigenvalue curve
/// at cell j.
#[derive(Debug, Clone)]
pub struct Diagonalizer {
    pub transform: Array2<Complex64>,
    pub transform_inv: Array2<Complex64>,
    pub curves: Array2<Complex64>,
}

impl Diagonalizer {
    pub fn curve_count(&self) -> usize {
        self.curves.ncols()
    }

    /// Whether curve k is constant over the grid within the tolerance.
    pub fn curve_constant(&self, k: usize, tol: f64) -> bool {
        let first = self.curves[[0, k]];
        self.curves.column(k).iter().all(|z| (z - first).norm() <= tol)
    }

    pub fn max_re(&self, k: usize) -> f64 {
        self.curves
            .column(k)
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Aggregated pointwise verdicts over the whole grid ("a.e." discretized
/// as "at every cell") plus the structural data the cascade consumes.
#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub real_ae: bool,
    pub constant: bool,
    pub quasi_positive_ae: bool,
    pub l1_ae: bool,
    pub l2_ae: bool,
    pub linf_ae: bool,
    pub positive_kernel_vector: Option<Array1<f64>>,
    pub diagonalizer: Option<Diagonalizer>,
    pub coupling_irreducible: bool,
    pub potential: PotentialField,
}

impl ClassificationReport {
    pub fn summary(&self) -> ClassificationSummary {
        ClassificationSummary {
            real_ae: self.real_ae,
            constant: self.constant,
            quasi_positive_ae: self.quasi_positive_ae,
            l1_dissipative_ae: self.l1_ae,
            l2_dissipative_ae: self.l2_ae,
            linf_dissipative_ae: self.linf_ae,
            positive_kernel_vector: self
                .positive_kernel_vector
                .as_ref()
                .map(|v| v.to_vec()),
            simultaneously_diagonalizable: self.diagonalizer.is_some(),
            eigenvalue_curves_at_reference: self.diagonalizer.as_ref().map(|d| {
                (0..d.curve_count())
                    .map(|k| [d.curves[[0, k]].re, d.curves[[0, k]].im])
                    .collect()
            }),
            constant_curves: self.diagonalizer.as_ref().map(|d| {
                (0..d.curve_count())
                    .map(|k| d.curve_constant(k, 1e-10))
                    .collect()
            }),
            coupling_irreducible: self.coupling_irreducible,
        }
    }
}

/// JSON-facing view of a classification report.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationSummary {
    pub real_ae: bool,
    pub constant: bool,
    pub quasi_positive_ae: bool,
    pub l1_dissipative_ae: bool,
    pub l2_dissipative_ae: bool,
    pub linf_dissipative_ae: bool,
    pub positive_kernel_vector: Option<Vec<f64>>,
    pub simultaneously_diagonalizable: bool,
    pub eigenvalue_curves_at_reference: Option<Vec<[f64; 2]>>,
    pub constant_curves: Option<Vec<bool>>,
    pub coupling_irreducible: bool,
}
