//! The coupled operator: diagonal diffusion blocks plus the multiplication
//! potential, applied cellwise.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::diffusion::{DiffusionField, DiscreteOperator};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::PotentialField;
use crate::state::StateField;

/// Largest dense size (cells x components) the spectral routines accept.
pub const DENSE_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub struct BlockOperator {
    ops: Vec<DiscreteOperator>,
    potential: PotentialField,
}

impl BlockOperator {
    pub fn new(ops: Vec<DiscreteOperator>, potential: PotentialField) -> Result<Self> {
        let cells = potential.grid().cell_count();
        if ops.len() != potential.components() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "{} diffusion operators for {} components",
                    ops.len(),
                    potential.components()
                ),
            });
        }
        if ops.iter().any(|op| op.n() != cells) {
            return Err(Error::ShapeMismatch {
                context: "diffusion operator size does not match the grid".into(),
            });
        }
        Ok(Self { ops, potential })
    }

    /// Assemble from a diffusion field sharing the potential's grid.
    pub fn assemble(diffusion: &DiffusionField, potential: &PotentialField) -> Result<Self> {
        if diffusion.grid() != potential.grid() {
            return Err(Error::ShapeMismatch {
                context: "diffusion and potential grids differ".into(),
            });
        }
        if diffusion.equations() != potential.components() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "{} diffusion equations for {} potential components",
                    diffusion.equations(),
                    potential.components()
                ),
            });
        }
        Self::new(diffusion.assemble_all(), potential.clone())
    }

    pub fn grid(&self) -> &Grid {
        self.potential.grid()
    }

    pub fn components(&self) -> usize {
        self.potential.components()
    }

    pub fn potential(&self) -> &PotentialField {
        &self.potential
    }

    pub fn diffusion_ops(&self) -> &[DiscreteOperator] {
        &self.ops
    }

    /// Total dense dimension cells * N.
    pub fn size(&self) -> usize {
        self.grid().cell_count() * self.components()
    }

    pub fn is_real(&self) -> bool {
        self.potential.is_real()
    }

    /// L u = diag(B_1, ..., B_N) u + V(x) u(x).
    pub fn apply(&self, u: &StateField) -> Result<StateField> {
        let cells = self.grid().cell_count();
        let n = self.components();
        if u.cells() != cells || u.components() != n {
            return Err(Error::ShapeMismatch {
                context: "state shape does not match the operator".into(),
            });
        }
        let mut out = Array2::zeros((cells, n));
        for k in 0..n {
            let col: Array1<Complex64> = u.data().column(k).to_owned();
            let diffused = self.ops[k].apply_complex(&col);
            for j in 0..cells {
                out[[j, k]] = diffused[j];
            }
        }
        for j in 0..cells {
            let v = self.potential.cell(j);
            for r in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..n {
                    acc += v.entry(r, c) * u.value(j, c);
                }
                out[[j, r]] += acc;
            }
        }
        StateField::new(self.grid().clone(), out)
    }

    /// Dense matrix in the component-major layout (row k*cells + j).
    pub fn materialize(&self) -> Result<Array2<Complex64>> {
        let size = self.size();
        if size > DENSE_CAP {
            return Err(Error::SizeCapExceeded {
                size,
                cap: DENSE_CAP,
            });
        }
        let cells = self.grid().cell_count();
        let n = self.components();
        let mut dense = Array2::zeros((size, size));
        for (k, op) in self.ops.iter().enumerate() {
            for (r, c, v) in op.entries() {
                dense[[k * cells + r, k * cells + c]] += Complex64::new(v, 0.0);
            }
        }
        for j in 0..cells {
            let v = self.potential.cell(j);
            for r in 0..n {
                for c in 0..n {
                    dense[[r * cells + j, c * cells + j]] += v.entry(r, c);
                }
            }
        }
        Ok(dense)
    }
}
