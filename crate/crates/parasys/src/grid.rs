//! Uniform cell-centered grids on intervals and rectangles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cell-centered uniform grid over a box domain, 1D or 2D. Cells are
/// indexed x-fastest: `idx = iy * nx + ix`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    extents: Vec<f64>,
    cells: Vec<usize>,
}

impl Grid {
    pub fn line(length: f64, n: usize) -> Result<Self> {
        Self::new(vec![length], vec![n])
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(vec![lx, ly], vec![nx, ny])
    }

    pub fn new(extents: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        let d = extents.len();
        if d == 0 || d > 2 || cells.len() != d {
            return Err(Error::InvalidGrid {
                context: format!("need 1 or 2 axes, got {} extents and {} cell counts", d, cells.len()),
            });
        }
        if extents.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidGrid {
                context: "extents must be positive and finite".into(),
            });
        }
        if cells.iter().any(|&n| n < 2) {
            return Err(Error::InvalidGrid {
                context: "need at least 2 cells per axis".into(),
            });
        }
        Ok(Self { extents, cells })
    }

    pub fn dimension(&self) -> usize {
        self.extents.len()
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extents[axis]
    }

    pub fn cells_along(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn cell_count(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.cells[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dimension()).map(|a| self.spacing(a)).product()
    }

    pub fn total_measure(&self) -> f64 {
        self.extents.iter().product()
    }

    /// Center coordinates of a cell; y is 0 on 1D grids.
    pub fn center(&self, idx: usize) -> (f64, f64) {
        let nx = self.cells[0];
        let ix = idx % nx;
        let x = (ix as f64 + 0.5) * self.spacing(0);
        if self.dimension() == 1 {
            (x, 0.0)
        } else {
            let iy = idx / nx;
            (x, (iy as f64 + 0.5) * self.spacing(1))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_grid_geometry() {
        let g = Grid::line(2.0, 4).unwrap();
        assert_eq!(g.dimension(), 1);
        assert_eq!(g.cell_count(), 4);
        assert!((g.spacing(0) - 0.5).abs() < 1e-15);
        assert!((g.cell_volume() - 0.5).abs() < 1e-15);
        assert_eq!(g.center(0), (0.25, 0.0));
        assert_eq!(g.center(3), (1.75, 0.0));
    }

    #[test]
    fn rectangle_indexing_is_x_fastest() {
        let g = Grid::rectangle(1.0, 2.0, 4, 3).unwrap();
        assert_eq!(g.cell_count(), 12);
        let (x, y) = g.center(5); // ix = 1, iy = 1
        assert!((x - 0.375).abs() < 1e-15);
        assert!((y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::line(0.0, 4).is_err());
        assert!(Grid::line(1.0, 1).is_err());
        assert!(Grid::new(vec![1.0, 1.0, 1.0], vec![2, 2, 2]).is_err());
    }
}
