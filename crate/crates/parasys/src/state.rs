//! Discretized vector-valued states u in L^p(Omega; C^N) and their norms.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::matrix::PNorm;

/// One complex value per grid cell and component; row `j` of `data` holds
/// the N components at cell `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    grid: Grid,
    data: Array2<Complex64>,
}

impl StateField {
    pub fn new(grid: Grid, data: Array2<Complex64>) -> Result<Self> {
        if data.nrows() != grid.cell_count() || data.ncols() == 0 {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "state has {} rows x {} components for a grid of {} cells",
                    data.nrows(),
                    data.ncols(),
                    grid.cell_count()
                ),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteEntry);
        }
        Ok(Self { grid, data })
    }

    /// Spatially constant state z (x) 1.
    pub fn constant(grid: Grid, z: &[Complex64]) -> Result<Self> {
        let cells = grid.cell_count();
        let mut data = Array2::zeros((cells, z.len()));
        for j in 0..cells {
            for (k, &v) in z.iter().enumerate() {
                data[[j, k]] = v;
            }
        }
        Self::new(grid, data)
    }

    /// Build from a per-cell function of the cell center.
    pub fn from_fn<F>(grid: Grid, n_comp: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(f64, f64) -> Vec<Complex64>,
    {
        let cells = grid.cell_count();
        let mut data = Array2::zeros((cells, n_comp));
        for j in 0..cells {
            let (x, y) = grid.center(j);
            let vals = f(x, y);
            for k in 0..n_comp {
                data[[j, k]] = vals[k];
            }
        }
        Self::new(grid, data)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.data.ncols()
    }

    pub fn cells(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.data
    }

    pub fn value(&self, cell: usize, comp: usize) -> Complex64 {
        self.data[[cell, comp]]
    }

    /// Flatten to a component-major vector (component k occupies the block
    /// k*cells .. (k+1)*cells), matching the dense block operator layout.
    pub fn to_flat(&self) -> Array1<Complex64> {
        let (cells, n) = self.data.dim();
        let mut out = Array1::zeros(cells * n);
        for k in 0..n {
            for j in 0..cells {
                out[k * cells + j] = self.data[[j, k]];
            }
        }
        out
    }

    pub fn from_flat(grid: Grid, n_comp: usize, flat: &Array1<Complex64>) -> Result<Self> {
        let cells = grid.cell_count();
        if flat.len() != cells * n_comp {
            return Err(Error::ShapeMismatch {
                context: format!("flat length {} != {} cells x {} components", flat.len(), cells, n_comp),
            });
        }
        let mut data = Array2::zeros((cells, n_comp));
        for k in 0..n_comp {
            for j in 0..cells {
                data[[j, k]] = flat[k * cells + j];
            }
        }
        Self::new(grid, data)
    }

    /// Discrete L^p norm: the cell-volume-weighted p-norm over cells and
    /// components for finite p, the entrywise maximum for p = inf.
    pub fn norm(&self, p: PNorm) -> f64 {
        let vol = self.grid.cell_volume();
        match p {
            PNorm::One => vol * self.data.iter().map(|z| z.norm()).sum::<f64>(),
            PNorm::Two => (vol * self.data.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt(),
            PNorm::Inf => self.data.iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.data.dim() != other.data.dim() {
            return Err(Error::ShapeMismatch {
                context: "state dimensions differ".into(),
            });
        }
        Self::new(self.grid.clone(), &self.data - &other.data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norms_of_unit_component() {
        // u = (1, 0) on a domain of measure 1: all three norms equal 1.
        let g = Grid::line(1.0, 8).unwrap();
        let u = StateField::constant(g, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        for p in [PNorm::One, PNorm::Two, PNorm::Inf] {
            assert!((u.norm(p) - 1.0).abs() < 1e-14, "p = {p}");
        }
    }

    #[test]
    fn norms_of_ones_vector() {
        // u = (1, 1) constant on |Omega| = 1: norms are 2, sqrt(2), 1.
        let g = Grid::line(1.0, 16).unwrap();
        let u = StateField::constant(g, &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((u.norm(PNorm::One) - 2.0).abs() < 1e-14);
        assert!((u.norm(PNorm::Two) - 2.0_f64.sqrt()).abs() < 1e-14);
        assert!((u.norm(PNorm::Inf) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn norm_scales_homogeneously() {
        let g = Grid::rectangle(1.0, 1.0, 4, 4).unwrap();
        let u = StateField::from_fn(g.clone(), 2, |x, y| {
            vec![c(x * y, 0.3), c(-x, y)]
        })
        .unwrap();
        let scaled = StateField::new(g, u.data().mapv(|z| 2.5 * z)).unwrap();
        for p in [PNorm::One, PNorm::Two, PNorm::Inf] {
            assert!((scaled.norm(p) - 2.5 * u.norm(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_round_trip() {
        let g = Grid::line(1.0, 5).unwrap();
        let u = StateField::from_fn(g.clone(), 3, |x, _| {
            vec![c(x, 0.0), c(0.0, x * x), c(1.0 - x, 2.0)]
        })
        .unwrap();
        let round = StateField::from_flat(g, 3, &u.to_flat()).unwrap();
        assert_eq!(u, round);
    }

    #[test]
    fn l2_norm_matches_weighted_euclidean() {
        let g = Grid::line(3.0, 7).unwrap();
        let u = StateField::from_fn(g.clone(), 2, |x, _| vec![c(x, -x), c(x * x, 0.1)]).unwrap();
        let weighted: f64 = u
            .data()
            .iter()
            .map(|z| g.cell_volume() * z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!((u.norm(PNorm::Two) - weighted).abs() <= 1e-12 * weighted);
    }
}
