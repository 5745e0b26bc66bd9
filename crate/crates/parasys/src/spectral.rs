//! Spectrum of the assembled block operator near the imaginary axis, the
//! long-time limit projection, and constancy of imaginary-axis
//! eigenvectors.

use ndarray::{Array1, Array2, ArrayView1};
use ndarray_linalg::{Eig, InverseInto, SVDInto};
use num_complex::Complex64;
use serde::Serialize;

use crate::block::BlockOperator;
use crate::eigen::sort_eigenvalues;
use crate::error::{Error, Result};

/// Relative tolerance anchoring "on the boundary" and "equal to zero".
const SPECTRAL_TOL: f64 = 1e-8;

/// Full spectrum of a materialized block operator.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    /// All eigenvalues as (re, im), ordered by descending real part.
    pub eigenvalues: Vec<[f64; 2]>,
    /// max Re over the spectrum.
    pub spectral_bound: f64,
    /// Eigenvalues with Re >= spectral_bound - tol.
    pub boundary_spectrum: Vec<[f64; 2]>,
    /// Distance from the bound to the next-largest real part, when any
    /// eigenvalue lies off the boundary.
    pub gap: Option<f64>,
    /// The tolerance that delimited the boundary.
    pub tolerance: f64,
}

impl SpectrumReport {
    pub fn eigenvalues_complex(&self) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect()
    }
}

fn dense_eigen(l: &BlockOperator) -> Result<(Array1<Complex64>, Array2<Complex64>)> {
    let dense = l.materialize()?;
    if l.is_real() {
        let real = dense.mapv(|z| z.re);
        Ok(real.eig()?)
    } else {
        Ok(dense.eig()?)
    }
}

pub fn spectrum_block(l: &BlockOperator) -> Result<SpectrumReport> {
    let (vals, _) = dense_eigen(l)?;
    let mut eigenvalues: Vec<Complex64> = vals.to_vec();
    sort_eigenvalues(&mut eigenvalues);
    let scale = eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = SPECTRAL_TOL * scale;
    let bound = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let boundary: Vec<Complex64> = eigenvalues
        .iter()
        .copied()
        .filter(|z| z.re >= bound - tol)
        .collect();
    let next = eigenvalues
        .iter()
        .map(|z| z.re)
        .filter(|&re| re < bound - tol)
        .fold(f64::NEG_INFINITY, f64::max);
    let gap = if next.is_finite() {
        Some(bound - next)
    } else {
        None
    };
    Ok(SpectrumReport {
        eigenvalues: eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
        spectral_bound: bound,
        boundary_spectrum: boundary.iter().map(|z| [z.re, z.im]).collect(),
        gap,
        tolerance: tol,
    })
}

/// Spectral projection onto the long-time limit.
#[derive(Debug, Clone)]
pub struct LimitProjection {
    pub matrix: Array2<Complex64>,
    pub rank: usize,
}

/// P = lim e^{tL}, computed from the eigendecomposition: zero when the
/// spectrum is strictly stable, otherwise the right/left eigenvector
/// pairing over the eigenvalue-0 group. Errors when the boundary spectrum
/// contains anything other than 0 (no limit exists) or when 0 is
/// defective.
pub fn limit_projection(l: &BlockOperator, report: &SpectrumReport) -> Result<LimitProjection> {
    let size = l.size();
    let tol = report.tolerance;

    if report.spectral_bound < -tol {
        return Ok(LimitProjection {
            matrix: Array2::zeros((size, size)),
            rank: 0,
        });
    }
    for &[re, im] in &report.boundary_spectrum {
        if Complex64::new(re, im).norm() > tol {
            return Err(Error::NoLimit { beta: im });
        }
    }

    let dense = l.materialize()?;
    let (right_vals, right_vecs) = dense_eigen(l)?;
    let adjoint = dense.t().mapv(|z| z.conj());
    let (left_vals, left_vecs) = adjoint.eig()?;

    let right_idx: Vec<usize> = (0..size)
        .filter(|&i| right_vals[i].norm() <= tol)
        .collect();
    let left_idx: Vec<usize> = (0..size)
        .filter(|&i| left_vals[i].norm() <= tol)
        .collect();
    let m = right_idx.len();
    if m == 0 {
        return Ok(LimitProjection {
            matrix: Array2::zeros((size, size)),
            rank: 0,
        });
    }
    if left_idx.len() != m {
        return Err(Error::DefectiveZero);
    }

    // Semisimplicity of the zero eigenvalue: its algebraic multiplicity
    // must match the kernel dimension, otherwise e^{tL} grows polynomially
    // and has no limit.
    let (_, sv, _) = dense.clone().svd_into(false, false)?;
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let kernel_dim = sv.iter().filter(|&&s| s <= 1e-8 * sigma_max).count();
    if kernel_dim != m {
        return Err(Error::DefectiveZero);
    }

    let mut r0 = Array2::zeros((size, m));
    let mut l0 = Array2::zeros((size, m));
    for (c, &i) in right_idx.iter().enumerate() {
        for r in 0..size {
            r0[[r, c]] = right_vecs[[r, i]];
        }
    }
    for (c, &i) in left_idx.iter().enumerate() {
        for r in 0..size {
            l0[[r, c]] = left_vecs[[r, i]];
        }
    }
    let l0h = l0.t().mapv(|z| z.conj());
    let gram = l0h.dot(&r0);

    // A near-singular pairing means the zero eigenvalue is defective and
    // e^{tL} grows polynomially instead of converging.
    let (_, s, _) = gram.clone().svd_into(false, false)?;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-10 * smax) {
        return Err(Error::DefectiveZero);
    }

    let gram_inv = gram.inv_into()?;
    let matrix = r0.dot(&gram_inv).dot(&l0h);
    Ok(LimitProjection { matrix, rank: m })
}

/// For each component function of a flat (component-major) eigenvector,
/// the squared deviation from its cell mean, relative to the squared norm
/// of the whole vector; the maximum over components is returned. Exactly
/// zero for spatially constant modes.
pub fn eigenvector_constancy(v: ArrayView1<'_, Complex64>, cells: usize, n_comp: usize) -> f64 {
    assert_eq!(v.len(), cells * n_comp);
    let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for k in 0..n_comp {
        let block = v.slice(ndarray::s![k * cells..(k + 1) * cells]);
        let mean = block.sum() / Complex64::new(cells as f64, 0.0);
        let dev: f64 = block.iter().map(|z| (z - mean).norm_sqr()).sum();
        worst = worst.max(dev / total);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::DiffusionField;
    use crate::grid::Grid;
    use crate::matrix::{PNorm, SquareMatrix};
    use crate::potential::PotentialField;
    use crate::state::StateField;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn block_1d(n: usize, pot: impl Fn(f64) -> SquareMatrix) -> BlockOperator {
        let g = Grid::line(1.0, n).unwrap();
        let potential = PotentialField::from_fn(g.clone(), |x, _| pot(x)).unwrap();
        let diffusion =
            DiffusionField::constant(g, potential.components(), 1.0).unwrap();
        BlockOperator::assemble(&diffusion, &potential).unwrap()
    }

    #[test]
    fn scalar_heat_spectrum() {
        let block = block_1d(64, |_| SquareMatrix::zeros(1));
        let report = spectrum_block(&block).unwrap();
        assert!(report.spectral_bound.abs() < 1e-10);
        assert_eq!(report.boundary_spectrum.len(), 1);
        let pi2 = std::f64::consts::PI.powi(2);
        let gap = report.gap.unwrap();
        assert!((gap - pi2).abs() / pi2 < 0.01, "gap = {gap}");
    }

    #[test]
    fn constant_rotation_has_exact_imaginary_pair() {
        let block = block_1d(32, |_| {
            SquareMatrix::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap()
        });
        let report = spectrum_block(&block).unwrap();
        // Constants are exact discrete eigenvectors, so +-i appear with
        // vanishing real part.
        let found = report
            .eigenvalues
            .iter()
            .filter(|&&[re, im]| re.abs() <= 1e-12 && (im.abs() - 1.0).abs() <= 1e-9)
            .count();
        assert!(found >= 2, "found {found} rotational eigenvalues");
        let err = limit_projection(&block, &report);
        match err {
            Err(Error::NoLimit { beta }) => assert!((beta.abs() - 1.0).abs() < 1e-9),
            other => panic!("expected NoLimit, got {other:?}"),
        }
    }

    #[test]
    fn variable_rotation_spectrum_avoids_the_axis() {
        let block = block_1d(64, |x| {
            let a = 1.0 + x;
            SquareMatrix::from_rows(&[&[0.0, -a], &[a, 0.0]]).unwrap()
        });
        let report = spectrum_block(&block).unwrap();
        for &[re, im] in &report.eigenvalues {
            assert!(
                !(re.abs() <= 1e-8 && im.abs() >= 1e-8),
                "eigenvalue ({re}, {im}) sits on the punctured axis"
            );
        }
        assert!(report.spectral_bound < -1e-4);
        // Strictly stable: the limit projection vanishes.
        let p = limit_projection(&block, &report).unwrap();
        assert_eq!(p.rank, 0);
    }

    #[test]
    fn quasi_positive_limit_has_rank_one() {
        let block = block_1d(24, |x| {
            let a = 1.0 + x;
            let b = x;
            SquareMatrix::from_rows(&[
                &[-a - b, 2.0 * a + 2.0 * b],
                &[2.0 * a + b, -4.0 * a - 2.0 * b],
            ])
            .unwrap()
        });
        let report = spectrum_block(&block).unwrap();
        let p = limit_projection(&block, &report).unwrap();
        assert_eq!(p.rank, 1);

        // P is an idempotent that commutes with L.
        let dense = block.materialize().unwrap();
        let pp = p.matrix.dot(&p.matrix);
        let idem_err = frob(&(&pp - &p.matrix));
        assert!(idem_err <= 1e-8 * frob(&p.matrix));
        let comm = frob(&(&dense.dot(&p.matrix) - &p.matrix.dot(&dense)));
        assert!(comm <= 1e-8 * frob(&dense));
        let trace: Complex64 = (0..block.size()).map(|i| p.matrix[[i, i]]).sum();
        assert!((trace.re - 1.0).abs() < 1e-6 && trace.im.abs() < 1e-8);
    }

    #[test]
    fn zero_potential_two_components_rank_two() {
        let block = block_1d(24, |_| SquareMatrix::zeros(2));
        let report = spectrum_block(&block).unwrap();
        let p = limit_projection(&block, &report).unwrap();
        assert_eq!(p.rank, 2);
    }

    #[test]
    fn defective_zero_is_rejected() {
        let block = block_1d(16, |_| {
            SquareMatrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap()
        });
        let report = spectrum_block(&block).unwrap();
        assert!(matches!(
            limit_projection(&block, &report),
            Err(Error::DefectiveZero)
        ));
    }

    #[test]
    fn constancy_of_known_modes() {
        let g = Grid::line(1.0, 32).unwrap();
        // (1, -i) (x) 1 is the rotational eigenmode.
        let u = StateField::constant(g.clone(), &[c(1.0, 0.0), c(0.0, -1.0)]).unwrap();
        let ratio = eigenvector_constancy(u.to_flat().view(), 32, 2);
        assert!(ratio < 1e-30);

        // A spatially varying probe is flagged.
        let v = StateField::from_fn(g, 2, |x, _| vec![c(x, 0.0), c(0.0, 0.0)]).unwrap();
        let ratio = eigenvector_constancy(v.to_flat().view(), 32, 2);
        assert!(ratio > 1e-3);
    }

    #[test]
    fn limit_matches_evolution_subspace() {
        // For the quasi-positive field, P u0 lies in span{z (x) 1}.
        let block = block_1d(24, |x| {
            let a = 1.0 + x;
            let b = x;
            SquareMatrix::from_rows(&[
                &[-a - b, 2.0 * a + 2.0 * b],
                &[2.0 * a + b, -4.0 * a - 2.0 * b],
            ])
            .unwrap()
        });
        let report = spectrum_block(&block).unwrap();
        let p = limit_projection(&block, &report).unwrap();
        let g = Grid::line(1.0, 24).unwrap();
        let u0 = StateField::constant(g, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let pu = p.matrix.dot(&u0.to_flat());
        // Components must be spatially constant with ratio 2 : 1.
        let ratio = eigenvector_constancy(pu.view(), 24, 2);
        assert!(ratio < 1e-16);
        let z1 = pu[0];
        let z2 = pu[24];
        assert!((z1 - 2.0 * z2).norm() < 1e-10);
    }

    fn frob(a: &Array2<Complex64>) -> f64 {
        a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn materialized_norm_is_finite() {
        let block = block_1d(8, |_| SquareMatrix::zeros(1));
        let dense = block.materialize().unwrap();
        let m = SquareMatrix::from_complex(dense).unwrap();
        assert!(m.operator_norm(PNorm::Two).is_finite());
    }
}
