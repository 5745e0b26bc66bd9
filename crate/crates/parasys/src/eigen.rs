//! Spectra of small dense matrices and convergence of e^{tM} as t -> inf.

use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::{Eig, SVDInto};
use num_complex::Complex64;

use crate::error::Result;
use crate::matrix::{SquareMatrix, TOL_EIG};

/// All eigenvalues with multiplicity, ordered by descending real part and
/// then descending imaginary part.
pub fn spectrum(m: &SquareMatrix) -> Vec<Complex64> {
    let (vals, _) = m
        .data()
        .eig()
        .expect("dense eigensolve cannot fail on finite input");
    let mut out: Vec<Complex64> = vals.to_vec();
    sort_eigenvalues(&mut out);
    out
}

pub fn sort_eigenvalues(vals: &mut [Complex64]) {
    // Real parts within rounding distance of each other compare equal, so
    // conjugate pairs are ordered by their imaginary parts rather than by
    // eigensolver noise.
    let scale = vals.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    vals.sort_by(|a, b| {
        let re_order = if (a.re - b.re).abs() <= tol {
            std::cmp::Ordering::Equal
        } else {
            b.re.partial_cmp(&a.re).unwrap()
        };
        re_order.then(b.im.partial_cmp(&a.im).unwrap())
    });
}

/// max Re over the spectrum.
pub fn spectral_bound(m: &SquareMatrix) -> f64 {
    spectrum(m).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Whether e^{tM} converges (entrywise, equivalently in norm) as t -> inf.
#[derive(Debug, Clone)]
pub struct ExpConvergenceVerdict {
    pub converges: bool,
    pub spectral_bound: f64,
    /// Imaginary parts of eigenvalues whose real part is within tolerance
    /// of zero (beta = 0 entries included).
    pub imaginary_axis_eigs: Vec<f64>,
    /// True when 0 is an eigenvalue of algebraic multiplicity equal to the
    /// kernel dimension, or when 0 is not an eigenvalue at all.
    pub zero_semisimple: bool,
}

/// e^{tM} converges iff the spectral bound is negative, or it is zero with
/// no other spectrum on the imaginary axis and a semisimple eigenvalue 0.
pub fn exp_converges(m: &SquareMatrix) -> ExpConvergenceVerdict {
    let eigs = spectrum(m);
    let scale = m.max_abs().max(1.0);
    let tol = TOL_EIG * scale;
    let bound = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);

    let imaginary_axis_eigs: Vec<f64> = eigs
        .iter()
        .filter(|z| z.re.abs() <= tol)
        .map(|z| z.im)
        .collect();

    let algebraic_zero = eigs.iter().filter(|z| z.norm() <= tol).count();
    let geometric_zero = nullity(m.data().view(), scale);
    let zero_semisimple = algebraic_zero == geometric_zero;

    let converges = if bound < -tol {
        true
    } else if bound <= tol {
        let only_zero_on_axis = imaginary_axis_eigs.iter().all(|b| b.abs() <= tol);
        only_zero_on_axis && zero_semisimple
    } else {
        false
    };

    ExpConvergenceVerdict {
        converges,
        spectral_bound: bound,
        imaginary_axis_eigs,
        zero_semisimple,
    }
}

/// Kernel dimension from the singular values, at tolerance 1e-8 * ||M||.
fn nullity(a: ArrayView2<'_, Complex64>, scale: f64) -> usize {
    let (_, s, _) = a
        .to_owned()
        .svd_into(false, false)
        .expect("SVD cannot fail on finite input");
    let sigma_max = s.iter().copied().fold(0.0, f64::max).max(scale);
    s.iter().filter(|&&sv| sv <= 1e-8 * sigma_max).count()
}

/// Orthonormal basis of the (right) nullspace of a tall or square complex
/// matrix, at the given absolute singular-value tolerance. Each basis
/// vector has its largest-modulus entry rotated to the positive real axis
/// so repeated runs produce identical output.
pub fn nullspace(a: ArrayView2<'_, Complex64>, tol: f64) -> Vec<Array1<Complex64>> {
    let (rows, cols) = a.dim();
    let (_, s, vt) = a
        .to_owned()
        .svd_into(false, true)
        .expect("SVD cannot fail on finite input");
    let vt = vt.expect("right singular vectors requested");
    let mut basis = Vec::new();
    for j in 0..cols {
        let sv = if j < s.len() && j < rows { s[j] } else { 0.0 };
        if sv <= tol {
            let row = vt.row(j).mapv(|z| z.conj());
            basis.push(phase_normalize(row));
        }
    }
    basis
}

/// Real nullspace basis of a tall or square real matrix.
pub fn nullspace_real(a: ArrayView2<'_, f64>, tol: f64) -> Vec<Array1<f64>> {
    let (rows, cols) = a.dim();
    let (_, s, vt) = a
        .to_owned()
        .svd_into(false, true)
        .expect("SVD cannot fail on finite input");
    let vt = vt.expect("right singular vectors requested");
    let mut basis = Vec::new();
    for j in 0..cols {
        let sv = if j < s.len() && j < rows { s[j] } else { 0.0 };
        if sv <= tol {
            let mut v = vt.row(j).to_owned();
            // Fix the sign so the largest-magnitude entry is positive.
            let lead = v
                .iter()
                .cloned()
                .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
                .unwrap_or(1.0);
            if lead < 0.0 {
                v.mapv_inplace(|x| -x);
            }
            basis.push(v);
        }
    }
    basis
}

pub fn phase_normalize(mut v: Array1<Complex64>) -> Array1<Complex64> {
    let mut lead = Complex64::new(0.0, 0.0);
    let mut best = 0.0;
    for &z in v.iter() {
        if z.norm() > best + 1e-12 {
            best = z.norm();
            lead = z;
        }
    }
    if best > 0.0 {
        let phase = lead.conj() / best;
        v.mapv_inplace(|z| z * phase);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rotation_spectrum_is_conjugate_pair() {
        for a in [0.5, 1.0, 2.0] {
            let m = SquareMatrix::from_rows(&[&[0.0, -a], &[a, 0.0]]).unwrap();
            let eigs = spectrum(&m);
            assert!((eigs[0] - c(0.0, a)).norm() < 1e-12);
            assert!((eigs[1] - c(0.0, -a)).norm() < 1e-12);
            assert!(spectral_bound(&m).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_one_spectrum() {
        // -a [[1,2],[1,2]] has eigenvalues {0, -3a}.
        let a = 1.7;
        let m = SquareMatrix::from_rows(&[&[-a, -2.0 * a], &[-a, -2.0 * a]]).unwrap();
        let eigs = spectrum(&m);
        assert!(eigs[0].norm() < 1e-12);
        assert!((eigs[1] - c(-3.0 * a, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_matrix_spectrum() {
        let m = SquareMatrix::zeros(4);
        let eigs = spectrum(&m);
        assert!(eigs.iter().all(|z| z.norm() == 0.0));
        assert_eq!(spectral_bound(&m), 0.0);
    }

    #[test]
    fn exp_convergence_examples() {
        // e^{t 0} = I converges.
        let verdict = exp_converges(&SquareMatrix::zeros(3));
        assert!(verdict.converges);
        assert!(verdict.zero_semisimple);

        // Rotation: eigenvalues +-i stay on the axis forever.
        let rot = SquareMatrix::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap();
        let verdict = exp_converges(&rot);
        assert!(!verdict.converges);
        assert_eq!(verdict.imaginary_axis_eigs.len(), 2);

        // Jordan block at 0: e^{tM} = [[1, t], [0, 1]] is unbounded.
        let jordan = SquareMatrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let verdict = exp_converges(&jordan);
        assert!(!verdict.converges);
        assert!(!verdict.zero_semisimple);

        // Strictly stable spectrum converges to 0.
        let stable = SquareMatrix::from_rows(&[&[-1.0, 5.0], &[0.0, -2.0]]).unwrap();
        assert!(exp_converges(&stable).converges);
    }

    #[test]
    fn nullspace_of_rank_one_matrix() {
        let m = array![
            [c(1.0, 0.0), c(2.0, 0.0)],
            [c(1.0, 0.0), c(2.0, 0.0)],
            [c(1.0, 0.0), c(2.0, 0.0)]
        ];
        let basis = nullspace(m.view(), 1e-10);
        assert_eq!(basis.len(), 1);
        let v = &basis[0];
        // Kernel direction (2, -1)/sqrt(5), phase-normalized.
        let res = (m[[0, 0]] * v[0] + m[[0, 1]] * v[1]).norm();
        assert!(res < 1e-12);
        assert!(v[0].im.abs() < 1e-12 && v[0].re > 0.0);
    }

    #[test]
    fn real_nullspace_sign_convention() {
        let m = array![[1.0, 1.0]];
        let basis = nullspace_real(m.view(), 1e-10);
        assert_eq!(basis.len(), 1);
        let v = &basis[0];
        assert!((v[0] + v[1]).abs() < 1e-12);
        assert!(v[0].abs() > 0.5);
    }
}
