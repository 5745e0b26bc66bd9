//! The convergence cascade: turn a classification report into a verdict.
//!
//! Rules fire in a fixed order, unconditional criteria first, so that an
//! `Unknown` outcome is reproducible:
//!   1. real and l1- or linf-dissipative a.e.        -> converges
//!   2. l2-dissipative a.e.                          -> decided by the
//!      common kernels at the candidate frequencies
//!   3. real, quasi-positive a.e., positive kernel   -> converges
//!   4. constant potential, identical diffusion      -> decided by e^{tV}
//!   5. simultaneously diagonalizable, identical
//!      diffusion, Re lambda_k <= 0                  -> decided by the
//'      constant imaginary curves
//!   6. otherwise                                    -> unknown

use num_complex::Complex64;
use serde::Serialize;

use crate::eigen::exp_converges;
use crate::matrix::TOL_EIG;
use crate::potential::ClassificationReport;

/// Curves are "constant" when they vary less than this across the grid.
const CURVE_CONSTANT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converges,
    DoesNotConverge,
    Unknown,
}

/// Which rule of the cascade produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleTag {
    /// Rule 1: real potential, l1- or linf-dissipative at every cell.
    RealLpDissipative,
    /// Rule 2: l2-dissipative at every cell; spectral characterization.
    L2Spectrum,
    /// Rule 3: quasi-positive with a strictly positive equilibrium vector.
    QuasiPositiveEquilibrium,
    /// Rule 4: constant potential with identical diffusion.
    ConstantExponential,
    /// Rule 5: simultaneously diagonalizable with identical diffusion.
    Decoupled,
    /// Rule 6: no rule applies.
    None,
}

/// Evidence attached to a DoesNotConverge verdict.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Witness {
    /// A spatially constant mode oscillating at frequency beta: the vector
    /// lies in the common kernel of (i beta - V(x)).
    ImaginaryMode {
        beta: f64,
        vector: Vec<[f64; 2]>,
    },
    /// Eigenvalue curve `k` (1-based) is constant and equal to i*beta with
    /// beta != 0.
    ConstantCurve {
        k: usize,
        lambda: [f64; 2],
    },
    /// The constant-potential exponential fails to converge without a
    /// purely imaginary mode (growing spectrum or a defective zero).
    NonConvergentExponential {
        spectral_bound: f64,
        zero_semisimple: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitRankHint {
    ZeroOrRankOne,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub verdict: Verdict,
    pub rule: RuleTag,
    pub witness: Option<Witness>,
    pub limit_rank_hint: LimitRankHint,
}

impl Prediction {
    fn converges(rule: RuleTag) -> Self {
        Self {
            verdict: Verdict::Converges,
            rule,
            witness: None,
            limit_rank_hint: LimitRankHint::Unknown,
        }
    }

    fn does_not_converge(rule: RuleTag, witness: Witness) -> Self {
        Self {
            verdict: Verdict::DoesNotConverge,
            rule,
            witness: Some(witness),
            limit_rank_hint: LimitRankHint::Unknown,
        }
    }
}

fn imaginary_mode(beta: f64, vector: &ndarray::Array1<Complex64>) -> Witness {
    Witness::ImaginaryMode {
        beta,
        vector: vector.iter().map(|z| [z.re, z.im]).collect(),
    }
}

/// First matching rule wins; `diffusion_identical` states whether all
/// per-equation diffusion coefficients coincide cellwise.
pub fn predict(report: &ClassificationReport, diffusion_identical: bool) -> Prediction {
    let potential = &report.potential;

    // Rule 1: dissipativity in l1 or linf for a real potential settles
    // convergence outright.
    if report.real_ae && (report.l1_ae || report.linf_ae) {
        return Prediction::converges(RuleTag::RealLpDissipative);
    }

    // Rule 2: under l2-dissipativity, convergence holds exactly when no
    // nonzero frequency admits a common kernel vector.
    if report.l2_ae {
        for beta in potential.imaginary_eigen_candidates() {
            let kernel = potential.common_kernel(beta);
            if let Some(vector) = kernel.first() {
                return Prediction::does_not_converge(
                    RuleTag::L2Spectrum,
                    imaginary_mode(beta, vector),
                );
            }
        }
        return Prediction::converges(RuleTag::L2Spectrum);
    }

    // Rule 3: quasi-positive coupling with a strictly positive equilibrium
    // vector gives bounded, hence convergent, solutions.
    if report.real_ae && report.quasi_positive_ae && report.positive_kernel_vector.is_some() {
        let mut prediction = Prediction::converges(RuleTag::QuasiPositiveEquilibrium);
        if report.coupling_irreducible {
            prediction.limit_rank_hint = LimitRankHint::ZeroOrRankOne;
        }
        return prediction;
    }

    // Rule 4: constant potential with identical diffusion reduces to the
    // convergence of e^{tV} on C^N.
    if report.constant && diffusion_identical {
        let v0 = potential.cell(0);
        let verdict = exp_converges(v0);
        if verdict.converges {
            return Prediction::converges(RuleTag::ConstantExponential);
        }
        let tol = TOL_EIG * v0.max_abs().max(1.0);
        let beta = verdict
            .imaginary_axis_eigs
            .iter()
            .copied()
            .find(|b| b.abs() > tol);
        let witness = match beta {
            Some(beta) => {
                let kernel = potential.common_kernel(beta);
                match kernel.first() {
                    Some(vector) => imaginary_mode(beta, vector),
                    None => Witness::NonConvergentExponential {
                        spectral_bound: verdict.spectral_bound,
                        zero_semisimple: verdict.zero_semisimple,
                    },
                }
            }
            None => Witness::NonConvergentExponential {
                spectral_bound: verdict.spectral_bound,
                zero_semisimple: verdict.zero_semisimple,
            },
        };
        return Prediction::does_not_converge(RuleTag::ConstantExponential, witness);
    }

    // Rule 5: decouple through a simultaneous diagonalizer; a constant
    // curve pinned at a nonzero imaginary value is the only obstruction.
    if let (Some(diag), true) = (&report.diagonalizer, diffusion_identical) {
        let n = diag.curve_count();
        let scale = (0..n)
            .flat_map(|k| diag.curves.column(k).to_vec())
            .map(|z| z.norm())
            .fold(1.0, f64::max);
        let tol = TOL_EIG * scale;
        if (0..n).all(|k| diag.max_re(k) <= tol) {
            for k in 0..n {
                if diag.curve_constant(k, CURVE_CONSTANT_TOL) {
                    let lambda = diag.curves[[0, k]];
                    if lambda.re.abs() <= CURVE_CONSTANT_TOL && lambda.im.abs() > CURVE_CONSTANT_TOL
                    {
                        return Prediction::does_not_converge(
                            RuleTag::Decoupled,
                            Witness::ConstantCurve {
                                k: k + 1,
                                lambda: [lambda.re, lambda.im],
                            },
                        );
                    }
                }
            }
            return Prediction::converges(RuleTag::Decoupled);
        }
    }

    Prediction {
        verdict: Verdict::Unknown,
        rule: RuleTag::None,
        witness: None,
        limit_rank_hint: LimitRankHint::Unknown,
    }
}
