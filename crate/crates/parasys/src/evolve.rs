//! Time integration by Strang splitting and long-term behaviour detection.
//!
//! One step is E_V(dt/2) D(dt) E_V(dt/2): the potential substep applies
//! the cellwise matrix exponential (precomputed once per scenario, since V
//! does not depend on time), and the diffusion substep solves one implicit
//! system per component through a banded Cholesky factorization that is
//! also computed once. Crank-Nicolson is the accurate default; backward
//! Euler is the choice when l1/linf contraction or positivity must hold
//! step by step, because the M-matrix structure makes it monotone.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::banded::BandedCholesky;
use crate::diffusion::{CoercivityReport, DiffusionField, DiscreteOperator};
use crate::error::{Error, Result};
use crate::expm::expm;
use crate::grid::Grid;
use crate::matrix::PNorm;
use crate::potential::PotentialField;
use crate::state::StateField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum Scheme {
    #[serde(rename = "strang+crank-nicolson")]
    StrangCrankNicolson,
    #[serde(rename = "strang+backward-euler")]
    StrangBackwardEuler,
}

/// Detection thresholds; the defaults are fixed here and may be overridden
/// per scenario from the config.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct DetectionThresholds {
    /// Converged when the window residual falls below this times
    /// (1 + ||u0||_inf).
    pub converged_rtol: f64,
    /// Diverging when ||u||_inf grows by this factor.
    pub divergence_factor: f64,
    /// Largest acceptable relative misfit of the sinusoid period fit.
    pub period_fit_rtol: f64,
    /// Oscillation requires the residual to stay above this times
    /// (1 + ||u0||_inf).
    pub oscillation_floor: f64,
}

impl Default for DetectionThresholds {
    fn default() -> Self {
        Self {
            converged_rtol: 1e-8,
            divergence_factor: 1e3,
            period_fit_rtol: 0.05,
            oscillation_floor: 1e-6,
        }
    }
}

/// A fully specified simulation: geometry, coefficients, initial state and
/// time stepping parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: Option<String>,
    pub grid: Grid,
    pub diffusion: DiffusionField,
    pub potential: PotentialField,
    pub initial: StateField,
    pub dt: f64,
    pub horizon: f64,
    pub window: f64,
    pub scheme: Scheme,
    pub thresholds: DetectionThresholds,
}

impl Scenario {
    /// Check the structural invariants; returns the coercivity estimate.
    pub fn validate(&self) -> Result<CoercivityReport> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidScenario {
                context: format!("dt = {} must be positive", self.dt),
            });
        }
        if !(self.window > 0.0) || self.horizon < 10.0 * self.window {
            return Err(Error::InvalidScenario {
                context: format!(
                    "horizon {} must cover at least 10 detection windows of {}",
                    self.horizon, self.window
                ),
            });
        }
        if self.potential.grid() != &self.grid
            || self.diffusion.grid() != &self.grid
            || self.initial.grid() != &self.grid
        {
            return Err(Error::InvalidScenario {
                context: "potential, diffusion and initial data must share the grid".into(),
            });
        }
        if self.potential.components() != self.initial.components()
            || self.diffusion.equations() != self.potential.components()
        {
            return Err(Error::InvalidScenario {
                context: "component counts differ between potential, diffusion and state".into(),
            });
        }
        self.diffusion.coercivity_check()
    }

    pub fn diffusion_identical(&self) -> bool {
        self.diffusion.identical()
    }
}

struct ImplicitSolver {
    chol: BandedCholesky,
    /// Present for Crank-Nicolson: the operator applied on the right-hand
    /// side, scaled by dt/2.
    rhs_op: Option<(DiscreteOperator, f64)>,
}

/// Precomputed step operator for one scenario.
pub struct Stepper {
    cells: usize,
    n_comp: usize,
    half_exp: Vec<Array2<Complex64>>,
    solvers: Vec<ImplicitSolver>,
}

impl Stepper {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let dt = scenario.dt;
        let cells = scenario.grid.cell_count();
        let n_comp = scenario.potential.components();

        let half_exp: Vec<Array2<Complex64>> = (0..cells)
            .map(|j| {
                let v = scenario.potential.cell(j).data();
                expm(&v.mapv(|z| z * (dt / 2.0)))
            })
            .collect();

        let gamma = match scenario.scheme {
            Scheme::StrangCrankNicolson => dt / 2.0,
            Scheme::StrangBackwardEuler => dt,
        };
        let solvers = (0..n_comp)
            .map(|k| {
                let op = scenario.diffusion.assemble(k);
                let chol = op.shifted_identity_banded(gamma).cholesky();
                let rhs_op = match scenario.scheme {
                    Scheme::StrangCrankNicolson => Some((op, dt / 2.0)),
                    Scheme::StrangBackwardEuler => None,
                };
                ImplicitSolver { chol, rhs_op }
            })
            .collect();

        Ok(Self {
            cells,
            n_comp,
            half_exp,
            solvers,
        })
    }

    fn apply_half_exp(&self, data: &mut Array2<Complex64>) {
        let n = self.n_comp;
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..self.cells {
            let e = &self.half_exp[j];
            for r in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..n {
                    acc += e[[r, c]] * data[[j, c]];
                }
                scratch[r] = acc;
            }
            for r in 0..n {
                data[[j, r]] = scratch[r];
            }
        }
    }

    fn diffuse(&self, data: &mut Array2<Complex64>) {
        let cells = self.cells;
        let mut re = vec![0.0; cells];
        let mut im = vec![0.0; cells];
        let mut tmp = vec![0.0; cells];
        for (k, solver) in self.solvers.iter().enumerate() {
            for j in 0..cells {
                re[j] = data[[j, k]].re;
                im[j] = data[[j, k]].im;
            }
            if let Some((op, gamma)) = &solver.rhs_op {
                op.apply_real(&re, &mut tmp);
                for j in 0..cells {
                    re[j] += gamma * tmp[j];
                }
                op.apply_real(&im, &mut tmp);
                for j in 0..cells {
                    im[j] += gamma * tmp[j];
                }
            }
            solver.chol.solve(&mut re);
            solver.chol.solve(&mut im);
            for j in 0..cells {
                data[[j, k]] = Complex64::new(re[j], im[j]);
            }
        }
    }

    /// One Strang step.
    pub fn step(&self, u: &StateField) -> StateField {
        let mut data = u.data().clone();
        self.apply_half_exp(&mut data);
        self.diffuse(&mut data);
        self.apply_half_exp(&mut data);
        StateField::new(u.grid().clone(), data).expect("step preserves shape")
    }
}

/// Convenience single step; builds the factorizations each call, so loops
/// should use `Stepper` directly.
pub fn step(u: &StateField, dt: f64, scenario: &Scenario) -> Result<StateField> {
    let mut adjusted = scenario.clone();
    adjusted.dt = dt;
    Ok(Stepper::new(&adjusted)?.step(u))
}

/// Norm and residual history of one simulation.
#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    pub norm1: Vec<f64>,
    pub norm2: Vec<f64>,
    pub norminf: Vec<f64>,
    /// ||u(t) - u(t - window)||_inf once a full window has elapsed.
    pub residuals: Vec<Option<f64>>,
    /// Component 1 at the first cell, per sample.
    pub probe: Vec<Complex64>,
    pub final_state: StateField,
    pub initial_norm_inf: f64,
    pub window: f64,
    pub sample_dt: f64,
    pub diverged_early: bool,
}

impl SimulationTrace {
    pub fn last_residual(&self) -> Option<f64> {
        self.residuals.iter().flatten().last().copied()
    }
}

/// Step to the horizon, sampling every window/8.
pub fn simulate(scenario: &Scenario) -> Result<SimulationTrace> {
    let stepper = Stepper::new(scenario)?;
    let dt = scenario.dt;
    let steps_per_sample = ((scenario.window / 8.0 / dt).round() as usize).max(1);
    let sample_dt = steps_per_sample as f64 * dt;
    let window_samples = ((scenario.window / sample_dt).round() as usize).max(1);
    let total_steps = ((scenario.horizon / dt) - 1e-9).ceil() as usize;

    let initial_norm_inf = scenario.initial.norm(PNorm::Inf);
    let overflow_cap = 1e12 * initial_norm_inf.max(1.0);

    let mut u = scenario.initial.clone();
    let mut history: std::collections::VecDeque<StateField> =
        std::collections::VecDeque::with_capacity(window_samples + 1);
    history.push_back(u.clone());

    let mut times = vec![0.0];
    let mut norm1 = vec![u.norm(PNorm::One)];
    let mut norm2 = vec![u.norm(PNorm::Two)];
    let mut norminf = vec![u.norm(PNorm::Inf)];
    let mut residuals: Vec<Option<f64>> = vec![None];
    let mut probe = vec![u.value(0, 0)];
    let mut diverged_early = false;

    let mut step_idx = 0usize;
    while step_idx < total_steps {
        u = stepper.step(&u);
        step_idx += 1;
        if step_idx % steps_per_sample == 0 || step_idx == total_steps {
            let t = step_idx as f64 * dt;
            let ninf = u.norm(PNorm::Inf);
            times.push(t);
            norm1.push(u.norm(PNorm::One));
            norm2.push(u.norm(PNorm::Two));
            norminf.push(ninf);
            probe.push(u.value(0, 0));
            if history.len() >= window_samples {
                let past = &history[history.len() - window_samples];
                residuals.push(Some(u.sub(past)?.norm(PNorm::Inf)));
            } else {
                residuals.push(None);
            }
            history.push_back(u.clone());
            if history.len() > window_samples + 1 {
                history.pop_front();
            }
            if !ninf.is_finite() || ninf > overflow_cap {
                diverged_early = true;
                break;
            }
        }
    }

    Ok(SimulationTrace {
        times,
        norm1,
        norm2,
        norminf,
        residuals,
        probe,
        final_state: u,
        initial_norm_inf,
        window: scenario.window,
        sample_dt,
        diverged_early,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionVerdict {
    Converged,
    Oscillating,
    Diverging,
    Undecided,
}

/// Detected long-term behaviour plus the evidence numbers behind it.
#[derive(Debug, Clone, Serialize)]
pub struct DetectionReport {
    pub verdict: DetectionVerdict,
    pub final_residual: Option<f64>,
    pub converged_threshold: f64,
    pub growth_factor: f64,
    pub period: Option<f64>,
    pub period_fit_residual: Option<f64>,
    /// Final state, the limit estimate for converged runs.
    #[serde(skip)]
    pub limit: Option<StateField>,
}

/// Classify a trace. The trace must cover at least ten windows, which the
/// scenario invariant horizon >= 10 * window guarantees.
pub fn detect(trace: &SimulationTrace, thresholds: &DetectionThresholds) -> DetectionReport {
    let scale = 1.0 + trace.initial_norm_inf;
    let converged_threshold = thresholds.converged_rtol * scale;

    let base = trace.norminf[0].max(1e-300);
    let growth_factor = trace.norminf.iter().copied().fold(0.0, f64::max) / base;

    if trace.diverged_early || growth_factor >= thresholds.divergence_factor {
        return DetectionReport {
            verdict: DetectionVerdict::Diverging,
            final_residual: trace.last_residual(),
            converged_threshold,
            growth_factor,
            period: None,
            period_fit_residual: None,
            limit: None,
        };
    }

    let defined: Vec<f64> = trace.residuals.iter().flatten().copied().collect();
    let final_residual = defined.last().copied();
    if let Some(r_final) = final_residual {
        let tail_monotone = defined.len() >= 3 && {
            let k = defined.len();
            defined[k - 3] >= defined[k - 2] - 1e-300 && defined[k - 2] >= defined[k - 1] - 1e-300
        };
        if r_final <= converged_threshold && tail_monotone {
            return DetectionReport {
                verdict: DetectionVerdict::Converged,
                final_residual,
                converged_threshold,
                growth_factor,
                period: None,
                period_fit_residual: None,
                limit: Some(trace.final_state.clone()),
            };
        }
    }

    // Oscillation: residual bounded away from zero while the norms stay
    // bounded; the period comes from the autocorrelation of the probe.
    let tail_floor = thresholds.oscillation_floor * scale;
    let tail_start = defined.len() / 2;
    let tail_ok = !defined.is_empty() && defined[tail_start..].iter().all(|&r| r >= tail_floor);
    if tail_ok {
        if let Some((period, fit_residual)) = estimate_period(trace) {
            if fit_residual <= thresholds.period_fit_rtol {
                return DetectionReport {
                    verdict: DetectionVerdict::Oscillating,
                    final_residual,
                    converged_threshold,
                    growth_factor,
                    period: Some(period),
                    period_fit_residual: Some(fit_residual),
                    limit: None,
                };
            }
        }
    }

    DetectionReport {
        verdict: DetectionVerdict::Undecided,
        final_residual,
        converged_threshold,
        growth_factor,
        period: None,
        period_fit_residual: None,
        limit: None,
    }
}

/// Dominant period of the probe signal over the second half of the trace:
/// autocorrelation peak past the first sign change, refined by parabolic
/// interpolation, then scored by a least-squares sinusoid fit.
fn estimate_period(trace: &SimulationTrace) -> Option<(f64, f64)> {
    let start = trace.probe.len() / 2;
    let tail: Vec<Complex64> = trace.probe[start..].to_vec();
    if tail.len() < 16 {
        return None;
    }
    let re: Vec<f64> = tail.iter().map(|z| z.re).collect();
    let im: Vec<f64> = tail.iter().map(|z| z.im).collect();
    let signal = if variance(&re) >= variance(&im) { re } else { im };

    let n = signal.len();
    let mean = signal.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = signal.iter().map(|v| v - mean).collect();
    let rho0: f64 = x.iter().map(|v| v * v).sum();
    if rho0 <= 0.0 {
        return None;
    }
    let max_lag = n / 2;
    let rho: Vec<f64> = (0..=max_lag)
        .map(|l| (0..n - l).map(|i| x[i] * x[i + l]).sum::<f64>() / rho0)
        .collect();

    let first_negative = rho.iter().position(|&r| r < 0.0)?;
    let (mut peak_lag, mut peak_val) = (0usize, f64::NEG_INFINITY);
    for (l, &r) in rho.iter().enumerate().skip(first_negative) {
        if r > peak_val {
            peak_val = r;
            peak_lag = l;
        }
    }
    if peak_lag == 0 || peak_lag >= max_lag {
        return None;
    }

    // Parabolic refinement for sub-sample accuracy.
    let (rm, r0, rp) = (rho[peak_lag - 1], rho[peak_lag], rho[peak_lag + 1]);
    let denom = rm - 2.0 * r0 + rp;
    let delta = if denom.abs() > 1e-300 {
        (0.5 * (rm - rp) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let period = (peak_lag as f64 + delta) * trace.sample_dt;
    if !(period > 0.0) {
        return None;
    }

    // Score: least-squares fit a cos(w t) + b sin(w t) + c on the tail.
    let omega = 2.0 * std::f64::consts::PI / period;
    let ts: Vec<f64> = (0..n).map(|i| i as f64 * trace.sample_dt).collect();
    let fit_res = sinusoid_fit_residual(&ts, &x, omega);
    Some((period, fit_res))
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

fn sinusoid_fit_residual(ts: &[f64], x: &[f64], omega: f64) -> f64 {
    // Normal equations for the 3-parameter model.
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for (&t, &v) in ts.iter().zip(x.iter()) {
        let basis = [(omega * t).cos(), (omega * t).sin(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += basis[i] * basis[j];
            }
            b[i] += basis[i] * v;
        }
    }
    let coeff = solve3(a, b);
    let mut err = 0.0;
    let mut total = 0.0;
    for (&t, &v) in ts.iter().zip(x.iter()) {
        let fit = coeff[0] * (omega * t).cos() + coeff[1] * (omega * t).sin() + coeff[2];
        err += (v - fit).powi(2);
        total += v * v;
    }
    if total > 0.0 {
        (err / total).sqrt()
    } else {
        0.0
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        if p.abs() < 1e-300 {
            return [0.0; 3];
        }
        for row in 0..3 {
            if row != col {
                let f = a[row][col] / p;
                for k in 0..3 {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    [b[0] / a[0][0], b[1] / a[1][1], b[2] / a[2][2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SquareMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rotation_scenario(n: usize, dt: f64, horizon: f64) -> Scenario {
        let grid = Grid::line(1.0, n).unwrap();
        let potential = PotentialField::constant_potential(
            grid.clone(),
            SquareMatrix::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let diffusion = DiffusionField::constant(grid.clone(), 2, 1.0).unwrap();
        let initial = StateField::constant(grid.clone(), &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        Scenario {
            name: None,
            grid,
            diffusion,
            potential,
            initial,
            dt,
            horizon,
            window: 1.0,
            scheme: Scheme::StrangCrankNicolson,
            thresholds: DetectionThresholds::default(),
        }
    }

    #[test]
    fn constants_are_fixed_without_potential() {
        let grid = Grid::line(1.0, 16).unwrap();
        let potential =
            PotentialField::constant_potential(grid.clone(), SquareMatrix::zeros(1)).unwrap();
        let diffusion = DiffusionField::isotropic(grid.clone(), 1, |x, _| 1.0 + x).unwrap();
        let initial = StateField::constant(grid.clone(), &[c(3.25, -0.5)]).unwrap();
        let scenario = Scenario {
            name: None,
            grid,
            diffusion,
            potential,
            initial: initial.clone(),
            dt: 0.1,
            horizon: 20.0,
            window: 1.0,
            scheme: Scheme::StrangCrankNicolson,
            thresholds: DetectionThresholds::default(),
        };
        let stepper = Stepper::new(&scenario).unwrap();
        let mut u = initial.clone();
        for _ in 0..50 {
            u = stepper.step(&u);
        }
        let drift = u.sub(&initial).unwrap().norm(PNorm::Inf);
        assert!(drift < 1e-13, "constants drifted by {drift}");
    }

    #[test]
    fn rotation_of_constants_matches_closed_form() {
        // Spatially constant data stays constant, so the scheme reduces to
        // the exact exponential of the rotation generator.
        let scenario = rotation_scenario(16, 1e-3, 12.0);
        let stepper = Stepper::new(&scenario).unwrap();
        let mut u = scenario.initial.clone();
        let steps = 2000;
        for _ in 0..steps {
            u = stepper.step(&u);
        }
        let t = steps as f64 * scenario.dt;
        for j in 0..16 {
            assert!((u.value(j, 0) - c(t.cos(), 0.0)).norm() < 1e-10);
            assert!((u.value(j, 1) - c(t.sin(), 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn equilibrium_vector_is_fixed_exactly() {
        let grid = Grid::line(1.0, 32).unwrap();
        let potential = PotentialField::from_fn(grid.clone(), |x, _| {
            let a = 1.0 + x;
            let b = x;
            SquareMatrix::from_rows(&[
                &[-a - b, 2.0 * a + 2.0 * b],
                &[2.0 * a + b, -4.0 * a - 2.0 * b],
            ])
            .unwrap()
        })
        .unwrap();
        let diffusion = DiffusionField::constant(grid.clone(), 2, 1.0).unwrap();
        let initial = StateField::constant(grid.clone(), &[c(2.0, 0.0), c(1.0, 0.0)]).unwrap();
        let scenario = Scenario {
            name: None,
            grid,
            diffusion,
            potential,
            initial: initial.clone(),
            dt: 0.01,
            horizon: 20.0,
            window: 1.0,
            scheme: Scheme::StrangBackwardEuler,
            thresholds: DetectionThresholds::default(),
        };
        let stepper = Stepper::new(&scenario).unwrap();
        let mut u = initial.clone();
        for _ in 0..2000 {
            u = stepper.step(&u);
        }
        let drift = u.sub(&initial).unwrap().norm(PNorm::Inf);
        assert!(drift <= 1e-12, "equilibrium drifted by {drift}");
    }

    #[test]
    fn intro_trace_oscillates_with_period_two_pi() {
        let scenario = rotation_scenario(16, 1e-3, 20.0);
        let trace = simulate(&scenario).unwrap();
        let report = detect(&trace, &scenario.thresholds);
        assert_eq!(report.verdict, DetectionVerdict::Oscillating);
        let period = report.period.unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        assert!(
            (period - two_pi).abs() / two_pi < 0.01,
            "period = {period}, expected ~{two_pi}"
        );
        // The l2 norm is conserved by the isometric rotation of constants.
        let n0 = trace.norm2[0];
        for &n in &trace.norm2 {
            assert!((n - n0).abs() < 1e-6);
        }
    }

    #[test]
    fn heat_trace_converges_to_component_means() {
        let grid = Grid::line(1.0, 32).unwrap();
        let potential =
            PotentialField::constant_potential(grid.clone(), SquareMatrix::zeros(1)).unwrap();
        let diffusion = DiffusionField::constant(grid.clone(), 1, 1.0).unwrap();
        let initial = StateField::from_fn(grid.clone(), 1, |x, _| {
            vec![c((std::f64::consts::PI * x).cos(), 0.0)]
        })
        .unwrap();
        let scenario = Scenario {
            name: None,
            grid,
            diffusion,
            potential,
            initial,
            dt: 0.005,
            horizon: 10.0,
            window: 1.0,
            scheme: Scheme::StrangCrankNicolson,
            thresholds: DetectionThresholds::default(),
        };
        let trace = simulate(&scenario).unwrap();
        let report = detect(&trace, &scenario.thresholds);
        assert_eq!(report.verdict, DetectionVerdict::Converged);
        // cos(pi x) has zero mean, so the limit is zero.
        let limit = report.limit.unwrap();
        assert!(limit.norm(PNorm::Inf) < 1e-7);
    }

    #[test]
    fn growing_potential_is_detected_as_diverging() {
        let grid = Grid::line(1.0, 16).unwrap();
        let potential = PotentialField::from_fn(grid.clone(), |x, _| {
            SquareMatrix::from_rows(&[&[0.5 + x, 1.0], &[0.0, 0.5]]).unwrap()
        })
        .unwrap();
        let diffusion = DiffusionField::constant(grid.clone(), 2, 1.0).unwrap();
        let initial = StateField::constant(grid.clone(), &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let scenario = Scenario {
            name: None,
            grid,
            diffusion,
            potential,
            initial,
            dt: 0.01,
            horizon: 40.0,
            window: 1.0,
            scheme: Scheme::StrangCrankNicolson,
            thresholds: DetectionThresholds::default(),
        };
        let trace = simulate(&scenario).unwrap();
        let report = detect(&trace, &scenario.thresholds);
        assert_eq!(report.verdict, DetectionVerdict::Diverging);
    }

    #[test]
    fn backward_euler_is_linf_monotone() {
        let grid = Grid::line(1.0, 32).unwrap();
        let potential = PotentialField::from_fn(grid.clone(), |x, _| {
            let a = 1.0 + x;
            let b = 1.0;
            SquareMatrix::from_rows(&[
                &[-a - b, -a - b],
                &[-2.0 * a - b, -2.0 * a - b],
            ])
            .unwrap()
        })
        .unwrap();
        let diffusion = DiffusionField::constant(grid.clone(), 2, 1.0).unwrap();
        let initial = StateField::from_fn(grid.clone(), 2, |x, _| {
            vec![c(1.0 + (6.0 * x).sin(), 0.0), c(x, 0.0)]
        })
        .unwrap();
        let scenario = Scenario {
            name: None,
            grid,
            diffusion,
            potential,
            initial: initial.clone(),
            dt: 0.01,
            horizon: 20.0,
            window: 1.0,
            scheme: Scheme::StrangBackwardEuler,
            thresholds: DetectionThresholds::default(),
        };
        let stepper = Stepper::new(&scenario).unwrap();
        let mut u = initial;
        let mut prev = u.norm(PNorm::Inf);
        for _ in 0..500 {
            u = stepper.step(&u);
            let next = u.norm(PNorm::Inf);
            assert!(next <= prev + 1e-12, "linf norm grew: {prev} -> {next}");
            prev = next;
        }
    }

    #[test]
    fn scenario_invariants_are_enforced() {
        let mut s = rotation_scenario(8, 1e-2, 20.0);
        s.horizon = 5.0;
        assert!(matches!(
            s.validate(),
            Err(Error::InvalidScenario { .. })
        ));
        let mut s = rotation_scenario(8, 1e-2, 20.0);
        s.dt = -1.0;
        assert!(s.validate().is_err());
    }
}
