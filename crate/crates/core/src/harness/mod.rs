//! Closed-loop scenario driver.
//!
//! [`run_scenario`] propagates plant and estimator together. With the LGVI
//! the control and adaptation rate are sampled at the start of each step,
//! the implicit rotation update is solved, and one fixed-point pass
//! re-evaluates both at the predicted end state; the end-of-step moment
//! closes the momentum update and the estimator advances by the trapezoid
//! of the two rates. With the projected RK4 the estimator rides along as
//! an auxiliary state and every stage re-evaluates the control law.

pub mod config;
mod metrics;
mod series;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::ScenarioConfig;
pub use metrics::{compute_metrics, Metrics, V_MONOTONICITY_TOL};
pub use series::{Sample, SeriesError, TimeSeries, CSV_HEADER};

use crate::attitude_error::{ErrorState, GainError};
use crate::controllers::{
    adaptive_control_from, adaptive_update_rate_from, lyapunov_value_from, robust_term, robust_update_rate_from,
    validate_gains, z_vector, ControllerError, EstimatorState, GainReport, Gains, RobustParams,
};
use crate::dynamics::{
    step_rk4_projected_with, BodyState, DynamicsError, InertiaMatrix, IntegratorConfig, IntegratorMethod, LgviStep,
};
use crate::so3::{Mat3, Rotation, So3Error, Vec3};
use crate::trajectory::{AttitudeCommand, CommandSample, EulerCommand, FixedAttitude, TrajectoryError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("gain conditions violated: {}", .0.violations.join("; "))]
    Infeasible(Box<GainReport>),
    #[error("integration failed at step {step}: {source}")]
    Integration { step: usize, source: DynamicsError },
    #[error("state became non-finite at step {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Command(#[from] TrajectoryError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ControllerError> for HarnessError {
    fn from(e: ControllerError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<GainError> for HarnessError {
    fn from(e: GainError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<DynamicsError> for HarnessError {
    fn from(e: DynamicsError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<So3Error> for HarnessError {
    fn from(e: So3Error) -> Self {
        HarnessError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    AdaptiveNoDist,
    AdaptiveWithDist,
    RobustWithDist,
    Custom,
}

impl CaseId {
    pub const PAPER: [CaseId; 3] = [CaseId::AdaptiveNoDist, CaseId::AdaptiveWithDist, CaseId::RobustWithDist];

    pub fn as_str(&self) -> &'static str {
        match self {
            CaseId::AdaptiveNoDist => "adaptive_no_dist",
            CaseId::AdaptiveWithDist => "adaptive_with_dist",
            CaseId::RobustWithDist => "robust_with_dist",
            CaseId::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Adaptive,
    Robust,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DisturbanceModel {
    None,
    /// `0.1 (sin 2πt, cos 5πt, R₁₁)`
    Paper,
    Constant(Vec3),
}

impl DisturbanceModel {
    pub fn evaluate(&self, t: f64, r: &Rotation) -> Vec3 {
        match self {
            DisturbanceModel::None => Vec3::zeros(),
            DisturbanceModel::Paper => paper_disturbance(t, r),
            DisturbanceModel::Constant(v) => *v,
        }
    }
}

/// `Δ = 0.1 (sin 2πt, cos 5πt, R₁₁(t))` N·m.
pub fn paper_disturbance(t: f64, r: &Rotation) -> Vec3 {
    0.1 * Vec3::new((2.0 * PI * t).sin(), (5.0 * PI * t).cos(), r.matrix()[(0, 0)])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CommandSpec {
    Euler(EulerCommand),
    Fixed(Rotation),
}

impl CommandSpec {
    fn sample(&self, t: f64) -> Result<CommandSample, TrajectoryError> {
        match self {
            CommandSpec::Euler(c) => c.sample(t),
            CommandSpec::Fixed(r) => FixedAttitude(*r).sample(t),
        }
    }
}

/// A validated, runnable scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub case_id: CaseId,
    pub duration: f64,
    pub n_steps: usize,
    pub output_every: usize,
    pub integrator: IntegratorConfig,
    pub controller: ControllerKind,
    pub gains: Gains,
    pub robust: Option<RobustParams>,
    pub psi_bar: f64,
    pub j_true: InertiaMatrix,
    pub j_bar0: Mat3,
    pub r0: Rotation,
    pub omega0: Vec3,
    pub command: CommandSpec,
    pub disturbance: DisturbanceModel,
    pub seed: u64,
    pub settle: f64,
    pub force_gains: bool,
}

impl Scenario {
    pub fn step(&self) -> f64 {
        self.integrator.step_size
    }

    /// Gain conditions evaluated with the true inertia's eigenvalue bounds.
    pub fn gain_report(&self) -> Result<GainReport, HarnessError> {
        Ok(validate_gains(
            &self.gains,
            self.robust.as_ref(),
            self.j_true.lambda_min(),
            self.j_true.lambda_max(),
            self.psi_bar,
        )?)
    }

    fn robust_active(&self) -> Option<&RobustParams> {
        match self.controller {
            ControllerKind::Robust => self.robust.as_ref(),
            ControllerKind::Adaptive => None,
        }
    }
}

/// Per-integration-step checks accumulated during a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDiagnostics {
    pub steps: usize,
    pub max_orthogonality_error: f64,
    pub max_newton_iterations: usize,
    /// max over steps of `‖J̄ − J̄ᵀ‖_max`
    pub max_estimate_asymmetry: f64,
    /// max over steps of `‖J̄‖_F`
    pub max_j_bar_frobenius: f64,
    /// Largest per-step change in any entry of `J̄` during the final second.
    pub j_bar_max_step_change_last_second: f64,
    /// max of `e_A·(Δ + v) − ε` (robust runs)
    pub robust_max_excess: Option<f64>,
    /// Same with the worst admissible disturbance `Δ = δ e_A/‖e_A‖`.
    pub robust_max_excess_adversarial: Option<f64>,
    pub robust_max_v_norm: Option<f64>,
    /// Ultimate bound on `‖z‖²` (robust runs).
    pub ultimate_bound: Option<f64>,
    pub first_entry_time: Option<f64>,
    /// Steps after first entry with `‖z‖²` above the ultimate bound.
    pub exits_after_entry: usize,
    pub max_z_sq_after_entry: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: TimeSeries,
    pub metrics: Metrics,
    pub diagnostics: RunDiagnostics,
    pub gain_report: GainReport,
}

struct Evaluation {
    errors: ErrorState,
    u: Vec3,
    delta: Vec3,
    rate: Mat3,
    v_term: Option<Vec3>,
}

struct Loop<'a> {
    s: &'a Scenario,
    robust: Option<&'a RobustParams>,
}

impl Loop<'_> {
    fn evaluate(&self, t: f64, state: &BodyState, est: &EstimatorState, cmd: &CommandSample) -> Evaluation {
        let gains = &self.s.gains;
        let errors = ErrorState::compute(&state.r, &state.omega, cmd, &gains.g, gains.c);
        let delta = self.s.disturbance.evaluate(t, &state.r);
        let mut u = adaptive_control_from(&errors, &state.omega, gains, est);
        let (rate, v_term) = match self.robust {
            Some(r) => {
                let v = robust_term(&errors.e_a, r);
                u += v;
                (robust_update_rate_from(&errors, &state.omega, gains, r, est), Some(v))
            }
            None => (adaptive_update_rate_from(&errors, &state.omega, gains), None),
        };
        Evaluation { errors, u, delta, rate, v_term }
    }
}

/// Runs a scenario, refusing infeasible gains unless `force_gains` is set.
pub fn run_scenario(s: &Scenario) -> Result<RunOutput, HarnessError> {
    let report = s.gain_report()?;
    if !report.feasible && !s.force_gains {
        return Err(HarnessError::Infeasible(Box::new(report)));
    }

    let h = s.step();
    let lp = Loop { s, robust: s.robust_active() };
    let ultimate_bound = if lp.robust.is_some() { report.ultimate_bound } else { None };
    let last_second_start = s.n_steps.saturating_sub((1.0 / h).round() as usize);

    let mut state = BodyState::new(s.r0, s.omega0);
    let mut est = EstimatorState::new(s.j_bar0);
    let mut series = TimeSeries::with_capacity(s.n_steps / s.output_every + 1);
    let mut diag = RunDiagnostics {
        steps: s.n_steps,
        max_orthogonality_error: 0.0,
        max_newton_iterations: 0,
        max_estimate_asymmetry: 0.0,
        max_j_bar_frobenius: 0.0,
        j_bar_max_step_change_last_second: 0.0,
        robust_max_excess: lp.robust.map(|_| f64::NEG_INFINITY),
        robust_max_excess_adversarial: lp.robust.map(|_| f64::NEG_INFINITY),
        robust_max_v_norm: lp.robust.map(|_| 0.0),
        ultimate_bound,
        first_entry_time: None,
        exits_after_entry: 0,
        max_z_sq_after_entry: None,
    };

    let mut cmd = s.command.sample(0.0)?;
    for k in 0..=s.n_steps {
        let t = k as f64 * h;
        if !state.is_finite() || est.j_bar.iter().any(|v| !v.is_finite()) {
            return Err(HarnessError::NonFinite(k));
        }
        let ev = lp.evaluate(t, &state, &est, &cmd);
        observe(&mut diag, s, &lp, t, &state, &est, &ev);
        if k % s.output_every == 0 {
            let v = lyapunov_value_from(&ev.errors, &s.gains, &est, &s.j_true);
            series.push(Sample::record(t, &state, &cmd, &ev.errors, &ev.u, &ev.delta, &est, v, &s.j_true));
        }
        if k == s.n_steps {
            break;
        }

        let t_next = (k + 1) as f64 * h;
        let cmd_next = s.command.sample(t_next)?;
        let j_bar_before = est.j_bar;
        match s.integrator.method {
            IntegratorMethod::Lgvi => {
                let m_start = ev.u + ev.delta;
                let step = LgviStep::begin(&state, &m_start, &s.j_true, &s.integrator)
                    .map_err(|source| HarnessError::Integration { step: k, source })?;
                diag.max_newton_iterations = diag.max_newton_iterations.max(step.newton_iterations);
                let predicted = step
                    .finish(&m_start, &s.j_true)
                    .map_err(|source| HarnessError::Integration { step: k, source })?;
                let mut est_pred = est;
                est_pred.advance(&ev.rate, h);
                let end = lp.evaluate(t_next, &predicted, &est_pred, &cmd_next);
                state = step
                    .finish(&(end.u + end.delta), &s.j_true)
                    .map_err(|source| HarnessError::Integration { step: k, source })?;
                est.advance(&(0.5 * (ev.rate + end.rate)), h);
            }
            IntegratorMethod::Rk4Projected => {
                let (next, j_bar) = step_rk4_projected_with(&state, est.j_bar, t, h, &s.j_true, |ts, st, jb| {
                    let stage_cmd = if ts == t {
                        Ok(cmd)
                    } else if ts == t_next {
                        Ok(cmd_next)
                    } else {
                        s.command.sample(ts)
                    };
                    match stage_cmd {
                        Ok(c) => {
                            let ev = lp.evaluate(ts, st, &EstimatorState { j_bar: *jb }, &c);
                            (ev.u + ev.delta, ev.rate)
                        }
                        Err(_) => (Vec3::repeat(f64::NAN), Mat3::repeat(f64::NAN)),
                    }
                })
                .map_err(|source| HarnessError::Integration { step: k, source })?;
                state = next;
                est = EstimatorState::new(j_bar);
            }
        }
        if k >= last_second_start {
            let change = (est.j_bar - j_bar_before).amax();
            diag.j_bar_max_step_change_last_second = diag.j_bar_max_step_change_last_second.max(change);
        }
        cmd = cmd_next;
    }

    let metrics = compute_metrics(&series, s.settle, ultimate_bound);
    Ok(RunOutput { series, metrics, diagnostics: diag, gain_report: report })
}

fn observe(
    diag: &mut RunDiagnostics,
    s: &Scenario,
    lp: &Loop<'_>,
    t: f64,
    state: &BodyState,
    est: &EstimatorState,
    ev: &Evaluation,
) {
    diag.max_orthogonality_error = diag.max_orthogonality_error.max(state.r.orthogonality_error());
    diag.max_estimate_asymmetry = diag.max_estimate_asymmetry.max((est.j_bar - est.j_bar.transpose()).amax());
    diag.max_j_bar_frobenius = diag.max_j_bar_frobenius.max(est.j_bar.norm());

    let (Some(r), Some(v)) = (lp.robust, ev.v_term) else {
        return;
    };
    let e_a = ev.errors.e_a;
    let excess = e_a.dot(&(ev.delta + v)) - r.epsilon;
    let worst = if e_a.norm() > 0.0 { r.delta * e_a.normalize() } else { Vec3::zeros() };
    let excess_adv = e_a.dot(&(worst + v)) - r.epsilon;
    diag.robust_max_excess = diag.robust_max_excess.map(|m| m.max(excess));
    diag.robust_max_excess_adversarial = diag.robust_max_excess_adversarial.map(|m| m.max(excess_adv));
    diag.robust_max_v_norm = diag.robust_max_v_norm.map(|m| m.max(v.norm()));

    if let Some(bound) = diag.ultimate_bound {
        let z = z_vector(&ev.errors, est, &s.j_true);
        let z_sq = z.iter().map(|x| x * x).sum::<f64>();
        match diag.first_entry_time {
            None if z_sq <= bound => {
                diag.first_entry_time = Some(t);
                diag.max_z_sq_after_entry = Some(z_sq);
            }
            None => {}
            Some(_) => {
                diag.max_z_sq_after_entry = diag.max_z_sq_after_entry.map(|m| m.max(z_sq));
                if z_sq > bound {
                    diag.exits_after_entry += 1;
                }
            }
        }
    }
}
