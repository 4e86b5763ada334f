//! Adaptive and robust adaptive attitude tracking laws.
//!
//! Both laws share the feedback/feedforward structure
//! `u = −k_R e_R − k_Ω e_Ω + Ω × J̄Ω + J̄α_d` and adapt the inertia estimate
//! `J̄` along the augmented error `e_A = e_Ω + c e_R`. The robust variant adds
//! the bounded term `v = −δ² e_A / (δ‖e_A‖ + ε)` and a σ-leakage `−k_J σ J̄`
//! in the update law.
//!
//! The true inertia never enters a control law. Only the instrumentation
//! ([`lyapunov_value`], [`z_vector`]) and the gain check
//! ([`validate_gains`], which needs the eigenvalue bounds only) see it.

use std::f64::consts::SQRT_2;
use std::fmt;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude_error::{bound_constants, BoundConstants, ErrorState, GainError, GainMatrix};
use crate::dynamics::{BodyState, InertiaMatrix};
use crate::eigen::{symmetric_eigenvalues, symmetric_eigenvalues2};
use crate::so3::{hat, Mat3, Vec3};
use crate::trajectory::CommandSample;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("{name} must be positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error(transparent)]
    Gain(#[from] GainError),
}

fn positive(name: &'static str, value: f64) -> Result<f64, ControllerError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ControllerError::NotPositive { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub k_r: f64,
    pub k_omega: f64,
    pub k_j: f64,
    pub c: f64,
    pub g: GainMatrix,
}

impl Gains {
    pub fn new(k_r: f64, k_omega: f64, k_j: f64, c: f64, g: GainMatrix) -> Result<Self, ControllerError> {
        Ok(Self {
            k_r: positive("k_R", k_r)?,
            k_omega: positive("k_Omega", k_omega)?,
            k_j: positive("k_J", k_j)?,
            c: positive("c", c)?,
            g,
        })
    }

    /// `k_R = 0.0424`, `k_Ω = 0.0296`, `k_J = 0.1`, `c = 1.0` with the
    /// default weights `G`.
    pub fn paper() -> Self {
        Self { k_r: 0.0424, k_omega: 0.0296, k_j: 0.1, c: 1.0, g: GainMatrix::default() }
    }
}

/// Parameters of the σ-modified law and the bounded robustifying term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustParams {
    pub sigma: f64,
    pub epsilon: f64,
    /// Known bound on ‖Δ‖, N·m.
    pub delta: f64,
}

impl RobustParams {
    pub fn new(sigma: f64, epsilon: f64, delta: f64) -> Result<Self, ControllerError> {
        Ok(Self {
            sigma: positive("sigma", sigma)?,
            epsilon: positive("epsilon", epsilon)?,
            delta: positive("delta", delta)?,
        })
    }

    /// `σ = 0.01`, `ε = 0.002`, `δ = 0.2`.
    pub fn paper() -> Self {
        Self { sigma: 0.01, epsilon: 0.002, delta: 0.2 }
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        Self::new(self.sigma, self.epsilon, self.delta).map(|_| ())
    }
}

/// Inertia estimate `J̄`. Kept symmetric; never required to be definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorState {
    pub j_bar: Mat3,
}

impl EstimatorState {
    pub fn new(j_bar: Mat3) -> Self {
        let mut est = Self { j_bar };
        est.resymmetrize();
        est
    }

    pub fn resymmetrize(&mut self) {
        self.j_bar = 0.5 * (self.j_bar + self.j_bar.transpose());
    }

    /// `J̄ ← J̄ + h · rate`, then resymmetrized.
    pub fn advance(&mut self, rate: &Mat3, h: f64) {
        self.j_bar += rate * h;
        self.resymmetrize();
    }
}

fn errors(state: &BodyState, cmd: &CommandSample, gains: &Gains) -> ErrorState {
    ErrorState::compute(&state.r, &state.omega, cmd, &gains.g, gains.c)
}

/// Largest admissible `c`: the minimum of
/// `√(2b₁k_Rλ_m/λ_M²)`, `√2 k_Ω/(λ_M tr G)` and
/// `4k_Rk_Ω/(k_Ω² + 2√2 k_Rλ_M tr G)`.
///
/// The last term is the exact `det W₂ > 0` condition. The closed-loop
/// analysis prints `k_Rλ_M tr G/√2` in its denominator, which is four times
/// too small to keep `W₂` positive definite.
pub fn c_max(k_r: f64, k_omega: f64, g: &GainMatrix, lambda_m: f64, lambda_big_m: f64) -> f64 {
    let [a, b, c] = c_max_terms(k_r, k_omega, g, lambda_m, lambda_big_m);
    a.min(b).min(c)
}

fn c_max_terms(k_r: f64, k_omega: f64, g: &GainMatrix, lambda_m: f64, lambda_big_m: f64) -> [f64; 3] {
    let b1 = BoundConstants::with_default_psi_bar(g).b1;
    let tr_g = g.trace();
    [
        (2.0 * b1 * k_r * lambda_m / (lambda_big_m * lambda_big_m)).sqrt(),
        SQRT_2 * k_omega / (lambda_big_m * tr_g),
        4.0 * k_r * k_omega / (k_omega * k_omega + 2.0 * SQRT_2 * k_r * lambda_big_m * tr_g),
    ]
}

/// Adaptive tracking moment from precomputed errors.
pub fn adaptive_control_from(e: &ErrorState, omega: &Vec3, gains: &Gains, est: &EstimatorState) -> Vec3 {
    -gains.k_r * e.e_r - gains.k_omega * e.e_omega + omega.cross(&(est.j_bar * omega)) + est.j_bar * e.alpha_d
}

/// `u = −k_R e_R − k_Ω e_Ω + Ω × J̄Ω + J̄α_d`
pub fn adaptive_control(state: &BodyState, cmd: &CommandSample, gains: &Gains, est: &EstimatorState) -> Vec3 {
    adaptive_control_from(&errors(state, cmd, gains), &state.omega, gains, est)
}

/// Adaptation rate from precomputed errors.
///
/// Written as `(k_J/2)(P + Pᵀ)` with `P = −α_d e_Aᵀ + ΩΩᵀê_A`, which equals
/// the four-term law and is symmetric bit-for-bit.
pub fn adaptive_update_rate_from(e: &ErrorState, omega: &Vec3, gains: &Gains) -> Mat3 {
    let p = -e.alpha_d * e.e_a.transpose() + omega * omega.transpose() * hat(&e.e_a);
    0.5 * gains.k_j * (p + p.transpose())
}

/// `dJ̄/dt = (k_J/2)(−α_d e_Aᵀ − e_Aα_dᵀ + ΩΩᵀê_A − ê_AΩΩᵀ)`
pub fn adaptive_update_rate(state: &BodyState, cmd: &CommandSample, gains: &Gains, _est: &EstimatorState) -> Mat3 {
    adaptive_update_rate_from(&errors(state, cmd, gains), &state.omega, gains)
}

/// `v = −δ² e_A / (δ‖e_A‖ + ε)`; always `‖v‖ < δ`.
pub fn robust_term(e_a: &Vec3, robust: &RobustParams) -> Vec3 {
    let d = robust.delta;
    -(d * d) * e_a / (d * e_a.norm() + robust.epsilon)
}

pub fn robust_control_from(
    e: &ErrorState,
    omega: &Vec3,
    gains: &Gains,
    robust: &RobustParams,
    est: &EstimatorState,
) -> Vec3 {
    adaptive_control_from(e, omega, gains, est) + robust_term(&e.e_a, robust)
}

/// Adaptive moment plus the robustifying term `v`.
pub fn robust_control(
    state: &BodyState,
    cmd: &CommandSample,
    gains: &Gains,
    robust: &RobustParams,
    est: &EstimatorState,
) -> Vec3 {
    robust_control_from(&errors(state, cmd, gains), &state.omega, gains, robust, est)
}

pub fn robust_update_rate_from(
    e: &ErrorState,
    omega: &Vec3,
    gains: &Gains,
    robust: &RobustParams,
    est: &EstimatorState,
) -> Mat3 {
    adaptive_update_rate_from(e, omega, gains) - gains.k_j * robust.sigma * est.j_bar
}

/// Adaptive rate with σ-leakage, `− k_J σ J̄`.
pub fn robust_update_rate(
    state: &BodyState,
    cmd: &CommandSample,
    gains: &Gains,
    robust: &RobustParams,
    est: &EstimatorState,
) -> Mat3 {
    robust_update_rate_from(&errors(state, cmd, gains), &state.omega, gains, robust, est)
}

/// Lyapunov function from precomputed errors.
pub fn lyapunov_value_from(e: &ErrorState, gains: &Gains, est: &EstimatorState, j_true: &InertiaMatrix) -> f64 {
    let j = j_true.matrix();
    let j_tilde = j - est.j_bar;
    0.5 * e.e_omega.dot(&(j * e.e_omega))
        + gains.k_r * e.psi
        + gains.c * (j * e.e_omega).dot(&e.e_r)
        + j_tilde.norm_squared() / (2.0 * gains.k_j)
}

/// `V = ½e_Ω·Je_Ω + k_RΨ + cJe_Ω·e_R + ‖J − J̄‖_F²/(2k_J)`
pub fn lyapunov_value(
    state: &BodyState,
    cmd: &CommandSample,
    gains: &Gains,
    est: &EstimatorState,
    j_true: &InertiaMatrix,
) -> f64 {
    lyapunov_value_from(&errors(state, cmd, gains), gains, est, j_true)
}

/// `ζ = (‖e_R‖, ‖e_Ω‖)`
pub fn zeta(e: &ErrorState) -> [f64; 2] {
    [e.e_r.norm(), e.e_omega.norm()]
}

/// `z = (‖e_R‖, ‖e_Ω‖, ‖J − J̄‖_F)`
pub fn z_vector(e: &ErrorState, est: &EstimatorState, j_true: &InertiaMatrix) -> [f64; 3] {
    [e.e_r.norm(), e.e_omega.norm(), (j_true.matrix() - est.j_bar).norm()]
}

/// Quadratic-form matrices of the Lyapunov analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovMatrices {
    /// lower bound `zᵀW₁₁z ≤ V`
    pub w11: Mat3,
    /// upper bound `V ≤ zᵀW₁₂z` on `Ψ < psi_bar`
    pub w12: Mat3,
    /// `V̇ ≤ −ζᵀW₂ζ` without disturbance
    pub w2: Matrix2<f64>,
    /// `W₂` padded with `σ/2`; present only with robust parameters
    pub w3: Option<Mat3>,
}

impl LyapunovMatrices {
    pub fn build(gains: &Gains, bounds: &BoundConstants, lambda_m: f64, lambda_big_m: f64, sigma: Option<f64>) -> Self {
        let c = gains.c;
        let off = 0.5 * c * lambda_big_m;
        let last = 1.0 / (2.0 * gains.k_j);
        let w11 = Mat3::new(
            bounds.b1 * gains.k_r, off, 0.0, //
            off, 0.5 * lambda_m, 0.0, //
            0.0, 0.0, last,
        );
        let w12 = Mat3::new(
            bounds.b2 * gains.k_r, off, 0.0, //
            off, 0.5 * lambda_big_m, 0.0, //
            0.0, 0.0, last,
        );
        let w2_11 = c * gains.k_r;
        let w2_12 = -0.5 * c * gains.k_omega;
        let w2_22 = gains.k_omega - c / SQRT_2 * lambda_big_m * gains.g.trace();
        let w2 = Matrix2::new(w2_11, w2_12, w2_12, w2_22);
        let w3 = sigma.map(|s| {
            Mat3::new(
                w2_11, w2_12, 0.0, //
                w2_12, w2_22, 0.0, //
                0.0, 0.0, 0.5 * s,
            )
        });
        Self { w11, w12, w2, w3 }
    }
}

/// Outcome of checking the gain conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainReport {
    pub c: f64,
    pub c_max: f64,
    pub c_max_terms: [f64; 3],
    pub c_condition_met: bool,
    pub lambda_m: f64,
    pub lambda_big_m: f64,
    pub b1: f64,
    pub b2: f64,
    pub psi_bar: f64,
    /// ascending
    pub w11_eigenvalues: [f64; 3],
    pub w2_eigenvalues: [f64; 2],
    pub w12_eigenvalues: [f64; 3],
    pub w3_eigenvalues: Option<[f64; 3]>,
    pub d1: Option<f64>,
    pub d2: f64,
    /// `λ_max(W₁₂)/(λ_min(W₁₁)λ_min(W₃)) · (3σλ_M²/2 + ε)`, robust case only.
    pub ultimate_bound: Option<f64>,
    pub feasible: bool,
    pub violations: Vec<String>,
}

impl GainReport {
    /// Machine-readable `key = value` document.
    pub fn to_key_value(&self) -> String {
        toml::to_string(self).expect("report fields are plain numbers, flags and strings")
    }
}

impl fmt::Display for GainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |eigs: &[f64]| eigs.iter().map(|e| format!("{e:.6e}")).collect::<Vec<_>>().join(", ");
        let pd = |eigs: &[f64]| if eigs.iter().all(|e| *e > 0.0) { "positive definite" } else { "NOT positive definite" };
        writeln!(f, "gain report")?;
        writeln!(f, "  lambda_m = {:.6e}, lambda_M = {:.6e}", self.lambda_m, self.lambda_big_m)?;
        writeln!(f, "  b1 = {:.6}, b2 = {:.6}, psi_bar = {:.6}", self.b1, self.b2, self.psi_bar)?;
        writeln!(
            f,
            "  c = {:.6}, c_max = {:.6} (terms {:.6}, {:.6}, {:.6}): {}",
            self.c,
            self.c_max,
            self.c_max_terms[0],
            self.c_max_terms[1],
            self.c_max_terms[2],
            if self.c_condition_met { "c < c_max" } else { "c >= c_max" }
        )?;
        writeln!(f, "  W11 eigenvalues [{}]: {}", list(&self.w11_eigenvalues), pd(&self.w11_eigenvalues))?;
        writeln!(f, "  W2  eigenvalues [{}]: {}", list(&self.w2_eigenvalues), pd(&self.w2_eigenvalues))?;
        writeln!(f, "  W12 eigenvalues [{}]: {}", list(&self.w12_eigenvalues), pd(&self.w12_eigenvalues))?;
        if let Some(w3) = &self.w3_eigenvalues {
            writeln!(f, "  W3  eigenvalues [{}]: {}", list(w3), pd(w3))?;
        }
        match self.d1 {
            Some(d1) => writeln!(
                f,
                "  d1 = {:.6e}, d2 = {:.6e}: {}",
                d1,
                self.d2,
                if d1 < self.d2 { "d1 < d2" } else { "d1 >= d2" }
            )?,
            None => writeln!(f, "  d2 = {:.6e}", self.d2)?,
        }
        if let Some(ub) = self.ultimate_bound {
            writeln!(f, "  ultimate bound on |z|^2 = {ub:.6e}")?;
        }
        for v in &self.violations {
            writeln!(f, "  violated: {v}")?;
        }
        writeln!(f, "  feasible: {}", self.feasible)
    }
}

/// Checks the positive-definiteness conditions of the stability analysis
/// and, when `robust` is given, the sublevel-set condition `d1 < d2`.
pub fn validate_gains(
    gains: &Gains,
    robust: Option<&RobustParams>,
    lambda_m: f64,
    lambda_big_m: f64,
    psi_bar: f64,
) -> Result<GainReport, ControllerError> {
    Gains::new(gains.k_r, gains.k_omega, gains.k_j, gains.c, gains.g)?;
    positive("lambda_m", lambda_m)?;
    positive("lambda_M", lambda_big_m)?;
    if let Some(r) = robust {
        r.validate()?;
    }
    let bounds = bound_constants(&gains.g, psi_bar)?;
    let terms = c_max_terms(gains.k_r, gains.k_omega, &gains.g, lambda_m, lambda_big_m);
    let c_max = terms[0].min(terms[1]).min(terms[2]);
    let mats = LyapunovMatrices::build(gains, &bounds, lambda_m, lambda_big_m, robust.map(|r| r.sigma));

    let w11 = symmetric_eigenvalues(&mats.w11);
    let w12 = symmetric_eigenvalues(&mats.w12);
    let w2 = symmetric_eigenvalues2(&mats.w2);
    let w3 = mats.w3.as_ref().map(symmetric_eigenvalues);

    let mut violations = Vec::new();
    let mut require_pd = |name: &str, eigs: &[f64]| {
        if eigs[0] <= 0.0 {
            violations.push(format!("{name} is not positive definite (min eigenvalue {:.6e})", eigs[0]));
        }
    };
    require_pd("W11", &w11);
    require_pd("W2", &w2);
    require_pd("W12", &w12);
    if let Some(w3) = &w3 {
        require_pd("W3", w3);
    }

    let d2 = psi_bar / bounds.b2 * w11[0];
    let slack = robust.map(|r| 1.5 * r.sigma * lambda_big_m * lambda_big_m + r.epsilon);
    let d1 = w3.zip(slack).map(|(w3, s)| w12[2] / w3[0] * s);
    let ultimate_bound = w3.zip(slack).map(|(w3, s)| w12[2] / (w11[0] * w3[0]) * s);
    if let Some(d1) = d1 {
        if !(d1 < d2) {
            violations.push(format!("d1 = {d1:.6e} is not below d2 = {d2:.6e}"));
        }
    }

    Ok(GainReport {
        c: gains.c,
        c_max,
        c_max_terms: terms,
        c_condition_met: gains.c < c_max,
        lambda_m,
        lambda_big_m,
        b1: bounds.b1,
        b2: bounds.b2,
        psi_bar,
        w11_eigenvalues: w11,
        w2_eigenvalues: w2,
        w12_eigenvalues: w12,
        w3_eigenvalues: w3,
        d1,
        d2,
        ultimate_bound,
        feasible: violations.is_empty(),
        violations,
    })
}
