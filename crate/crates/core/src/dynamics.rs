//! Rigid-body rotational dynamics `JΩ̇ + Ω × JΩ = u + Δ`, `Ṙ = RΩ̂`.
//!
//! Two integrators are provided:
//!
//! * [`step_lgvi`]: an implicit Lie group variational integrator. Each step
//!   solves `h·hat(JΩ_k + (h/2)M_k) = F J_d − J_d Fᵀ` for the relative
//!   rotation `F ∈ SO(3)`, where `J_d = ½tr(J)I − J` is the nonstandard
//!   moment of inertia, then sets `R_{k+1} = R_k F` and
//!   `JΩ_{k+1} = FᵀJΩ_k + (h/2)(FᵀM_k + M_{k+1})`. The implicit equation is
//!   solved by Newton iteration on the Cayley parameter `f` of
//!   `F = (I + f̂)(I − f̂)⁻¹`, which turns it into
//!   `a(1 + fᵀf) = 2(Jf + f × Jf)` with `a = h(JΩ_k + (h/2)M_k)`.
//! * [`step_rk4_projected`]: classical RK4 on `(R, Ω)` with `R` treated as
//!   nine reals, followed by projection onto SO(3).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::symmetric_eigenvalues;
use crate::so3::{hat, project_to_so3, Mat3, Rotation, So3Error, Vec3};

/// Default integration step, seconds.
pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_NEWTON_TOL: f64 = 1e-14;
pub const DEFAULT_NEWTON_MAX_ITER: usize = 50;

/// Largest asymmetry accepted by [`InertiaMatrix::new`], relative to the
/// largest entry.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("inertia matrix is not symmetric (max |J − Jᵀ| = {0:e})")]
    AsymmetricInertia(f64),
    #[error("inertia matrix is not positive definite (eigenvalues {0:?})")]
    IndefiniteInertia([f64; 3]),
    #[error("inertia matrix has non-finite entries")]
    NonFiniteInertia,
    #[error("step size must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("implicit rotation update did not converge after {iterations} iterations (residual {residual:e}); step too large")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("projection after Runge-Kutta step failed; step too large: {0}")]
    Projection(#[from] So3Error),
    #[error("state became non-finite")]
    NonFinite,
}

/// Symmetric positive-definite body-frame inertia, kg·m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaMatrix {
    matrix: Mat3,
    inverse: Mat3,
    lambda_min: f64,
    lambda_max: f64,
}

impl InertiaMatrix {
    /// Validates symmetry and positive definiteness. The stored matrix is
    /// the exact symmetrization `(J + Jᵀ)/2`.
    pub fn new(j: Mat3) -> Result<Self, DynamicsError> {
        if j.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFiniteInertia);
        }
        let asym = (j - j.transpose()).amax();
        if asym > SYMMETRY_TOL * j.amax().max(f64::MIN_POSITIVE) {
            return Err(DynamicsError::AsymmetricInertia(asym));
        }
        let matrix = 0.5 * (j + j.transpose());
        let eig = symmetric_eigenvalues(&matrix);
        if eig[0] <= 0.0 {
            return Err(DynamicsError::IndefiniteInertia(eig));
        }
        let inverse = matrix
            .cholesky()
            .ok_or(DynamicsError::IndefiniteInertia(eig))?
            .inverse();
        Ok(Self { matrix, inverse, lambda_min: eig[0], lambda_max: eig[2] })
    }

    /// The rigid body used throughout the numerical examples.
    pub fn from_paper() -> Self {
        let j = Mat3::new(
            1.059e-2, -5.156e-6, 2.361e-5, //
            -5.156e-6, 1.059e-2, -1.026e-5, //
            2.361e-5, -1.026e-5, 1.005e-2,
        );
        Self::new(j).expect("tabulated inertia is symmetric positive definite")
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn inverse(&self) -> &Mat3 {
        &self.inverse
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// `J_d = ½ tr(J) I − J`.
    pub fn nonstandard(&self) -> Mat3 {
        0.5 * self.matrix.trace() * Mat3::identity() - self.matrix
    }
}

/// Attitude and body-frame angular velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub r: Rotation,
    pub omega: Vec3,
}

impl BodyState {
    pub fn new(r: Rotation, omega: Vec3) -> Self {
        Self { r, omega }
    }

    pub fn at_rest() -> Self {
        Self { r: Rotation::identity(), omega: Vec3::zeros() }
    }

    pub fn is_finite(&self) -> bool {
        self.r.matrix().iter().chain(self.omega.iter()).all(|v| v.is_finite())
    }

    /// `½ Ωᵀ J Ω`
    pub fn kinetic_energy(&self, j: &InertiaMatrix) -> f64 {
        0.5 * self.omega.dot(&(j.matrix() * self.omega))
    }

    /// Angular momentum in the inertial frame, `R J Ω`.
    pub fn spatial_momentum(&self, j: &InertiaMatrix) -> Vec3 {
        self.r.matrix() * (j.matrix() * self.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorMethod {
    Lgvi,
    Rk4Projected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub step_size: f64,
    pub method: IntegratorMethod,
    /// Newton stops once `‖g(f)‖ ≤ newton_tol·‖a‖`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step_size: DEFAULT_STEP,
            method: IntegratorMethod::Lgvi,
            newton_tol: DEFAULT_NEWTON_TOL,
            newton_max_iter: DEFAULT_NEWTON_MAX_ITER,
        }
    }
}

impl IntegratorConfig {
    pub fn with_method(method: IntegratorMethod, step_size: f64) -> Self {
        Self { step_size, method, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        check_step(self.step_size)?;
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return Err(DynamicsError::BadStep(self.newton_tol));
        }
        Ok(())
    }
}

fn check_step(h: f64) -> Result<(), DynamicsError> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(DynamicsError::BadStep(h))
    }
}

/// Time derivative of a [`BodyState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyRates {
    pub omega_dot: Vec3,
    /// Body-frame attitude rate; `Ṙ = R·hat(body_rate)`.
    pub body_rate: Vec3,
}

pub fn body_dynamics_rhs(state: &BodyState, u: &Vec3, delta: &Vec3, j: &InertiaMatrix) -> BodyRates {
    let momentum = j.matrix() * state.omega;
    let omega_dot = j.inverse() * (-state.omega.cross(&momentum) + u + delta);
    BodyRates { omega_dot, body_rate: state.omega }
}

/// Auxiliary state carried through Runge–Kutta stages alongside `(R, Ω)`.
pub trait AuxState: Copy {
    /// `self + k · rate`
    fn add_scaled(&self, rate: &Self, k: f64) -> Self;
}

impl AuxState for () {
    fn add_scaled(&self, _: &Self, _: f64) -> Self {}
}

impl AuxState for Mat3 {
    fn add_scaled(&self, rate: &Self, k: f64) -> Self {
        self + rate * k
    }
}

/// One RK4 step for the plant alone. `u_fn` and `delta_fn` are evaluated at
/// every stage with the stage time and stage state.
pub fn step_rk4_projected<U, D>(
    state: &BodyState,
    t: f64,
    h: f64,
    j: &InertiaMatrix,
    mut u_fn: U,
    mut delta_fn: D,
) -> Result<BodyState, DynamicsError>
where
    U: FnMut(f64, &BodyState) -> Vec3,
    D: FnMut(f64, &BodyState) -> Vec3,
{
    let (next, ()) = step_rk4_projected_with(state, (), t, h, j, |ts, s, _| {
        (u_fn(ts, s) + delta_fn(ts, s), ())
    })?;
    Ok(next)
}

/// RK4 step for `(R, Ω)` coupled with an auxiliary state.
///
/// `stage(t, state, aux)` returns the total applied moment and the
/// auxiliary rate. Stage states hold the unprojected nine-real `R`; only
/// the final attitude is projected.
pub fn step_rk4_projected_with<A, F>(
    state: &BodyState,
    aux: A,
    t: f64,
    h: f64,
    j: &InertiaMatrix,
    mut stage: F,
) -> Result<(BodyState, A), DynamicsError>
where
    A: AuxState,
    F: FnMut(f64, &BodyState, &A) -> (Vec3, A),
{
    check_step(h)?;
    let deriv = |s: &BodyState, moment: &Vec3| -> (Mat3, Vec3) {
        let rates = body_dynamics_rhs(s, moment, &Vec3::zeros(), j);
        (s.r.matrix() * hat(&rates.body_rate), rates.omega_dot)
    };
    let offset = |k: f64, dr: &Mat3, dw: &Vec3| BodyState {
        r: Rotation::from_matrix_unchecked(state.r.matrix() + dr * k),
        omega: state.omega + dw * k,
    };

    let (m1, a1) = stage(t, state, &aux);
    let (r1, w1) = deriv(state, &m1);

    let s2 = offset(0.5 * h, &r1, &w1);
    let x2 = aux.add_scaled(&a1, 0.5 * h);
    let (m2, a2) = stage(t + 0.5 * h, &s2, &x2);
    let (r2, w2) = deriv(&s2, &m2);

    let s3 = offset(0.5 * h, &r2, &w2);
    let x3 = aux.add_scaled(&a2, 0.5 * h);
    let (m3, a3) = stage(t + 0.5 * h, &s3, &x3);
    let (r3, w3) = deriv(&s3, &m3);

    let s4 = offset(h, &r3, &w3);
    let x4 = aux.add_scaled(&a3, h);
    let (m4, a4) = stage(t + h, &s4, &x4);
    let (r4, w4) = deriv(&s4, &m4);

    let r_raw = state.r.matrix() + (r1 + 2.0 * r2 + 2.0 * r3 + r4) * (h / 6.0);
    let omega = state.omega + (w1 + 2.0 * w2 + 2.0 * w3 + w4) * (h / 6.0);
    let aux_next = aux
        .add_scaled(&a1, h / 6.0)
        .add_scaled(&a2, h / 3.0)
        .add_scaled(&a3, h / 3.0)
        .add_scaled(&a4, h / 6.0);
    if !omega.iter().all(|v| v.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    let r = project_to_so3(&r_raw)?;
    Ok((BodyState { r, omega }, aux_next))
}

/// First half of an LGVI step: the implicit rotation solve.
///
/// Splitting the step lets a closed loop evaluate the end-of-step moment at
/// the already-known `R_{k+1}` before completing the momentum update.
#[derive(Debug, Clone, Copy)]
pub struct LgviStep {
    /// Relative rotation `F_k`.
    pub increment: Rotation,
    pub r_next: Rotation,
    /// `F_kᵀ(JΩ_k + (h/2)M_k)`
    carried_momentum: Vec3,
    half_step: f64,
    pub newton_iterations: usize,
}

impl LgviStep {
    pub fn begin(
        state: &BodyState,
        moment_start: &Vec3,
        j: &InertiaMatrix,
        cfg: &IntegratorConfig,
    ) -> Result<Self, DynamicsError> {
        cfg.validate()?;
        let h = cfg.step_size;
        let momentum = j.matrix() * state.omega + 0.5 * h * moment_start;
        let (f, newton_iterations) = solve_rotation_increment(&(h * momentum), &state.omega, h, j, cfg)?;
        let r_next = Rotation::from_matrix_unchecked(state.r.matrix() * f.matrix());
        Ok(Self {
            increment: f,
            r_next,
            carried_momentum: f.matrix().transpose() * momentum,
            half_step: 0.5 * h,
            newton_iterations,
        })
    }

    /// Completes the step with the moment `M_{k+1}` applied at its end.
    pub fn finish(&self, moment_end: &Vec3, j: &InertiaMatrix) -> Result<BodyState, DynamicsError> {
        let momentum = self.carried_momentum + self.half_step * moment_end;
        let next = BodyState { r: self.r_next, omega: j.inverse() * momentum };
        if !next.is_finite() {
            return Err(DynamicsError::NonFinite);
        }
        Ok(next)
    }
}

/// One LGVI step with moments `M_k = moment_start` and
/// `M_{k+1} = moment_end`.
pub fn step_lgvi(
    state: &BodyState,
    moment_start: &Vec3,
    moment_end: &Vec3,
    j: &InertiaMatrix,
    cfg: &IntegratorConfig,
) -> Result<BodyState, DynamicsError> {
    LgviStep::begin(state, moment_start, j, cfg)?.finish(moment_end, j)
}

/// `(I + f̂)(I − f̂)⁻¹ = I + 2(f̂ + f̂²)/(1 + fᵀf)`
fn cayley(f: &Vec3) -> Mat3 {
    let k = hat(f);
    Mat3::identity() + (2.0 / (1.0 + f.norm_squared())) * (k + k * k)
}

/// Solves `hat(a) = F J_d − J_d Fᵀ` for `F`, returning it with the number
/// of Newton iterations used.
fn solve_rotation_increment(
    a: &Vec3,
    omega: &Vec3,
    h: f64,
    j: &InertiaMatrix,
    cfg: &IntegratorConfig,
) -> Result<(Rotation, usize), DynamicsError> {
    let jm = j.matrix();
    // With F = cay(f) the equation is equivalent to
    // g(f) = a(1 + fᵀf) − 2(Jf + f × Jf) = 0, whose terms are all of size ‖a‖.
    let g = |f: &Vec3| {
        let jf = jm * f;
        a * (1.0 + f.norm_squared()) - 2.0 * (jf + f.cross(&jf))
    };
    let tol = (cfg.newton_tol * a.norm()).max(f64::MIN_POSITIVE);

    // Warm start from F = exp(hΩ), whose Cayley parameter is tan(θ/2)·axis.
    let theta = h * omega.norm();
    let mut f = if theta < 1e-8 { 0.5 * h * omega } else { omega * ((0.5 * theta).tan() / omega.norm()) };

    let mut res_vec = g(&f);
    let mut res = res_vec.norm();
    let mut iterations = 0;
    while res > tol {
        if iterations == cfg.newton_max_iter || !res.is_finite() {
            return Err(DynamicsError::NewtonDiverged { iterations, residual: res });
        }
        let jf = jm * f;
        let grad = 2.0 * (a * f.transpose() - jm + hat(&jf) - hat(&f) * jm);
        let Some(inv) = grad.try_inverse() else {
            return Err(DynamicsError::NewtonDiverged { iterations, residual: res });
        };
        f -= inv * res_vec;
        iterations += 1;
        res_vec = g(&f);
        res = res_vec.norm();
    }
    Ok((Rotation::from_matrix_unchecked(cayley(&f)), iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{exp_so3, vee};
    use approx::assert_relative_eq;

    #[test]
    fn paper_inertia_entries() {
        let j = InertiaMatrix::from_paper();
        assert_eq!(j.matrix()[(0, 0)], 1.059e-2);
        assert_eq!(j.matrix()[(2, 1)], -1.026e-5);
        assert_eq!(j.matrix(), &j.matrix().transpose());
        assert!(j.lambda_min() <= 1.005e-2 && 1.005e-2 <= j.lambda_max());
    }

    #[test]
    fn inertia_validation() {
        let mut asym = Mat3::identity();
        asym[(0, 1)] = 1e-3;
        assert!(matches!(InertiaMatrix::new(asym), Err(DynamicsError::AsymmetricInertia(_))));
        let indefinite = Mat3::from_diagonal(&Vec3::new(1.0, -1.0, 1.0));
        assert!(matches!(InertiaMatrix::new(indefinite), Err(DynamicsError::IndefiniteInertia(_))));
    }

    #[test]
    fn rhs_special_cases() {
        let j = InertiaMatrix::from_paper();
        let zero = Vec3::zeros();
        let rest = BodyState::at_rest();
        assert_eq!(body_dynamics_rhs(&rest, &zero, &zero, &j).omega_dot, zero);

        let iso = InertiaMatrix::new(Mat3::identity() * 0.3).unwrap();
        let spinning = BodyState::new(Rotation::identity(), Vec3::new(0.3, -2.0, 1.1));
        let rates = body_dynamics_rhs(&spinning, &zero, &zero, &iso);
        assert!(rates.omega_dot.norm() < 1e-15);
        assert_eq!(rates.body_rate, spinning.omega);
    }

    #[test]
    fn rhs_matches_linear_solve() {
        let j = InertiaMatrix::from_paper();
        let s = BodyState::new(Rotation::identity(), Vec3::new(1.0, 0.0, 0.0));
        let rates = body_dynamics_rhs(&s, &Vec3::zeros(), &Vec3::zeros(), &j);
        let rhs = -s.omega.cross(&(j.matrix() * s.omega));
        let solved = j.matrix().lu().solve(&rhs).unwrap();
        assert_relative_eq!(rates.omega_dot, solved, epsilon = 1e-15, max_relative = 1e-12);
    }

    #[test]
    fn zero_dynamics_is_fixed_point() {
        let j = InertiaMatrix::from_paper();
        let rest = BodyState::new(exp_so3(&Vec3::new(0.1, 0.2, 0.3)), Vec3::zeros());
        let zero = Vec3::zeros();
        let cfg = IntegratorConfig::default();
        let next = step_lgvi(&rest, &zero, &zero, &j, &cfg).unwrap();
        assert!((next.r.matrix() - rest.r.matrix()).amax() < 1e-16);
        assert_eq!(next.omega, zero);
        let next = step_rk4_projected(&rest, 0.0, 1e-3, &j, |_, _| zero, |_, _| zero).unwrap();
        assert!((next.r.matrix() - rest.r.matrix()).amax() < 1e-15);
        assert_eq!(next.omega, zero);
    }

    #[test]
    fn lgvi_increment_satisfies_implicit_equation() {
        let j = InertiaMatrix::from_paper();
        let s = BodyState::new(Rotation::identity(), Vec3::new(2.0, -1.0, 3.0));
        let m = Vec3::new(0.01, 0.02, -0.01);
        let cfg = IntegratorConfig::default();
        let h = cfg.step_size;
        let step = LgviStep::begin(&s, &m, &j, &cfg).unwrap();
        let f = step.increment.matrix();
        let jd = j.nonstandard();
        let lhs = h * (j.matrix() * s.omega + 0.5 * h * m);
        assert_relative_eq!(vee(&(f * jd - jd * f.transpose())), lhs, epsilon = 1e-17);
        assert!(step.newton_iterations <= 5);
    }

    #[test]
    fn newton_failure_is_reported() {
        let j = InertiaMatrix::from_paper();
        let s = BodyState::new(Rotation::identity(), Vec3::new(2.0, -1.0, 3.0));
        let cfg = IntegratorConfig { newton_max_iter: 0, ..IntegratorConfig::default() };
        assert!(matches!(
            LgviStep::begin(&s, &Vec3::zeros(), &j, &cfg),
            Err(DynamicsError::NewtonDiverged { .. })
        ));
    }

    #[test]
    fn bad_step_rejected() {
        let j = InertiaMatrix::from_paper();
        let s = BodyState::at_rest();
        let zero = Vec3::zeros();
        assert!(step_rk4_projected(&s, 0.0, 0.0, &j, |_, _| zero, |_, _| zero).is_err());
        let cfg = IntegratorConfig { step_size: -1.0, ..IntegratorConfig::default() };
        assert!(matches!(step_lgvi(&s, &zero, &zero, &j, &cfg), Err(DynamicsError::BadStep(_))));
    }

    #[test]
    fn config_parses_with_defaults() {
        let cfg: IntegratorConfig = toml::from_str("method = \"rk4_projected\"").unwrap();
        assert_eq!(cfg.method, IntegratorMethod::Rk4Projected);
        assert_eq!(cfg.step_size, DEFAULT_STEP);
        assert!(toml::from_str::<IntegratorConfig>("stepsize = 1.0").is_err());
    }
}
