//! Attitude commands `(R_d, Ω_d, Ω̇_d)`.
//!
//! The built-in command drives roll and pitch sinusoidally through a 3-2-1
//! (yaw-pitch-roll) Euler parameterization with `R_d = R_z(ψ) R_y(θ) R_x(φ)`,
//! mapping body to inertial coordinates. Rates are formed analytically.
//! [`NumericCommand`] wraps an arbitrary `t ↦ R_d(t)` and differentiates it
//! by central differences.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::so3::{vee, Mat3, Rotation, Vec3};

/// Default central-difference step for [`NumericCommand`], seconds.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("command produced a non-finite sample at t = {0}")]
    NonFinite(f64),
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
    #[error("Euler command frequency must be positive and finite, got {0}")]
    BadFrequency(f64),
}

/// Desired attitude, body rate and body angular acceleration at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandSample {
    pub t: f64,
    pub rd: Rotation,
    pub omega_d: Vec3,
    pub omega_d_dot: Vec3,
}

pub trait AttitudeCommand: Send + Sync {
    fn sample(&self, t: f64) -> Result<CommandSample, TrajectoryError>;
}

/// `R_z(psi) · R_y(theta) · R_x(phi)`.
pub fn euler321_to_rotation(phi: f64, theta: f64, psi: f64) -> Rotation {
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    Rotation::from_matrix_unchecked(Mat3::new(
        cp * ct,
        cp * st * sf - sp * cf,
        cp * st * cf + sp * sf,
        sp * ct,
        sp * st * sf + cp * cf,
        sp * st * cf - cp * sf,
        -st,
        ct * sf,
        ct * cf,
    ))
}

/// Roll `φ = a_φ sin(ωt)`, pitch `θ = a_θ cos(ωt)`, constant yaw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerCommand {
    pub amplitude_phi: f64,
    pub amplitude_theta: f64,
    pub frequency: f64,
    pub psi_const: f64,
}

impl EulerCommand {
    pub fn new(amplitude_phi: f64, amplitude_theta: f64, frequency: f64, psi_const: f64) -> Result<Self, TrajectoryError> {
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(TrajectoryError::BadFrequency(frequency));
        }
        Ok(Self { amplitude_phi, amplitude_theta, frequency, psi_const })
    }

    /// `φ = (π/9) sin(πt)`, `θ = (π/9) cos(πt)`, `ψ = 0`.
    pub fn paper() -> Self {
        Self { amplitude_phi: PI / 9.0, amplitude_theta: PI / 9.0, frequency: PI, psi_const: 0.0 }
    }

    /// `(φ, θ, ψ)` at `t`.
    pub fn angles(&self, t: f64) -> (f64, f64, f64) {
        let (s, c) = (self.frequency * t).sin_cos();
        (self.amplitude_phi * s, self.amplitude_theta * c, self.psi_const)
    }

    fn evaluate(&self, t: f64) -> CommandSample {
        let w = self.frequency;
        let (s, c) = (w * t).sin_cos();
        let (phi, theta, psi) = self.angles(t);
        let phi_dot = self.amplitude_phi * w * c;
        let phi_ddot = -self.amplitude_phi * w * w * s;
        let theta_dot = -self.amplitude_theta * w * s;
        let theta_ddot = -self.amplitude_theta * w * w * c;

        // With ψ̇ = 0, R_dᵀṘ_d = hat(φ̇ e1 + θ̇ R_xᵀ e2).
        let (sf, cf) = phi.sin_cos();
        let omega_d = Vec3::new(phi_dot, theta_dot * cf, -theta_dot * sf);
        let omega_d_dot = Vec3::new(
            phi_ddot,
            theta_ddot * cf - theta_dot * phi_dot * sf,
            -theta_ddot * sf - theta_dot * phi_dot * cf,
        );
        CommandSample { t, rd: euler321_to_rotation(phi, theta, psi), omega_d, omega_d_dot }
    }
}

impl AttitudeCommand for EulerCommand {
    fn sample(&self, t: f64) -> Result<CommandSample, TrajectoryError> {
        if !t.is_finite() {
            return Err(TrajectoryError::NonFinite(t));
        }
        Ok(self.evaluate(t))
    }
}

/// The sinusoidal roll/pitch command at `t`.
pub fn paper_command(t: f64) -> CommandSample {
    EulerCommand::paper().evaluate(t)
}

/// Holds a fixed attitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedAttitude(pub Rotation);

impl AttitudeCommand for FixedAttitude {
    fn sample(&self, t: f64) -> Result<CommandSample, TrajectoryError> {
        Ok(CommandSample { t, rd: self.0, omega_d: Vec3::zeros(), omega_d_dot: Vec3::zeros() })
    }
}

/// Differentiates a user-supplied `t ↦ R_d(t)` numerically.
///
/// `Ω_d = vee(R_dᵀ (R_d(t+h) − R_d(t−h)) / 2h)` and `Ω̇_d` is the central
/// difference of that estimate.
pub struct NumericCommand<F> {
    attitude: F,
    step: f64,
}

impl<F> NumericCommand<F>
where
    F: Fn(f64) -> Rotation + Send + Sync,
{
    pub fn new(attitude: F, step: f64) -> Result<Self, TrajectoryError> {
        if !(step.is_finite() && step > 0.0) {
            return Err(TrajectoryError::BadStep(step));
        }
        Ok(Self { attitude, step })
    }

    fn rate(&self, t: f64) -> Vec3 {
        let h = self.step;
        let rd = (self.attitude)(t);
        let dr = ((self.attitude)(t + h).into_matrix() - (self.attitude)(t - h).into_matrix()) / (2.0 * h);
        vee(&(rd.matrix().transpose() * dr))
    }
}

impl<F> AttitudeCommand for NumericCommand<F>
where
    F: Fn(f64) -> Rotation + Send + Sync,
{
    fn sample(&self, t: f64) -> Result<CommandSample, TrajectoryError> {
        let h = self.step;
        let rd = (self.attitude)(t);
        let omega_d = self.rate(t);
        let omega_d_dot = (self.rate(t + h) - self.rate(t - h)) / (2.0 * h);
        let finite = rd.matrix().iter().chain(omega_d.iter()).chain(omega_d_dot.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(TrajectoryError::NonFinite(t));
        }
        Ok(CommandSample { t, rd, omega_d, omega_d_dot })
    }
}
