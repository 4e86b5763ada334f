//! Configuration error function on SO(3) and its associated error vectors.
//!
//! The error function is the weighted trace form
//! `Ψ(R, R_d) = ½ tr[G(I − R_dᵀR)]` with `G = diag(g1, g2, g3)`. Its
//! left-trivialized derivative is the attitude error vector `e_R`, and the
//! angular velocity error `e_Ω` compares body rates after transporting the
//! desired rate into the current body frame. Along any trajectory
//! `ė_R = E(R, R_d) e_Ω`, and `α_d` collects the commanded acceleration seen
//! from the body frame.
//!
//! [`BoundConstants`] holds the quadratic bounds
//! `b1‖e_R‖² ≤ Ψ` (everywhere) and `Ψ ≤ b2‖e_R‖²` (on `Ψ < psi_bar`).

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::so3::{hat, vee, Mat3, Rotation, Vec3};
use crate::trajectory::CommandSample;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GainError {
    #[error("gain matrix entries must be positive, got {0:?}")]
    NotPositive([f64; 3]),
    #[error("gain matrix entries must be pairwise distinct, got {0:?}")]
    NotDistinct([f64; 3]),
    #[error("psi_bar = {psi_bar} must lie in (0, h1 = {h1})")]
    PsiBarOutOfRange { psi_bar: f64, h1: f64 },
}

/// `G = diag(g1, g2, g3)` with distinct positive entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct GainMatrix([f64; 3]);

impl GainMatrix {
    pub fn new(g1: f64, g2: f64, g3: f64) -> Result<Self, GainError> {
        let g = [g1, g2, g3];
        if g.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(GainError::NotPositive(g));
        }
        if g1 == g2 || g2 == g3 || g3 == g1 {
            return Err(GainError::NotDistinct(g));
        }
        Ok(Self(g))
    }

    /// `diag(0.9, 1.0, 1.1)`.
    pub fn default_weights() -> Self {
        Self([0.9, 1.0, 1.1])
    }

    #[cfg(test)]
    pub(crate) fn equal_for_tests(g: f64) -> Self {
        Self([g, g, g])
    }

    pub fn entries(&self) -> [f64; 3] {
        self.0
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&Vec3::from(self.0))
    }

    pub fn trace(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Pairwise sums `(g1+g2, g2+g3, g3+g1)`.
    fn pair_sums(&self) -> [f64; 3] {
        let [g1, g2, g3] = self.0;
        [g1 + g2, g2 + g3, g3 + g1]
    }

    fn pair_diffs(&self) -> [f64; 3] {
        let [g1, g2, g3] = self.0;
        [g1 - g2, g2 - g3, g3 - g1]
    }
}

impl Default for GainMatrix {
    fn default() -> Self {
        Self::default_weights()
    }
}

impl TryFrom<[f64; 3]> for GainMatrix {
    type Error = GainError;
    fn try_from(g: [f64; 3]) -> Result<Self, GainError> {
        Self::new(g[0], g[1], g[2])
    }
}

impl From<GainMatrix> for [f64; 3] {
    fn from(g: GainMatrix) -> Self {
        g.0
    }
}

/// `Ψ(R, R_d) = ½ tr[G(I − R_dᵀR)]`.
pub fn psi(r: &Rotation, rd: &Rotation, g: &GainMatrix) -> f64 {
    let q = rd.matrix().transpose() * r.matrix();
    let [g1, g2, g3] = g.entries();
    0.5 * (g1 * (1.0 - q[(0, 0)]) + g2 * (1.0 - q[(1, 1)]) + g3 * (1.0 - q[(2, 2)]))
}

/// `e_R = ½ (G R_dᵀR − RᵀR_d G)^∨`.
pub fn attitude_error_vector(r: &Rotation, rd: &Rotation, g: &GainMatrix) -> Vec3 {
    let gm = g.matrix();
    let q = rd.matrix().transpose() * r.matrix();
    // G Q − Qᵀ G is exactly skew, so vee's symmetrization is a no-op here.
    0.5 * vee(&(gm * q - q.transpose() * gm))
}

/// `e_Ω = Ω − RᵀR_d Ω_d`.
pub fn angular_velocity_error(r: &Rotation, omega: &Vec3, rd: &Rotation, omega_d: &Vec3) -> Vec3 {
    omega - r.matrix().transpose() * (rd.matrix() * omega_d)
}

/// `E = ½ (tr[RᵀR_d G] I − RᵀR_d G)`.
pub fn transport_matrix(r: &Rotation, rd: &Rotation, g: &GainMatrix) -> Mat3 {
    let a = r.matrix().transpose() * rd.matrix() * g.matrix();
    0.5 * (a.trace() * Mat3::identity() - a)
}

/// `α_d = −Ω̂ RᵀR_d Ω_d + RᵀR_d Ω̇_d`.
pub fn feedforward_acceleration(
    r: &Rotation,
    omega: &Vec3,
    rd: &Rotation,
    omega_d: &Vec3,
    omega_d_dot: &Vec3,
) -> Vec3 {
    let transport = r.matrix().transpose() * rd.matrix();
    -hat(omega) * (transport * omega_d) + transport * omega_d_dot
}

/// `tr(G)/√2`, an upper bound on `‖E(R, R_d)‖` over all attitude pairs.
pub fn transport_bound(g: &GainMatrix) -> f64 {
    g.trace() / SQRT_2
}

/// Constants of the quadratic bounds relating `Ψ` and `‖e_R‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    /// min pairwise sum
    pub h1: f64,
    /// max squared pairwise difference
    pub h2: f64,
    /// max squared pairwise sum
    pub h3: f64,
    /// max pairwise sum
    pub h4: f64,
    /// min squared pairwise sum
    pub h5: f64,
    pub b1: f64,
    pub b2: f64,
    pub psi_bar: f64,
}

impl BoundConstants {
    /// Uses `psi_bar = h1 / 2`.
    pub fn with_default_psi_bar(g: &GainMatrix) -> Self {
        let h1 = min3(g.pair_sums());
        bound_constants(g, 0.5 * h1).expect("h1/2 lies strictly inside (0, h1)")
    }
}

pub fn bound_constants(g: &GainMatrix, psi_bar: f64) -> Result<BoundConstants, GainError> {
    let sums = g.pair_sums();
    let sq = |v: [f64; 3]| v.map(|x| x * x);
    let h1 = min3(sums);
    let h2 = max3(sq(g.pair_diffs()));
    let h3 = max3(sq(sums));
    let h4 = max3(sums);
    let h5 = min3(sq(sums));
    if !(psi_bar > 0.0 && psi_bar < h1) {
        return Err(GainError::PsiBarOutOfRange { psi_bar, h1 });
    }
    Ok(BoundConstants {
        h1,
        h2,
        h3,
        h4,
        h5,
        b1: h1 / (h2 + h3),
        b2: h1 * h4 / (h5 * (h1 - psi_bar)),
        psi_bar,
    })
}

fn min3(v: [f64; 3]) -> f64 {
    v[0].min(v[1]).min(v[2])
}

fn max3(v: [f64; 3]) -> f64 {
    v[0].max(v[1]).max(v[2])
}

/// All tracking errors at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorState {
    pub psi: f64,
    pub e_r: Vec3,
    pub e_omega: Vec3,
    /// `e_Ω + c e_R`
    pub e_a: Vec3,
    pub transport: Mat3,
    pub alpha_d: Vec3,
}

impl ErrorState {
    pub fn compute(r: &Rotation, omega: &Vec3, cmd: &CommandSample, g: &GainMatrix, c: f64) -> Self {
        let e_r = attitude_error_vector(r, &cmd.rd, g);
        let e_omega = angular_velocity_error(r, omega, &cmd.rd, &cmd.omega_d);
        Self {
            psi: psi(r, &cmd.rd, g),
            e_r,
            e_omega,
            e_a: e_omega + c * e_r,
            transport: transport_matrix(r, &cmd.rd, g),
            alpha_d: feedforward_acceleration(r, omega, &cmd.rd, &cmd.omega_d, &cmd.omega_d_dot),
        }
    }
}
