//! Small-matrix geometry of SO(3).
//!
//! Everything here works on fixed 3×3 matrices: the hat/vee isomorphism
//! between R³ and so(3), Rodrigues' exponential and its inverse, projection
//! of a nearly-orthogonal matrix back onto the group, and the matrix 2-norm.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::eigen::symmetric_eigenvalues;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Largest admissible ‖RᵀR − I‖_F and |det R − 1| for a [`Rotation`].
pub const ROTATION_TOL: f64 = 1e-12;

/// Largest symmetric part accepted by [`vee_strict`].
pub const VEE_STRICT_TOL: f64 = 1e-10;

/// Below this angle the Rodrigues coefficients switch to their Taylor series.
const SMALL_ANGLE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum So3Error {
    #[error("matrix is not skew-symmetric: symmetric part has max entry {0:e}")]
    NotSkew(f64),
    #[error("matrix is not a rotation: ‖RᵀR − I‖_F = {orthogonality:e}, det = {det}")]
    NotRotation { orthogonality: f64, det: f64 },
    #[error("cannot project onto SO(3): det = {0} is not positive")]
    NonPositiveDeterminant(f64),
    #[error("matrix has non-finite entries")]
    NonFinite,
}

/// A 3×3 matrix on SO(3).
#[derive(Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    /// Accepts `m` only if it satisfies the orthogonality and determinant
    /// tolerances of [`ROTATION_TOL`].
    pub fn new(m: Mat3) -> Result<Self, So3Error> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(So3Error::NonFinite);
        }
        let orthogonality = orthogonality_error(&m);
        let det = m.determinant();
        if orthogonality > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(So3Error::NotRotation { orthogonality, det });
        }
        Ok(Self(m))
    }

    /// Wraps `m` without checking. Used for intermediate Runge–Kutta stages
    /// and for group products whose roundoff is tracked by the caller.
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat3 {
        self.0
    }

    /// Group inverse.
    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// ‖RᵀR − I‖_F.
    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.0)
    }

    /// Rotation angle in [0, π].
    pub fn angle(&self) -> f64 {
        log_so3(self).norm()
    }
}

impl fmt::Debug for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "Rotation([[{}, {}, {}], [{}, {}, {}], [{}, {}, {}]])",
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)]
        )
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<&Rotation> for &Rotation {
    type Output = Rotation;
    fn mul(self, rhs: &Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for &Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<Vec3> for Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

fn orthogonality_error(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).norm()
}

/// Skew-symmetric matrix with `hat(v) * w == v × w`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. Reads only the skew part of `m`, i.e. returns
/// `vee((m − mᵀ)/2)`.
pub fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// [`vee`] that rejects inputs whose symmetric part exceeds
/// [`VEE_STRICT_TOL`] in any entry.
pub fn vee_strict(m: &Mat3) -> Result<Vec3, So3Error> {
    let sym = 0.5 * (m + m.transpose());
    let worst = sym.amax();
    if worst > VEE_STRICT_TOL || !worst.is_finite() {
        return Err(So3Error::NotSkew(worst));
    }
    Ok(vee(m))
}

/// Rodrigues' formula.
pub fn exp_so3(v: &Vec3) -> Rotation {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = hat(v);
    Rotation(Mat3::identity() + a * k + b * (k * k))
}

/// Inverse of [`exp_so3`], returning the rotation vector with norm in [0, π].
///
/// At exactly π the axis is ambiguous; the sign is fixed so that its
/// largest-magnitude component is positive, the first one on ties.
pub fn log_so3(r: &Rotation) -> Vec3 {
    let m = &r.0;
    let w = vee(m);
    let sin_theta = w.norm();
    let cos_theta = 0.5 * (m.trace() - 1.0);
    let theta = sin_theta.atan2(cos_theta);

    if theta < SMALL_ANGLE {
        return w * (1.0 + theta * theta / 6.0);
    }
    if theta < 0.5 * PI {
        return w * (theta / sin_theta);
    }

    // (R + Rᵀ)/2 − cosθ I = (1 − cosθ) n nᵀ; read the axis off its best column.
    let b = 0.5 * (m + m.transpose()) - cos_theta * Mat3::identity();
    let diag = b.diagonal();
    let col = diag.imax();
    let mut axis = b.column(col).into_owned();
    axis /= axis.norm();
    if sin_theta > 1e-14 {
        if axis.dot(&w) < 0.0 {
            axis = -axis;
        }
    } else {
        canonical_axis_sign(&mut axis);
    }
    axis * theta
}

fn canonical_axis_sign(axis: &mut Vec3) {
    let mut lead = 0;
    for i in 1..3 {
        if axis[i].abs() > axis[lead].abs() {
            lead = i;
        }
    }
    if axis[lead] < 0.0 {
        *axis = -*axis;
    }
}

/// Closest rotation to `m` in Frobenius norm (the orthogonal polar factor).
pub fn project_to_so3(m: &Mat3) -> Result<Rotation, So3Error> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(So3Error::NonFinite);
    }
    let det = m.determinant();
    if det <= 0.0 {
        return Err(So3Error::NonPositiveDeterminant(det));
    }
    let svd = m.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(So3Error::NonFinite);
    };
    Ok(Rotation(u * v_t))
}

/// Matrix 2-norm, via the largest eigenvalue of mᵀm.
pub fn spectral_norm(m: &Mat3) -> f64 {
    let eig = symmetric_eigenvalues(&(m.transpose() * m));
    eig[2].max(0.0).sqrt()
}
