#![allow(dead_code)]

use attitude_core::so3::{exp_so3, hat, Mat3, Rotation, Vec3};

/// Smooth test trajectory `R(t) = exp(t a) R0 exp(t² b)` with closed-form
/// body rate `Ω = exp(−t² b̂) R0ᵀ a + 2t b` and its derivative.
pub struct Wobble {
    pub r0: Rotation,
    pub a: Vec3,
    pub b: Vec3,
}

impl Wobble {
    pub fn standard() -> Self {
        Self { r0: exp_so3(&Vec3::new(0.4, -0.3, 0.8)), a: Vec3::new(0.7, -1.1, 0.5), b: Vec3::new(0.3, 0.2, -0.4) }
    }

    pub fn r(&self, t: f64) -> Rotation {
        exp_so3(&(t * self.a)) * self.r0 * exp_so3(&(t * t * self.b))
    }

    pub fn omega(&self, t: f64) -> Vec3 {
        exp_so3(&(-t * t * self.b)) * (self.r0.transpose() * self.a) + 2.0 * t * self.b
    }

    pub fn omega_dot(&self, t: f64) -> Vec3 {
        let q = exp_so3(&(-t * t * self.b)) * (self.r0.transpose() * self.a);
        -2.0 * t * hat(&self.b) * q + 2.0 * self.b
    }
}

/// `log₂(err(h)/err(h/2))` of a central difference of `f` against `exact`.
pub fn central_difference_order<F>(f: F, exact: f64, t: f64, h: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let fd = |h: f64| (f(t + h) - f(t - h)) / (2.0 * h);
    let e1 = (fd(h) - exact).abs();
    let e2 = (fd(0.5 * h) - exact).abs();
    ((e1 / e2).log2(), e1)
}

/// Vector version: the worst component-wise order.
pub fn central_difference_order_vec<F>(f: F, exact: Vec3, t: f64, h: f64) -> (f64, f64)
where
    F: Fn(f64) -> Vec3,
{
    let fd = |h: f64| (f(t + h) - f(t - h)) / (2.0 * h);
    let e1 = (fd(h) - exact).norm();
    let e2 = (fd(0.5 * h) - exact).norm();
    ((e1 / e2).log2(), e1)
}

pub fn mat_central_difference_order<F>(f: F, exact: Mat3, t: f64, h: f64) -> (f64, f64)
where
    F: Fn(f64) -> Mat3,
{
    let fd = |h: f64| (f(t + h) - f(t - h)) / (2.0 * h);
    let e1 = (fd(h) - exact).norm();
    let e2 = (fd(0.5 * h) - exact).norm();
    ((e1 / e2).log2(), e1)
}

/// `Ψ` for `R = R_d exp(θŝ)`: `½(1 − cos θ)(tr G − sᵀGs)`.
pub fn psi_axis_angle(g: [f64; 3], s: Vec3, theta: f64) -> f64 {
    let gs = Vec3::new(g[0] * s.x, g[1] * s.y, g[2] * s.z);
    0.5 * (1.0 - theta.cos()) * (g.iter().sum::<f64>() - s.dot(&gs))
}

/// `‖e_R‖²` for `R = R_d exp(θŝ)`:
/// `¼[sin²θ ‖(tr G·I − G)s‖² + (1 − cos θ)² ‖s × Gs‖²]`.
pub fn er_normsq_axis_angle(g: [f64; 3], s: Vec3, theta: f64) -> f64 {
    let tr: f64 = g.iter().sum();
    let gs = Vec3::new(g[0] * s.x, g[1] * s.y, g[2] * s.z);
    let a = tr * s - gs;
    let b = s.cross(&gs);
    0.25 * (theta.sin().powi(2) * a.norm_squared() + (1.0 - theta.cos()).powi(2) * b.norm_squared())
}

/// `tr[RᵀR_dG]` for `R = R_d exp(θŝ)`: `tr G − (1 − cos θ)(tr G − sᵀGs)`.
pub fn trace_axis_angle(g: [f64; 3], s: Vec3, theta: f64) -> f64 {
    let gs = Vec3::new(g[0] * s.x, g[1] * s.y, g[2] * s.z);
    let tr: f64 = g.iter().sum();
    tr - (1.0 - theta.cos()) * (tr - s.dot(&gs))
}

/// Polar factor by Newton's iteration `X ← ½(X + X⁻ᵀ)`.
pub fn newton_polar(m: &Mat3) -> Mat3 {
    let mut x = *m;
    for _ in 0..100 {
        let next = 0.5 * (x + x.try_inverse().expect("invertible").transpose());
        if (next - x).amax() < 1e-16 {
            return next;
        }
        x = next;
    }
    x
}

/// Geodesic distance between two rotations.
pub fn rotation_distance(a: &Mat3, b: &Mat3) -> f64 {
    let c = ((a.transpose() * b).trace() - 1.0) / 2.0;
    let s = attitude_core::so3::vee(&(a.transpose() * b)).norm();
    s.atan2(c).abs()
}
