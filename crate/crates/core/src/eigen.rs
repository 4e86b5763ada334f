//! Closed-form eigenvalues of small symmetric matrices.

use std::f64::consts::PI;

use nalgebra::Matrix2;

use crate::so3::Mat3;

/// Eigenvalues of a symmetric 3×3 matrix in ascending order.
///
/// Uses the trigonometric solution of the characteristic cubic. Only the
/// upper triangle of `a` is read.
pub fn symmetric_eigenvalues(a: &Mat3) -> [f64; 3] {
    let (a00, a11, a22) = (a[(0, 0)], a[(1, 1)], a[(2, 2)]);
    let (a01, a02, a12) = (a[(0, 1)], a[(0, 2)], a[(1, 2)]);
    let off = a01 * a01 + a02 * a02 + a12 * a12;
    if off == 0.0 {
        let mut d = [a00, a11, a22];
        d.sort_by(f64::total_cmp);
        return d;
    }
    let q = (a00 + a11 + a22) / 3.0;
    let (b00, b11, b22) = (a00 - q, a11 - q, a22 - q);
    let p = ((b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * off) / 6.0).sqrt();
    // det((A − qI)/p) / 2
    let det_b = b00 * (b11 * b22 - a12 * a12) - a01 * (a01 * b22 - a12 * a02)
        + a02 * (a01 * a12 - b11 * a02);
    let r = (det_b / (2.0 * p * p * p)).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let largest = q + 2.0 * p * phi.cos();
    let smallest = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let middle = 3.0 * q - largest - smallest;
    [smallest, middle, largest]
}

/// Eigenvalues of a symmetric 2×2 matrix in ascending order.
pub fn symmetric_eigenvalues2(a: &Matrix2<f64>) -> [f64; 2] {
    let mean = 0.5 * (a[(0, 0)] + a[(1, 1)]);
    let half_gap = 0.5 * (a[(0, 0)] - a[(1, 1)]);
    let radius = half_gap.hypot(a[(0, 1)]);
    [mean - radius, mean + radius]
}
