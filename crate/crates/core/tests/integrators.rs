mod common;

use attitude_core::dynamics::{
    step_lgvi, step_rk4_projected, BodyState, DynamicsError, InertiaMatrix, IntegratorConfig, IntegratorMethod,
};
use attitude_core::so3::{exp_so3, Mat3, Vec3};
use common::rotation_distance;

fn asymmetric_body() -> InertiaMatrix {
    InertiaMatrix::new(Mat3::new(1.0, 0.1, 0.0, 0.1, 2.0, -0.2, 0.0, -0.2, 3.0)).unwrap()
}

fn lgvi_free(state: BodyState, j: &InertiaMatrix, h: f64, n: usize) -> Vec<BodyState> {
    let cfg = IntegratorConfig::with_method(IntegratorMethod::Lgvi, h);
    let zero = Vec3::zeros();
    let mut out = vec![state];
    let mut s = state;
    for _ in 0..n {
        s = step_lgvi(&s, &zero, &zero, j, &cfg).unwrap();
        out.push(s);
    }
    out
}

fn rk4_free(state: BodyState, j: &InertiaMatrix, h: f64, n: usize) -> BodyState {
    let mut s = state;
    for k in 0..n {
        s = step_rk4_projected(&s, k as f64 * h, h, j, |_, _| Vec3::zeros(), |_, _| Vec3::zeros()).unwrap();
    }
    s
}

#[test]
fn rk4_is_fourth_order_on_isotropic_spin() {
    // J = jI keeps Ω constant, so R(t) = R0 exp(tΩ̂).
    let j = InertiaMatrix::new(0.02 * Mat3::identity()).unwrap();
    let omega = Vec3::new(1.0, -2.0, 0.5);
    let r0 = exp_so3(&Vec3::new(0.2, 0.4, -0.1));
    let t_end = 2.0;
    let exact = (r0 * exp_so3(&(t_end * omega))).into_matrix();
    let errors: Vec<f64> = [40usize, 80, 160]
        .iter()
        .map(|&n| {
            let s = rk4_free(BodyState::new(r0, omega), &j, t_end / n as f64, n);
            (s.r.matrix() - exact).norm()
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 4.0).abs() < 0.3, "{errors:?}");
    }
}

#[test]
fn lgvi_isotropic_spin_has_arcsine_angle() {
    // With J = jI the discrete equation reduces to sin θ = h|Ω|, so each
    // step rotates by asin(h|Ω|) about the fixed axis Ω/|Ω|.
    let j = InertiaMatrix::new(0.02 * Mat3::identity()).unwrap();
    let omega = Vec3::new(1.0, -2.0, 0.5);
    let r0 = exp_so3(&Vec3::new(0.2, 0.4, -0.1));
    let h = 0.01;
    let traj = lgvi_free(BodyState::new(r0, omega), &j, h, 200);
    let per_step = (h * omega.norm()).asin();
    let exact = (r0 * exp_so3(&(200.0 * per_step * omega / omega.norm()))).into_matrix();
    assert!((traj[200].r.matrix() - exact).amax() < 1e-12);
    assert!((traj[200].omega - omega).amax() < 1e-13);
}

#[test]
fn lgvi_keeps_orthogonality_and_momentum() {
    let j = asymmetric_body();
    let s0 = BodyState::new(exp_so3(&Vec3::new(0.5, -0.3, 1.0)), Vec3::new(1.0, 2.0, 3.0));
    let traj = lgvi_free(s0, &j, 1e-3, 10_000);
    let pi0 = s0.spatial_momentum(&j);
    let e0 = s0.kinetic_energy(&j);
    let mut worst_orth: f64 = 0.0;
    let mut worst_mom: f64 = 0.0;
    let mut worst_energy: f64 = 0.0;
    for s in &traj {
        worst_orth = worst_orth.max(s.r.orthogonality_error());
        worst_mom = worst_mom.max((s.spatial_momentum(&j) - pi0).norm() / pi0.norm());
        worst_energy = worst_energy.max((s.kinetic_energy(&j) - e0).abs() / e0);
    }
    assert!(worst_orth < 1e-11, "{worst_orth}");
    // each step conserves momentum to the Newton tolerance, 1e-14 relative
    assert!(worst_mom < 1e-14 * traj.len() as f64, "{worst_mom}");
    assert!(worst_energy < 1e-5, "{worst_energy}");
}

#[test]
fn lgvi_is_second_order_against_fine_reference() {
    let j = asymmetric_body();
    let s0 = BodyState::new(exp_so3(&Vec3::new(0.1, 0.2, 0.3)), Vec3::new(0.5, -1.0, 1.5));
    let reference = rk4_free(s0, &j, 1e-4, 10_000);
    let errors: Vec<f64> = [100usize, 200, 400]
        .iter()
        .map(|&n| {
            let last = *lgvi_free(s0, &j, 1.0 / n as f64, n).last().unwrap();
            rotation_distance(last.r.matrix(), reference.r.matrix())
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.2, "{errors:?}");
    }
}

#[test]
fn integrators_converge_to_each_other() {
    let j = asymmetric_body();
    let s0 = BodyState::new(exp_so3(&Vec3::new(0.1, 0.2, 0.3)), Vec3::new(0.5, -1.0, 1.5));
    let a = rk4_free(s0, &j, 1e-3, 2000);
    let b = *lgvi_free(s0, &j, 1e-3, 2000).last().unwrap();
    let d = rotation_distance(a.r.matrix(), b.r.matrix());
    assert!(d < 1e-5, "{d}");
}

#[test]
fn constant_moment_accelerates_linearly_on_isotropic_body() {
    // J = jI and a constant body moment parallel to Ω: Ω(t) = Ω0 + tM/j, axis fixed.
    let j = InertiaMatrix::new(0.5 * Mat3::identity()).unwrap();
    let axis = Vec3::new(0.0, 0.6, 0.8);
    let m = 0.2 * axis;
    let s0 = BodyState::new(exp_so3(&Vec3::zeros()), axis);
    let cfg = IntegratorConfig::with_method(IntegratorMethod::Lgvi, 1e-2);
    let mut s = s0;
    for _ in 0..100 {
        s = step_lgvi(&s, &m, &m, &j, &cfg).unwrap();
    }
    let expected_omega = axis * (1.0 + 0.2 / 0.5);
    assert!((s.omega - expected_omega).norm() < 1e-12);
    // step k turns by asin(h|Ω_k + (h/2)M/j|) about `axis`
    let angle: f64 = (0..100).map(|k| (1e-2 * (1.0 + 0.4 * (k as f64 + 0.5) * 1e-2)).asin()).sum();
    let exact = exp_so3(&(angle * axis));
    assert!((s.r.matrix() - exact.matrix()).amax() < 1e-12);
}

#[test]
fn newton_iteration_cap_is_enforced() {
    let j = asymmetric_body();
    let s0 = BodyState::new(exp_so3(&Vec3::zeros()), Vec3::new(30.0, -20.0, 10.0));
    let cfg = IntegratorConfig { newton_max_iter: 1, ..IntegratorConfig::with_method(IntegratorMethod::Lgvi, 0.05) };
    let err = step_lgvi(&s0, &Vec3::zeros(), &Vec3::zeros(), &j, &cfg).unwrap_err();
    assert!(matches!(err, DynamicsError::NewtonDiverged { iterations: 1, .. }), "{err:?}");
}
