use std::f64::consts::PI;

use attitude_core::attitude_error::{attitude_error_vector, bound_constants, psi, transport_matrix, GainMatrix};
use attitude_core::controllers::{
    adaptive_update_rate_from, robust_term, robust_update_rate_from, EstimatorState, Gains, RobustParams,
};
use attitude_core::eigen::symmetric_eigenvalues;
use attitude_core::so3::{exp_so3, hat, log_so3, spectral_norm, vee, vee_strict, Mat3, Rotation, Vec3};
use attitude_core::trajectory::CommandSample;
use attitude_core::ErrorState;
use proptest::prelude::*;

fn vec3(scale: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-scale..scale).prop_map(Vec3::from)
}

fn mat3(scale: f64) -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-scale..scale).prop_map(|a| Mat3::from_row_slice(&a))
}

fn rotation() -> impl Strategy<Value = Rotation> {
    vec3(PI).prop_map(|v| exp_so3(&v))
}

fn gain_matrix() -> impl Strategy<Value = GainMatrix> {
    (0.1..2.0f64, 0.01..1.0f64, 0.01..1.0f64)
        .prop_map(|(a, d1, d2)| GainMatrix::new(a, a + d1, a + d1 + d2).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn hat_is_skew_and_crosses(v in vec3(10.0), w in vec3(10.0)) {
        let h = hat(&v);
        prop_assert_eq!(h, -h.transpose());
        prop_assert!((h * w - v.cross(&w)).amax() <= 1e-12);
        prop_assert_eq!(vee(&h), v);
        prop_assert!(vee_strict(&h).is_ok());
    }

    #[test]
    fn vee_reads_skew_part(m in mat3(5.0)) {
        let skew = 0.5 * (m - m.transpose());
        prop_assert!((vee(&m) - vee(&skew)).amax() <= 1e-15);
    }

    #[test]
    fn exp_is_a_rotation_with_matching_angle(v in vec3(3.0)) {
        let r = exp_so3(&v);
        prop_assert!(Rotation::new(r.into_matrix()).is_ok());
        // |v| < 2π here, so angles past π wrap to 2π − |v|
        let n = v.norm();
        let expected = if n <= PI { n } else { 2.0 * PI - n };
        prop_assert!((r.angle() - expected).abs() < 1e-10);
        let back = exp_so3(&v) * exp_so3(&(-v));
        prop_assert!((back.matrix() - Mat3::identity()).amax() < 1e-14);
    }

    #[test]
    fn log_inverts_exp_off_the_cut(v in vec3(1.8)) {
        prop_assume!(v.norm() < PI - 1e-3);
        prop_assert!((log_so3(&exp_so3(&v)) - v).amax() < 1e-9);
    }

    #[test]
    fn spectral_norm_sandwich(m in mat3(4.0)) {
        let s = spectral_norm(&m);
        let sv = m.singular_values();
        prop_assert!((s - sv.max()).abs() <= 1e-12 * (1.0 + s));
        prop_assert!(s <= m.norm() + 1e-12);
        prop_assert!(m.norm() <= 3f64.sqrt() * s + 1e-12);
    }

    #[test]
    fn closed_form_eigenvalues_match_reference(m in mat3(3.0)) {
        let sym = 0.5 * (m + m.transpose());
        let mine = symmetric_eigenvalues(&sym);
        let mut reference: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (a, b) in mine.iter().zip(&reference) {
            prop_assert!((a - b).abs() < 1e-12, "{:?} {:?}", mine, reference);
        }
    }

    #[test]
    fn bounds_hold_for_random_weights(g in gain_matrix(), r in rotation(), rd in rotation(), frac in 0.05..0.95f64) {
        let h1 = {
            let e = g.entries();
            (e[0] + e[1]).min(e[1] + e[2]).min(e[0] + e[2])
        };
        let b = bound_constants(&g, frac * h1).unwrap();
        let p = psi(&r, &rd, &g);
        let e2 = attitude_error_vector(&r, &rd, &g).norm_squared();
        prop_assert!(b.b1 * e2 <= p + 1e-14);
        if p < b.psi_bar {
            prop_assert!(p <= b.b2 * e2 + 1e-14);
        }
        prop_assert!(spectral_norm(&transport_matrix(&r, &rd, &g)) <= g.trace() / 2f64.sqrt() + 1e-14);
        prop_assert!(p >= -1e-15 && p <= g.trace() + 1e-14);
    }

    #[test]
    fn update_rates_are_exactly_symmetric(
        r in rotation(), rd in rotation(), omega in vec3(3.0), wd in vec3(2.0), wdd in vec3(2.0), jb in mat3(0.05)
    ) {
        let gains = Gains::paper();
        let cmd = CommandSample { t: 0.0, rd, omega_d: wd, omega_d_dot: wdd };
        let e = ErrorState::compute(&r, &omega, &cmd, &gains.g, gains.c);
        let rate = adaptive_update_rate_from(&e, &omega, &gains);
        prop_assert_eq!(rate, rate.transpose());
        let est = EstimatorState::new(jb);
        let rate = robust_update_rate_from(&e, &omega, &gains, &RobustParams::paper(), &est);
        prop_assert_eq!(rate, rate.transpose());
    }

    #[test]
    fn robust_term_properties(e_a in vec3(5.0), delta in 0.01..2.0f64, eps in 1e-6..1.0f64, d in vec3(1.0)) {
        let p = RobustParams::new(0.01, eps, delta).unwrap();
        let v = robust_term(&e_a, &p);
        prop_assert!(v.norm() <= delta);
        // any |Δ| ≤ δ gives e_A·(Δ + v) ≤ ε
        let dist = if d.norm() > delta { d * (delta / d.norm()) } else { d };
        prop_assert!(e_a.dot(&(dist + v)) <= eps + 1e-12);
    }
}
