use serde::Serialize;

use super::series::TimeSeries;

/// Relative tolerance for counting increases of the Lyapunov value.
pub const V_MONOTONICITY_TOL: f64 = 1e-12;

/// Summary of a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub final_e_r: f64,
    pub final_e_omega: f64,
    pub max_e_r_after_settle: f64,
    pub v_violations: usize,
    /// `bound − max ‖z‖²` over recorded samples at or after the settling time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ultimate_bound_margin: Option<f64>,
}

impl Metrics {
    pub fn to_key_value(&self) -> String {
        toml::to_string(self).expect("metrics serialize")
    }
}

/// Counts `V(t+Δt) > V(t) + tol·|V(t)|` as a monotonicity violation.
pub fn compute_metrics(ts: &TimeSeries, settle: f64, ultimate_bound: Option<f64>) -> Metrics {
    let s = ts.samples();
    let Some(last) = s.last() else {
        return Metrics {
            final_e_r: 0.0,
            final_e_omega: 0.0,
            max_e_r_after_settle: 0.0,
            v_violations: 0,
            ultimate_bound_margin: ultimate_bound,
        };
    };
    let after = || s.iter().filter(|x| x.t >= settle);
    let max_e_r_after_settle = after().map(|x| x.e_r.norm()).fold(0.0, f64::max);
    let v_violations = s
        .windows(2)
        .filter(|w| w[1].v > w[0].v + V_MONOTONICITY_TOL * w[0].v.abs())
        .count();
    let ultimate_bound_margin = ultimate_bound.map(|b| {
        let worst = after()
            .map(|x| x.e_r.norm_squared() + x.e_omega.norm_squared() + x.j_tilde_f * x.j_tilde_f)
            .fold(0.0, f64::max);
        b - worst
    });
    Metrics {
        final_e_r: last.e_r.norm(),
        final_e_omega: last.e_omega.norm(),
        max_e_r_after_settle,
        v_violations,
        ultimate_bound_margin,
    }
}

#[cfg(test)]
mod tests {
    use super::super::series::Sample;
    use super::*;
    use crate::so3::{Mat3, Vec3};

    fn flat(t: f64, v: f64, e: f64) -> Sample {
        Sample {
            t,
            r: Mat3::identity(),
            omega: Vec3::zeros(),
            rd: Mat3::identity(),
            omega_d: Vec3::zeros(),
            e_r: Vec3::new(e, 0.0, 0.0),
            e_omega: Vec3::zeros(),
            psi: 0.0,
            u: Vec3::zeros(),
            delta: Vec3::zeros(),
            j_bar: Mat3::zeros(),
            v,
            j_tilde_f: 0.0,
        }
    }

    fn series(points: impl Iterator<Item = Sample>) -> TimeSeries {
        let mut ts = TimeSeries::new();
        points.for_each(|p| ts.push(p));
        ts
    }

    #[test]
    fn zero_error_series_gives_zero_metrics() {
        let ts = series((0..100).map(|i| flat(i as f64 * 0.1, 0.0, 0.0)));
        let m = compute_metrics(&ts, 5.0, None);
        assert_eq!(
            m,
            Metrics {
                final_e_r: 0.0,
                final_e_omega: 0.0,
                max_e_r_after_settle: 0.0,
                v_violations: 0,
                ultimate_bound_margin: None
            }
        );
    }

    #[test]
    fn decreasing_v_has_no_violations() {
        let ts = series((0..100).map(|i| flat(i as f64 * 0.1, 10.0 - i as f64 * 0.1, 0.0)));
        assert_eq!(compute_metrics(&ts, 5.0, None).v_violations, 0);
    }

    #[test]
    fn increases_are_counted() {
        let vs = [3.0, 2.0, 2.5, 2.5, 1.0, 1.0 + 1e-13, 1.2, 0.0, 1e-300];
        let ts = series(vs.iter().enumerate().map(|(i, &v)| flat(i as f64, v, 0.0)));
        assert_eq!(compute_metrics(&ts, 0.0, None).v_violations, 3);
    }

    #[test]
    fn settle_window_and_margin() {
        let ts = series((0..10).map(|i| flat(i as f64, 0.0, if i < 5 { 1.0 } else { 0.1 })));
        let m = compute_metrics(&ts, 5.0, Some(1.0));
        assert!((m.max_e_r_after_settle - 0.1).abs() < 1e-15);
        assert!((m.ultimate_bound_margin.unwrap() - 0.99).abs() < 1e-15);
        assert!(m.to_key_value().contains("v_violations = 0"));
    }
}
