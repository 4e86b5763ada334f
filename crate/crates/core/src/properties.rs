//! Seeded sampling checks of the hat-map identities and attitude-error bounds.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::attitude_error::{
    attitude_error_vector, bound_constants, psi, BoundConstants, transport_bound, transport_matrix, GainMatrix,
};
use crate::so3::{exp_so3, hat, log_so3, spectral_norm, vee, Mat3, Rotation, Vec3};

/// Haar-uniform rotation (Shoemake's quaternion construction).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (t2, t3) = (2.0 * PI * u2, 2.0 * PI * u3);
    let q = Quaternion::new(b * t3.cos(), a * t2.sin(), a * t2.cos(), b * t3.sin());
    let m = UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
    Rotation::from_matrix_unchecked(m)
}

/// Components uniform in `[-scale, scale]`.
pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Vec3 {
    Vec3::from_fn(|_, _| rng.random_range(-scale..=scale))
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Mat3 {
    Mat3::from_fn(|_, _| rng.random_range(-scale..=scale))
}

/// Random unit axis times an angle uniform in `[0, max_angle]`.
pub fn random_rotation_vector<R: Rng + ?Sized>(rng: &mut R, max_angle: f64) -> Vec3 {
    let axis = loop {
        let v = random_vector(rng, 1.0);
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break v / n;
        }
    };
    axis * rng.random_range(0.0..=max_angle)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub cases: usize,
    /// Largest residual, or largest `lhs − rhs` for inequalities.
    pub worst: f64,
    pub tolerance: f64,
    pub violations: usize,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} cases={:<7} worst={:+.3e} tol={:.0e} violations={}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.tolerance,
            self.violations
        )
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    worst: f64,
    tolerance: f64,
    violations: usize,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, cases: 0, worst: f64::NEG_INFINITY, tolerance, violations: 0 }
    }

    fn add(&mut self, value: f64) {
        self.cases += 1;
        self.worst = self.worst.max(value);
        if !(value <= self.tolerance) {
            self.violations += 1;
        }
    }

    fn finish(self) -> PropertyOutcome {
        PropertyOutcome {
            name: self.name,
            cases: self.cases,
            worst: if self.cases == 0 { 0.0 } else { self.worst },
            tolerance: self.tolerance,
            violations: self.violations,
        }
    }
}

pub const IDENTITY_TOL: f64 = 1e-12;
/// Slack for the sampled inequalities, absorbing roundoff in `Ψ`.
pub const BOUND_TOL: f64 = 1e-14;

/// `x̂y = −ŷx`, `tr[Ax̂] = −xᵀ vee(A − Aᵀ)`, `x̂A + Aᵀx̂ = ((tr A)I − A)x)^`,
/// `Rx̂Rᵀ = (Rx)^` and the exp/log roundtrip.
pub fn hat_identities(seed: u64, cases: usize) -> Vec<PropertyOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut anti = Tally::new("hat_anticommutes", IDENTITY_TOL);
    let mut trace = Tally::new("trace_of_a_hat", IDENTITY_TOL);
    let mut sym = Tally::new("hat_a_plus_a_t_hat", IDENTITY_TOL);
    let mut conj = Tally::new("rotation_conjugates_hat", IDENTITY_TOL);
    let mut roundtrip = Tally::new("exp_log_roundtrip", 1e-9);
    for _ in 0..cases {
        let x = random_vector(&mut rng, 1.0);
        let y = random_vector(&mut rng, 1.0);
        let a = random_matrix(&mut rng, 1.0);
        let r = random_rotation(&mut rng);

        anti.add((hat(&x) * y + hat(&y) * x).amax());
        trace.add(((a * hat(&x)).trace() + x.dot(&vee(&(a - a.transpose())))).abs());
        let lhs = hat(&x) * a + a.transpose() * hat(&x);
        sym.add((lhs - hat(&((Mat3::identity() * a.trace() - a) * x))).amax());
        conj.add((r.matrix() * hat(&x) * r.matrix().transpose() - hat(&(r * x))).amax());

        let v = random_rotation_vector(&mut rng, PI - 1e-3);
        let back = exp_so3(&log_so3(&exp_so3(&v)));
        roundtrip.add((back.matrix() - exp_so3(&v).matrix()).amax());
    }
    vec![anti.finish(), trace.finish(), sym.finish(), conj.finish(), roundtrip.finish()]
}

/// Samples `(R, R_d)` pairs: even draws are Haar pairs, odd draws perturb
/// `R_d` by an axis-angle rotation with angle uniform in `[0, π]`.
fn sample_pair<R: Rng + ?Sized>(rng: &mut R, i: usize) -> (Rotation, Rotation) {
    let rd = random_rotation(rng);
    let r = if i.is_multiple_of(2) { random_rotation(rng) } else { rd * exp_so3(&random_rotation_vector(rng, PI)) };
    (r, rd)
}

/// `b₁‖e_R‖² ≤ Ψ`, `Ψ ≤ b₂‖e_R‖²` whenever `Ψ < ψ̄`, `‖E‖ ≤ tr(G)/√2`
/// and `tr[RᵀR_dG] ≤ tr G`.
pub fn error_bounds(seed: u64, cases: usize, g: &GainMatrix, psi_bar: f64) -> Vec<PropertyOutcome> {
    let b = bound_constants(g, psi_bar).expect("psi_bar inside (0, h1)");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lower = Tally::new("psi_lower_bound", BOUND_TOL);
    let mut upper = Tally::new("psi_upper_bound", BOUND_TOL);
    let mut transport = Tally::new("transport_norm_bound", BOUND_TOL);
    let mut trace = Tally::new("trace_bound", BOUND_TOL);
    let bound = transport_bound(g);
    for i in 0..cases {
        let (r, rd) = sample_pair(&mut rng, i);
        let p = psi(&r, &rd, g);
        let e2 = attitude_error_vector(&r, &rd, g).norm_squared();
        lower.add(b.b1 * e2 - p);
        if p < psi_bar {
            upper.add(p - b.b2 * e2);
        }
        transport.add(spectral_norm(&transport_matrix(&r, &rd, g)) - bound);
        trace.add((r.matrix().transpose() * rd.matrix() * g.matrix()).trace() - g.trace());
    }
    vec![lower.finish(), upper.finish(), transport.finish(), trace.finish()]
}

/// `e_R` vanishes at `R_d` and `R_d exp(π ê_i)`, and stays away from zero
/// at points farther than `0.01` rad from all four.
pub fn critical_points(seed: u64, cases: usize, g: &GainMatrix) -> Vec<PropertyOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut at = Tally::new("critical_points_zero", 1e-14);
    let mut away = Tally::new("noncritical_nonzero", -1e-6);
    let flips = [Vec3::zeros(), PI * Vec3::x(), PI * Vec3::y(), PI * Vec3::z()];
    for _ in 0..cases {
        let rd = random_rotation(&mut rng);
        for f in &flips {
            at.add(attitude_error_vector(&(rd * exp_so3(f)), &rd, g).amax());
        }
        let r = loop {
            let r = random_rotation(&mut rng);
            let q = rd.transpose() * r;
            let far = flips.iter().all(|f| log_so3(&(exp_so3(f).transpose() * q)).norm() > 0.01);
            if far {
                break r;
            }
        };
        away.add(-attitude_error_vector(&r, &rd, g).norm());
    }
    vec![at.finish(), away.finish()]
}

/// Every sampled property with the default gain weights.
pub fn run_all(seed: u64, cases: usize) -> Vec<PropertyOutcome> {
    let g = GainMatrix::default_weights();
    let psi_bar = BoundConstants::with_default_psi_bar(&g).psi_bar;
    let mut out = hat_identities(seed, cases);
    out.extend(error_bounds(seed.wrapping_add(1), cases, &g, psi_bar));
    out.extend(critical_points(seed.wrapping_add(2), cases, &g));
    out
}
