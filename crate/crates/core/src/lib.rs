//! Geometric adaptive and robust adaptive attitude tracking on SO(3).
//!
//! The crate is organized bottom-up: [`so3`] geometry, the trace-form
//! [`attitude_error`] function, desired-attitude [`trajectory`] generators,
//! rigid-body [`dynamics`] with two integrators, the adaptive and robust
//! [`controllers`] with gain-condition checks, and the closed-loop
//! [`harness`] that runs configured scenarios and exports time series.

pub mod attitude_error;
pub mod controllers;
pub mod dynamics;
pub mod eigen;
pub mod harness;
pub mod properties;
pub mod so3;
pub mod trajectory;

pub use attitude_error::{BoundConstants, ErrorState, GainMatrix};
pub use controllers::{EstimatorState, GainReport, Gains, RobustParams};
pub use dynamics::{BodyState, InertiaMatrix, IntegratorConfig, IntegratorMethod};
pub use harness::{run_scenario, Scenario, ScenarioConfig, TimeSeries};
pub use so3::{Mat3, Rotation, Vec3};
