//! TOML scenario documents.
//!
//! A document deserializes into [`ScenarioConfig`], which mirrors the file
//! layout; [`ScenarioConfig::build`] validates it into a runnable
//! [`Scenario`]. Unknown keys are rejected at every level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CaseId, CommandSpec, ControllerKind, DisturbanceModel, HarnessError, Scenario};
use crate::attitude_error::{BoundConstants, GainMatrix};
use crate::controllers::{c_max, Gains, RobustParams};
use crate::dynamics::{
    InertiaMatrix, IntegratorConfig, IntegratorMethod, DEFAULT_NEWTON_MAX_ITER, DEFAULT_NEWTON_TOL, DEFAULT_STEP,
};
use crate::so3::{exp_so3, Mat3, Rotation, Vec3};
use crate::trajectory::EulerCommand;

pub const CASE_I: &str = include_str!("../../configs/case_i.toml");
pub const CASE_II: &str = include_str!("../../configs/case_ii.toml");
pub const CASE_III: &str = include_str!("../../configs/case_iii.toml");

/// Fraction of `c_max` used when a document leaves `gains.c` unset.
pub const DEFAULT_C_FRACTION: f64 = 0.99;

type Rows = [[f64; 3]; 3];

fn mat_from_rows(rows: &Rows) -> Mat3 {
    Mat3::from_fn(|i, j| rows[i][j])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub case_id: CaseId,
    pub duration: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Record every n-th integration step.
    #[serde(default = "default_output_every")]
    pub output_every: usize,
    #[serde(default)]
    pub seed: u64,
    /// Run even when the gain conditions fail.
    #[serde(default)]
    pub force_gains: bool,
    /// Start of the metrics settling window, seconds.
    #[serde(default = "default_settle")]
    pub settle: f64,
    #[serde(default)]
    pub controller: Option<ControllerKind>,
    #[serde(default)]
    pub integrator: IntegratorSection,
    pub gains: GainsSection,
    #[serde(default)]
    pub robust: Option<RobustParams>,
    pub plant: PlantSection,
    #[serde(default)]
    pub command: CommandSection,
    #[serde(default)]
    pub disturbance: Option<DisturbanceSection>,
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

fn default_output_every() -> usize {
    10
}

fn default_settle() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub method: IntegratorMethod,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self { method: IntegratorMethod::Lgvi, newton_tol: DEFAULT_NEWTON_TOL, newton_max_iter: DEFAULT_NEWTON_MAX_ITER }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub k_r: f64,
    pub k_omega: f64,
    pub k_j: f64,
    /// Defaults to `0.99 · c_max`.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub g: GainMatrix,
    /// Defaults to `h1 / 2`.
    #[serde(default)]
    pub psi_bar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InertiaSpec {
    Named(String),
    Matrix(Rows),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttitudeSpec {
    Identity {},
    Matrix { value: Rows },
    RotationVector { value: [f64; 3] },
    /// Uniformly random axis drawn from the scenario seed.
    Random { angle: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub inertia: InertiaSpec,
    pub j_bar0: Rows,
    #[serde(default = "identity_attitude")]
    pub r0: AttitudeSpec,
    #[serde(default)]
    pub omega0: [f64; 3],
}

fn identity_attitude() -> AttitudeSpec {
    AttitudeSpec::Identity {}
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CommandSection {
    Paper {},
    Euler {
        amplitude_phi: f64,
        amplitude_theta: f64,
        frequency: f64,
        #[serde(default)]
        psi_const: f64,
    },
    Fixed {
        rotation_vector: [f64; 3],
    },
}

impl Default for CommandSection {
    fn default() -> Self {
        CommandSection::Paper {}
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceSection {
    None {},
    Paper {},
    Constant { value: [f64; 3] },
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Parses `text`, applies `key.path=value` overrides, then deserializes.
    pub fn from_toml_with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self, HarnessError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o.as_ref())?;
        }
        table.try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config is representable in TOML")
    }

    pub fn build(&self) -> Result<Scenario, HarnessError> {
        let bad = |msg: String| HarnessError::Config(msg);
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(bad(format!("duration must be positive, got {}", self.duration)));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(bad(format!("step must be positive, got {}", self.step)));
        }
        let n_steps = (self.duration / self.step).round();
        if (n_steps * self.step - self.duration).abs() > 1e-9 * self.duration {
            return Err(bad(format!("step {} does not divide duration {}", self.step, self.duration)));
        }
        if self.output_every == 0 {
            return Err(bad("output_every must be at least 1".into()));
        }
        if !(self.settle >= 0.0 && self.settle < self.duration) {
            return Err(bad(format!("settle {} must lie in [0, duration)", self.settle)));
        }

        let integrator = IntegratorConfig {
            step_size: self.step,
            method: self.integrator.method,
            newton_tol: self.integrator.newton_tol,
            newton_max_iter: self.integrator.newton_max_iter,
        };
        integrator.validate()?;

        let j_true = match &self.plant.inertia {
            InertiaSpec::Named(name) if name == "paper" => InertiaMatrix::from_paper(),
            InertiaSpec::Named(name) => return Err(bad(format!("unknown inertia preset {name:?}"))),
            InertiaSpec::Matrix(rows) => InertiaMatrix::new(mat_from_rows(rows))?,
        };

        let g = self.gains.g;
        let psi_bar = self.gains.psi_bar.unwrap_or(BoundConstants::with_default_psi_bar(&g).psi_bar);
        let c = match self.gains.c {
            Some(c) => c,
            None => {
                DEFAULT_C_FRACTION
                    * c_max(self.gains.k_r, self.gains.k_omega, &g, j_true.lambda_min(), j_true.lambda_max())
            }
        };
        let gains = Gains::new(self.gains.k_r, self.gains.k_omega, self.gains.k_j, c, g)?;

        let controller = self.controller.unwrap_or(match self.case_id {
            CaseId::RobustWithDist => ControllerKind::Robust,
            CaseId::Custom if self.robust.is_some() => ControllerKind::Robust,
            _ => ControllerKind::Adaptive,
        });
        let robust = match (controller, self.robust) {
            (ControllerKind::Robust, None) => {
                return Err(bad("robust controller requires a [robust] section".into()));
            }
            (_, Some(r)) => {
                r.validate()?;
                Some(r)
            }
            (_, None) => None,
        };

        let disturbance = match &self.disturbance {
            Some(DisturbanceSection::None {}) => DisturbanceModel::None,
            Some(DisturbanceSection::Paper {}) => DisturbanceModel::Paper,
            Some(DisturbanceSection::Constant { value }) => DisturbanceModel::Constant(Vec3::from(*value)),
            None => match self.case_id {
                CaseId::AdaptiveWithDist | CaseId::RobustWithDist => DisturbanceModel::Paper,
                _ => DisturbanceModel::None,
            },
        };

        let command = match &self.command {
            CommandSection::Paper {} => CommandSpec::Euler(EulerCommand::paper()),
            CommandSection::Euler { amplitude_phi, amplitude_theta, frequency, psi_const } => {
                CommandSpec::Euler(EulerCommand::new(*amplitude_phi, *amplitude_theta, *frequency, *psi_const)?)
            }
            CommandSection::Fixed { rotation_vector } => CommandSpec::Fixed(exp_so3(&Vec3::from(*rotation_vector))),
        };

        let r0 = match &self.plant.r0 {
            AttitudeSpec::Identity {} => Rotation::identity(),
            AttitudeSpec::Matrix { value } => Rotation::new(mat_from_rows(value))?,
            AttitudeSpec::RotationVector { value } => exp_so3(&Vec3::from(*value)),
            AttitudeSpec::Random { angle } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let axis = loop {
                    let v = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
                    let n = v.norm();
                    if n > 1e-3 && n <= 1.0 {
                        break v / n;
                    }
                };
                exp_so3(&(axis * *angle))
            }
        };

        let omega0 = Vec3::from(self.plant.omega0);
        let j_bar0 = mat_from_rows(&self.plant.j_bar0);
        if omega0.iter().chain(j_bar0.iter()).any(|v| !v.is_finite()) {
            return Err(bad("initial conditions must be finite".into()));
        }

        Ok(Scenario {
            case_id: self.case_id,
            duration: self.duration,
            n_steps: n_steps as usize,
            output_every: self.output_every,
            integrator,
            controller,
            gains,
            robust,
            psi_bar,
            j_true,
            j_bar0,
            r0,
            omega0,
            command,
            disturbance,
            seed: self.seed,
            settle: self.settle,
            force_gains: self.force_gains,
        })
    }
}

/// Applies one `dotted.key=value` override. The value is read as a TOML
/// value when it parses as one, otherwise as a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), HarnessError> {
    let bad = || HarnessError::Config(format!("override {assignment:?} is not of the form key.path=value"));
    let (path, raw) = assignment.split_once('=').ok_or_else(bad)?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(bad());
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").ok_or_else(bad)?,
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let (last, parents) = keys.split_last().ok_or_else(bad)?;
    let mut node = table;
    for key in parents {
        let entry = node
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("override path {path:?}: {key:?} is not a table")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

pub fn bundled(case: CaseId) -> Option<&'static str> {
    match case {
        CaseId::AdaptiveNoDist => Some(CASE_I),
        CaseId::AdaptiveWithDist => Some(CASE_II),
        CaseId::RobustWithDist => Some(CASE_III),
        CaseId::Custom => None,
    }
}
