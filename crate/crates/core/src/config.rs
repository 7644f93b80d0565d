//! JSON scenario configuration.
//!
//! ```json
//! {
//!   "name": "fixture",
//!   "inertia": { "body": [3, 2, 1], "rotor": [1, 1, 1] },
//!   "initial": {
//!     "attitude": { "axis": [0, 0, 1], "angle": 0 },
//!     "theta": [0, 0, 0],
//!     "omega": [1, 1, 0],
//!     "omega_r": [0, 0, 1]
//!   },
//!   "step": { "dt": 0.001, "t_end": 10, "method": "rk4" },
//!   "formulations": ["ep", "stage_s", "stage_o_mc", "stage_o_mech"],
//!   "tolerances": { "omega_deviation": 1e-9 },
//!   "output": { "dir": "out", "stride": 100 }
//! }
//! ```
//!
//! Inertia entries are either diagonals or full 3×3 matrices. The attitude is
//! either `{axis, angle}` or `{matrix}` and defaults to the identity. `theta`,
//! `method`, `tolerances` and `output` are optional.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::algebra::{InertiaModel, Mat3, Rotation, SpdMatrix, Vec3};
use crate::formulations::{FormulationKind, FullState};
use crate::harness::{Scenario, ScenarioError, Tolerances};
use crate::integrators::{Method, StepSpec, StepSpecError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

impl ConfigError {
    fn field(field: impl Into<String>, message: impl ToString) -> Self {
        ConfigError::Field {
            field: field.into(),
            message: message.to_string(),
        }
    }

    /// Dotted path of the offending field, if any.
    pub fn field_path(&self) -> Option<&str> {
        match self {
            ConfigError::Field { field, .. } => Some(field),
            ConfigError::Io { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
enum MatrixInput {
    Diagonal([f64; 3]),
    Full([[f64; 3]; 3]),
}

impl MatrixInput {
    fn matrix(self) -> Mat3 {
        match self {
            MatrixInput::Diagonal(d) => Mat3::diagonal(d),
            MatrixInput::Full(rows) => Mat3::from_rows(rows),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInertia {
    body: Option<MatrixInput>,
    rotor: Option<MatrixInput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttitude {
    axis: Option<[f64; 3]>,
    angle: Option<f64>,
    matrix: Option<[[f64; 3]; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    attitude: Option<RawAttitude>,
    theta: Option<Vec3>,
    omega: Option<Vec3>,
    omega_r: Option<Vec3>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    dt: Option<f64>,
    t_end: Option<f64>,
    method: Option<Method>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    stride: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    inertia: Option<RawInertia>,
    initial: Option<RawInitial>,
    step: Option<RawStep>,
    formulations: Option<Vec<FormulationKind>>,
    tolerances: Option<Tolerances>,
    output: Option<RawOutput>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputOptions {
    pub dir: PathBuf,
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub scenario: Scenario,
    pub output: OutputOptions,
}

fn required<T>(value: Option<T>, field: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError::field(field, "missing required field"))
}

fn attitude(raw: Option<RawAttitude>) -> Result<Rotation, ConfigError> {
    let Some(raw) = raw else {
        return Ok(Rotation::IDENTITY);
    };
    match (raw.axis, raw.angle, raw.matrix) {
        (None, None, Some(rows)) => Rotation::from_matrix(Mat3::from_rows(rows))
            .map_err(|e| ConfigError::field("initial.attitude.matrix", e)),
        (Some(axis), Some(angle), None) => {
            let axis = Vec3::from_array(axis);
            if !axis.is_finite() || !angle.is_finite() {
                return Err(ConfigError::field(
                    "initial.attitude",
                    "non-finite axis or angle",
                ));
            }
            if axis.norm() == 0.0 && angle != 0.0 {
                return Err(ConfigError::field(
                    "initial.attitude.axis",
                    "zero axis with nonzero angle",
                ));
            }
            if axis.norm() == 0.0 {
                return Ok(Rotation::IDENTITY);
            }
            Ok(Rotation::from_axis_angle(axis, angle))
        }
        (Some(_), None, None) => Err(ConfigError::field(
            "initial.attitude.angle",
            "missing required field",
        )),
        (None, Some(_), None) => Err(ConfigError::field(
            "initial.attitude.axis",
            "missing required field",
        )),
        _ => Err(ConfigError::field(
            "initial.attitude",
            "give either `axis` and `angle` or `matrix`",
        )),
    }
}

fn finite_vec(v: Vec3, field: &str) -> Result<Vec3, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::field(field, "non-finite component"))
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." || path == "?" {
                "config".to_string()
            } else {
                path
            };
            ConfigError::field(field, e.into_inner())
        })?;
        Self::from_raw(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let name = raw.name.unwrap_or_else(|| "scenario".to_string());
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(ConfigError::field("name", "must be a plain file stem"));
        }

        let inertia = required(raw.inertia, "inertia")?;
        let body = required(inertia.body, "inertia.body")?.matrix();
        let rotor = required(inertia.rotor, "inertia.rotor")?.matrix();
        SpdMatrix::new(body).map_err(|e| ConfigError::field("inertia.body", e))?;
        SpdMatrix::new(rotor).map_err(|e| ConfigError::field("inertia.rotor", e))?;
        let model = InertiaModel::new(body, rotor).map_err(|e| ConfigError::field("inertia", e))?;

        let initial = required(raw.initial, "initial")?;
        let state = FullState {
            attitude: attitude(initial.attitude)?,
            theta: finite_vec(initial.theta.unwrap_or(Vec3::ZERO), "initial.theta")?,
            omega: finite_vec(required(initial.omega, "initial.omega")?, "initial.omega")?,
            omega_r: finite_vec(
                required(initial.omega_r, "initial.omega_r")?,
                "initial.omega_r",
            )?,
        };

        let step = required(raw.step, "step")?;
        let dt = required(step.dt, "step.dt")?;
        let t_end = required(step.t_end, "step.t_end")?;
        let spec =
            StepSpec::new(dt, t_end, step.method.unwrap_or(Method::Rk4)).map_err(|e| match e {
                StepSpecError::Dt(_) => ConfigError::field("step.dt", e),
                StepSpecError::TEnd(_) => ConfigError::field("step.t_end", e),
                StepSpecError::TooManySteps(_) => ConfigError::field("step", e),
            })?;

        let formulations = required(raw.formulations, "formulations")?;
        let scenario = Scenario::new(
            name,
            model,
            state,
            spec,
            formulations,
            raw.tolerances.unwrap_or_default(),
        )
        .map_err(|e| match e {
            ScenarioError::Tolerance(field, _) => {
                ConfigError::field(format!("tolerances.{field}"), e)
            }
            ScenarioError::NoFormulations | ScenarioError::DuplicateFormulation(_) => {
                ConfigError::field("formulations", e)
            }
            ScenarioError::NonFiniteInitial => ConfigError::field("initial", e),
        })?;

        let output = raw.output.unwrap_or(RawOutput {
            dir: None,
            stride: None,
        });
        let stride = output.stride.unwrap_or(1);
        if stride == 0 {
            return Err(ConfigError::field("output.stride", "must be at least 1"));
        }
        Ok(Config {
            scenario,
            output: OutputOptions {
                dir: output.dir.unwrap_or_else(|| PathBuf::from(".")),
                stride,
            },
        })
    }
}
