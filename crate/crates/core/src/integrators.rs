//! Fixed-step integration: classical RK4 (or explicit Euler) on the vector
//! part of a state, Runge–Kutta–Munthe-Kaas on the attitude factor.
//!
//! The partitioned scheme drives the attitude update with the body velocities
//! of the same RK stages that advance the vector part, so `R` stays on SO(3)
//! without projection.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{cross, so3_exp, InertiaModel, Rotation, Vec3};
use crate::conserved::{self, DiagnosticSample};
use crate::formulations::{Formulation, FormulationKind};

/// Upper bound on the number of steps of a single run.
pub const MAX_STEPS: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Euler,
}

impl Method {
    pub fn stages(self) -> usize {
        match self {
            Method::Rk4 => 4,
            Method::Euler => 1,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rk4 => "rk4",
            Method::Euler => "euler",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepSpecError {
    #[error("dt must be positive and finite, got {0}")]
    Dt(f64),
    #[error("t_end must be non-negative and finite, got {0}")]
    TEnd(f64),
    #[error("t_end/dt = {0:e} exceeds the step limit {MAX_STEPS:e}")]
    TooManySteps(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepSpec {
    dt: f64,
    t_end: f64,
    method: Method,
}

impl StepSpec {
    pub fn new(dt: f64, t_end: f64, method: Method) -> Result<Self, StepSpecError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(StepSpecError::Dt(dt));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(StepSpecError::TEnd(t_end));
        }
        let ratio = t_end / dt;
        if ratio > MAX_STEPS {
            return Err(StepSpecError::TooManySteps(ratio));
        }
        Ok(Self { dt, t_end, method })
    }

    pub fn rk4(dt: f64, t_end: f64) -> Result<Self, StepSpecError> {
        Self::new(dt, t_end, Method::Rk4)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Number of steps; the final sample lands at `steps()·dt ≈ t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self, StepSpecError> {
        Self::new(dt, self.t_end, self.method)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("non-finite value in RK stage {stage}")]
    NonFiniteStage { stage: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("{formulation}: integration aborted at t = {time}: {source}")]
    NonFinite {
        formulation: FormulationKind,
        time: f64,
        #[source]
        source: StepError,
    },
}

impl IntegrationError {
    pub fn time(&self) -> f64 {
        match self {
            IntegrationError::NonFinite { time, .. } => *time,
        }
    }
}

/// Fixed-length real vector the integrator can combine linearly.
pub trait FlatVector: Copy + Send + Sync + fmt::Debug {
    fn as_slice(&self) -> &[f64];
    fn as_mut_slice(&mut self) -> &mut [f64];
    fn zeroed() -> Self;
}

impl<const N: usize> FlatVector for [f64; N] {
    fn as_slice(&self) -> &[f64] {
        self
    }
    fn as_mut_slice(&mut self) -> &mut [f64] {
        self
    }
    fn zeroed() -> Self {
        [0.0; N]
    }
}

/// `y + Σ cᵢ kᵢ` componentwise.
fn combine<V: FlatVector>(y: &V, terms: &[(f64, &V)]) -> V {
    let mut out = *y;
    for (i, slot) in out.as_mut_slice().iter_mut().enumerate() {
        let mut acc = *slot;
        for (c, k) in terms {
            acc += c * k.as_slice()[i];
        }
        *slot = acc;
    }
    out
}

fn all_finite<V: FlatVector>(v: &V) -> bool {
    v.as_slice().iter().all(|x| x.is_finite())
}

/// One step of the vector part together with the stage states that produced it.
#[derive(Clone, Copy, Debug)]
pub struct StageResult<V> {
    pub next: V,
    /// Stage states `Y₁..Y₄` (only the first is meaningful for Euler).
    pub stages: [V; 4],
}

pub fn step_with_stages<V: FlatVector>(
    rhs: impl Fn(&V) -> V,
    y: &V,
    dt: f64,
    method: Method,
) -> Result<StageResult<V>, StepError> {
    let eval = |stage: usize, state: &V| {
        let k = rhs(state);
        if all_finite(&k) {
            Ok(k)
        } else {
            Err(StepError::NonFiniteStage { stage })
        }
    };
    match method {
        Method::Euler => {
            let k1 = eval(1, y)?;
            let next = combine(y, &[(dt, &k1)]);
            Ok(StageResult {
                next,
                stages: [*y; 4],
            })
        }
        Method::Rk4 => {
            let half = 0.5 * dt;
            let k1 = eval(1, y)?;
            let y2 = combine(y, &[(half, &k1)]);
            let k2 = eval(2, &y2)?;
            let y3 = combine(y, &[(half, &k2)]);
            let k3 = eval(3, &y3)?;
            let y4 = combine(y, &[(dt, &k3)]);
            let k4 = eval(4, &y4)?;
            let sixth = dt / 6.0;
            let next = combine(
                y,
                &[
                    (sixth, &k1),
                    (2.0 * sixth, &k2),
                    (2.0 * sixth, &k3),
                    (sixth, &k4),
                ],
            );
            Ok(StageResult {
                next,
                stages: [*y, y2, y3, y4],
            })
        }
    }
}

/// Single RK4 or Euler step of `ẏ = rhs(y)`.
pub fn step_vector<V: FlatVector>(
    rhs: impl Fn(&V) -> V,
    y: &V,
    dt: f64,
    method: Method,
) -> Result<V, StepError> {
    if !all_finite(y) {
        return Err(StepError::NonFiniteStage { stage: 0 });
    }
    step_with_stages(rhs, y, dt, method).map(|r| r.next)
}

/// `dexp⁻¹_{−u}(w) ≈ w + ½ u×w + (1/12) u×(u×w)`, accurate enough for order 4.
fn dexp_inv_left(u: Vec3, w: Vec3) -> Vec3 {
    let uw = cross(u, w);
    w + uw * 0.5 + cross(u, uw) * (1.0 / 12.0)
}

/// Advances `Ṙ = R·hat(Ω)` over one step.
///
/// `stage_velocities` are the body velocities at the RK stages: one value for
/// Euler, four for RK4 (fourth-order Munthe-Kaas update).
pub fn step_attitude(r: &Rotation, stage_velocities: &[Vec3], dt: f64, method: Method) -> Rotation {
    let increment = match method {
        Method::Euler => stage_velocities[0] * dt,
        Method::Rk4 => {
            let [w1, w2, w3, w4] = [
                stage_velocities[0],
                stage_velocities[1],
                stage_velocities[2],
                stage_velocities[3],
            ];
            let k1 = w1 * dt;
            let k2 = dexp_inv_left(k1 * 0.5, w2) * dt;
            let k3 = dexp_inv_left(k2 * 0.5, w3) * dt;
            let k4 = dexp_inv_left(k3, w4) * dt;
            (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (1.0 / 6.0)
        }
    };
    r.compose(&so3_exp(increment))
}

/// One recorded point of a trajectory.
#[derive(Clone, Debug)]
pub struct Sample<S> {
    pub t: f64,
    pub state: S,
    /// Native attitude, or the reconstructed one for formulations without `R`.
    pub attitude: Rotation,
    pub diagnostics: DiagnosticSample,
}

#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub kind: FormulationKind,
    pub dt: f64,
    pub samples: Vec<Sample<S>>,
}

impl<S> Trajectory<S> {
    pub fn last(&self) -> &Sample<S> {
        self.samples
            .last()
            .expect("trajectory has at least the initial sample")
    }
}

fn sample<F: Formulation>(
    m: &InertiaModel,
    t: f64,
    v: &F::Vector,
    attitude: Rotation,
) -> Sample<F::State> {
    let state = F::assemble(v, attitude);
    let diagnostics = conserved::diagnostics::<F>(m, t, &state, &attitude);
    Sample {
        t,
        state,
        attitude,
        diagnostics,
    }
}

/// Integrates and hands every sample (the initial one included) to `observer`.
///
/// `reconstruction_seed` is the starting attitude for formulations that do not
/// carry one; formulations with a native attitude ignore it.
pub fn integrate_with<F: Formulation>(
    m: &InertiaModel,
    initial: &F::State,
    reconstruction_seed: Rotation,
    spec: &StepSpec,
    mut observer: impl FnMut(&Sample<F::State>),
) -> Result<Sample<F::State>, IntegrationError> {
    let dt = spec.dt();
    let method = spec.method();
    let mut v = F::vector(initial);
    let mut attitude = F::attitude(initial).unwrap_or(reconstruction_seed);
    let mut current = sample::<F>(m, 0.0, &v, attitude);
    observer(&current);
    for n in 0..spec.steps() {
        let t = n as f64 * dt;
        let step =
            step_with_stages(|y| F::vector_field(m, y), &v, dt, method).map_err(|source| {
                IntegrationError::NonFinite {
                    formulation: F::KIND,
                    time: t,
                    source,
                }
            })?;
        let mut omegas = [Vec3::ZERO; 4];
        for (slot, stage) in omegas.iter_mut().zip(step.stages.iter()) {
            *slot = F::body_velocity(m, stage);
        }
        attitude = step_attitude(&attitude, &omegas[..method.stages()], dt, method);
        v = step.next;
        if !all_finite(&v) {
            return Err(IntegrationError::NonFinite {
                formulation: F::KIND,
                time: t + dt,
                source: StepError::NonFiniteStage { stage: 0 },
            });
        }
        current = sample::<F>(m, (n + 1) as f64 * dt, &v, attitude);
        observer(&current);
    }
    Ok(current)
}

/// Integrates and records every step.
pub fn integrate<F: Formulation>(
    m: &InertiaModel,
    initial: &F::State,
    reconstruction_seed: Rotation,
    spec: &StepSpec,
) -> Result<Trajectory<F::State>, IntegrationError> {
    let mut samples = Vec::with_capacity(spec.steps() + 1);
    integrate_with::<F>(m, initial, reconstruction_seed, spec, |s| {
        samples.push(s.clone())
    })?;
    Ok(Trajectory {
        kind: F::KIND,
        dt: spec.dt(),
        samples,
    })
}
