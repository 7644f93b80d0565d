//! Multi-formulation runs from a shared initial condition, with equivalence,
//! conservation and drift-identity reports.

use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{InertiaModel, Rotation, Vec3};
use crate::conserved::{central_difference_4, DiagnosticSample};
use crate::formulations::{
    EulerPoincare, Formulation, FormulationKind, FullState, Observables, StageOMc, StageOMech,
    StageS, Unreduced,
};
use crate::integrators::{integrate_with, FlatVector, IntegrationError, StepSpec};

/// Named thresholds. Deviations are maxima over the common time grid, drifts
/// are maxima of `|q(t) − q(0)|` over the run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub omega_deviation: f64,
    /// Radians of relative rotation.
    pub attitude_deviation: f64,
    pub rotor_velocity_deviation: f64,
    pub body_momentum_deviation: f64,
    pub rotor_momentum_drift: f64,
    pub energy_relative_drift: f64,
    pub spatial_momentum_drift: f64,
    pub body_momentum_norm_drift: f64,
    /// Max |analytic − finite-difference| current drift.
    pub drift_identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            omega_deviation: 1e-9,
            attitude_deviation: 1e-8,
            rotor_velocity_deviation: 1e-9,
            body_momentum_deviation: 1e-8,
            rotor_momentum_drift: 1e-12,
            energy_relative_drift: 1e-10,
            spatial_momentum_drift: 1e-9,
            body_momentum_norm_drift: 1e-12,
            drift_identity: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn entries(&self) -> [(&'static str, f64); 9] {
        [
            ("omega_deviation", self.omega_deviation),
            ("attitude_deviation", self.attitude_deviation),
            ("rotor_velocity_deviation", self.rotor_velocity_deviation),
            ("body_momentum_deviation", self.body_momentum_deviation),
            ("rotor_momentum_drift", self.rotor_momentum_drift),
            ("energy_relative_drift", self.energy_relative_drift),
            ("spatial_momentum_drift", self.spatial_momentum_drift),
            ("body_momentum_norm_drift", self.body_momentum_norm_drift),
            ("drift_identity", self.drift_identity),
        ]
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("at least one formulation must be selected")]
    NoFormulations,
    #[error("formulation `{0}` is listed twice")]
    DuplicateFormulation(FormulationKind),
    #[error("tolerance `{0}` must be finite and non-negative, got {1}")]
    Tolerance(&'static str, f64),
    #[error("initial state has a non-finite component")]
    NonFiniteInitial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub inertia: InertiaModel,
    pub initial: FullState,
    pub step: StepSpec,
    pub formulations: Vec<FormulationKind>,
    pub tolerances: Tolerances,
}

impl Scenario {
    /// Zero tolerances are accepted so that a strict run can be requested.
    pub fn new(
        name: impl Into<String>,
        inertia: InertiaModel,
        initial: FullState,
        step: StepSpec,
        formulations: Vec<FormulationKind>,
        tolerances: Tolerances,
    ) -> Result<Self, ScenarioError> {
        if formulations.is_empty() {
            return Err(ScenarioError::NoFormulations);
        }
        for (i, k) in formulations.iter().enumerate() {
            if formulations[..i].contains(k) {
                return Err(ScenarioError::DuplicateFormulation(*k));
            }
        }
        for (name, value) in tolerances.entries() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ScenarioError::Tolerance(name, value));
            }
        }
        let s = &initial;
        if !(s.theta.is_finite() && s.omega.is_finite() && s.omega_r.is_finite()) {
            return Err(ScenarioError::NonFiniteInitial);
        }
        Ok(Self {
            name: name.into(),
            inertia,
            initial,
            step,
            formulations,
            tolerances,
        })
    }
}

/// One recorded sample in formulation-independent form, plus the native
/// state components for output.
#[derive(Clone, Debug)]
pub struct Row {
    pub t: f64,
    pub attitude: Rotation,
    pub state: Vec<f64>,
    pub observables: Observables,
    pub diagnostics: DiagnosticSample,
}

#[derive(Clone, Debug)]
pub struct FormulationRun {
    pub kind: FormulationKind,
    pub dt: f64,
    pub state_columns: &'static [&'static str],
    pub rows: Vec<Row>,
}

fn run_one<F: Formulation>(
    m: &InertiaModel,
    s: &FullState,
    spec: &StepSpec,
) -> Result<FormulationRun, IntegrationError> {
    let mut rows = Vec::with_capacity(spec.steps() + 1);
    integrate_with::<F>(m, &F::from_full(m, s), s.attitude, spec, |sample| {
        rows.push(Row {
            t: sample.t,
            attitude: sample.attitude,
            state: F::vector(&sample.state).as_slice().to_vec(),
            observables: F::observables(m, &sample.state),
            diagnostics: sample.diagnostics.clone(),
        });
    })?;
    Ok(FormulationRun {
        kind: F::KIND,
        dt: spec.dt(),
        state_columns: F::state_columns(),
        rows,
    })
}

/// Integrates one formulation from the shared initial state.
pub fn run_formulation(
    kind: FormulationKind,
    m: &InertiaModel,
    s: &FullState,
    spec: &StepSpec,
) -> Result<FormulationRun, IntegrationError> {
    match kind {
        FormulationKind::Full => run_one::<Unreduced>(m, s, spec),
        FormulationKind::EulerPoincare => run_one::<EulerPoincare>(m, s, spec),
        FormulationKind::StageS => run_one::<StageS>(m, s, spec),
        FormulationKind::StageOMc => run_one::<StageOMc>(m, s, spec),
        FormulationKind::StageOMech => run_one::<StageOMech>(m, s, spec),
    }
}

/// Runs every selected formulation concurrently. The first abort in
/// scenario order is reported.
pub fn run_all(s: &Scenario) -> Result<Vec<FormulationRun>, IntegrationError> {
    let results: Vec<_> = thread::scope(|scope| {
        let handles: Vec<_> = s
            .formulations
            .iter()
            .map(|&kind| {
                scope.spawn(move || run_formulation(kind, &s.inertia, &s.initial, &s.step))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("integration thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairDeviation {
    pub a: FormulationKind,
    pub b: FormulationKind,
    pub omega: f64,
    pub attitude: f64,
    pub rotor_velocity: f64,
    pub body_momentum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConservationRow {
    pub formulation: FormulationKind,
    pub rotor_momentum_drift: f64,
    pub energy_relative_drift: f64,
    pub spatial_momentum_drift: f64,
    pub body_momentum_norm_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Verdict {
    fn new(check: String, value: f64, tolerance: f64) -> Self {
        Self {
            check,
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub scenario: String,
    pub dt: f64,
    pub t_end: f64,
    pub method: String,
    pub formulations: Vec<FormulationKind>,
    pub deviations: Vec<PairDeviation>,
    pub conservation: Vec<ConservationRow>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

impl EquivalenceReport {
    /// Largest pairwise `Ω` deviation, zero for a single formulation.
    pub fn max_omega_deviation(&self) -> f64 {
        self.deviations.iter().map(|d| d.omega).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed)
    }
}

fn max_over<T>(rows: &[T], f: impl Fn(&T) -> f64) -> f64 {
    rows.iter().map(f).fold(0.0, f64::max)
}

pub fn pair_deviation(a: &FormulationRun, b: &FormulationRun) -> PairDeviation {
    let pairs: Vec<_> = a.rows.iter().zip(&b.rows).collect();
    PairDeviation {
        a: a.kind,
        b: b.kind,
        omega: max_over(&pairs, |(x, y)| {
            (x.observables.omega - y.observables.omega).max_abs()
        }),
        attitude: max_over(&pairs, |(x, y)| x.attitude.geodesic_distance(&y.attitude)),
        rotor_velocity: max_over(&pairs, |(x, y)| {
            (x.observables.rotor_velocity - y.observables.rotor_velocity).max_abs()
        }),
        body_momentum: max_over(&pairs, |(x, y)| {
            (x.observables.body_momentum - y.observables.body_momentum).max_abs()
        }),
    }
}

pub fn conservation_row(run: &FormulationRun) -> ConservationRow {
    let d0 = &run.rows[0].diagnostics;
    let e_scale = if d0.energy != 0.0 {
        d0.energy.abs()
    } else {
        1.0
    };
    let p0_norm = d0.body_momentum.norm();
    ConservationRow {
        formulation: run.kind,
        rotor_momentum_drift: max_over(&run.rows, |r| {
            (r.diagnostics.rotor_momentum - d0.rotor_momentum).max_abs()
        }),
        energy_relative_drift: max_over(&run.rows, |r| {
            (r.diagnostics.energy - d0.energy).abs() / e_scale
        }),
        spatial_momentum_drift: max_over(&run.rows, |r| {
            (r.diagnostics.spatial_momentum - d0.spatial_momentum).max_abs()
        }),
        body_momentum_norm_drift: max_over(&run.rows, |r| {
            (r.diagnostics.body_momentum.norm() - p0_norm).abs()
        }),
    }
}

/// Builds the report from finished runs sharing one time grid.
pub fn equivalence_report(s: &Scenario, runs: &[FormulationRun]) -> EquivalenceReport {
    let tol = &s.tolerances;
    let mut deviations = Vec::new();
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            deviations.push(pair_deviation(a, b));
        }
    }
    let conservation: Vec<_> = runs.iter().map(conservation_row).collect();

    let mut verdicts = Vec::new();
    for d in &deviations {
        let pair = format!("{}/{}", d.a, d.b);
        verdicts.push(Verdict::new(
            format!("omega_deviation {pair}"),
            d.omega,
            tol.omega_deviation,
        ));
        verdicts.push(Verdict::new(
            format!("attitude_deviation {pair}"),
            d.attitude,
            tol.attitude_deviation,
        ));
        verdicts.push(Verdict::new(
            format!("rotor_velocity_deviation {pair}"),
            d.rotor_velocity,
            tol.rotor_velocity_deviation,
        ));
        verdicts.push(Verdict::new(
            format!("body_momentum_deviation {pair}"),
            d.body_momentum,
            tol.body_momentum_deviation,
        ));
    }
    for c in &conservation {
        let f = c.formulation;
        verdicts.push(Verdict::new(
            format!("rotor_momentum_drift {f}"),
            c.rotor_momentum_drift,
            tol.rotor_momentum_drift,
        ));
        verdicts.push(Verdict::new(
            format!("energy_relative_drift {f}"),
            c.energy_relative_drift,
            tol.energy_relative_drift,
        ));
        verdicts.push(Verdict::new(
            format!("spatial_momentum_drift {f}"),
            c.spatial_momentum_drift,
            tol.spatial_momentum_drift,
        ));
        verdicts.push(Verdict::new(
            format!("body_momentum_norm_drift {f}"),
            c.body_momentum_norm_drift,
            tol.body_momentum_norm_drift,
        ));
    }
    let passed = verdicts.iter().all(|v| v.passed);
    EquivalenceReport {
        scenario: s.name.clone(),
        dt: s.step.dt(),
        t_end: s.step.t_end(),
        method: s.step.method().to_string(),
        formulations: s.formulations.clone(),
        deviations,
        conservation,
        verdicts,
        passed,
    }
}

/// Runs all formulations and compares them.
pub fn run_scenario(
    s: &Scenario,
) -> Result<(EquivalenceReport, Vec<FormulationRun>), IntegrationError> {
    let runs = run_all(s)?;
    Ok((equivalence_report(s, &runs), runs))
}

/// Per-sample comparison of one current's analytic drift with fourth-order
/// centered differences of its recorded values. Edge samples are `None`.
pub fn drift_residuals(run: &FormulationRun, current: usize) -> Vec<Option<Vec3>> {
    let values: Vec<Vec3> = run
        .rows
        .iter()
        .map(|r| r.diagnostics.currents[current].value)
        .collect();
    let fd = central_difference_4(&values, run.dt);
    run.rows
        .iter()
        .zip(fd)
        .map(|(row, d)| {
            let analytic = row.diagnostics.currents[current]
                .drift
                .unwrap_or(Vec3::ZERO);
            d.map(|d| analytic - d)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftCheck {
    pub formulation: FormulationKind,
    pub current: &'static str,
    /// The current is conserved, so its analytic drift is identically zero.
    pub conserved: bool,
    pub max_mismatch: f64,
    pub max_analytic_drift: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftReport {
    pub scenario: String,
    pub dt: f64,
    pub t_end: f64,
    pub checks: Vec<DriftCheck>,
    pub passed: bool,
}

pub fn drift_checks(run: &FormulationRun, tolerance: f64) -> Vec<DriftCheck> {
    let Some(first) = run.rows.first() else {
        return Vec::new();
    };
    (0..first.diagnostics.currents.len())
        .map(|i| {
            let residuals = drift_residuals(run, i);
            let max_mismatch = residuals
                .iter()
                .flatten()
                .map(|r| r.max_abs())
                .fold(0.0, f64::max);
            let max_analytic_drift = max_over(&run.rows, |r| {
                r.diagnostics.currents[i].drift.map_or(0.0, |d| d.max_abs())
            });
            DriftCheck {
                formulation: run.kind,
                current: first.diagnostics.currents[i].label,
                conserved: first.diagnostics.currents[i].drift.is_none(),
                max_mismatch,
                max_analytic_drift,
                tolerance,
                passed: max_mismatch <= tolerance,
            }
        })
        .collect()
}

pub fn drift_report(s: &Scenario, runs: &[FormulationRun]) -> DriftReport {
    let checks: Vec<_> = runs
        .iter()
        .flat_map(|r| drift_checks(r, s.tolerances.drift_identity))
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    DriftReport {
        scenario: s.name.clone(),
        dt: s.step.dt(),
        t_end: s.step.t_end(),
        checks,
        passed,
    }
}

/// The shared test configuration: `I = diag(3,2,1)`, `K = Id`, `Ω₀ = (1,1,0)`,
/// `Ω_r₀ = (0,0,1)`, all four reduced formulations.
pub fn fixture_scenario(dt: f64, t_end: f64) -> Scenario {
    let inertia =
        InertiaModel::diagonal([3.0, 2.0, 1.0], [1.0, 1.0, 1.0]).expect("fixture inertia is valid");
    let initial = FullState {
        omega: Vec3::new(1.0, 1.0, 0.0),
        omega_r: Vec3::new(0.0, 0.0, 1.0),
        ..FullState::at_rest()
    };
    Scenario::new(
        "fixture",
        inertia,
        initial,
        StepSpec::rk4(dt, t_end).expect("fixture step is valid"),
        FormulationKind::REDUCED.to_vec(),
        Tolerances::default(),
    )
    .expect("fixture scenario is valid")
}
