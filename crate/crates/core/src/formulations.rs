//! State spaces, reduced Lagrangians and coordinate maps of the four reductions
//! of the rigid body with rotors, plus the unreduced system.
//!
//! Maps between formulations act on velocities only. Attitude `R` and rotor
//! angles `θ` are carried where a formulation keeps them and dropped elsewhere.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::{InertiaModel, Rotation, Vec3};
use crate::conserved::{self, LabeledCurrent};
use crate::dynamics;
use crate::integrators::FlatVector;

/// Unreduced state on `T(SO(3) × T³)`, velocities left-trivialized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FullState {
    pub attitude: Rotation,
    pub theta: Vec3,
    /// Body angular velocity `Ω = R⁻¹Ṙ`.
    pub omega: Vec3,
    /// Rotor angular velocity `Ω_r = θ̇`.
    pub omega_r: Vec3,
}

impl FullState {
    pub fn at_rest() -> Self {
        Self {
            attitude: Rotation::IDENTITY,
            theta: Vec3::ZERO,
            omega: Vec3::ZERO,
            omega_r: Vec3::ZERO,
        }
    }
}

/// Euler–Poincaré state on `so(3) ⊕ ℝ³`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpState {
    pub omega: Vec3,
    pub omega_r: Vec3,
}

/// First stage by the rotor torus: `(R, Ṙ, η)` with `η = Ω + Ω_r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageSState {
    pub attitude: Rotation,
    pub omega: Vec3,
    /// Total angular velocity.
    pub eta: Vec3,
}

/// First stage by SO(3) with the Maurer–Cartan connection: `(θ, θ̇, Ω)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageOMcState {
    pub theta: Vec3,
    pub theta_dot: Vec3,
    pub omega: Vec3,
}

/// First stage by SO(3) with the mechanical connection: `(θ, θ̇, ξ)` with
/// locked velocity `ξ = Ω + (I+K)⁻¹Kθ̇`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageOMechState {
    pub theta: Vec3,
    pub theta_dot: Vec3,
    pub xi: Vec3,
}

/// Any of the formulation states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FormulationState {
    Full(FullState),
    EulerPoincare(EpState),
    StageS(StageSState),
    StageOMc(StageOMcState),
    StageOMech(StageOMechState),
}

impl FormulationState {
    pub fn from_full(kind: FormulationKind, m: &InertiaModel, s: &FullState) -> Self {
        match kind {
            FormulationKind::Full => Self::Full(*s),
            FormulationKind::EulerPoincare => Self::EulerPoincare(ep_from_full(s)),
            FormulationKind::StageS => Self::StageS(stage_s_from_full(s)),
            FormulationKind::StageOMc => Self::StageOMc(stage_o_mc_from_full(s)),
            FormulationKind::StageOMech => Self::StageOMech(stage_o_mech_from_full(m, s)),
        }
    }

    pub fn kind(&self) -> FormulationKind {
        match self {
            Self::Full(_) => FormulationKind::Full,
            Self::EulerPoincare(_) => FormulationKind::EulerPoincare,
            Self::StageS(_) => FormulationKind::StageS,
            Self::StageOMc(_) => FormulationKind::StageOMc,
            Self::StageOMech(_) => FormulationKind::StageOMech,
        }
    }

    /// The formulation's own reduced Lagrangian.
    pub fn lagrangian(&self, m: &InertiaModel) -> f64 {
        match self {
            Self::Full(s) => lagrangian_full(m, s),
            Self::EulerPoincare(s) => lagrangian_ep(m, s),
            Self::StageS(s) => lagrangian_stage_s(m, s),
            Self::StageOMc(s) => lagrangian_stage_o_mc(m, s),
            Self::StageOMech(s) => lagrangian_stage_o_mech(m, s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FormulationKind {
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "ep")]
    EulerPoincare,
    #[serde(rename = "stage_s")]
    StageS,
    #[serde(rename = "stage_o_mc")]
    StageOMc,
    #[serde(rename = "stage_o_mech")]
    StageOMech,
}

impl FormulationKind {
    pub const ALL: [FormulationKind; 5] = [
        FormulationKind::Full,
        FormulationKind::EulerPoincare,
        FormulationKind::StageS,
        FormulationKind::StageOMc,
        FormulationKind::StageOMech,
    ];

    /// The four reduced formulations.
    pub const REDUCED: [FormulationKind; 4] = [
        FormulationKind::EulerPoincare,
        FormulationKind::StageS,
        FormulationKind::StageOMc,
        FormulationKind::StageOMech,
    ];

    pub fn id(self) -> &'static str {
        match self {
            FormulationKind::Full => "full",
            FormulationKind::EulerPoincare => "ep",
            FormulationKind::StageS => "stage_s",
            FormulationKind::StageOMc => "stage_o_mc",
            FormulationKind::StageOMech => "stage_o_mech",
        }
    }
}

impl fmt::Display for FormulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FormulationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FormulationKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| {
                let ids: Vec<_> = FormulationKind::ALL.iter().map(|k| k.id()).collect();
                format!(
                    "unknown formulation `{s}` (expected one of {})",
                    ids.join(", ")
                )
            })
    }
}

/// `L = ½⟨Ω, IΩ⟩ + ½⟨Ω+Ω_r, K(Ω+Ω_r)⟩`. Independent of `R` and `θ`.
pub fn lagrangian_full(m: &InertiaModel, s: &FullState) -> f64 {
    let total = s.omega + s.omega_r;
    0.5 * s.omega.dot(m.body().apply(s.omega)) + 0.5 * total.dot(m.rotor().apply(total))
}

/// `ℓ = ½⟨Ω,(I+K)Ω⟩ + ½⟨Ω_r,KΩ_r⟩ + ⟨Ω,KΩ_r⟩`.
pub fn lagrangian_ep(m: &InertiaModel, s: &EpState) -> f64 {
    expanded_lagrangian(m, s.omega, s.omega_r)
}

/// `½⟨Ω, IΩ⟩ + ½⟨η, Kη⟩`.
pub fn lagrangian_stage_s(m: &InertiaModel, s: &StageSState) -> f64 {
    0.5 * s.omega.dot(m.body().apply(s.omega)) + 0.5 * s.eta.dot(m.rotor().apply(s.eta))
}

/// `½⟨Ω,(I+K)Ω⟩ + ½⟨θ̇,Kθ̇⟩ + ⟨Ω,Kθ̇⟩`.
///
/// The coupling term has coefficient 1; this is what makes the value agree
/// with [`lagrangian_full`] under `Ω_r = θ̇`.
pub fn lagrangian_stage_o_mc(m: &InertiaModel, s: &StageOMcState) -> f64 {
    expanded_lagrangian(m, s.omega, s.theta_dot)
}

/// `½⟨ξ,(I+K)ξ⟩ + ½⟨Kθ̇,(I+K)⁻¹Iθ̇⟩`, decoupled between body and rotors.
pub fn lagrangian_stage_o_mech(m: &InertiaModel, s: &StageOMechState) -> f64 {
    let rotor_part = m
        .rotor()
        .apply(s.theta_dot)
        .dot(m.total().solve(m.body().apply(s.theta_dot)));
    0.5 * s.xi.dot(m.total().apply(s.xi)) + 0.5 * rotor_part
}

fn expanded_lagrangian(m: &InertiaModel, omega: Vec3, rotor: Vec3) -> f64 {
    0.5 * omega.dot(m.total().apply(omega))
        + 0.5 * rotor.dot(m.rotor().apply(rotor))
        + omega.dot(m.rotor().apply(rotor))
}

pub fn ep_from_full(s: &FullState) -> EpState {
    EpState {
        omega: s.omega,
        omega_r: s.omega_r,
    }
}

pub fn stage_s_from_full(s: &FullState) -> StageSState {
    StageSState {
        attitude: s.attitude,
        omega: s.omega,
        eta: s.omega + s.omega_r,
    }
}

pub fn stage_o_mc_from_full(s: &FullState) -> StageOMcState {
    StageOMcState {
        theta: s.theta,
        theta_dot: s.omega_r,
        omega: s.omega,
    }
}

pub fn stage_o_mech_from_full(m: &InertiaModel, s: &FullState) -> StageOMechState {
    StageOMechState {
        theta: s.theta,
        theta_dot: s.omega_r,
        xi: s.omega + m.coupling(s.omega_r),
    }
}

/// Body angular velocity of a mechanical-connection state, `Ω = ξ − (I+K)⁻¹Kθ̇`.
pub fn mech_body_velocity(m: &InertiaModel, s: &StageOMechState) -> Vec3 {
    s.xi - m.coupling(s.theta_dot)
}

/// Formulation-independent quantities used to compare trajectories.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observables {
    pub omega: Vec3,
    /// `Ω_r`, `η − Ω` or `θ̇` depending on the formulation.
    pub rotor_velocity: Vec3,
    /// `(I+K)Ω + KΩ_r`.
    pub body_momentum: Vec3,
}

/// Glue between a formulation's typed state and the flat vectors the
/// integrator advances. The attitude factor, when present, is advanced
/// separately on SO(3).
pub trait Formulation {
    const KIND: FormulationKind;
    type State: Copy + fmt::Debug + Send + Sync;
    type Vector: FlatVector;

    fn from_full(m: &InertiaModel, s: &FullState) -> Self::State;
    fn vector(s: &Self::State) -> Self::Vector;
    fn attitude(s: &Self::State) -> Option<Rotation>;
    /// Rebuilds a state; `attitude` is ignored by formulations without one.
    fn assemble(v: &Self::Vector, attitude: Rotation) -> Self::State;
    /// Time derivative of the vector part.
    fn vector_field(m: &InertiaModel, v: &Self::Vector) -> Self::Vector;
    /// Body angular velocity `Ω` encoded in the vector part.
    fn body_velocity(m: &InertiaModel, v: &Self::Vector) -> Vec3;
    fn energy(m: &InertiaModel, s: &Self::State) -> f64;
    fn observables(m: &InertiaModel, s: &Self::State) -> Observables;
    /// Rotor momentum `K(Ω + Ω_r)` in the formulation's own variables.
    fn rotor_momentum(m: &InertiaModel, s: &Self::State) -> Vec3;
    /// Formulation-specific Noether currents and their analytic drifts.
    fn extra_currents(
        m: &InertiaModel,
        s: &Self::State,
        attitude: &Rotation,
    ) -> Vec<LabeledCurrent>;
    /// CSV column names of the vector part.
    fn state_columns() -> &'static [&'static str];
}

pub struct Unreduced;
pub struct EulerPoincare;
pub struct StageS;
pub struct StageOMc;
pub struct StageOMech;

fn split3(v: &[f64; 9]) -> (Vec3, Vec3, Vec3) {
    (
        Vec3::new(v[0], v[1], v[2]),
        Vec3::new(v[3], v[4], v[5]),
        Vec3::new(v[6], v[7], v[8]),
    )
}

fn join3(a: Vec3, b: Vec3, c: Vec3) -> [f64; 9] {
    [a.x, a.y, a.z, b.x, b.y, b.z, c.x, c.y, c.z]
}

fn split2(v: &[f64; 6]) -> (Vec3, Vec3) {
    (Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]))
}

fn join2(a: Vec3, b: Vec3) -> [f64; 6] {
    [a.x, a.y, a.z, b.x, b.y, b.z]
}

fn ep_observables(m: &InertiaModel, omega: Vec3, rotor: Vec3) -> Observables {
    Observables {
        omega,
        rotor_velocity: rotor,
        body_momentum: m.total().apply(omega) + m.rotor().apply(rotor),
    }
}

impl Formulation for Unreduced {
    const KIND: FormulationKind = FormulationKind::Full;
    type State = FullState;
    type Vector = [f64; 9];

    fn from_full(_: &InertiaModel, s: &FullState) -> FullState {
        *s
    }
    fn vector(s: &FullState) -> [f64; 9] {
        join3(s.theta, s.omega, s.omega_r)
    }
    fn attitude(s: &FullState) -> Option<Rotation> {
        Some(s.attitude)
    }
    fn assemble(v: &[f64; 9], attitude: Rotation) -> FullState {
        let (theta, omega, omega_r) = split3(v);
        FullState {
            attitude,
            theta,
            omega,
            omega_r,
        }
    }
    fn vector_field(m: &InertiaModel, v: &[f64; 9]) -> [f64; 9] {
        let d = dynamics::full_rhs(m, &Self::assemble(v, Rotation::IDENTITY));
        join3(d.theta_dot, d.omega_dot, d.omega_r_dot)
    }
    fn body_velocity(_: &InertiaModel, v: &[f64; 9]) -> Vec3 {
        Vec3::new(v[3], v[4], v[5])
    }
    fn energy(m: &InertiaModel, s: &FullState) -> f64 {
        lagrangian_full(m, s)
    }
    fn observables(m: &InertiaModel, s: &FullState) -> Observables {
        ep_observables(m, s.omega, s.omega_r)
    }
    fn rotor_momentum(m: &InertiaModel, s: &FullState) -> Vec3 {
        conserved::rotor_momentum(m, s.omega, s.omega_r)
    }
    fn extra_currents(_: &InertiaModel, _: &FullState, _: &Rotation) -> Vec<LabeledCurrent> {
        Vec::new()
    }
    fn state_columns() -> &'static [&'static str] {
        &[
            "theta_x",
            "theta_y",
            "theta_z",
            "omega_x",
            "omega_y",
            "omega_z",
            "omega_r_x",
            "omega_r_y",
            "omega_r_z",
        ]
    }
}

impl Formulation for EulerPoincare {
    const KIND: FormulationKind = FormulationKind::EulerPoincare;
    type State = EpState;
    type Vector = [f64; 6];

    fn from_full(_: &InertiaModel, s: &FullState) -> EpState {
        ep_from_full(s)
    }
    fn vector(s: &EpState) -> [f64; 6] {
        join2(s.omega, s.omega_r)
    }
    fn attitude(_: &EpState) -> Option<Rotation> {
        None
    }
    fn assemble(v: &[f64; 6], _: Rotation) -> EpState {
        let (omega, omega_r) = split2(v);
        EpState { omega, omega_r }
    }
    fn vector_field(m: &InertiaModel, v: &[f64; 6]) -> [f64; 6] {
        let d = dynamics::ep_rhs(m, &Self::assemble(v, Rotation::IDENTITY));
        join2(d.omega_dot, d.omega_r_dot)
    }
    fn body_velocity(_: &InertiaModel, v: &[f64; 6]) -> Vec3 {
        Vec3::new(v[0], v[1], v[2])
    }
    fn energy(m: &InertiaModel, s: &EpState) -> f64 {
        lagrangian_ep(m, s)
    }
    fn observables(m: &InertiaModel, s: &EpState) -> Observables {
        ep_observables(m, s.omega, s.omega_r)
    }
    fn rotor_momentum(m: &InertiaModel, s: &EpState) -> Vec3 {
        conserved::rotor_momentum(m, s.omega, s.omega_r)
    }
    fn extra_currents(_: &InertiaModel, _: &EpState, _: &Rotation) -> Vec<LabeledCurrent> {
        Vec::new()
    }
    fn state_columns() -> &'static [&'static str] {
        &[
            "omega_x",
            "omega_y",
            "omega_z",
            "omega_r_x",
            "omega_r_y",
            "omega_r_z",
        ]
    }
}

impl Formulation for StageS {
    const KIND: FormulationKind = FormulationKind::StageS;
    type State = StageSState;
    type Vector = [f64; 6];

    fn from_full(_: &InertiaModel, s: &FullState) -> StageSState {
        stage_s_from_full(s)
    }
    fn vector(s: &StageSState) -> [f64; 6] {
        join2(s.omega, s.eta)
    }
    fn attitude(s: &StageSState) -> Option<Rotation> {
        Some(s.attitude)
    }
    fn assemble(v: &[f64; 6], attitude: Rotation) -> StageSState {
        let (omega, eta) = split2(v);
        StageSState {
            attitude,
            omega,
            eta,
        }
    }
    fn vector_field(m: &InertiaModel, v: &[f64; 6]) -> [f64; 6] {
        let d = dynamics::stage_s_rhs(m, &Self::assemble(v, Rotation::IDENTITY));
        join2(d.omega_dot, d.eta_dot)
    }
    fn body_velocity(_: &InertiaModel, v: &[f64; 6]) -> Vec3 {
        Vec3::new(v[0], v[1], v[2])
    }
    fn energy(m: &InertiaModel, s: &StageSState) -> f64 {
        lagrangian_stage_s(m, s)
    }
    fn observables(m: &InertiaModel, s: &StageSState) -> Observables {
        Observables {
            omega: s.omega,
            rotor_velocity: s.eta - s.omega,
            body_momentum: m.body().apply(s.omega) + m.rotor().apply(s.eta),
        }
    }
    fn rotor_momentum(m: &InertiaModel, s: &StageSState) -> Vec3 {
        m.rotor().apply(s.eta)
    }
    fn extra_currents(m: &InertiaModel, s: &StageSState, _: &Rotation) -> Vec<LabeledCurrent> {
        vec![LabeledCurrent::with_drift(
            "j2",
            conserved::body_angular_momentum_rigid(m, &s.attitude, s.omega),
            conserved::drift_j2(m, s),
        )]
    }
    fn state_columns() -> &'static [&'static str] {
        &["omega_x", "omega_y", "omega_z", "eta_x", "eta_y", "eta_z"]
    }
}

impl Formulation for StageOMc {
    const KIND: FormulationKind = FormulationKind::StageOMc;
    type State = StageOMcState;
    type Vector = [f64; 9];

    fn from_full(_: &InertiaModel, s: &FullState) -> StageOMcState {
        stage_o_mc_from_full(s)
    }
    fn vector(s: &StageOMcState) -> [f64; 9] {
        join3(s.theta, s.theta_dot, s.omega)
    }
    fn attitude(_: &StageOMcState) -> Option<Rotation> {
        None
    }
    fn assemble(v: &[f64; 9], _: Rotation) -> StageOMcState {
        let (theta, theta_dot, omega) = split3(v);
        StageOMcState {
            theta,
            theta_dot,
            omega,
        }
    }
    fn vector_field(m: &InertiaModel, v: &[f64; 9]) -> [f64; 9] {
        let d = dynamics::stage_o_mc_rhs(m, &Self::assemble(v, Rotation::IDENTITY));
        join3(d.theta_dot, d.theta_ddot, d.omega_dot)
    }
    fn body_velocity(_: &InertiaModel, v: &[f64; 9]) -> Vec3 {
        Vec3::new(v[6], v[7], v[8])
    }
    fn energy(m: &InertiaModel, s: &StageOMcState) -> f64 {
        lagrangian_stage_o_mc(m, s)
    }
    fn observables(m: &InertiaModel, s: &StageOMcState) -> Observables {
        ep_observables(m, s.omega, s.theta_dot)
    }
    fn rotor_momentum(m: &InertiaModel, s: &StageOMcState) -> Vec3 {
        conserved::rotor_momentum(m, s.omega, s.theta_dot)
    }
    fn extra_currents(m: &InertiaModel, s: &StageOMcState, _: &Rotation) -> Vec<LabeledCurrent> {
        vec![LabeledCurrent::conserved(
            "j2_mc",
            conserved::current_mc(m, s.theta_dot, s.omega),
        )]
    }
    fn state_columns() -> &'static [&'static str] {
        &[
            "theta_x",
            "theta_y",
            "theta_z",
            "theta_dot_x",
            "theta_dot_y",
            "theta_dot_z",
            "omega_x",
            "omega_y",
            "omega_z",
        ]
    }
}

impl Formulation for StageOMech {
    const KIND: FormulationKind = FormulationKind::StageOMech;
    type State = StageOMechState;
    type Vector = [f64; 9];

    fn from_full(m: &InertiaModel, s: &FullState) -> StageOMechState {
        stage_o_mech_from_full(m, s)
    }
    fn vector(s: &StageOMechState) -> [f64; 9] {
        join3(s.theta, s.theta_dot, s.xi)
    }
    fn attitude(_: &StageOMechState) -> Option<Rotation> {
        None
    }
    fn assemble(v: &[f64; 9], _: Rotation) -> StageOMechState {
        let (theta, theta_dot, xi) = split3(v);
        StageOMechState {
            theta,
            theta_dot,
            xi,
        }
    }
    fn vector_field(m: &InertiaModel, v: &[f64; 9]) -> [f64; 9] {
        let d = dynamics::stage_o_mech_rhs(m, &Self::assemble(v, Rotation::IDENTITY));
        join3(d.theta_dot, d.theta_ddot, d.xi_dot)
    }
    fn body_velocity(m: &InertiaModel, v: &[f64; 9]) -> Vec3 {
        mech_body_velocity(m, &Self::assemble(v, Rotation::IDENTITY))
    }
    fn energy(m: &InertiaModel, s: &StageOMechState) -> f64 {
        lagrangian_stage_o_mech(m, s)
    }
    fn observables(m: &InertiaModel, s: &StageOMechState) -> Observables {
        Observables {
            omega: mech_body_velocity(m, s),
            rotor_velocity: s.theta_dot,
            body_momentum: m.total().apply(s.xi),
        }
    }
    fn rotor_momentum(m: &InertiaModel, s: &StageOMechState) -> Vec3 {
        conserved::rotor_momentum(m, mech_body_velocity(m, s), s.theta_dot)
    }
    fn extra_currents(m: &InertiaModel, s: &StageOMechState, _: &Rotation) -> Vec<LabeledCurrent> {
        vec![LabeledCurrent::with_drift(
            "j2_mech",
            conserved::current_mech(m, s.theta_dot),
            conserved::drift_mech(m, s),
        )]
    }
    fn state_columns() -> &'static [&'static str] {
        &[
            "theta_x",
            "theta_y",
            "theta_z",
            "theta_dot_x",
            "theta_dot_y",
            "theta_dot_z",
            "xi_x",
            "xi_y",
            "xi_z",
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{so3_exp, Mat3};
    use proptest::prelude::*;

    fn fixture() -> InertiaModel {
        InertiaModel::diagonal([3.0, 2.0, 1.0], [1.0, 1.0, 1.0]).unwrap()
    }

    fn fixture_state() -> FullState {
        FullState {
            attitude: Rotation::IDENTITY,
            theta: Vec3::ZERO,
            omega: Vec3::new(1.0, 1.0, 0.0),
            omega_r: Vec3::new(0.0, 0.0, 1.0),
        }
    }

    fn v3(r: f64) -> impl Strategy<Value = Vec3> {
        (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn diag_model() -> impl Strategy<Value = InertiaModel> {
        (
            (0.5..5.0f64, 0.5..5.0f64, 0.5..5.0f64),
            (0.05..2.0f64, 0.05..2.0f64, 0.05..2.0f64),
        )
            .prop_map(|(i, k)| InertiaModel::diagonal([i.0, i.1, i.2], [k.0, k.1, k.2]).unwrap())
    }

    fn full_state() -> impl Strategy<Value = FullState> {
        (v3(3.0), v3(10.0), v3(2.0), v3(2.0)).prop_map(|(r, theta, omega, omega_r)| FullState {
            attitude: so3_exp(r),
            theta,
            omega,
            omega_r,
        })
    }

    /// Substitution oracle for the mechanical Lagrangian: rebuilds `Ω` from `ξ`
    /// by a separate route and evaluates the unreduced energy.
    fn mech_oracle(m: &InertiaModel, s: &StageOMechState) -> f64 {
        let k = *m.rotor().matrix();
        // (I+K)⁻¹K column by column
        let cols: Vec<Vec3> = (0..3)
            .map(|j| m.total().solve(k.mul_vec(Vec3::basis(j))))
            .collect();
        let a = Mat3::from_rows([
            [cols[0].x, cols[1].x, cols[2].x],
            [cols[0].y, cols[1].y, cols[2].y],
            [cols[0].z, cols[1].z, cols[2].z],
        ]);
        let omega = s.xi - a.mul_vec(s.theta_dot);
        let t = omega + s.theta_dot;
        0.5 * omega.dot(m.body().matrix().mul_vec(omega)) + 0.5 * t.dot(k.mul_vec(t))
    }

    #[test]
    fn full_lagrangian_examples() {
        let m = fixture();
        assert_eq!(lagrangian_full(&m, &FullState::at_rest()), 0.0);
        assert!((lagrangian_full(&m, &fixture_state()) - 4.0).abs() < 1e-15);
        let moved = FullState {
            attitude: so3_exp(Vec3::new(0.3, -2.0, 1.0)),
            theta: Vec3::new(5.0, -1.0, 100.0),
            ..fixture_state()
        };
        assert_eq!(
            lagrangian_full(&m, &moved),
            lagrangian_full(&m, &fixture_state())
        );
    }

    #[test]
    fn reduced_lagrangian_examples() {
        let m = fixture();
        let s = fixture_state();
        assert!((lagrangian_ep(&m, &ep_from_full(&s)) - 4.0).abs() < 1e-15);
        let no_rotor = EpState {
            omega: Vec3::new(0.5, -1.0, 2.0),
            omega_r: Vec3::ZERO,
        };
        let locked = 0.5 * no_rotor.omega.dot(m.total().apply(no_rotor.omega));
        assert_eq!(lagrangian_ep(&m, &no_rotor), locked);

        let ss = StageSState {
            attitude: Rotation::IDENTITY,
            omega: Vec3::new(1.0, 1.0, 0.0),
            eta: Vec3::new(1.0, 1.0, 1.0),
        };
        assert!((lagrangian_stage_s(&m, &ss) - 4.0).abs() < 1e-15);
        let rest = StageSState {
            omega: Vec3::ZERO,
            eta: Vec3::ZERO,
            ..ss
        };
        assert_eq!(lagrangian_stage_s(&m, &rest), 0.0);

        let mc = stage_o_mc_from_full(&s);
        assert!((lagrangian_stage_o_mc(&m, &mc) - 4.0).abs() < 1e-15);
        let mc0 = StageOMcState {
            theta_dot: Vec3::ZERO,
            ..mc
        };
        assert_eq!(
            lagrangian_stage_o_mc(&m, &mc0),
            0.5 * mc.omega.dot(m.total().apply(mc.omega))
        );
    }

    #[test]
    fn mech_lagrangian_examples() {
        let m = fixture();
        let mech = StageOMechState {
            theta: Vec3::ZERO,
            theta_dot: Vec3::new(0.0, 0.0, 1.0),
            xi: Vec3::new(1.0, 1.0, 0.5),
        };
        // ½·7.5 + ½·⟨(0,0,1), (0,0,½)⟩ = 3.75 + 0.25, the same energy as the EP fixture
        assert!((lagrangian_stage_o_mech(&m, &mech) - 4.0).abs() < 1e-15);
        assert!((mech_oracle(&m, &mech) - 4.0).abs() < 1e-15);
        let no_rotor = StageOMechState {
            theta_dot: Vec3::ZERO,
            ..mech
        };
        assert_eq!(
            lagrangian_stage_o_mech(&m, &no_rotor),
            0.5 * mech.xi.dot(m.total().apply(mech.xi))
        );
    }

    #[test]
    fn coordinate_map_examples() {
        let m = fixture();
        let s = fixture_state();
        assert_eq!(stage_s_from_full(&s).eta, Vec3::new(1.0, 1.0, 1.0));
        let xi = stage_o_mech_from_full(&m, &s).xi;
        assert!((xi - Vec3::new(1.0, 1.0, 0.5)).max_abs() < 1e-16);
        let still = FullState {
            omega_r: Vec3::ZERO,
            ..s
        };
        assert_eq!(stage_s_from_full(&still).eta, still.omega);
        assert_eq!(stage_o_mech_from_full(&m, &still).xi, still.omega);
    }

    #[test]
    fn formulation_ids_round_trip() {
        for k in FormulationKind::ALL {
            assert_eq!(k.id().parse::<FormulationKind>().unwrap(), k);
        }
        assert!("stage_x".parse::<FormulationKind>().is_err());
    }

    proptest! {
        #[test]
        fn all_lagrangians_agree(m in diag_model(), s in full_state()) {
            let reference = lagrangian_full(&m, &s);
            let tol = 1e-12 * reference.max(1.0);
            for kind in FormulationKind::ALL {
                let value = FormulationState::from_full(kind, &m, &s).lagrangian(&m);
                prop_assert!((value - reference).abs() <= tol, "{kind}: {value} vs {reference}");
            }
            let mech = stage_o_mech_from_full(&m, &s);
            prop_assert!((mech_oracle(&m, &mech) - reference).abs() <= tol);
        }

        #[test]
        fn lagrangians_positive_off_rest(m in diag_model(), s in full_state()) {
            prop_assume!(s.omega.norm() + s.omega_r.norm() > 1e-6);
            for kind in FormulationKind::ALL {
                prop_assert!(FormulationState::from_full(kind, &m, &s).lagrangian(&m) > 0.0);
            }
        }

        #[test]
        fn ep_map_ignores_configuration(s in full_state(), r in v3(3.0), shift in v3(10.0)) {
            let moved = FullState {
                attitude: so3_exp(r).compose(&s.attitude),
                theta: s.theta + shift,
                ..s
            };
            prop_assert_eq!(ep_from_full(&moved), ep_from_full(&s));
        }

        #[test]
        fn mech_identity_holds_for_general_spd(
            s in full_state(),
            a in v3(1.0),
            b in v3(1.0),
        ) {
            // non-diagonal inertia: I = Q diag Qᵀ
            let q = so3_exp(a);
            let body = q.matrix().mul_mat(&Mat3::diagonal([3.0, 2.0, 1.0])).mul_mat(&q.matrix().transpose());
            let q2 = so3_exp(b);
            let rotor = q2.matrix().mul_mat(&Mat3::diagonal([0.4, 0.2, 0.1])).mul_mat(&q2.matrix().transpose());
            let m = InertiaModel::new(body.symmetric_part(), rotor.symmetric_part()).unwrap();
            let reference = lagrangian_full(&m, &s);
            let mech = lagrangian_stage_o_mech(&m, &stage_o_mech_from_full(&m, &s));
            prop_assert!((mech - reference).abs() <= 1e-12 * reference.max(1.0));
        }
    }
}
