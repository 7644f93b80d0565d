//! Explicit first-order vector fields of every formulation.
//!
//! The reduced equations are implicit in the accelerations, e.g.
//! `(I+K)Ω̇ + KΩ̇_r = m × Ω` together with `KΩ̇_r + KΩ̇ = 0`. Each function
//! below ships the eliminated form. Attitude derivatives are carried as the
//! body velocity `Ω`, so integrators advance `R` on SO(3) through the
//! exponential map.

use crate::algebra::{cross, InertiaModel, Rotation, Vec3};
use crate::formulations::{
    mech_body_velocity, EpState, FullState, StageOMcState, StageOMechState, StageSState,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpDerivative {
    pub omega_dot: Vec3,
    pub omega_r_dot: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageSDerivative {
    /// `R⁻¹Ṙ`.
    pub body_velocity: Vec3,
    pub omega_dot: Vec3,
    pub eta_dot: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageOMcDerivative {
    pub theta_dot: Vec3,
    pub theta_ddot: Vec3,
    pub omega_dot: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageOMechDerivative {
    pub theta_dot: Vec3,
    pub theta_ddot: Vec3,
    pub xi_dot: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FullDerivative {
    pub body_velocity: Vec3,
    pub theta_dot: Vec3,
    pub omega_dot: Vec3,
    pub omega_r_dot: Vec3,
}

/// Total body momentum `(I+K)Ω + KΩ_r`.
fn body_momentum(m: &InertiaModel, omega: Vec3, rotor: Vec3) -> Vec3 {
    m.total().apply(omega) + m.rotor().apply(rotor)
}

/// Euler–Poincaré equations. Subtracting the rotor equation from the body
/// equation leaves `IΩ̇ = m × Ω`, and `KΩ̇_r = −KΩ̇` gives `Ω̇_r = −Ω̇`.
pub fn ep_rhs(m: &InertiaModel, s: &EpState) -> EpDerivative {
    let omega_dot = m
        .body()
        .solve(cross(body_momentum(m, s.omega, s.omega_r), s.omega));
    EpDerivative {
        omega_dot,
        omega_r_dot: -omega_dot,
    }
}

/// Rotor-first stages: `Kη̇ = 0` and `IΩ̇ = IΩ × Ω + (Kη) × Ω`.
pub fn stage_s_rhs(m: &InertiaModel, s: &StageSState) -> StageSDerivative {
    let rigid = cross(m.body().apply(s.omega), s.omega);
    let gyroscopic = cross(m.rotor().apply(s.eta), s.omega);
    StageSDerivative {
        body_velocity: s.omega,
        omega_dot: m.body().solve(rigid + gyroscopic),
        eta_dot: Vec3::ZERO,
    }
}

/// SO(3)-first stages with the Maurer–Cartan connection. Same equations as
/// [`ep_rhs`] with `Ω_r` renamed `θ̇`.
pub fn stage_o_mc_rhs(m: &InertiaModel, s: &StageOMcState) -> StageOMcDerivative {
    let omega_dot = m
        .body()
        .solve(cross(body_momentum(m, s.omega, s.theta_dot), s.omega));
    StageOMcDerivative {
        theta_dot: s.theta_dot,
        theta_ddot: -omega_dot,
        omega_dot,
    }
}

/// SO(3)-first stages with the mechanical connection:
/// `(I+K)ξ̇ = T` and `Iθ̈ = −T` with `T = ((I+K)ξ) × Ω`, `Ω = ξ − (I+K)⁻¹Kθ̇`.
pub fn stage_o_mech_rhs(m: &InertiaModel, s: &StageOMechState) -> StageOMechDerivative {
    let omega = mech_body_velocity(m, s);
    let torque = cross(m.total().apply(s.xi), omega);
    StageOMechDerivative {
        theta_dot: s.theta_dot,
        theta_ddot: -m.body().solve(torque),
        xi_dot: m.total().solve(torque),
    }
}

/// Unreduced system: `Ṙ = R·hat(Ω)`, `θ̇ = Ω_r`, velocities from [`ep_rhs`].
pub fn full_rhs(m: &InertiaModel, s: &FullState) -> FullDerivative {
    let d = ep_rhs(
        m,
        &EpState {
            omega: s.omega,
            omega_r: s.omega_r,
        },
    );
    FullDerivative {
        body_velocity: s.omega,
        theta_dot: s.omega_r,
        omega_dot: d.omega_dot,
        omega_r_dot: d.omega_r_dot,
    }
}

/// Curvature 2-form of the rotor-first connection in body coordinates,
/// `B̃_R(v, w) = w × v` for left-translated velocities `v`, `w`.
pub fn curvature_stage_s(_attitude: &Rotation, v: Vec3, w: Vec3) -> Vec3 {
    cross(w, v)
}

/// Curvature 2-form of the mechanical connection on the rotor torus,
/// `B̃_θ(u, w) = ((I+K)⁻¹Kw) × ((I+K)⁻¹Ku)`.
pub fn curvature_stage_o_mech(m: &InertiaModel, u: Vec3, w: Vec3) -> Vec3 {
    cross(m.coupling(w), m.coupling(u))
}
