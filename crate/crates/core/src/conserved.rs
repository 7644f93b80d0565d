//! Energy, Noether currents and their analytic drifts.
//!
//! Pairings between algebras and their duals use the Euclidean inner product.
//! A current `J` with drift `D` satisfies `d/dt⟨J, b⟩ = ⟨D, b⟩` for every
//! direction `b`, so drifts are returned as vectors.

use serde::Serialize;

use crate::algebra::{cross, InertiaModel, Rotation, Vec3};
use crate::dynamics::{curvature_stage_o_mech, curvature_stage_s};
use crate::formulations::{
    mech_body_velocity, Formulation, FormulationState, StageOMcState, StageOMechState, StageSState,
};

/// A named current with its analytic time derivative when it is not conserved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LabeledCurrent {
    pub label: &'static str,
    pub value: Vec3,
    pub drift: Option<Vec3>,
}

impl LabeledCurrent {
    pub fn conserved(label: &'static str, value: Vec3) -> Self {
        Self {
            label,
            value,
            drift: None,
        }
    }

    pub fn with_drift(label: &'static str, value: Vec3, drift: Vec3) -> Self {
        Self {
            label,
            value,
            drift: Some(drift),
        }
    }
}

/// Diagnostics recorded with every trajectory sample.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticSample {
    pub t: f64,
    pub energy: f64,
    /// `K(Ω + Ω_r)`.
    pub rotor_momentum: Vec3,
    /// `(I+K)Ω + KΩ_r`.
    pub body_momentum: Vec3,
    /// `R·body_momentum`.
    pub spatial_momentum: Vec3,
    pub currents: Vec<LabeledCurrent>,
}

pub fn diagnostics<F: Formulation>(
    m: &InertiaModel,
    t: f64,
    state: &F::State,
    attitude: &Rotation,
) -> DiagnosticSample {
    let obs = F::observables(m, state);
    DiagnosticSample {
        t,
        energy: F::energy(m, state),
        rotor_momentum: F::rotor_momentum(m, state),
        body_momentum: obs.body_momentum,
        spatial_momentum: attitude.apply(obs.body_momentum),
        currents: F::extra_currents(m, state, attitude),
    }
}

/// Momentum of the rotors, `J₁ = K(Ω + Ω_r)`. Conserved.
pub fn rotor_momentum(m: &InertiaModel, omega: Vec3, omega_r: Vec3) -> Vec3 {
    m.rotor().apply(omega + omega_r)
}

/// Spatial angular momentum of the rigid part alone, `J₂ = R·(IΩ)`.
pub fn body_angular_momentum_rigid(m: &InertiaModel, attitude: &Rotation, omega: Vec3) -> Vec3 {
    attitude.apply(m.body().apply(omega))
}

/// Total spatial momentum `R·((I+K)Ω + KΩ_r)`. Conserved.
pub fn total_spatial_momentum(
    m: &InertiaModel,
    attitude: &Rotation,
    omega: Vec3,
    omega_r: Vec3,
) -> Vec3 {
    attitude.apply(m.total().apply(omega) + m.rotor().apply(omega_r))
}

/// `J₂,MC = K(θ̇ + Ω)`. Conserved.
pub fn current_mc(m: &InertiaModel, theta_dot: Vec3, omega: Vec3) -> Vec3 {
    m.rotor().apply(theta_dot + omega)
}

/// `J₂,mech = K(I+K)⁻¹Iθ̇`. Drifts as [`drift_mech`].
pub fn current_mech(m: &InertiaModel, theta_dot: Vec3) -> Vec3 {
    m.coupling_transpose(m.body().apply(theta_dot))
}

/// Noether current drift `−⟨∂L/∂v, ω(q̇, η^Q) + η^V⟩` for one symmetry direction.
///
/// `momentum` is `∂L/∂v`, `curvature` the curvature term `ω(q̇, η^Q)` and
/// `generator` the vertical generator `η^V`. Flat connections with a
/// horizontal action give zero.
pub fn noether_drift_general(momentum: Vec3, curvature: Vec3, generator: Vec3) -> f64 {
    -momentum.dot(curvature + generator)
}

/// Inputs of [`noether_drift_general`] for a given direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftTerms {
    pub momentum: Vec3,
    pub curvature: Vec3,
    pub generator: Vec3,
}

impl DriftTerms {
    pub fn evaluate(&self) -> f64 {
        noether_drift_general(self.momentum, self.curvature, self.generator)
    }
}

/// Rotor-first stage, spatial direction `b`: momentum `Kη`, curvature
/// `B̃_R(Ṙ, bR) = (R⁻¹b) × Ω`, no vertical generator.
pub fn stage_s_drift_terms(m: &InertiaModel, s: &StageSState, b: Vec3) -> DriftTerms {
    DriftTerms {
        momentum: m.rotor().apply(s.eta),
        curvature: curvature_stage_s(&s.attitude, s.omega, s.attitude.apply_inverse(b)),
        generator: Vec3::ZERO,
    }
}

/// Maurer–Cartan stage: flat connection, horizontal action.
pub fn stage_o_mc_drift_terms(m: &InertiaModel, s: &StageOMcState, _a: Vec3) -> DriftTerms {
    DriftTerms {
        momentum: m.total().apply(s.omega) + m.rotor().apply(s.theta_dot),
        curvature: Vec3::ZERO,
        generator: Vec3::ZERO,
    }
}

/// Mechanical-connection stage, rotor direction `a`: momentum `(I+K)ξ`,
/// curvature `B̃_θ(θ̇, a)`, vertical generator `ξ × ((I+K)⁻¹Ka)`.
pub fn stage_o_mech_drift_terms(m: &InertiaModel, s: &StageOMechState, a: Vec3) -> DriftTerms {
    DriftTerms {
        momentum: m.total().apply(s.xi),
        curvature: curvature_stage_o_mech(m, s.theta_dot, a),
        generator: cross(s.xi, m.coupling(a)),
    }
}

/// Collects `d/dt⟨J, eᵢ⟩` for the three basis directions.
pub fn drift_vector(terms: impl Fn(Vec3) -> DriftTerms) -> Vec3 {
    Vec3::new(
        terms(Vec3::X).evaluate(),
        terms(Vec3::Y).evaluate(),
        terms(Vec3::Z).evaluate(),
    )
}

/// Drift of `J₂ = R·(IΩ)` along rotor-first solutions: `R·((Kη) × Ω)`.
pub fn drift_j2(m: &InertiaModel, s: &StageSState) -> Vec3 {
    s.attitude.apply(cross(m.rotor().apply(s.eta), s.omega))
}

/// Drift of `J₂,mech`: `K(I+K)⁻¹(Ω × (I+K)ξ)`.
pub fn drift_mech(m: &InertiaModel, s: &StageOMechState) -> Vec3 {
    let omega = mech_body_velocity(m, s);
    m.coupling_transpose(cross(omega, m.total().apply(s.xi)))
}

/// Drift of `J₂,MC`, identically zero.
pub fn drift_mc(m: &InertiaModel, s: &StageOMcState) -> Vec3 {
    drift_vector(|a| stage_o_mc_drift_terms(m, s, a))
}

/// Energy of a state from its own formulation's reduced Lagrangian.
pub fn energy(m: &InertiaModel, state: &FormulationState) -> f64 {
    state.lagrangian(m)
}

/// Fourth-order centered differences `(−f₊₂ + 8f₊₁ − 8f₋₁ + f₋₂)/(12h)`.
/// The first and last two entries have no stencil and are `None`.
pub fn central_difference_4(values: &[Vec3], h: f64) -> Vec<Option<Vec3>> {
    let n = values.len();
    (0..n)
        .map(|i| {
            if i < 2 || i + 2 >= n {
                return None;
            }
            let num = (values[i + 1] - values[i - 1]) * 8.0 - (values[i + 2] - values[i - 2]);
            Some(num * (1.0 / (12.0 * h)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{so3_exp, Mat3};
    use crate::formulations::{
        stage_o_mc_from_full, stage_o_mech_from_full, stage_s_from_full, FormulationKind,
        FullState, StageOMc, StageOMech, StageS,
    };
    use crate::integrators::{integrate, StepSpec};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn fixture() -> InertiaModel {
        InertiaModel::diagonal([3.0, 2.0, 1.0], [1.0, 1.0, 1.0]).unwrap()
    }

    fn fixture_state() -> FullState {
        FullState {
            attitude: so3_exp(Vec3::new(0.3, -0.2, 0.5)),
            theta: Vec3::ZERO,
            omega: Vec3::new(1.0, 1.0, 0.0),
            omega_r: Vec3::new(0.0, 0.0, 1.0),
        }
    }

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn current_examples() {
        let m = fixture();
        let (omega, rotor) = (Vec3::new(1.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(rotor_momentum(&m, omega, rotor), Vec3::new(1.0, 1.0, 1.0));
        assert_eq!(rotor_momentum(&m, omega, -omega), Vec3::ZERO);
        assert_eq!(current_mc(&m, rotor, omega), Vec3::new(1.0, 1.0, 1.0));
        assert_eq!(current_mc(&m, -omega, omega), Vec3::ZERO);
        assert_eq!(current_mech(&m, Vec3::ZERO), Vec3::ZERO);
        assert!(close(
            current_mech(&m, rotor),
            Vec3::new(0.0, 0.0, 0.5),
            1e-16
        ));

        let i_only = InertiaModel::diagonal([3.0, 2.0, 1.0], [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(
            body_angular_momentum_rigid(&i_only, &Rotation::IDENTITY, omega),
            Vec3::new(3.0, 2.0, 0.0)
        );
        let quarter = so3_exp(Vec3::new(0.0, 0.0, FRAC_PI_2));
        assert!(close(
            body_angular_momentum_rigid(&i_only, &quarter, omega),
            Vec3::new(-2.0, 3.0, 0.0),
            1e-15
        ));
        assert_eq!(
            total_spatial_momentum(&m, &Rotation::IDENTITY, omega, rotor),
            Vec3::new(4.0, 3.0, 1.0)
        );
    }

    #[test]
    fn drift_trivial_cases() {
        let m = fixture();
        let mut s = stage_s_from_full(&fixture_state());
        s.eta = Vec3::ZERO;
        assert_eq!(drift_j2(&m, &s), Vec3::ZERO);
        // Ω parallel to Kη
        s.eta = Vec3::new(0.5, 0.5, 0.0);
        s.omega = Vec3::new(1.0, 1.0, 0.0);
        assert_eq!(drift_j2(&m, &s), Vec3::ZERO);

        let mut mech = stage_o_mech_from_full(&m, &fixture_state());
        mech.xi = Vec3::ZERO;
        assert_eq!(drift_mech(&m, &mech), Vec3::ZERO);
        // no rotor speed and ξ on a principal axis: Ω ∥ (I+K)ξ
        mech.xi = Vec3::new(0.0, 1.5, 0.0);
        mech.theta_dot = Vec3::ZERO;
        assert_eq!(drift_mech(&m, &mech), Vec3::ZERO);

        let mc = stage_o_mc_from_full(&fixture_state());
        assert_eq!(drift_mc(&m, &mc), Vec3::ZERO);
    }

    #[test]
    fn energy_examples() {
        let m = fixture();
        let s = fixture_state();
        for kind in FormulationKind::ALL {
            let e = energy(&m, &FormulationState::from_full(kind, &m, &s));
            assert!((e - 4.0).abs() < 1e-14, "{kind}: {e}");
            assert_eq!(
                energy(
                    &m,
                    &FormulationState::from_full(kind, &m, &FullState::at_rest())
                ),
                0.0
            );
        }
    }

    #[test]
    fn central_difference_is_exact_on_quartics() {
        let h = 0.1;
        let f = |t: f64| Vec3::new(t.powi(4), 3.0 * t * t - t, 2.0);
        let df = |t: f64| Vec3::new(4.0 * t.powi(3), 6.0 * t - 1.0, 0.0);
        let values: Vec<Vec3> = (0..10).map(|i| f(i as f64 * h)).collect();
        let d = central_difference_4(&values, h);
        assert!(d[0].is_none() && d[1].is_none() && d[8].is_none() && d[9].is_none());
        for (i, v) in d.iter().enumerate().take(8).skip(2) {
            assert!(close(v.unwrap(), df(i as f64 * h), 1e-12));
        }
    }

    /// Finite-difference oracle: integrate at `dt`, differentiate the recorded
    /// current and compare with the recorded analytic drift.
    fn fd_mismatch<F: Formulation>(
        m: &InertiaModel,
        s: &FullState,
        dt: f64,
        t_end: f64,
    ) -> (f64, f64) {
        let spec = StepSpec::rk4(dt, t_end).unwrap();
        let traj = integrate::<F>(m, &F::from_full(m, s), s.attitude, &spec).unwrap();
        let current: Vec<Vec3> = traj
            .samples
            .iter()
            .map(|x| x.diagnostics.currents[0].value)
            .collect();
        let fd = central_difference_4(&current, dt);
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (sample, d) in traj.samples.iter().zip(fd) {
            if let Some(d) = d {
                let analytic = sample.diagnostics.currents[0].drift.unwrap_or(Vec3::ZERO);
                worst = worst.max((analytic - d).max_abs());
                scale = scale.max(d.max_abs());
            }
        }
        (worst, scale)
    }

    #[test]
    fn j2_drift_matches_finite_differences() {
        let (worst, scale) = fd_mismatch::<StageS>(&fixture(), &fixture_state(), 1e-3, 1.0);
        assert!(worst <= 1e-7, "{worst:e}");
        assert!(scale > 0.1, "drift should be non-trivial, got {scale}");
    }

    #[test]
    fn mech_drift_matches_finite_differences() {
        let (worst, scale) = fd_mismatch::<StageOMech>(&fixture(), &fixture_state(), 1e-3, 1.0);
        assert!(worst <= 1e-7, "{worst:e}");
        assert!(scale > 0.1, "drift should be non-trivial, got {scale}");
    }

    #[test]
    fn mc_current_has_no_drift() {
        let (worst, scale) = fd_mismatch::<StageOMc>(&fixture(), &fixture_state(), 1e-3, 1.0);
        assert!(worst <= 1e-10, "{worst:e}");
        assert!(scale <= 1e-10);
    }

    #[test]
    fn j2_drift_vanishes_for_free_rigid_body() {
        // K → 0: the rigid part carries all the momentum and J₂ is conserved
        let m = InertiaModel::diagonal([3.0, 2.0, 1.0], [1e-12, 1e-12, 1e-12]).unwrap();
        let s = stage_s_from_full(&fixture_state());
        assert!(drift_j2(&m, &s).max_abs() < 1e-11);
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
        (v3(3.0), v3(2.0), v3(2.0)).prop_map(|(r, omega, omega_r)| FullState {
            attitude: so3_exp(r),
            theta: Vec3::ZERO,
            omega,
            omega_r,
        })
    }

    proptest! {
        #[test]
        fn general_noether_drift_reproduces_closed_forms(m in diag_model(), s in full_state()) {
            let ss = stage_s_from_full(&s);
            let general = drift_vector(|b| stage_s_drift_terms(&m, &ss, b));
            prop_assert!(close(general, drift_j2(&m, &ss), 1e-12));

            let mech = stage_o_mech_from_full(&m, &s);
            let general = drift_vector(|a| stage_o_mech_drift_terms(&m, &mech, a));
            prop_assert!(close(general, drift_mech(&m, &mech), 1e-12));

            let mc = stage_o_mc_from_full(&s);
            prop_assert_eq!(drift_vector(|a| stage_o_mc_drift_terms(&m, &mc, a)), Vec3::ZERO);
        }

        #[test]
        fn drifts_agree_with_rhs_level_derivatives(m in diag_model(), s in full_state()) {
            use crate::dynamics::{stage_o_mech_rhs, stage_s_rhs};
            // d/dt R(IΩ) = R(Ω × IΩ + IΩ̇)
            let ss = stage_s_from_full(&s);
            let d = stage_s_rhs(&m, &ss);
            let via_rhs = ss.attitude.apply(cross(ss.omega, m.body().apply(ss.omega)) + m.body().apply(d.omega_dot));
            prop_assert!(close(via_rhs, drift_j2(&m, &ss), 1e-12));
            // d/dt K(I+K)⁻¹Iθ̇ = K(I+K)⁻¹Iθ̈
            let mech = stage_o_mech_from_full(&m, &s);
            let d = stage_o_mech_rhs(&m, &mech);
            prop_assert!(close(current_mech(&m, d.theta_ddot), drift_mech(&m, &mech), 1e-12));
        }

        #[test]
        fn conserved_quantities_have_zero_rate(m in diag_model(), s in full_state()) {
            use crate::dynamics::ep_rhs;
            let ep = crate::formulations::ep_from_full(&s);
            let d = ep_rhs(&m, &ep);
            prop_assert_eq!(rotor_momentum(&m, d.omega_dot, d.omega_r_dot), Vec3::ZERO);
            let p = m.total().apply(s.omega) + m.rotor().apply(s.omega_r);
            let p_dot = m.total().apply(d.omega_dot) + m.rotor().apply(d.omega_r_dot);
            prop_assert!(p.dot(p_dot).abs() <= 1e-12);
            // spatial momentum: d/dt R p = R(Ω × p + ṗ) = 0
            let spatial_rate = s.attitude.apply(cross(s.omega, p) + p_dot);
            prop_assert!(spatial_rate.max_abs() <= 1e-12);
            let energy_rate = p.dot(d.omega_dot) + m.rotor().apply(s.omega + s.omega_r).dot(d.omega_r_dot);
            prop_assert!(energy_rate.abs() <= 1e-12);
        }

        #[test]
        fn mech_drift_general_spd(a in v3(1.0), s in full_state()) {
            let q = so3_exp(a);
            let mm = q.matrix().mul_mat(&Mat3::diagonal([3.0, 2.0, 1.0])).mul_mat(&q.matrix().transpose());
            let m = InertiaModel::new(mm.symmetric_part(), Mat3::diagonal([0.5, 0.3, 0.2])).unwrap();
            let mech = stage_o_mech_from_full(&m, &s);
            let general = drift_vector(|a| stage_o_mech_drift_terms(&m, &mech, a));
            prop_assert!(close(general, drift_mech(&m, &mech), 1e-12));
        }
    }
}
