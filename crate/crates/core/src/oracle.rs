//! Independent check that reduced solutions are critical curves of the
//! unreduced action.
//!
//! A reference arc `(R_k, θ_k)` on a grid of spacing `h` is sampled from a
//! finer reconstructed integration. The discrete action
//! `S = Σ h·L(log(R_kᵀR_{k+1})/h, (θ_{k+1} − θ_k)/h)` is varied along
//! `R_k·exp(ε b_k eᵢ)` and `θ_k + ε b_k eᵢ` with a smooth bump `b` vanishing at
//! the endpoints. The six derivatives `dS/dε` form the residual, which is
//! `O(h²)` on a true solution.

use crate::algebra::{so3_exp, so3_log, InertiaModel, Rotation, Vec3};
use crate::formulations::{lagrangian_full, FullState, Unreduced};
use crate::integrators::{integrate_with, IntegrationError, StepSpec};

/// Default arc duration.
pub const ARC_DURATION: f64 = 0.25;
/// Substeps of the reference integration per grid interval.
const SUBSTEPS: usize = 8;
/// Variation amplitude for the five-point derivative in `ε`.
const EPSILON: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct Arc {
    pub h: f64,
    pub attitude: Vec<Rotation>,
    pub theta: Vec<Vec3>,
}

/// Euler–Lagrange residual: `dS/dε` for rotations about the three body axes
/// and for the three rotor angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElResidual {
    pub rotation: Vec3,
    pub rotor: Vec3,
}

impl ElResidual {
    pub fn max_abs(&self) -> f64 {
        self.rotation.max_abs().max(self.rotor.max_abs())
    }
}

/// Samples the reconstructed solution from `s` every `h` over `duration`.
pub fn solution_arc(
    m: &InertiaModel,
    s: &FullState,
    h: f64,
    duration: f64,
) -> Result<Arc, IntegrationError> {
    let intervals = (duration / h).round() as usize;
    let fine = h / SUBSTEPS as f64;
    let spec =
        StepSpec::rk4(fine, fine * (intervals * SUBSTEPS) as f64).expect("arc step is valid");
    let mut arc = Arc {
        h,
        attitude: Vec::with_capacity(intervals + 1),
        theta: Vec::with_capacity(intervals + 1),
    };
    let mut n = 0;
    integrate_with::<Unreduced>(m, s, s.attitude, &spec, |sample| {
        if n % SUBSTEPS == 0 {
            arc.attitude.push(sample.attitude);
            arc.theta.push(sample.state.theta);
        }
        n += 1;
    })?;
    Ok(arc)
}

/// `C^∞` bump on `[0, 1]`, zero at both ends, one in the middle.
fn bump(u: f64) -> f64 {
    let x = 2.0 * u - 1.0;
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

/// Adds `amplitude·sin(πt/T)` to every angle and rotates the attitude by the
/// same amount about `(1, 1, 1)/√3`. The endpoints are unchanged.
pub fn perturbed_arc(arc: &Arc, amplitude: f64) -> Arc {
    let n = arc.attitude.len();
    let last = (n - 1).max(1) as f64;
    let axis = Vec3::new(1.0, 1.0, 1.0) * (1.0 / 3f64.sqrt());
    let profile = |k: usize| amplitude * (std::f64::consts::PI * k as f64 / last).sin();
    Arc {
        h: arc.h,
        attitude: arc
            .attitude
            .iter()
            .enumerate()
            .map(|(k, r)| r.compose(&so3_exp(axis * profile(k))))
            .collect(),
        theta: arc
            .theta
            .iter()
            .enumerate()
            .map(|(k, t)| *t + Vec3::new(1.0, 1.0, 1.0) * profile(k))
            .collect(),
    }
}

fn discrete_action(m: &InertiaModel, arc: &Arc) -> f64 {
    let h = arc.h;
    let mut sum = 0.0;
    for k in 0..arc.attitude.len() - 1 {
        let rel = arc.attitude[k].inverse().compose(&arc.attitude[k + 1]);
        let s = FullState {
            attitude: arc.attitude[k],
            theta: arc.theta[k],
            omega: so3_log(&rel) * (1.0 / h),
            omega_r: (arc.theta[k + 1] - arc.theta[k]) * (1.0 / h),
        };
        sum += h * lagrangian_full(m, &s);
    }
    sum
}

fn varied(arc: &Arc, direction: usize, eps: f64) -> Arc {
    let n = arc.attitude.len();
    let last = (n - 1).max(1) as f64;
    let mut out = arc.clone();
    for k in 0..n {
        let b = eps * bump(k as f64 / last);
        if direction < 3 {
            out.attitude[k] = arc.attitude[k].compose(&so3_exp(Vec3::basis(direction) * b));
        } else {
            out.theta[k] = arc.theta[k] + Vec3::basis(direction - 3) * b;
        }
    }
    out
}

/// First variation of the discrete action along the six bump directions.
pub fn el_residual(m: &InertiaModel, arc: &Arc) -> ElResidual {
    let mut r = [0.0; 6];
    for (dir, slot) in r.iter_mut().enumerate() {
        let s = |e: f64| discrete_action(m, &varied(arc, dir, e));
        let e = EPSILON;
        *slot = (s(-2.0 * e) - 8.0 * s(-e) + 8.0 * s(e) - s(2.0 * e)) / (12.0 * e);
    }
    ElResidual {
        rotation: Vec3::new(r[0], r[1], r[2]),
        rotor: Vec3::new(r[3], r[4], r[5]),
    }
}

/// Residual of the unreduced Euler–Lagrange equations along the solution
/// starting at `s`, sampled at spacing `h` over [`ARC_DURATION`].
pub fn oracle_check_euler_lagrange(
    m: &InertiaModel,
    s: &FullState,
    h: f64,
) -> Result<ElResidual, IntegrationError> {
    Ok(el_residual(m, &solution_arc(m, s, h, ARC_DURATION)?))
}
