//! Small fixed-size linear algebra for so(3) ≅ ℝ³, SO(3) and inertia operators.
//!
//! Covectors are identified with vectors through the Euclidean inner product,
//! so momenta and velocities share the [`Vec3`] type.

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for skew-symmetry in [`vee`] and for the rotation invariants.
pub const STRUCTURE_TOL: f64 = 1e-9;

/// Below this angle [`so3_exp`] switches to Taylor series for its coefficients.
const SMALL_ANGLE: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("matrix is not skew-symmetric (max |M + Mᵀ| = {0:e})")]
    NotSkew(f64),
    #[error("matrix is not symmetric (entry ({0},{1}) differs from its transpose)")]
    NotSymmetric(usize, usize),
    #[error("matrix is not positive definite (leading minor {0} is {1:e})")]
    NotPositiveDefinite(usize, f64),
    #[error("matrix is singular or indefinite (pivot {0} is {1:e})")]
    Singular(usize, f64),
    #[error("matrix is not a rotation (orthogonality residual {residual:e}, det {det})")]
    NotRotation { residual: f64, det: f64 },
    #[error("non-finite component")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::from_array(a)
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub const fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Standard basis vector `e_i`.
    pub fn basis(i: usize) -> Self {
        let mut a = [0.0; 3];
        a[i] = 1.0;
        Self::from_array(a)
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        cross(self, other)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Max-norm.
    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Vec3 {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub const fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Mat3(rows)
    }

    pub fn diagonal(d: [f64; 3]) -> Self {
        Mat3([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    /// `(M + Mᵀ)/2`, exactly symmetric.
    pub fn symmetric_part(&self) -> Mat3 {
        self.add(&self.transpose()).scale(0.5)
    }

    pub fn transpose(&self) -> Mat3 {
        let a = &self.0;
        Mat3([
            [a[0][0], a[1][0], a[2][0]],
            [a[0][1], a[1][1], a[2][1]],
            [a[0][2], a[1][2], a[2][2]],
        ])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let a = &self.0;
        Vec3::new(
            a[0][0] * v.x + a[0][1] * v.y + a[0][2] * v.z,
            a[1][0] * v.x + a[1][1] * v.y + a[1][2] * v.z,
            a[2][0] * v.x + a[2][1] * v.y + a[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, other: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.0[i][0] * other.0[0][j]
                    + self.0[i][1] * other.0[1][j]
                    + self.0[i][2] * other.0[2][j];
            }
        }
        Mat3(out)
    }

    pub fn add(&self, other: &Mat3) -> Mat3 {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Mat3) -> Mat3 {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        self.zip(&Mat3::ZERO, |a, _| a * s)
    }

    fn zip(&self, other: &Mat3, f: impl Fn(f64, f64) -> f64) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = f(self.0[i][j], other.0[i][j]);
            }
        }
        Mat3(out)
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let a = &self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

/// Skew matrix of `v`: `hat(v)·w = v × w`.
pub fn hat(v: Vec3) -> Mat3 {
    Mat3([[0.0, -v.z, v.y], [v.z, 0.0, -v.x], [-v.y, v.x, 0.0]])
}

/// Inverse of [`hat`]. Rejects matrices whose symmetric part exceeds [`STRUCTURE_TOL`].
pub fn vee(m: &Mat3) -> Result<Vec3, AlgebraError> {
    let asym = m.add(&m.transpose()).max_abs();
    if !asym.is_finite() {
        return Err(AlgebraError::NonFinite);
    }
    if asym > STRUCTURE_TOL {
        return Err(AlgebraError::NotSkew(asym));
    }
    Ok(skew_vee(m))
}

/// Vector of the skew part of `m`, `vee((M − Mᵀ)/2)`. Exact on skew input.
fn skew_vee(m: &Mat3) -> Vec3 {
    let a = &m.0;
    Vec3::new(
        0.5 * (a[2][1] - a[1][2]),
        0.5 * (a[0][2] - a[2][0]),
        0.5 * (a[1][0] - a[0][1]),
    )
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    Vec3::new(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )
}

/// Symmetric positive-definite matrix together with its LDLᵀ factors.
///
/// The factorization avoids square roots, so diagonal matrices solve by exact
/// componentwise division.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpdMatrix {
    matrix: Mat3,
    // unit lower-triangular factor below the diagonal: l10, l20, l21
    l: [f64; 3],
    d: [f64; 3],
}

impl SpdMatrix {
    pub fn new(matrix: Mat3) -> Result<Self, AlgebraError> {
        if !matrix.is_finite() {
            return Err(AlgebraError::NonFinite);
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                if matrix.0[i][j] != matrix.0[j][i] {
                    return Err(AlgebraError::NotSymmetric(i, j));
                }
            }
        }
        let a = &matrix.0;
        let minors = [a[0][0], a[0][0] * a[1][1] - a[0][1] * a[1][0], matrix.det()];
        for (k, &minor) in minors.iter().enumerate() {
            if minor <= 0.0 {
                return Err(AlgebraError::NotPositiveDefinite(k + 1, minor));
            }
        }

        let d0 = a[0][0];
        let l10 = a[1][0] / d0;
        let l20 = a[2][0] / d0;
        let d1 = a[1][1] - l10 * l10 * d0;
        if d1 <= 0.0 {
            return Err(AlgebraError::Singular(1, d1));
        }
        let l21 = (a[2][1] - l20 * l10 * d0) / d1;
        let d2 = a[2][2] - l20 * l20 * d0 - l21 * l21 * d1;
        if d2 <= 0.0 {
            return Err(AlgebraError::Singular(2, d2));
        }
        Ok(Self {
            matrix,
            l: [l10, l20, l21],
            d: [d0, d1, d2],
        })
    }

    pub fn diagonal(d: [f64; 3]) -> Result<Self, AlgebraError> {
        Self::new(Mat3::diagonal(d))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.matrix.mul_vec(v)
    }

    pub fn solve(&self, b: Vec3) -> Vec3 {
        let [l10, l20, l21] = self.l;
        // L y = b
        let y0 = b.x;
        let y1 = b.y - l10 * y0;
        let y2 = b.z - l20 * y0 - l21 * y1;
        // D z = y
        let z = [y0 / self.d[0], y1 / self.d[1], y2 / self.d[2]];
        // Lᵀ x = z
        let x2 = z[2];
        let x1 = z[1] - l21 * x2;
        let x0 = z[0] - l10 * x1 - l20 * x2;
        Vec3::new(x0, x1, x2)
    }

    pub fn is_diagonal(&self) -> bool {
        self.l == [0.0; 3]
    }
}

/// Matrix–vector product. Free-function form of [`SpdMatrix::apply`].
pub fn apply(m: &SpdMatrix, v: Vec3) -> Vec3 {
    m.apply(v)
}

/// Solves `M x = v` for SPD `M`.
pub fn solve(m: &SpdMatrix, v: Vec3) -> Vec3 {
    m.solve(v)
}

/// Body inertia `I` and rotor inertia `K`, both symmetric positive-definite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertiaModel {
    body: SpdMatrix,
    rotor: SpdMatrix,
    total: SpdMatrix,
}

impl InertiaModel {
    pub fn new(body: Mat3, rotor: Mat3) -> Result<Self, AlgebraError> {
        let body = SpdMatrix::new(body)?;
        let rotor = SpdMatrix::new(rotor)?;
        let total = SpdMatrix::new(body.matrix.add(&rotor.matrix))?;
        Ok(Self { body, rotor, total })
    }

    pub fn diagonal(body: [f64; 3], rotor: [f64; 3]) -> Result<Self, AlgebraError> {
        Self::new(Mat3::diagonal(body), Mat3::diagonal(rotor))
    }

    /// Body inertia `I`.
    pub fn body(&self) -> &SpdMatrix {
        &self.body
    }

    /// Rotor inertia `K`.
    pub fn rotor(&self) -> &SpdMatrix {
        &self.rotor
    }

    /// Locked inertia `I + K`.
    pub fn total(&self) -> &SpdMatrix {
        &self.total
    }

    /// `(I+K)⁻¹K v`, the rotor contribution to the locked velocity.
    pub fn coupling(&self, v: Vec3) -> Vec3 {
        self.total.solve(self.rotor.apply(v))
    }

    /// `K(I+K)⁻¹ v`, the transpose of [`InertiaModel::coupling`].
    pub fn coupling_transpose(&self, v: Vec3) -> Vec3 {
        self.rotor.apply(self.total.solve(v))
    }

    pub fn is_diagonal(&self) -> bool {
        self.body.is_diagonal() && self.rotor.is_diagonal()
    }
}

/// Attitude of the rigid body: a 3×3 special orthogonal matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub const IDENTITY: Rotation = Rotation(Mat3::IDENTITY);

    /// Validates `‖RᵀR − Id‖_max ≤ 1e-9` and `|det R − 1| ≤ 1e-9`.
    pub fn from_matrix(m: Mat3) -> Result<Self, AlgebraError> {
        if !m.is_finite() {
            return Err(AlgebraError::NonFinite);
        }
        let r = Rotation(m);
        let residual = r.orthogonality_residual();
        let det = m.det();
        if residual > STRUCTURE_TOL || (det - 1.0).abs() > STRUCTURE_TOL {
            return Err(AlgebraError::NotRotation { residual, det });
        }
        Ok(r)
    }

    /// Rotation by `angle` about `axis` (normalized here; zero axis gives identity).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        so3_exp(axis * (angle / n))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.0.mul_vec(v)
    }

    pub fn inverse(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    /// `R⁻¹ v`.
    pub fn apply_inverse(&self, v: Vec3) -> Vec3 {
        self.0.transpose().mul_vec(v)
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0.mul_mat(&other.0))
    }

    pub fn orthogonality_residual(&self) -> f64 {
        self.0
            .transpose()
            .mul_mat(&self.0)
            .sub(&Mat3::IDENTITY)
            .max_abs()
    }

    pub fn det(&self) -> f64 {
        self.0.det()
    }

    /// Rotation vector `v` with `so3_exp(v) = self`, `‖v‖ ∈ [0, π]`.
    pub fn log(&self) -> Vec3 {
        so3_log(self)
    }

    /// Unit axis and angle in `[0, π]`. The axis is `(1, 0, 0)` for the identity.
    pub fn to_axis_angle(&self) -> (Vec3, f64) {
        let v = self.log();
        let angle = v.norm();
        if angle == 0.0 {
            (Vec3::X, 0.0)
        } else {
            (v * (1.0 / angle), angle)
        }
    }

    /// Angle of the relative rotation `self⁻¹ other`.
    pub fn geodesic_distance(&self, other: &Rotation) -> f64 {
        let rel = self.0.transpose().mul_mat(&other.0);
        let (s, c) = sin_cos_of(&rel);
        s.atan2(c)
    }
}

/// Sine (from the skew part) and cosine (from the trace) of a rotation angle.
fn sin_cos_of(m: &Mat3) -> (f64, f64) {
    let s = skew_vee(m).norm();
    let c = 0.5 * (m.trace() - 1.0);
    (s.min(1.0), c.clamp(-1.0, 1.0))
}

/// Exponential map so(3) → SO(3) via the Rodrigues closed form.
pub fn so3_exp(v: Vec3) -> Rotation {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < SMALL_ANGLE {
        (
            1.0 - theta2 / 6.0 * (1.0 - theta2 / 20.0 * (1.0 - theta2 / 42.0)),
            0.5 - theta2 / 24.0 * (1.0 - theta2 / 30.0 * (1.0 - theta2 / 56.0)),
        )
    } else {
        let half = (0.5 * theta).sin();
        (theta.sin() / theta, 2.0 * half * half / theta2)
    };
    let k = hat(v);
    let k2 = k.mul_mat(&k);
    Rotation(Mat3::IDENTITY.add(&k.scale(a)).add(&k2.scale(b)))
}

/// Logarithm SO(3) → so(3), principal branch.
pub fn so3_log(r: &Rotation) -> Vec3 {
    let m = &r.0;
    let w = skew_vee(m);
    let (s, c) = sin_cos_of(m);
    let theta = s.atan2(c);
    if theta < SMALL_ANGLE {
        // θ/sinθ ≈ 1 + θ²/6
        return w * (1.0 + theta * theta / 6.0);
    }
    if c > -0.9 {
        return w * (theta / s);
    }
    // Near π the skew part loses the axis; read it from the symmetric part
    // R + Rᵀ = 2cosθ·Id + 2(1 − cosθ)·n nᵀ.
    let a = &m.0;
    let diag = [a[0][0], a[1][1], a[2][2]];
    let k = (0..3)
        .max_by(|&i, &j| diag[i].total_cmp(&diag[j]))
        .unwrap_or(0);
    let one_minus_c = 1.0 - c;
    let mut n = [0.0; 3];
    let nk = ((diag[k] - c) / one_minus_c).max(0.0).sqrt();
    for (i, slot) in n.iter_mut().enumerate() {
        *slot = if i == k {
            nk
        } else {
            0.5 * (a[i][k] + a[k][i]) / (one_minus_c * nk)
        };
    }
    let mut axis = Vec3::from_array(n);
    axis = axis * (1.0 / axis.norm());
    // fix the sign with the (small but nonzero) skew part
    if axis.dot(w) < 0.0 {
        axis = -axis;
    }
    axis * theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn vec3() -> impl Strategy<Value = Vec3> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn ball(radius: f64) -> impl Strategy<Value = Vec3> {
        vec3().prop_map(move |v| {
            let n = v.norm();
            if n > radius {
                v * (radius / n)
            } else {
                v
            }
        })
    }

    #[test]
    fn hat_examples() {
        assert_eq!(hat(Vec3::ZERO), Mat3::ZERO);
        assert_eq!(
            hat(Vec3::X),
            Mat3::from_rows([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
        );
        for i in 0..3 {
            let e = Vec3::basis(i);
            assert_eq!(hat(Vec3::X).mul_vec(e), cross(Vec3::X, e));
        }
        assert_eq!(
            hat(Vec3::new(1.0, 2.0, 3.0)).mul_vec(Vec3::new(4.0, 5.0, 6.0)),
            Vec3::new(-3.0, 6.0, -3.0)
        );
    }

    #[test]
    fn vee_examples() {
        assert_eq!(vee(&Mat3::ZERO).unwrap(), Vec3::ZERO);
        for v in [Vec3::new(1.0, 2.0, 3.0), Vec3::new(-0.5, 0.25, 7.0)] {
            assert_eq!(vee(&hat(v)).unwrap(), v);
        }
    }

    #[test]
    fn vee_rejects_non_skew() {
        let mut m = hat(Vec3::new(1.0, 2.0, 3.0));
        m.0[0][1] += 1e-6;
        assert!(matches!(vee(&m), Err(AlgebraError::NotSkew(_))));
        assert!(matches!(
            vee(&Mat3::IDENTITY),
            Err(AlgebraError::NotSkew(_))
        ));
    }

    #[test]
    fn cross_examples() {
        assert_eq!(cross(Vec3::X, Vec3::Y), Vec3::Z);
        let a = Vec3::new(0.3, -1.7, 2.2);
        assert_eq!(cross(a, a), Vec3::ZERO);
        assert_eq!(
            cross(Vec3::new(4.0, 3.0, 1.0), Vec3::new(1.0, 1.0, 0.0)),
            Vec3::new(-1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn apply_and_solve_examples() {
        let id = SpdMatrix::new(Mat3::IDENTITY).unwrap();
        let v = Vec3::new(0.1, -2.0, 3.5);
        assert_eq!(apply(&id, v), v);
        let m = SpdMatrix::diagonal([4.0, 3.0, 2.0]).unwrap();
        assert_eq!(
            solve(&m, Vec3::new(-1.0, 1.0, 1.0)),
            Vec3::new(-1.0 / 4.0, 1.0 / 3.0, 1.0 / 2.0)
        );
        let m = SpdMatrix::diagonal([3.0, 2.0, 1.0]).unwrap();
        assert_eq!(
            apply(&m, Vec3::new(1.0, 1.0, 0.0)),
            Vec3::new(3.0, 2.0, 0.0)
        );
    }

    #[test]
    fn spd_rejects_bad_matrices() {
        let asym = Mat3::from_rows([[2.0, 0.1, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]]);
        assert!(matches!(
            SpdMatrix::new(asym),
            Err(AlgebraError::NotSymmetric(0, 1))
        ));
        assert!(matches!(
            SpdMatrix::diagonal([1.0, -1.0, 1.0]),
            Err(AlgebraError::NotPositiveDefinite(2, _))
        ));
        assert!(matches!(
            SpdMatrix::diagonal([1.0, 1.0, 0.0]),
            Err(AlgebraError::NotPositiveDefinite(3, _))
        ));
        assert!(matches!(
            SpdMatrix::diagonal([1.0, f64::NAN, 1.0]),
            Err(AlgebraError::NonFinite)
        ));
        assert!(InertiaModel::diagonal([3.0, 2.0, 1.0], [0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn exp_examples() {
        assert_eq!(so3_exp(Vec3::ZERO), Rotation::IDENTITY);
        let r = so3_exp(Vec3::new(FRAC_PI_2, 0.0, 0.0));
        assert!((r.apply(Vec3::Y) - Vec3::Z).max_abs() < 1e-15);
        let v = Vec3::new(0.4, -1.1, 2.0);
        let prod = so3_exp(v).compose(&so3_exp(-v));
        assert!(prod.matrix().sub(&Mat3::IDENTITY).max_abs() < 1e-12);
    }

    #[test]
    fn exp_series_branch_is_continuous() {
        // both sides of the switch agree to round-off
        let axis = Vec3::new(0.3, -0.5, 0.8) * (1.0 / Vec3::new(0.3, -0.5, 0.8).norm());
        let below = so3_exp(axis * (SMALL_ANGLE * (1.0 - 1e-9)));
        let above = so3_exp(axis * (SMALL_ANGLE * (1.0 + 1e-9)));
        assert!(below.matrix().sub(above.matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn log_inverts_exp_near_pi() {
        let v = Vec3::new(0.0, 0.6, 0.8) * (PI - 1e-7);
        let back = so3_log(&so3_exp(v));
        assert!((back - v).max_abs() < 1e-7);
        let half_turn = so3_exp(Vec3::new(PI, 0.0, 0.0));
        assert!((half_turn.log().norm() - PI).abs() < 1e-12);
    }

    #[test]
    fn rotation_validation() {
        assert!(Rotation::from_matrix(Mat3::IDENTITY).is_ok());
        assert!(Rotation::from_matrix(Mat3::diagonal([1.0, 1.0, -1.0])).is_err());
        assert!(Rotation::from_matrix(Mat3::IDENTITY.scale(1.001)).is_err());
    }

    #[test]
    fn geodesic_distance_resolves_tiny_angles() {
        let r = so3_exp(Vec3::new(0.2, 0.9, -0.4));
        let s = r.compose(&so3_exp(Vec3::new(0.0, 3e-12, 0.0)));
        let d = r.geodesic_distance(&s);
        assert!((d - 3e-12).abs() < 1e-14, "{d:e}");
        assert_eq!(r.geodesic_distance(&r), 0.0);
    }

    fn random_spd(eig: [f64; 3], axis: Vec3) -> Mat3 {
        let q = so3_exp(axis);
        q.matrix()
            .mul_mat(&Mat3::diagonal(eig))
            .mul_mat(&q.matrix().transpose())
            .symmetric_part()
    }

    proptest! {
        #[test]
        fn hat_matches_cross(v in vec3(), w in vec3()) {
            let diff = hat(v).mul_vec(w) - cross(v, w);
            prop_assert!(diff.max_abs() <= 1e-14 * (1.0 + v.norm() * w.norm()));
        }

        #[test]
        fn vee_inverts_hat(v in vec3()) {
            prop_assert_eq!(vee(&hat(v)).unwrap(), v);
            prop_assert_eq!(hat(v).transpose(), hat(-v));
        }

        #[test]
        fn cross_is_orthogonal_and_antisymmetric(a in vec3(), b in vec3()) {
            let c = cross(a, b);
            prop_assert_eq!(c, -cross(b, a));
            let scale = 1e-14 * (1.0 + a.norm() * b.norm() * (a.norm() + b.norm()));
            prop_assert!(c.dot(a).abs() <= scale);
            prop_assert!(c.dot(b).abs() <= scale);
        }

        #[test]
        fn jacobi_identity(a in ball(1.0), b in ball(1.0), c in ball(1.0)) {
            let j = cross(a, cross(b, c)) + cross(b, cross(c, a)) + cross(c, cross(a, b));
            prop_assert!(j.max_abs() <= 1e-12);
        }

        #[test]
        fn exp_is_special_orthogonal(v in ball(PI)) {
            let r = so3_exp(v);
            prop_assert!(r.orthogonality_residual() <= 1e-12);
            prop_assert!((r.det() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn log_inverts_exp(v in ball(3.0)) {
            let back = so3_log(&so3_exp(v));
            prop_assert!((back - v).max_abs() <= 1e-12);
        }

        #[test]
        fn solve_inverts_apply_well_conditioned(
            e in (0.5..5.0f64, 0.5..5.0f64, 0.5..5.0f64),
            axis in ball(PI),
            v in vec3(),
        ) {
            let m = SpdMatrix::new(random_spd([e.0, e.1, e.2], axis)).unwrap();
            let x = m.solve(m.apply(v));
            prop_assert!((x - v).norm() <= 1e-12 * v.norm().max(1e-300));
        }

        #[test]
        fn solve_is_backward_stable_up_to_cond_1e6(
            log_e in (0.0..6.0f64, 0.0..6.0f64),
            axis in ball(PI),
            v in vec3(),
        ) {
            let mat = random_spd([1.0, 10f64.powf(log_e.0), 10f64.powf(log_e.1)], axis);
            let m = SpdMatrix::new(mat).unwrap();
            let b = m.apply(v);
            let x = m.solve(b);
            let norm_m = 3.0 * mat.max_abs();
            prop_assert!((m.apply(x) - b).norm() <= 1e-12 * norm_m * x.norm().max(1e-300));
        }
    }
}
