//! Two-dimensional spin model: Pauli matrices, directional spin operators
//! `a·σ` with eigenvalues ±1, and the SU(2) lift of a rotation.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::{re, CMatrix, CVector, HermitianEigen, Real};

/// A unit direction in space.
///
/// Deserializes from `{"label", "v": [x, y, z]}` (normalised) or from
/// `{"label", "deg"}` as a [`Direction::planar`] angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DirectionFile")]
pub struct Direction {
    pub label: String,
    pub v: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DirectionFile {
    label: String,
    v: Option<[f64; 3]>,
    deg: Option<f64>,
}

impl TryFrom<DirectionFile> for Direction {
    type Error = String;

    fn try_from(d: DirectionFile) -> Result<Self, String> {
        match (d.v, d.deg) {
            (Some(v), None) if v.iter().all(|x| x.is_finite()) && norm3(&v) > 0.0 => Ok(Direction::new(d.label, v)),
            (Some(_), None) => Err(format!("direction {}: v must be finite and nonzero", d.label)),
            (None, Some(deg)) if deg.is_finite() => Ok(Direction::planar(d.label, deg)),
            (None, Some(_)) => Err(format!("direction {}: deg must be finite", d.label)),
            _ => Err(format!("direction {}: give exactly one of v, deg", d.label)),
        }
    }
}

impl Direction {
    /// Normalises `v`; panics on the zero vector.
    pub fn new(label: impl Into<String>, v: [f64; 3]) -> Self {
        let n = norm3(&v);
        assert!(n > 0.0, "direction must be nonzero");
        Direction {
            label: label.into(),
            v: v.map(|x| x / n),
        }
    }

    /// Direction in the xz-plane at `deg` degrees from z towards x.
    pub fn planar(label: impl Into<String>, deg: f64) -> Self {
        let t = deg.to_radians();
        Self::new(label, [t.sin(), 0.0, t.cos()])
    }

    pub fn x() -> Self {
        Self::new("x", [1.0, 0.0, 0.0])
    }

    pub fn y() -> Self {
        Self::new("y", [0.0, 1.0, 0.0])
    }

    pub fn z() -> Self {
        Self::new("z", [0.0, 0.0, 1.0])
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        dot3(&self.v, &other.v)
    }

    /// Angle to `other` in radians.
    pub fn angle(&self, other: &Direction) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }

    pub fn norm_defect(&self) -> f64 {
        (norm3(&self.v) - 1.0).abs()
    }
}

pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn pauli<T: Real>() -> [CMatrix<T>; 3] {
    let (o, l) = (re(T::zero()), re(T::one()));
    let i = Complex::new(T::zero(), T::one());
    [
        CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    ]
}

/// `a·σ` for a real 3-vector.
pub fn spin_operator<T: Real>(a: &[f64; 3]) -> CMatrix<T> {
    let [sx, sy, sz] = pauli::<T>();
    sx * re(T::lit(a[0])) + sy * re(T::lit(a[1])) + sz * re(T::lit(a[2]))
}

/// Eigenvectors of `a·σ`, ordered by eigenvalue: index 0 ↔ −1, index 1 ↔ +1.
pub fn spin_states<T: Real>(a: &Direction) -> [CVector<T>; 2] {
    let eig = HermitianEigen::new(&spin_operator::<T>(&a.v));
    [eig.vectors.column(0).into_owned(), eig.vectors.column(1).into_owned()]
}

/// Unit quaternion `(w, x, y, z)` of a proper rotation matrix.
pub fn rotation_quaternion(r: &[[f64; 3]; 3]) -> [f64; 4] {
    let tr = r[0][0] + r[1][1] + r[2][2];
    if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        [s / 4.0, (r[2][1] - r[1][2]) / s, (r[0][2] - r[2][0]) / s, (r[1][0] - r[0][1]) / s]
    } else if r[0][0] > r[1][1] && r[0][0] > r[2][2] {
        let s = (1.0 + r[0][0] - r[1][1] - r[2][2]).sqrt() * 2.0;
        [(r[2][1] - r[1][2]) / s, s / 4.0, (r[0][1] + r[1][0]) / s, (r[0][2] + r[2][0]) / s]
    } else if r[1][1] > r[2][2] {
        let s = (1.0 + r[1][1] - r[0][0] - r[2][2]).sqrt() * 2.0;
        [(r[0][2] - r[2][0]) / s, (r[0][1] + r[1][0]) / s, s / 4.0, (r[1][2] + r[2][1]) / s]
    } else {
        let s = (1.0 + r[2][2] - r[0][0] - r[1][1]).sqrt() * 2.0;
        [(r[1][0] - r[0][1]) / s, (r[0][2] + r[2][0]) / s, (r[1][2] + r[2][1]) / s, s / 4.0]
    }
}

/// SU(2) element covering the rotation `r`, determined up to sign:
/// `U (v·σ) U† = (Rv)·σ`.
pub fn su2_lift<T: Real>(r: &[[f64; 3]; 3]) -> CMatrix<T> {
    let [w, x, y, z] = rotation_quaternion(r);
    let [sx, sy, sz] = pauli::<T>();
    let minus_i = Complex::new(T::zero(), -T::one());
    CMatrix::identity(2, 2) * re(T::lit(w))
        + (sx * re(T::lit(x)) + sy * re(T::lit(y)) + sz * re(T::lit(z))) * minus_i
}

/// Rotation by `angle` about unit `axis` (Rodrigues).
pub fn axis_rotation(axis: &[f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    let [x, y, z] = *axis;
    let t = 1.0 - c;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

/// A rotation taking unit `a` to unit `b`.
pub fn rotation_between(a: &[f64; 3], b: &[f64; 3]) -> [[f64; 3]; 3] {
    let axis = cross3(a, b);
    let s = norm3(&axis);
    let c = dot3(a, b).clamp(-1.0, 1.0);
    if s < 1e-12 {
        if c > 0.0 {
            return axis_rotation(&[0.0, 0.0, 1.0], 0.0);
        }
        // antiparallel: half-turn about any axis orthogonal to a
        let helper = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let perp = cross3(a, &helper);
        let n = norm3(&perp);
        return axis_rotation(&perp.map(|x| x / n), std::f64::consts::PI);
    }
    axis_rotation(&axis.map(|x| x / s), s.atan2(c))
}

pub fn rot_apply(r: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| dot3(&r[i], v))
}
