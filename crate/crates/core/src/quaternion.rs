//! Hamilton quaternions stored scalar-last as `[x, y, z, w]`.
//!
//! A unit quaternion `q` describes the body-to-LVLH frame transformation:
//! a body vector `u` is expressed in LVLH as `q ⊗ u ⊗ q*`. The identity is
//! `[0, 0, 0, 1]`.

use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Matrix3x4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl From<[f64; 4]> for Quaternion {
    fn from(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        [q.x, q.y, q.z, q.w]
    }
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl Quaternion {
    pub const fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { x, y, z, w }
    }

    pub const fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0, 1.0)
    }

    /// Pure quaternion `[u; 0]`.
    pub fn pure(u: &Vector3<f64>) -> Self {
        Self::new(u.x, u.y, u.z, 0.0)
    }

    /// Rotation by `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let a = axis.normalize();
        let (s, c) = (0.5 * angle).sin_cos();
        Self::new(a.x * s, a.y * s, a.z * s, c)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.x, self.y, self.z, self.w)
    }

    pub fn vec(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn conj(&self) -> Self {
        Self::new(-self.x, -self.y, -self.z, self.w)
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.to_vector().dot(&other.to_vector())
    }

    pub fn normalize(&self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n, self.z / n, self.w / n)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s, self.w * s)
    }

    /// `q ⊗ u ⊗ q*` evaluated in closed form. For a unit quaternion this is
    /// the rotation of `u`; for a general quaternion it is that rotation
    /// scaled by `‖q‖²`.
    pub fn rotate(&self, u: &Vector3<f64>) -> Vector3<f64> {
        let qv = self.vec();
        let w = self.w;
        u * (w * w - qv.dot(&qv)) + qv * (2.0 * qv.dot(u)) + qv.cross(u) * (2.0 * w)
    }

    /// Jacobian of [`Quaternion::rotate`] with respect to the quaternion
    /// components `[x, y, z, w]`, holding `u` fixed.
    pub fn rotate_jacobian(&self, u: &Vector3<f64>) -> Matrix3x4<f64> {
        let qv = self.vec();
        let w = self.w;
        let d_vec = (Matrix3::identity() * qv.dot(u) + qv * u.transpose() - u * qv.transpose()
            - skew(u) * w)
            * 2.0;
        let d_w = (u * w + qv.cross(u)) * 2.0;
        let mut jac = Matrix3x4::zeros();
        jac.fixed_view_mut::<3, 3>(0, 0).copy_from(&d_vec);
        jac.fixed_view_mut::<3, 1>(0, 3).copy_from(&d_w);
        jac
    }

    /// Rotation matrix of a unit quaternion (body to LVLH).
    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let (x, y, z, w) = (self.x, self.y, self.z, self.w);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Left-multiplication matrix: `self ⊗ p = L(self) p` in `[x, y, z, w]`
    /// component order.
    pub fn left_matrix(&self) -> nalgebra::Matrix4<f64> {
        let (x, y, z, w) = (self.x, self.y, self.z, self.w);
        nalgebra::Matrix4::new(
            w, -z, y, x, //
            z, w, -x, y, //
            -y, x, w, z, //
            -x, -y, -z, w,
        )
    }

    /// Right-multiplication matrix: `p ⊗ self = R(self) p`.
    pub fn right_matrix(&self) -> nalgebra::Matrix4<f64> {
        let (x, y, z, w) = (self.x, self.y, self.z, self.w);
        nalgebra::Matrix4::new(
            w, z, -y, x, //
            -z, w, x, y, //
            y, -x, w, z, //
            -x, -y, -z, w,
        )
    }

    /// Rotation angle in `[0, π]` of the unit quaternion, insensitive to sign.
    pub fn angle(&self) -> f64 {
        2.0 * self.vec().norm().atan2(self.w.abs())
    }

    /// Rotation-vector logarithm: `axis * angle`, taking the short way.
    pub fn log(&self) -> Vector3<f64> {
        let q = if self.w < 0.0 { -*self } else { *self };
        let n = q.vec().norm();
        if n < 1e-15 {
            return q.vec() * 2.0;
        }
        q.vec() * (2.0 * n.atan2(q.w) / n)
    }

    pub fn exp(rotvec: &Vector3<f64>) -> Self {
        let angle = rotvec.norm();
        if angle < 1e-15 {
            return Self::new(0.5 * rotvec.x, 0.5 * rotvec.y, 0.5 * rotvec.z, 1.0).normalize();
        }
        Self::from_axis_angle(rotvec, angle)
    }

    /// Spherical linear interpolation along the shortest arc.
    pub fn slerp(&self, other: &Self, t: f64) -> Self {
        let other = if self.dot(other) < 0.0 { -*other } else { *other };
        let delta = self.conj() * other;
        (*self * Self::exp(&(delta.log() * t))).normalize()
    }

    /// Yaw-pitch-roll (Tait-Bryan z-y'-x'') angles of the unit quaternion, rad.
    pub fn to_euler_ypr(&self) -> Vector3<f64> {
        let (x, y, z, w) = (self.x, self.y, self.z, self.w);
        let yaw = (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z));
        let pitch = (2.0 * (w * y - z * x)).clamp(-1.0, 1.0).asin();
        let roll = (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y));
        Vector3::new(yaw, pitch, roll)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.w.is_finite()
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    /// Hamilton product.
    fn mul(self, b: Quaternion) -> Quaternion {
        let av = self.vec();
        let bv = b.vec();
        let v = bv * self.w + av * b.w + av.cross(&bv);
        Quaternion::new(v.x, v.y, v.z, self.w * b.w - av.dot(&bv))
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

/// Cross-product matrix: `skew(a) b = a × b`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}
