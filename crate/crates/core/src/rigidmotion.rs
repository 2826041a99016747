//! Quaternion, rotation and twist algebra.
//!
//! Conventions used throughout the crate:
//!
//! * A quaternion is stored as `[v; s]` and maps to the rotation
//!   `A(η) = (2s² − 1)I + 2s[v×] + 2vvᵀ` (Hamilton product, active rotation).
//! * The twist relation between the two grasps is
//!   `ω₂ = A ω₁`, `v₂ = A v₁ − ρ × ω₂` ([`transform_twist`]).
//! * [`velocity_transform`] returns `T(θ) = [Aᵀ, Aᵀ[ρ×]; 0, Aᵀ]`. This is the
//!   *inverse* of the map above: `T(θ)·[v₂; ω₂] = [v₁; ω₁]`, equivalently
//!   `T(θ) = E(θ⁻¹)` where `E` is [`transform_twist`] and `θ⁻¹` is
//!   [`KinematicParams::inverse`]. The interconnected dynamics use `T(θ)`
//!   exactly as written; the estimators use the twist relation. Both are
//!   parameterised by the same `θ`.
//! * Orientation coordinates are XYZ Euler angles `(a, b, c)` with
//!   `R = Rx(a)·Ry(b)·Rz(c)` and body-frame angular velocity, so
//!   `[ȧ, ḃ, ċ] = L_o·ω`.

use crate::{Error, Mat3, Mat6, Result, Vec3, Vec4, Vec6};
#[allow(unused_imports)]
use nalgebra::{ComplexField, RealField};

/// Middle-angle distance from ±π/2 below which Euler rates are rejected.
pub const GIMBAL_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    v: Vec3,
    s: f64,
}

impl UnitQuaternion {
    pub fn identity() -> Self {
        Self { v: Vec3::zeros(), s: 1.0 }
    }

    /// Normalises `[v; s]`. Fails on zero or non-finite input.
    pub fn new(v: Vec3, s: f64) -> Result<Self> {
        let n = (v.norm_squared() + s * s).sqrt();
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::InvalidConfig("quaternion must be finite and non-zero".into()));
        }
        Ok(Self { v: v / n, s: s / n })
    }

    pub fn from_vector4(q: &Vec4) -> Result<Self> {
        Self::new(Vec3::new(q[0], q[1], q[2]), q[3])
    }

    /// Rotation by `angle` radians about `axis` (normalised internally).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidConfig("rotation axis must be non-zero".into()));
        }
        let half = 0.5 * angle;
        Self::new(axis / n * half.sin(), half.cos())
    }

    pub fn vector(&self) -> &Vec3 {
        &self.v
    }

    pub fn scalar(&self) -> f64 {
        self.s
    }

    pub fn to_vector4(&self) -> Vec4 {
        Vec4::new(self.v[0], self.v[1], self.v[2], self.s)
    }

    pub fn conjugate(&self) -> Self {
        Self { v: -self.v, s: self.s }
    }

    pub fn negated(&self) -> Self {
        Self { v: -self.v, s: -self.s }
    }

    /// Hamilton product `self ⊗ rhs`, so that `A(p ⊗ q) = A(p)·A(q)`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let v = rhs.v * self.s + self.v * rhs.s + self.v.cross(&rhs.v);
        let s = self.s * rhs.s - self.v.dot(&rhs.v);
        // Product of unit quaternions; renormalise to hold the invariant.
        Self::new(v, s).unwrap_or_else(|_| Self::identity())
    }

    /// Representative of `±q` with non-negative scalar part; on an exactly
    /// zero scalar part the first non-zero vector component is made positive.
    pub fn canonical(&self) -> Self {
        let flip = if self.s != 0.0 {
            self.s < 0.0
        } else {
            self.v.iter().find(|c| **c != 0.0).is_some_and(|c| *c < 0.0)
        };
        if flip {
            self.negated()
        } else {
            *self
        }
    }

    pub fn rotation_matrix(&self) -> Mat3 {
        rotation_from_quaternion(self)
    }

    /// Vector part of the error quaternion `self ⊗ other*`, sign-resolved.
    /// Its norm is `|sin(φ/2)|` for the relative rotation angle `φ`.
    pub fn error_vector(&self, other: &Self) -> Vec3 {
        let e = self.mul(&other.conjugate());
        if e.s < 0.0 {
            -e.v
        } else {
            e.v
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub linear: Vec3,
    pub angular: Vec3,
}

impl Twist {
    pub fn new(linear: Vec3, angular: Vec3) -> Self {
        Self { linear, angular }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_vector6(x: &Vec6) -> Self {
        Self {
            linear: x.fixed_rows::<3>(0).into_owned(),
            angular: x.fixed_rows::<3>(3).into_owned(),
        }
    }

    /// `[linear; angular]`.
    pub fn to_vector6(&self) -> Vec6 {
        let mut x = Vec6::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.linear);
        x.fixed_rows_mut::<3>(3).copy_from(&self.angular);
        x
    }

    pub fn is_finite(&self) -> bool {
        self.linear.iter().chain(self.angular.iter()).all(|c| c.is_finite())
    }
}

/// Relative pose `θ = (ρ, η)` between the two grasps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicParams {
    pub rho: Vec3,
    pub eta: UnitQuaternion,
}

impl KinematicParams {
    pub fn new(rho: Vec3, eta: UnitQuaternion) -> Self {
        Self { rho, eta }
    }

    pub fn identity() -> Self {
        Self::new(Vec3::zeros(), UnitQuaternion::identity())
    }

    /// Parameters of the reverse twist map: `ρ' = −A(η)ᵀρ`, `η' = η*`.
    pub fn inverse(&self) -> Self {
        let a = self.eta.rotation_matrix();
        Self::new(-(a.transpose() * self.rho), self.eta.conjugate())
    }

    /// Stacked error `[ρ − ρ̂; vec(η ⊗ η̂*)]` with the quaternion part
    /// sign-resolved. `self` is the reference, `estimate` the estimate.
    pub fn error(&self, estimate: &Self) -> Vec6 {
        let mut e = Vec6::zeros();
        e.fixed_rows_mut::<3>(0).copy_from(&(self.rho - estimate.rho));
        e.fixed_rows_mut::<3>(3).copy_from(&self.eta.error_vector(&estimate.eta));
        e
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.error(other).norm()
    }
}

pub fn rotation_from_quaternion(eta: &UnitQuaternion) -> Mat3 {
    let (v, s) = (eta.v, eta.s);
    Mat3::identity() * (2.0 * s * s - 1.0) + skew(&v) * (2.0 * s) + v * v.transpose() * 2.0
}

/// Cross-product matrix: `skew(w)·u = w × u`.
pub fn skew(w: &Vec3) -> Mat3 {
    Mat3::new(0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0)
}

/// The 4×4 symmetric matrix with `ηᵀΩ(ω₁, ω₂)η = ω₂ᵀA(η)ω₁`.
///
/// With `A` as in [`rotation_from_quaternion`] the off-diagonal block has to
/// be `ω₁ × ω₂` for the quadratic-form identity to hold.
pub fn omega_matrix(w1: &Vec3, w2: &Vec3) -> crate::Mat4 {
    let d = w1.dot(w2);
    let upper = w2 * w1.transpose() + w1 * w2.transpose() - Mat3::identity() * d;
    let c = w1.cross(w2);
    let mut m = crate::Mat4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&upper);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&c);
    m.fixed_view_mut::<1, 3>(3, 0).copy_from(&c.transpose());
    m[(3, 3)] = d;
    m
}

/// `T(θ) = [Aᵀ, Aᵀ[ρ×]; 0, Aᵀ]`.
pub fn velocity_transform(theta: &KinematicParams) -> Mat6 {
    let at = theta.eta.rotation_matrix().transpose();
    let mut t = Mat6::zeros();
    t.fixed_view_mut::<3, 3>(0, 0).copy_from(&at);
    t.fixed_view_mut::<3, 3>(0, 3).copy_from(&(at * skew(&theta.rho)));
    t.fixed_view_mut::<3, 3>(3, 3).copy_from(&at);
    t
}

/// Maps the grasp-1 twist to the grasp-2 twist:
/// `ω₂ = A ω₁`, `v₂ = A v₁ − ρ × ω₂`.
pub fn transform_twist(theta: &KinematicParams, t1: &Twist) -> Twist {
    let a = theta.eta.rotation_matrix();
    let angular = a * t1.angular;
    let linear = a * t1.linear - theta.rho.cross(&angular);
    Twist { linear, angular }
}

/// `L_o` and `L̇_o` for XYZ Euler angles with body-frame angular velocity,
/// such that `euler_rate = L_o·ω`.
pub fn orientation_rates(euler: &Vec3, euler_rate: &Vec3) -> Result<(Mat3, Mat3)> {
    let b = euler[1];
    if (b.abs() - core::f64::consts::FRAC_PI_2).abs() < GIMBAL_MARGIN {
        return Err(Error::RepresentationSingularity { middle_angle: b });
    }
    let (sb, cb) = (b.sin(), b.cos());
    let (sc, cc) = (euler[2].sin(), euler[2].cos());
    let tb = sb / cb;
    let (db, dc) = (euler_rate[1], euler_rate[2]);

    let l = Mat3::new(
        cc / cb, -sc / cb, 0.0,
        sc, cc, 0.0,
        -tb * cc, tb * sc, 1.0,
    );
    let sec2 = 1.0 / (cb * cb);
    let l_dot = Mat3::new(
        -sc * dc / cb + cc * sb * db * sec2,
        -cc * dc / cb - sc * sb * db * sec2,
        0.0,
        cc * dc,
        -sc * dc,
        0.0,
        -db * sec2 * cc + tb * sc * dc,
        db * sec2 * sc + tb * cc * dc,
        0.0,
    );
    Ok((l, l_dot))
}

/// Block-diagonal `L = diag(I, L_o)` and its derivative for a minimal pose
/// `[p; euler]` moving at `[ṗ; euler_rate]`.
pub fn representation_matrix(pose: &Vec6, pose_rate: &Vec6) -> Result<(Mat6, Mat6)> {
    let euler = pose.fixed_rows::<3>(3).into_owned();
    let rate = pose_rate.fixed_rows::<3>(3).into_owned();
    let (lo, lo_dot) = orientation_rates(&euler, &rate)?;
    let mut l = Mat6::identity();
    l.fixed_view_mut::<3, 3>(3, 3).copy_from(&lo);
    let mut l_dot = Mat6::zeros();
    l_dot.fixed_view_mut::<3, 3>(3, 3).copy_from(&lo_dot);
    Ok((l, l_dot))
}

/// `R = Rx(a)·Ry(b)·Rz(c)`.
pub fn rotation_from_euler_xyz(euler: &Vec3) -> Mat3 {
    let (sa, ca) = (euler[0].sin(), euler[0].cos());
    let (sb, cb) = (euler[1].sin(), euler[1].cos());
    let (sc, cc) = (euler[2].sin(), euler[2].cos());
    let rx = Mat3::new(1.0, 0.0, 0.0, 0.0, ca, -sa, 0.0, sa, ca);
    let ry = Mat3::new(cb, 0.0, sb, 0.0, 1.0, 0.0, -sb, 0.0, cb);
    let rz = Mat3::new(cc, -sc, 0.0, sc, cc, 0.0, 0.0, 0.0, 1.0);
    rx * ry * rz
}

/// Inverse of [`rotation_from_euler_xyz`] with the middle angle in `[−π/2, π/2]`.
pub fn euler_xyz_from_rotation(r: &Mat3) -> Vec3 {
    let b = r[(0, 2)].clamp(-1.0, 1.0).asin();
    let a = (-r[(1, 2)]).atan2(r[(2, 2)]);
    let c = (-r[(0, 1)]).atan2(r[(0, 0)]);
    Vec3::new(a, b, c)
}
