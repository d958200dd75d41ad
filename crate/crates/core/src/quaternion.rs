//! Unit quaternions `Q = [q0, q]` and their map onto SO(3).
//!
//! The sign is canonicalized to `q0 >= 0` on construction, so `Q` and `-Q`
//! (the same rotation) compare equal after any operation.

use crate::geometry::{skew, Mat3, RotationMatrix, Vec3};

/// Accepted deviation of `q0² + ‖q‖²` from one.
pub const TOL_UNIT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    q0: f64,
    q: Vec3,
}

impl UnitQuaternion {
    pub fn identity() -> Self {
        Self {
            q0: 1.0,
            q: Vec3::zeros(),
        }
    }

    /// Normalizes and canonicalizes. Returns `None` for a zero or
    /// non-finite 4-vector.
    pub fn new(q0: f64, q: Vec3) -> Option<Self> {
        let n = (q0 * q0 + q.norm_squared()).sqrt();
        if !n.is_finite() || n == 0.0 {
            return None;
        }
        Some(Self::canonical(q0 / n, q / n))
    }

    fn canonical(q0: f64, q: Vec3) -> Self {
        if q0 < 0.0 {
            Self { q0: -q0, q: -q }
        } else {
            Self { q0, q }
        }
    }

    /// Rotation by `angle` about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 || angle == 0.0 {
            return Self::identity();
        }
        let half = 0.5 * angle;
        Self::canonical(half.cos(), axis * (half.sin() / n))
    }

    /// Exact exponential of a rotation vector, `[cos(μ/2), sin(μ/2)·ρ/μ]`.
    pub fn from_rotation_vector(rho: &Vec3) -> Self {
        let mu = rho.norm();
        if mu < 1e-10 {
            return Self::new(1.0, 0.5 * rho).expect("finite rotation vector");
        }
        Self::from_axis_angle(rho, mu)
    }

    pub fn scalar(&self) -> f64 {
        self.q0
    }

    pub fn vector(&self) -> &Vec3 {
        &self.q
    }

    pub fn norm(&self) -> f64 {
        (self.q0 * self.q0 + self.q.norm_squared()).sqrt()
    }

    /// Upsilon of the associated rotation, `2·q0·q`.
    pub fn upsilon(&self) -> Vec3 {
        2.0 * self.q0 * self.q
    }

    /// Normalized Euclidean distance of the associated rotation, `1 - q0²`.
    pub fn euclidean_distance(&self) -> f64 {
        (1.0 - self.q0 * self.q0).clamp(0.0, 1.0)
    }

    /// Builds from a rotation matrix (Shepperd's method).
    pub fn from_rotation(r: &RotationMatrix) -> Self {
        let m = r.matrix();
        let tr = m.trace();
        let diag = [m[(0, 0)], m[(1, 1)], m[(2, 2)]];
        // pick the largest of 4q0², 4q1², 4q2², 4q3² as pivot
        let (q0, q) = if tr >= diag[0] && tr >= diag[1] && tr >= diag[2] {
            let s = 2.0 * (1.0 + tr).sqrt();
            (
                0.25 * s,
                Vec3::new(
                    (m[(2, 1)] - m[(1, 2)]) / s,
                    (m[(0, 2)] - m[(2, 0)]) / s,
                    (m[(1, 0)] - m[(0, 1)]) / s,
                ),
            )
        } else if diag[0] >= diag[1] && diag[0] >= diag[2] {
            let s = 2.0 * (1.0 + diag[0] - diag[1] - diag[2]).sqrt();
            (
                (m[(2, 1)] - m[(1, 2)]) / s,
                Vec3::new(
                    0.25 * s,
                    (m[(0, 1)] + m[(1, 0)]) / s,
                    (m[(0, 2)] + m[(2, 0)]) / s,
                ),
            )
        } else if diag[1] >= diag[2] {
            let s = 2.0 * (1.0 + diag[1] - diag[0] - diag[2]).sqrt();
            (
                (m[(0, 2)] - m[(2, 0)]) / s,
                Vec3::new(
                    (m[(0, 1)] + m[(1, 0)]) / s,
                    0.25 * s,
                    (m[(1, 2)] + m[(2, 1)]) / s,
                ),
            )
        } else {
            let s = 2.0 * (1.0 + diag[2] - diag[0] - diag[1]).sqrt();
            (
                (m[(1, 0)] - m[(0, 1)]) / s,
                Vec3::new(
                    (m[(0, 2)] + m[(2, 0)]) / s,
                    (m[(1, 2)] + m[(2, 1)]) / s,
                    0.25 * s,
                ),
            )
        };
        Self::new(q0, q).expect("rotation matrix yields a finite quaternion")
    }
}

/// `Q1 ⊙ Q2 = [q01·q02 - q1ᵀq2, q01·q2 + q02·q1 + q1 × q2]`, renormalized.
pub fn quat_product(a: &UnitQuaternion, b: &UnitQuaternion) -> UnitQuaternion {
    let q0 = a.q0 * b.q0 - a.q.dot(&b.q);
    let q = a.q0 * b.q + b.q0 * a.q + skew(&a.q) * b.q;
    UnitQuaternion::new(q0, q).expect("product of unit quaternions is nonzero")
}

pub fn quat_inverse(a: &UnitQuaternion) -> UnitQuaternion {
    UnitQuaternion { q0: a.q0, q: -a.q }
}

/// `ℛ_Q = (q0² - ‖q‖²)I + 2qqᵀ + 2q0[q]ₓ`.
pub fn quat_to_rotation(a: &UnitQuaternion) -> RotationMatrix {
    let q = &a.q;
    let m = (a.q0 * a.q0 - q.norm_squared()) * Mat3::identity()
        + 2.0 * q * q.transpose()
        + 2.0 * a.q0 * skew(q);
    RotationMatrix::new_unchecked(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{euclidean_distance, exp_map, upsilon};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn product_identity_and_inverse() {
        let q = UnitQuaternion::new(0.3, Vec3::new(0.1, -0.7, 0.2)).unwrap();
        let id = UnitQuaternion::identity();
        let p = quat_product(&id, &q);
        assert!((p.scalar() - q.scalar()).abs() < 1e-15);
        assert!((p.vector() - q.vector()).norm() < 1e-15);
        let e = quat_product(&q, &quat_inverse(&q));
        assert!((e.scalar() - 1.0).abs() < 1e-15 && e.vector().norm() < 1e-15);
    }

    #[test]
    fn product_composes_z_rotations() {
        let a = UnitQuaternion::from_axis_angle(&Vec3::z(), FRAC_PI_4);
        let r = quat_to_rotation(&quat_product(&a, &a));
        let expected = exp_map(&Vec3::new(0.0, 0.0, FRAC_PI_2));
        assert!((r.matrix() - expected.matrix()).norm() < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        let id = UnitQuaternion::identity();
        assert_eq!(quat_inverse(&id), id);
        let q = UnitQuaternion::new(0.0, Vec3::x()).unwrap();
        let inv = quat_inverse(&q);
        assert_eq!((inv.scalar(), *inv.vector()), (0.0, -Vec3::x()));
        let q = UnitQuaternion::new(0.5, Vec3::new(0.5, -0.5, 0.5)).unwrap();
        let lhs = quat_to_rotation(&quat_inverse(&q));
        let rhs = quat_to_rotation(&q).transpose();
        assert!((lhs.matrix() - rhs.matrix()).norm() < 1e-15);
    }

    #[test]
    fn rotation_map_examples() {
        assert_eq!(
            *quat_to_rotation(&UnitQuaternion::identity()).matrix(),
            Mat3::identity()
        );
        let q = UnitQuaternion::new(FRAC_PI_4.cos(), Vec3::new(0.0, 0.0, FRAC_PI_4.sin())).unwrap();
        let expected = exp_map(&Vec3::new(0.0, 0.0, FRAC_PI_2));
        assert!((quat_to_rotation(&q).matrix() - expected.matrix()).norm() < 1e-15);
    }

    #[test]
    fn sign_is_canonical() {
        let a = UnitQuaternion::new(-0.5, Vec3::new(0.5, 0.5, 0.5)).unwrap();
        let b = UnitQuaternion::new(0.5, Vec3::new(-0.5, -0.5, -0.5)).unwrap();
        assert_eq!(a, b);
        assert!(a.scalar() >= 0.0);
    }

    #[test]
    fn zero_quaternion_rejected() {
        assert!(UnitQuaternion::new(0.0, Vec3::zeros()).is_none());
        assert!(UnitQuaternion::new(f64::NAN, Vec3::zeros()).is_none());
    }

    #[test]
    fn from_rotation_round_trip_all_branches() {
        // trace pivot, then each diagonal pivot (angles near π about each axis)
        for rho in [
            Vec3::new(0.1, 0.2, -0.3),
            Vec3::new(3.0, 0.1, 0.0),
            Vec3::new(0.1, 3.0, -0.2),
            Vec3::new(0.0, -0.2, 3.1),
        ] {
            let r = exp_map(&rho);
            let q = UnitQuaternion::from_rotation(&r);
            assert!((q.norm() - 1.0).abs() < 1e-15);
            assert!((quat_to_rotation(&q).matrix() - r.matrix()).norm() < 1e-14);
            assert!((q.upsilon() - upsilon(r.matrix())).norm() < 1e-14);
            assert!((q.euclidean_distance() - euclidean_distance(&r)).abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_vector_exponential_matches_matrix() {
        for rho in [Vec3::new(1e-12, 0.0, 0.0), Vec3::new(0.4, -1.0, 2.0)] {
            let q = UnitQuaternion::from_rotation_vector(&rho);
            assert!((quat_to_rotation(&q).matrix() - exp_map(&rho).matrix()).norm() < 1e-15);
        }
    }
}
