//! Rotation-group primitives on SO(3).
//!
//! Everything here is a pure function on small fixed-size matrices. The
//! [`RotationMatrix`] newtype carries the group invariant; constructing one
//! from arbitrary data validates orthogonality and determinant eagerly.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Frobenius tolerance on `RᵀR - I` for a matrix to count as a rotation.
pub const TOL_ORTH: f64 = 1e-9;
/// Largest symmetric-part norm accepted by [`vex`].
pub const TOL_ANTISYM: f64 = 1e-6;
/// Below this rotation-vector norm [`exp_map`] uses its Taylor branch.
pub const SMALL_ANGLE: f64 = 1e-10;
/// `|cos(pitch)|` threshold for flagging gimbal proximity.
pub const GIMBAL_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("matrix is not anti-symmetric (symmetric part norm {0:e})")]
    NotAntisymmetric(f64),
    #[error("matrix is not a rotation (orthogonality defect {orth:e}, det {det})")]
    NotRotation { orth: f64, det: f64 },
    #[error("cannot project onto SO(3): {0}")]
    Projection(&'static str),
    #[error("non-finite input")]
    NonFinite,
}

/// Maps `a` to the anti-symmetric matrix `[a]ₓ` with `[a]ₓ b = a × b`.
pub fn skew(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Inverse of [`skew`]. Rejects input whose symmetric part is not negligible.
pub fn vex(s: &Mat3) -> Result<Vec3, GeometryError> {
    let sym = 0.5 * (s + s.transpose());
    let sym_norm = sym.norm();
    if !sym_norm.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    if sym_norm > TOL_ANTISYM {
        return Err(GeometryError::NotAntisymmetric(sym_norm));
    }
    Ok(Vec3::new(s[(2, 1)], s[(0, 2)], s[(1, 0)]))
}

/// Anti-symmetric part `½(M - Mᵀ)`.
pub fn antisym_project(m: &Mat3) -> Mat3 {
    0.5 * (m - m.transpose())
}

/// `vex` of the anti-symmetric part of `m`, i.e. `½[m₃₂-m₂₃, m₁₃-m₃₁, m₂₁-m₁₂]`.
///
/// For a rotation by `θ` about unit axis `n` this is `sin(θ)·n`.
pub fn upsilon(m: &Mat3) -> Vec3 {
    0.5 * Vec3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    )
}

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Validating constructor.
    pub fn new(m: Mat3) -> Result<Self, GeometryError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let orth = orthogonality_defect(&m);
        let det = m.determinant();
        if orth > TOL_ORTH || (det - 1.0).abs() > TOL_ORTH {
            return Err(GeometryError::NotRotation { orth, det });
        }
        Ok(Self(m))
    }

    /// Skips validation. Only for results of exp-map, SVD or products of
    /// rotations, which are on the group up to roundoff.
    pub(crate) fn new_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    /// Builds from nine row-major entries.
    pub fn from_row_slice(rows: &[f64; 9]) -> Result<Self, GeometryError> {
        Self::new(Mat3::from_row_slice(rows))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, rhs: &RotationMatrix) -> Self {
        Self(self.0 * rhs.0)
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// `‖RᵀR - I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.0)
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let c = ((self.0.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        let s = upsilon(&self.0).norm();
        s.atan2(c)
    }
}

impl std::ops::Mul for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        self.compose(&rhs)
    }
}

fn orthogonality_defect(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).norm()
}

/// Normalized Euclidean distance `¼Tr{I - R}` in `[0, 1]`.
pub fn euclidean_distance(r: &RotationMatrix) -> f64 {
    0.25 * (3.0 - r.0.trace())
}

/// Angle-axis pair. `axis` is unit norm whenever `angle != 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub axis: Vec3,
    pub angle: f64,
}

impl AxisAngle {
    /// Splits a rotation vector into axis and angle. The zero vector maps to
    /// angle 0 with the x axis.
    pub fn from_rotation_vector(rho: &Vec3) -> Self {
        let angle = rho.norm();
        if angle < SMALL_ANGLE {
            Self {
                axis: Vec3::x(),
                angle: 0.0,
            }
        } else {
            Self {
                axis: rho / angle,
                angle,
            }
        }
    }

    pub fn to_rotation(&self) -> RotationMatrix {
        exp_map(&(self.axis * self.angle))
    }
}

/// Rodrigues exponential `I + sin(μ)[x]ₓ + (1 - cos(μ))[x]ₓ²` with
/// `μ = ‖ρ‖`, `x = ρ/μ`.
pub fn exp_map(rho: &Vec3) -> RotationMatrix {
    let mu = rho.norm();
    if mu < SMALL_ANGLE {
        let k = skew(rho);
        return RotationMatrix(Mat3::identity() + k + 0.5 * k * k);
    }
    let k = skew(&(rho / mu));
    RotationMatrix(Mat3::identity() + mu.sin() * k + (1.0 - mu.cos()) * (k * k))
}

/// Roll, pitch, yaw in the intrinsic Z-Y-X convention:
/// `R = Rz(yaw)·Ry(pitch)·Rx(roll)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Set when `|cos(pitch)| < GIMBAL_TOL`; roll and yaw are then not
    /// separately observable and only their combination is meaningful.
    pub gimbal_lock: bool,
}

pub fn rotation_to_euler(r: &RotationMatrix) -> EulerAngles {
    let m = &r.0;
    let sp = (-m[(2, 0)]).clamp(-1.0, 1.0);
    let pitch = sp.asin();
    let cp = (m[(0, 0)].powi(2) + m[(1, 0)].powi(2)).sqrt();
    if cp < GIMBAL_TOL {
        // yaw set to zero, all remaining rotation folded into roll
        let roll = if sp > 0.0 {
            m[(0, 1)].atan2(m[(1, 1)])
        } else {
            (-m[(0, 1)]).atan2(m[(1, 1)])
        };
        return EulerAngles {
            roll,
            pitch,
            yaw: 0.0,
            gimbal_lock: true,
        };
    }
    EulerAngles {
        roll: m[(2, 1)].atan2(m[(2, 2)]),
        pitch,
        yaw: m[(1, 0)].atan2(m[(0, 0)]),
        gimbal_lock: false,
    }
}

pub fn euler_to_rotation(roll: f64, pitch: f64, yaw: f64) -> RotationMatrix {
    let rz = exp_map(&Vec3::new(0.0, 0.0, yaw));
    let ry = exp_map(&Vec3::new(0.0, pitch, 0.0));
    let rx = exp_map(&Vec3::new(roll, 0.0, 0.0));
    rz * ry * rx
}

/// Nearest rotation in Frobenius norm, `U·diag(1, 1, det(UVᵀ))·Vᵀ`.
pub fn project_to_so3(m: &Mat3) -> Result<RotationMatrix, GeometryError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let det = m.determinant();
    if det <= 0.0 {
        return Err(GeometryError::Projection("determinant is not positive"));
    }
    let svd = m.svd(true, true);
    let smin = svd.singular_values.min();
    let smax = svd.singular_values.max();
    if smin <= smax * 1e-12 {
        return Err(GeometryError::Projection("matrix is rank deficient"));
    }
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");
    let d = (u * v_t).determinant().signum();
    let fix = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, d));
    Ok(RotationMatrix(u * fix * v_t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn skew_examples() {
        assert_eq!(skew(&Vec3::zeros()), Mat3::zeros());
        let s = skew(&Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(s, Mat3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0));
        assert_eq!(s + s.transpose(), Mat3::zeros());
    }

    #[test]
    fn vex_round_trip_and_rejection() {
        for a in [
            Vec3::new(1.0, 2.0, 3.0),
            Vec3::zeros(),
            Vec3::new(-0.5, 0.25, 7.0),
        ] {
            assert_eq!(vex(&skew(&a)).unwrap(), a);
        }
        assert!(matches!(
            vex(&Mat3::identity()),
            Err(GeometryError::NotAntisymmetric(_))
        ));
    }

    #[test]
    fn antisym_projection_examples() {
        assert_eq!(antisym_project(&Mat3::identity()), Mat3::zeros());
        let s = skew(&Vec3::new(0.3, -1.0, 2.0));
        assert_eq!(antisym_project(&s), s);
        let m = Mat3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0);
        assert_eq!(
            antisym_project(&m),
            Mat3::new(0.0, -1.0, -2.0, 1.0, 0.0, -1.0, 2.0, 1.0, 0.0)
        );
    }

    #[test]
    fn upsilon_examples() {
        assert_eq!(upsilon(&Mat3::identity()), Vec3::zeros());
        let a = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(upsilon(&skew(&a)), a);
        let rz = exp_map(&Vec3::new(0.0, 0.0, FRAC_PI_2));
        assert!((upsilon(rz.matrix()) - Vec3::z()).norm() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(&RotationMatrix::identity()), 0.0);
        for axis in [Vec3::x(), Vec3::y(), Vec3::new(1.0, 1.0, 1.0).normalize()] {
            let r = exp_map(&(axis * PI));
            assert!((euclidean_distance(&r) - 1.0).abs() < 1e-15);
        }
        let theta = 0.7_f64;
        let r = exp_map(&Vec3::new(0.0, theta, 0.0));
        assert!((euclidean_distance(&r) - (1.0 - theta.cos()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn exp_map_examples() {
        assert_eq!(exp_map(&Vec3::zeros()), RotationMatrix::identity());
        let rz = exp_map(&Vec3::new(0.0, 0.0, FRAC_PI_2));
        let expected = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!(close(rz.matrix(), &expected, 1e-15));
        // Taylor branch stays continuous with the closed form
        let tiny = Vec3::new(3e-11, -2e-11, 5e-12);
        let r = exp_map(&tiny);
        assert!(close(r.matrix(), &(Mat3::identity() + skew(&tiny)), 1e-20));
        assert!(r.orthogonality_defect() < 1e-15);
    }

    #[test]
    fn rotation_constructor_validates() {
        assert!(RotationMatrix::new(Mat3::identity() * 1.001).is_err());
        assert!(RotationMatrix::new(-Mat3::identity()).is_err());
        assert!(RotationMatrix::new(Mat3::from_element(f64::NAN)).is_err());
        let r = exp_map(&Vec3::new(0.1, 0.2, 0.3));
        assert_eq!(RotationMatrix::new(*r.matrix()).unwrap(), r);
    }

    #[test]
    fn euler_examples() {
        let e = rotation_to_euler(&RotationMatrix::identity());
        assert_eq!((e.roll, e.pitch, e.yaw), (0.0, 0.0, 0.0));
        let e = rotation_to_euler(&exp_map(&Vec3::new(0.0, 0.0, FRAC_PI_2)));
        assert!(e.roll.abs() < 1e-15 && e.pitch.abs() < 1e-15);
        assert!((e.yaw - FRAC_PI_2).abs() < 1e-15);
        let e = rotation_to_euler(&exp_map(&Vec3::new(0.3, 0.0, 0.0)));
        assert!((e.roll - 0.3).abs() < 1e-15 && e.pitch.abs() < 1e-15 && e.yaw.abs() < 1e-15);
        assert!(!e.gimbal_lock);
    }

    #[test]
    fn euler_round_trip() {
        for &(r, p, y) in &[(0.1, -0.4, 2.9), (-3.0, 1.2, -0.2), (1.0, 0.0, 0.5)] {
            let e = rotation_to_euler(&euler_to_rotation(r, p, y));
            assert!((e.roll - r).abs() < 1e-9);
            assert!((e.pitch - p).abs() < 1e-9);
            assert!((e.yaw - y).abs() < 1e-9);
        }
    }

    #[test]
    fn euler_flags_gimbal_lock() {
        let r = euler_to_rotation(0.4, FRAC_PI_2, 0.1);
        let e = rotation_to_euler(&r);
        assert!(e.gimbal_lock);
        // the recovered angles still describe the same rotation
        let back = euler_to_rotation(e.roll, e.pitch, e.yaw);
        assert!(close(back.matrix(), r.matrix(), 1e-7));
    }

    #[test]
    fn projection_examples() {
        let r = exp_map(&Vec3::new(-0.4, 1.1, 0.2));
        assert!(close(
            project_to_so3(r.matrix()).unwrap().matrix(),
            r.matrix(),
            1e-12
        ));
        let p = project_to_so3(&(Mat3::identity() * 1.001)).unwrap();
        assert!(close(p.matrix(), &Mat3::identity(), 1e-12));
        let perturbed = r.matrix() + Mat3::from_fn(|i, j| 1e-6 * ((i * 3 + j) as f64 - 4.0) / 4.0);
        let p = project_to_so3(&perturbed).unwrap();
        assert!(close(p.matrix(), r.matrix(), 1e-5));
        assert!(p.orthogonality_defect() < 1e-14);
    }

    #[test]
    fn projection_rejects_bad_input() {
        assert!(project_to_so3(&-Mat3::identity()).is_err());
        assert!(project_to_so3(&Mat3::zeros()).is_err());
        let rank2 = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 1e-300));
        assert!(project_to_so3(&rank2).is_err());
    }

    #[test]
    fn angle_matches_construction() {
        for theta in [0.0, 1e-8, 0.5, 2.0, PI - 1e-6] {
            let r = exp_map(&(Vec3::new(1.0, -2.0, 0.5).normalize() * theta));
            assert!((r.angle() - theta).abs() < 1e-9, "{theta}");
        }
    }
}
