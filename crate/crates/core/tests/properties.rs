use attfilt_core::filter::{lyapunov_diagnostic, psi_coeffs, FilterParams};
use attfilt_core::geometry::{
    euclidean_distance, euler_to_rotation, exp_map, project_to_so3, rotation_to_euler, skew,
    upsilon, vex, Mat3, Vec3,
};
use attfilt_core::quaternion::{quat_product, quat_to_rotation, UnitQuaternion};
use attfilt_core::wahba::{reconstruct_svd, ObservationSet, VectorPair};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-range..range).prop_map(Vec3::from)
}

fn mat3() -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-2.0f64..2.0).prop_map(|a| Mat3::from_row_slice(&a))
}

fn quat() -> impl Strategy<Value = UnitQuaternion> {
    (-1.0f64..1.0, vec3(1.0)).prop_filter_map("non-zero", |(q0, q)| UnitQuaternion::new(q0, q))
}

fn direction() -> impl Strategy<Value = Vec3> {
    vec3(1.0)
        .prop_filter("non-zero", |v| v.norm() > 1e-3)
        .prop_map(|v| v.normalize())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn vex_inverts_skew(a in vec3(10.0)) {
        prop_assert!((vex(&skew(&a)).unwrap() - a).amax() < 1e-15);
    }

    #[test]
    fn skew_is_cross_product(a in vec3(5.0), b in vec3(5.0)) {
        prop_assert!((skew(&a) * b - a.cross(&b)).amax() < 1e-12);
    }

    #[test]
    fn trace_identity(m in mat3(), a in vec3(2.0)) {
        let lhs = (m * skew(&a)).trace();
        prop_assert!((lhs + 2.0 * upsilon(&m).dot(&a)).abs() < 1e-12);
    }

    #[test]
    fn upsilon_norm_identity(axis in direction(), angle in 0.0..std::f64::consts::PI) {
        let r = exp_map(&(axis * angle));
        let d = euclidean_distance(&r);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((upsilon(r.matrix()).norm_squared() - 4.0 * (1.0 - d) * d).abs() < 1e-12);
        prop_assert!((d - 0.5 * (1.0 - angle.cos())).abs() < 1e-12);
    }

    #[test]
    fn exp_map_stays_on_so3(rho in vec3(20.0)) {
        let r = exp_map(&rho);
        prop_assert!(r.orthogonality_defect() < 1e-12);
        prop_assert!((r.matrix().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quaternion_product_is_homomorphic(a in quat(), b in quat()) {
        let lhs = quat_to_rotation(&quat_product(&a, &b));
        let rhs = quat_to_rotation(&a) * quat_to_rotation(&b);
        prop_assert!((lhs.matrix() - rhs.matrix()).amax() < 1e-12);
    }

    #[test]
    fn quaternion_rotation_identities(q in quat()) {
        let r = quat_to_rotation(&q);
        prop_assert!((upsilon(r.matrix()) - 2.0 * q.scalar() * q.vector()).amax() < 1e-12);
        prop_assert!((euclidean_distance(&r) - (1.0 - q.scalar().powi(2))).abs() < 1e-12);
        prop_assert!((q.norm() - 1.0).abs() < 1e-12);
        let back = UnitQuaternion::from_rotation(&r);
        prop_assert!((back.scalar() - q.scalar()).abs() < 1e-9);
        prop_assert!((back.vector() - q.vector()).amax() < 1e-9);
    }

    #[test]
    fn error_is_left_invariant(a in vec3(3.0), b in vec3(3.0), g in vec3(3.0)) {
        let (r, r_hat, g) = (exp_map(&a), exp_map(&b), exp_map(&g));
        let e1 = euclidean_distance(&(r.transpose() * r_hat));
        let e2 = euclidean_distance(&((g * r).transpose() * (g * r_hat)));
        prop_assert!((e1 - e2).abs() < 1e-12);
    }

    #[test]
    fn wahba_recovers_attitude(rho in vec3(3.0), r1 in direction(), r2 in direction(), s in 0.1f64..10.0) {
        prop_assume!(r1.cross(&r2).norm() > 0.1);
        let truth = exp_map(&rho);
        let pairs = |w1: f64, w2: f64| {
            ObservationSet::new(vec![
                VectorPair::new(r1, truth.transpose().rotate(&r1), w1),
                VectorPair::new(r2, truth.transpose().rotate(&r2), w2),
            ])
            .unwrap()
        };
        let a = reconstruct_svd(&pairs(0.5, 0.5)).unwrap();
        let b = reconstruct_svd(&pairs(s, s)).unwrap();
        let c = reconstruct_svd(&pairs(1.0, s)).unwrap();
        prop_assert!((truth.transpose().matrix() * a.matrix() - Mat3::identity()).norm() < 1e-10);
        prop_assert!((a.matrix() - b.matrix()).amax() < 1e-12);
        prop_assert!((a.matrix() - c.matrix()).amax() < 1e-10);
    }

    #[test]
    fn psi_bounds_hold(e in 0.0f64..=1.0) {
        let (p1, p2) = psi_coeffs(e).unwrap();
        prop_assert!((0.5..=std::f64::consts::E).contains(&p1));
        prop_assert!((1.0..=1.5 * std::f64::consts::E).contains(&p2));
        prop_assert!(p2 > p1);
    }

    #[test]
    fn lyapunov_is_non_negative(e in 0.0f64..=1.0, w in prop::collection::vec(-3.0f64..3.0, 9)) {
        let params = FilterParams::default();
        let w = DMatrix::from_row_slice(3, 3, &w);
        prop_assert!(lyapunov_diagnostic(e, &w, &params) >= 0.0);
    }

    #[test]
    fn euler_round_trip(roll in -3.1f64..3.1, pitch in -1.5f64..1.5, yaw in -3.1f64..3.1) {
        let r = euler_to_rotation(roll, pitch, yaw);
        let e = rotation_to_euler(&r);
        prop_assert!(!e.gimbal_lock);
        let back = euler_to_rotation(e.roll, e.pitch, e.yaw);
        prop_assert!((back.matrix() - r.matrix()).amax() < 1e-12);
    }

    #[test]
    fn projection_fixes_rotations(rho in vec3(3.0), m in mat3()) {
        let r = exp_map(&rho);
        let p = project_to_so3(r.matrix()).unwrap();
        prop_assert!((p.matrix() - r.matrix()).amax() < 1e-12);
        if let Ok(p) = project_to_so3(&(r.matrix() + 1e-3 * m)) {
            prop_assert!(p.orthogonality_defect() < 1e-12);
        }
    }
}
