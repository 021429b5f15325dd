//! Rotation-group utilities: hat/vee maps, z-y-x Euler conversions and the
//! attitude-error map shared by all attitude controllers.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum So3Error {
    #[error("matrix is not antisymmetric (|M + M^T| = {0:.3e})")]
    NotAntisymmetric(f64),
    #[error("pitch within {0:.3e} of +/-90 deg, Euler angles are ambiguous")]
    GimbalLock(f64),
    #[error("matrix is not a rotation (orthogonality error {0:.3e})")]
    NotARotation(f64),
}

/// z-y-x Euler angles (roll, pitch, yaw) in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerZyx {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerZyx {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn from_degrees(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self::new(roll.to_radians(), pitch.to_radians(), yaw.to_radians())
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.roll, self.pitch, self.yaw)
    }
}

/// Skew-symmetric matrix of `v`, so that `hat(v) * w == v.cross(w)`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Inverse of [`hat`]. Errors unless `m` is antisymmetric to 1e-9.
pub fn vee(m: &Matrix3<f64>) -> Result<Vector3<f64>, So3Error> {
    let asym = (m + m.transpose()).norm();
    if asym > 1e-9 {
        return Err(So3Error::NotAntisymmetric(asym));
    }
    Ok(vee_unchecked(m))
}

/// [`vee`] without the antisymmetry check; reads the lower-triangle entries.
pub fn vee_unchecked(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// A rotation matrix in SO(3). Constructors and `renormalize` maintain
/// `R^T R = I` and `det R = +1` to 1e-9.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps a matrix the caller already knows to be in SO(3).
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation(m)
    }

    pub fn try_from_matrix(m: Matrix3<f64>) -> Result<Self, So3Error> {
        let err = orthogonality_error(&m);
        if err > 1e-9 {
            return Err(So3Error::NotARotation(err));
        }
        Ok(Rotation(m))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    /// Rotates a vector from the body frame into the inertial frame.
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Body z-axis expressed in the inertial frame (the thrust direction).
    pub fn body_z(&self) -> Vector3<f64> {
        self.0.column(2).into_owned()
    }

    /// Projects the matrix back onto SO(3): first column kept as-is
    /// (normalized), third column from the cross product, second column
    /// completing the right-handed frame.
    pub fn renormalize(&mut self) {
        let c0: Vector3<f64> = self.0.column(0).into_owned();
        let c1: Vector3<f64> = self.0.column(1).into_owned();
        let b0 = c0.normalize();
        let b2 = c0.cross(&c1).normalize();
        let b1 = b2.cross(&b0);
        self.0 = Matrix3::from_columns(&[b0, b1, b2]);
    }

    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.0)
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Rotation about the x-axis.
    pub fn roll(angle: f64) -> Self {
        euler_to_rotation(&EulerZyx::new(angle, 0.0, 0.0))
    }

    /// Rotation about the y-axis.
    pub fn pitch(angle: f64) -> Self {
        euler_to_rotation(&EulerZyx::new(0.0, angle, 0.0))
    }

    /// Rotation about the z-axis.
    pub fn yaw(angle: f64) -> Self {
        euler_to_rotation(&EulerZyx::new(0.0, 0.0, angle))
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

fn orthogonality_error(m: &Matrix3<f64>) -> f64 {
    let ortho = (m.transpose() * m - Matrix3::identity()).norm();
    let det = (m.determinant() - 1.0).abs();
    ortho.max(det)
}

/// Builds `R = Rz(yaw) * Ry(pitch) * Rx(roll)` analytically.
pub fn euler_to_rotation(e: &EulerZyx) -> Rotation {
    let (sr, cr) = e.roll.sin_cos();
    let (sp, cp) = e.pitch.sin_cos();
    let (sy, cy) = e.yaw.sin_cos();
    Rotation(Matrix3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    ))
}

/// Recovers z-y-x Euler angles; errors within 1e-9 of the pitch singularity.
pub fn rotation_to_euler(r: &Rotation) -> Result<EulerZyx, So3Error> {
    let m = r.matrix();
    let margin = 1.0 - m[(2, 0)].abs();
    if margin < 1e-9 {
        return Err(So3Error::GimbalLock(margin));
    }
    Ok(EulerZyx {
        roll: m[(2, 1)].atan2(m[(2, 2)]),
        pitch: (-m[(2, 0)]).asin(),
        yaw: m[(1, 0)].atan2(m[(0, 0)]),
    })
}

/// Attitude error `vee(1/2 (R_c^T R - R^T R_c))`.
///
/// Positive components mean `r` is ahead of `r_c`; controllers that need the
/// "torque toward `r_c`" direction negate it or swap the arguments.
pub fn attitude_error(r: &Rotation, r_c: &Rotation) -> Vector3<f64> {
    let m = 0.5 * (r_c.matrix().transpose() * r.matrix() - r.matrix().transpose() * r_c.matrix());
    vee_unchecked(&m)
}

/// Geodesic angle between two rotations, in radians.
pub fn rotation_angle(r: &Rotation, r_c: &Rotation) -> f64 {
    let tr = (r_c.matrix().transpose() * r.matrix()).trace();
    ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn hat_e1_cross_e2() {
        let v = hat(&Vector3::x()) * Vector3::y();
        assert_abs_diff_eq!(v, Vector3::z(), epsilon = 0.0);
    }

    #[test]
    fn hat_zero_is_zero_matrix() {
        assert_eq!(hat(&Vector3::zeros()), Matrix3::zeros());
    }

    #[test]
    fn vee_of_zero() {
        assert_eq!(vee(&Matrix3::zeros()).unwrap(), Vector3::zeros());
    }

    #[test]
    fn vee_rejects_symmetric() {
        let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(vee(&m), Err(So3Error::NotAntisymmetric(_))));
    }

    #[test]
    fn euler_identity_and_pure_yaw() {
        let r = euler_to_rotation(&EulerZyx::zero());
        assert_abs_diff_eq!(*r.matrix(), Matrix3::identity(), epsilon = 0.0);

        let r = euler_to_rotation(&EulerZyx::new(0.0, 0.0, FRAC_PI_2));
        assert_abs_diff_eq!(r.rotate(&Vector3::x()), Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn rotation_to_euler_pure_roll() {
        let e = rotation_to_euler(&Rotation::roll(PI / 6.0)).unwrap();
        assert_abs_diff_eq!(e.roll, PI / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.pitch, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.yaw, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gimbal_lock_is_reported() {
        let r = Rotation::pitch(FRAC_PI_2);
        assert!(matches!(
            rotation_to_euler(&r),
            Err(So3Error::GimbalLock(_))
        ));
    }

    #[test]
    fn attitude_error_zero_and_pure_yaw() {
        let r = euler_to_rotation(&EulerZyx::new(0.3, -0.2, 1.1));
        assert_abs_diff_eq!(attitude_error(&r, &r), Vector3::zeros(), epsilon = 1e-15);

        let theta = 0.7;
        let e = attitude_error(&Rotation::yaw(theta), &Rotation::identity());
        assert_abs_diff_eq!(e, Vector3::new(0.0, 0.0, theta.sin()), epsilon = 1e-14);
    }

    #[test]
    fn attitude_error_linear_near_agreement() {
        let r_c = euler_to_rotation(&EulerZyx::new(0.4, 0.1, -0.8));
        for &angle in &[1e-2, 1e-4, 1e-6] {
            let r = r_c * Rotation::roll(angle);
            let e = attitude_error(&r, &r_c);
            assert_abs_diff_eq!(e.norm(), angle, epsilon = angle * 1e-3);
        }
    }

    #[test]
    fn renormalize_restores_orthonormality() {
        let mut r = Rotation::from_matrix_unchecked(
            Rotation::roll(0.3).matrix() + Matrix3::from_element(1e-4),
        );
        assert!(r.orthogonality_error() > 1e-9);
        r.renormalize();
        assert!(r.orthogonality_error() < 1e-12);
        assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn hat_vee_roundtrip(x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0) {
            let v = Vector3::new(x, y, z);
            let back = vee(&hat(&v)).unwrap();
            prop_assert!((back - v).norm() == 0.0);
        }

        #[test]
        fn hat_matches_cross_product(
            a in prop::array::uniform3(-10.0f64..10.0),
            b in prop::array::uniform3(-10.0f64..10.0),
        ) {
            let va = Vector3::from_row_slice(&a);
            let vb = Vector3::from_row_slice(&b);
            prop_assert!((hat(&va) * vb - va.cross(&vb)).norm() <= 1e-14 * (1.0 + va.norm() * vb.norm()));
        }

        #[test]
        fn euler_roundtrip(
            roll in -3.0f64..3.0,
            pitch in -1.4f64..1.4,
            yaw in -3.0f64..3.0,
        ) {
            let e = EulerZyx::new(roll, pitch, yaw);
            let back = rotation_to_euler(&euler_to_rotation(&e)).unwrap();
            prop_assert!((back.roll - roll).abs() < 1e-9);
            prop_assert!((back.pitch - pitch).abs() < 1e-9);
            prop_assert!((back.yaw - yaw).abs() < 1e-9);

            let r2 = euler_to_rotation(&back);
            let r1 = euler_to_rotation(&e);
            prop_assert!((r1.matrix() - r2.matrix()).norm() < 1e-9);
        }

        #[test]
        fn attitude_error_is_antisymmetric(
            a in prop::array::uniform3(-1.4f64..1.4),
            b in prop::array::uniform3(-1.4f64..1.4),
        ) {
            let r = euler_to_rotation(&EulerZyx::new(a[0], a[1], a[2]));
            let rc = euler_to_rotation(&EulerZyx::new(b[0], b[1], b[2]));
            let e1 = attitude_error(&r, &rc);
            let e2 = attitude_error(&rc, &r);
            prop_assert!((e1 + e2).norm() < 1e-14);
        }
    }
}
