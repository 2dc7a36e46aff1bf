//! Kinematics of the holonomic base carrying a six-joint arm.
//!
//! Joint vector ordering is `[base_x, base_y, base_yaw, q1..q6]`. The arm uses
//! standard Denavit-Hartenberg rows; the handle frame is the flange frame
//! shifted along its local Z axis.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Rotation3, SMatrix, SVector, Unit, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};

/// Linear velocity followed by angular velocity, world frame.
pub type Twist6 = Vector6<f64>;
/// Force followed by torque, world frame.
pub type Wrench6 = Vector6<f64>;
pub type Jacobian = SMatrix<f64, 6, 9>;
pub type JointVector = SVector<f64, 9>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose6 {
    pub position: Vector3<f64>,
    pub rotation: Rotation3<f64>,
}

impl Pose6 {
    pub fn new(position: Vector3<f64>, rotation: Rotation3<f64>) -> Self {
        Self { position, rotation }
    }

    pub fn from_position(position: Vector3<f64>) -> Self {
        Self::new(position, Rotation3::identity())
    }

    /// `(self.position - other.position, log(self.R * other.Rᵀ))`.
    pub fn error_from(&self, other: &Pose6) -> Twist6 {
        let dp = self.position - other.position;
        let dr = rotation_log(&(self.rotation * other.rotation.inverse()));
        Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
    }
}

/// Axis-angle vector of a rotation, angle in `[0, π]`.
///
/// Goes through the unit quaternion with `atan2`, which stays finite when
/// rounding pushes the matrix trace past 3.
pub fn rotation_log(r: &Rotation3<f64>) -> Vector3<f64> {
    let q = UnitQuaternion::from_rotation_matrix(r);
    let (mut v, mut w) = (q.imag(), q.w);
    if w < 0.0 {
        v = -v;
        w = -w;
    }
    let n = v.norm();
    if n < 1e-12 {
        return 2.0 * v / w;
    }
    v * (2.0 * n.atan2(w) / n)
}

pub fn rotation_exp(w: &Vector3<f64>) -> Rotation3<f64> {
    Rotation3::new(*w)
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointState {
    /// `(x, y, yaw)` of the base in the world.
    pub base: Vector3<f64>,
    pub arm: Vector6<f64>,
    pub t: f64,
}

impl JointState {
    pub fn new(base: Vector3<f64>, arm: Vector6<f64>) -> Self {
        Self { base, arm, t: 0.0 }
    }

    pub fn to_vector(&self) -> JointVector {
        let mut v = JointVector::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.base);
        v.fixed_rows_mut::<6>(3).copy_from(&self.arm);
        v
    }

    pub fn from_vector(v: &JointVector) -> Self {
        Self::new(v.fixed_rows::<3>(0).into_owned(), v.fixed_rows::<6>(3).into_owned())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DhRow {
    pub a: f64,
    pub d: f64,
    pub alpha: f64,
}

impl DhRow {
    fn transform(&self, theta: f64) -> Matrix4<f64> {
        let (st, ct) = theta.sin_cos();
        let (sa, ca) = self.alpha.sin_cos();
        Matrix4::new(
            ct,
            -st * ca,
            st * sa,
            self.a * ct, //
            st,
            ct * ca,
            -ct * sa,
            self.a * st, //
            0.0,
            sa,
            ca,
            self.d, //
            0.0,
            0.0,
            0.0,
            1.0,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KinematicParams {
    pub dh: [DhRow; 6],
    /// Arm base position in the mobile-base frame.
    pub mount_position: Vector3<f64>,
    /// Arm base yaw relative to the mobile base.
    pub mount_yaw: f64,
    /// Handle origin along the flange Z axis.
    pub handle_offset: f64,
    pub joint_lower: Vector6<f64>,
    pub joint_upper: Vector6<f64>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KinematicsError {
    #[error("DH row {0} has zero link length")]
    ZeroLink(usize),
    #[error("joint limits for joint {0} are empty")]
    EmptyLimits(usize),
}

impl KinematicParams {
    /// UR16e dimensions on a 0.6 m mount.
    pub fn ur16e() -> Self {
        let h = PI / 2.0;
        Self {
            dh: [
                DhRow { a: 0.0, d: 0.1807, alpha: h },
                DhRow { a: -0.4784, d: 0.0, alpha: 0.0 },
                DhRow { a: -0.36, d: 0.0, alpha: 0.0 },
                DhRow { a: 0.0, d: 0.17415, alpha: h },
                DhRow { a: 0.0, d: 0.11985, alpha: -h },
                DhRow { a: 0.0, d: 0.11655, alpha: 0.0 },
            ],
            mount_position: Vector3::new(0.25, 0.0, 0.6),
            mount_yaw: 0.0,
            handle_offset: 0.1,
            joint_lower: Vector6::repeat(-2.0 * PI),
            joint_upper: Vector6::repeat(2.0 * PI),
        }
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        for (i, row) in self.dh.iter().enumerate() {
            if row.a.abs() + row.d.abs() <= 0.0 {
                return Err(KinematicsError::ZeroLink(i));
            }
            if self.joint_lower[i] >= self.joint_upper[i] {
                return Err(KinematicsError::EmptyLimits(i));
            }
        }
        Ok(())
    }

    fn base_transform(&self, q: &JointState) -> Matrix4<f64> {
        let mut t = Matrix4::identity();
        let r = Rotation3::from_axis_angle(&Vector3::z_axis(), q.base.z);
        t.fixed_view_mut::<3, 3>(0, 0).copy_from(r.matrix());
        t[(0, 3)] = q.base.x;
        t[(1, 3)] = q.base.y;
        let mut m = Matrix4::identity();
        let rm = Rotation3::from_axis_angle(&Vector3::z_axis(), self.mount_yaw);
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(rm.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.mount_position);
        t * m
    }

    /// World transforms of the arm base and every joint frame, followed by the handle.
    fn frames(&self, q: &JointState) -> [Matrix4<f64>; 8] {
        let mut out = [Matrix4::identity(); 8];
        let mut t = self.base_transform(q);
        out[0] = t;
        for i in 0..6 {
            t *= self.dh[i].transform(q.arm[i]);
            out[i + 1] = t;
        }
        let mut h = Matrix4::identity();
        h[(2, 3)] = self.handle_offset;
        out[7] = t * h;
        out
    }
}

fn pose_of(t: &Matrix4<f64>) -> Pose6 {
    let m: Matrix3<f64> = t.fixed_view::<3, 3>(0, 0).into_owned();
    Pose6::new(t.fixed_view::<3, 1>(0, 3).into_owned(), Rotation3::from_matrix_unchecked(m))
}

/// Handle pose in the world frame.
pub fn forward_kinematics(q: &JointState, params: &KinematicParams) -> Pose6 {
    pose_of(&params.frames(q)[7])
}

/// Geometric Jacobian at the handle origin, world frame.
pub fn jacobian(q: &JointState, params: &KinematicParams) -> Jacobian {
    let frames = params.frames(q);
    let p = frames[7].fixed_view::<3, 1>(0, 3).into_owned();
    let mut j = Jacobian::zeros();
    j[(0, 0)] = 1.0;
    j[(1, 1)] = 1.0;
    let z = Vector3::z();
    let base_origin = Vector3::new(q.base.x, q.base.y, 0.0);
    let v = z.cross(&(p - base_origin));
    j.fixed_view_mut::<3, 1>(0, 2).copy_from(&v);
    j.fixed_view_mut::<3, 1>(3, 2).copy_from(&z);
    for (i, f) in frames.iter().take(6).enumerate() {
        let axis = f.fixed_view::<3, 1>(0, 2).into_owned();
        let origin = f.fixed_view::<3, 1>(0, 3).into_owned();
        let v = axis.cross(&(p - origin));
        j.fixed_view_mut::<3, 1>(0, 3 + i).copy_from(&v);
        j.fixed_view_mut::<3, 1>(3, 3 + i).copy_from(&axis);
    }
    j
}

/// Explicit Euler update with componentwise velocity clamping.
///
/// Arm angles are clamped to the joint limits and the base yaw is wrapped.
pub fn integrate_joints(
    q: &JointState,
    qdot: &JointVector,
    dt: f64,
    velocity_limits: &JointVector,
    params: &KinematicParams,
) -> JointState {
    let v = qdot.zip_map(velocity_limits, |x, l| x.clamp(-l, l));
    let mut out = *q;
    out.base.x += dt * v[0];
    out.base.y += dt * v[1];
    out.base.z = wrap_angle(q.base.z + dt * v[2]);
    for i in 0..6 {
        out.arm[i] = (q.arm[i] + dt * v[3 + i]).clamp(params.joint_lower[i], params.joint_upper[i]);
    }
    out.t = q.t + dt;
    out
}

/// Unit vector along `v`, or `None` when `v` is shorter than `eps`.
pub fn normalized(v: &Vector3<f64>, eps: f64) -> Option<Vector3<f64>> {
    Unit::try_new(*v, eps).map(|u| u.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn home_pose_is_chain_sum() {
        let p = KinematicParams::ur16e();
        let q = JointState::new(Vector3::zeros(), Vector6::zeros());
        let x = forward_kinematics(&q, &p);
        // At zero angles the chain lies in the arm base XZ plane.
        let a: f64 = p.dh.iter().map(|r| r.a).sum();
        let expected_x = p.mount_position.x + a;
        assert_relative_eq!(x.position.x, expected_x, epsilon = 1e-12);
        let expected_y = -(p.dh[3].d + p.dh[5].d + p.handle_offset);
        assert_relative_eq!(x.position.y, expected_y, epsilon = 1e-12);
        let expected_z = p.mount_position.z + p.dh[0].d - p.dh[4].d;
        assert_relative_eq!(x.position.z, expected_z, epsilon = 1e-12);
    }

    #[test]
    fn base_translation_shifts_pose() {
        let p = KinematicParams::ur16e();
        let arm = Vector6::new(0.3, -1.2, 1.0, -0.4, 0.7, 0.2);
        let a = forward_kinematics(&JointState::new(Vector3::new(0.0, 0.0, 0.4), arm), &p);
        let b = forward_kinematics(&JointState::new(Vector3::new(1.0, 0.0, 0.4), arm), &p);
        assert_eq!(b.position - a.position, Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(a.rotation, b.rotation);
    }

    #[test]
    fn base_columns_are_planar() {
        let p = KinematicParams::ur16e();
        let q = JointState::new(Vector3::new(0.2, -0.1, 1.0), Vector6::new(0.1, -1.0, 1.2, 0.3, -0.5, 0.9));
        let j = jacobian(&q, &p);
        for c in 0..2 {
            for r in 0..6 {
                let e = if r == c { 1.0 } else { 0.0 };
                assert_eq!(j[(r, c)], e);
            }
        }
    }

    #[test]
    fn yaw_wraps() {
        let p = KinematicParams::ur16e();
        let q = JointState::new(Vector3::new(0.0, 0.0, PI - 0.01), Vector6::zeros());
        let mut v = JointVector::zeros();
        v[2] = 20.0;
        let lim = JointVector::repeat(100.0);
        let out = integrate_joints(&q, &v, 1e-3, &lim, &p);
        assert_relative_eq!(out.base.z, -PI + 0.01, epsilon = 1e-12);
    }

    #[test]
    fn zero_rate_keeps_state() {
        let p = KinematicParams::ur16e();
        let q = JointState::new(Vector3::new(0.3, 0.2, 0.1), Vector6::repeat(0.4));
        let out = integrate_joints(&q, &JointVector::zeros(), 1e-3, &JointVector::repeat(1.0), &p);
        assert_eq!(out.base, q.base);
        assert_eq!(out.arm, q.arm);
    }

    #[test]
    fn rejects_zero_link() {
        let mut p = KinematicParams::ur16e();
        p.dh[1] = DhRow { a: 0.0, d: 0.0, alpha: 0.0 };
        assert_eq!(p.validate(), Err(KinematicsError::ZeroLink(1)));
        assert!(KinematicParams::ur16e().validate().is_ok());
    }

    #[test]
    fn wrap_is_half_open() {
        assert_relative_eq!(wrap_angle(PI), PI);
        assert_relative_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
    }
}
