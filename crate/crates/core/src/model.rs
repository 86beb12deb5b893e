//! Continuous-time rigid-body model of a quadrotor carrying a magnet that slides on a board.
//!
//! Conventions: position and velocity live in the world frame, angular velocity and torques
//! in the body frame, and quaternions are scalar-first `(s, x, y, z)` with the Hamilton product.

use nalgebra::{Matrix3, SMatrix, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::math;
use crate::{InputVector, StateVector};

/// Full 13-component quadrotor state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    /// Position, m.
    pub r: Vector3<f64>,
    /// Orientation, unit quaternion `(s, x, y, z)`.
    pub q: Vector4<f64>,
    /// Velocity, m/s.
    pub v: Vector3<f64>,
    /// Body angular velocity, rad/s.
    pub w: Vector3<f64>,
}

impl State {
    /// Level attitude at rest at the origin.
    pub fn hover() -> Self {
        Self::at_rest(Vector3::zeros())
    }

    pub fn at_rest(r: Vector3<f64>) -> Self {
        Self {
            r,
            q: Vector4::new(1.0, 0.0, 0.0, 0.0),
            v: Vector3::zeros(),
            w: Vector3::zeros(),
        }
    }

    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            r: x.fixed_rows::<3>(0).into_owned(),
            q: x.fixed_rows::<4>(3).into_owned(),
            v: x.fixed_rows::<3>(7).into_owned(),
            w: x.fixed_rows::<3>(10).into_owned(),
        }
    }

    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.r);
        x.fixed_rows_mut::<4>(3).copy_from(&self.q);
        x.fixed_rows_mut::<3>(7).copy_from(&self.v);
        x.fixed_rows_mut::<3>(10).copy_from(&self.w);
        x
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|c| c.is_finite())
    }

    /// Copy with the quaternion scaled back to unit length.
    pub fn normalized(mut self) -> Self {
        let n = self.q.norm();
        if n > 0.0 {
            self.q /= n;
        }
        self
    }
}

/// Four normalized motor commands. Motor `i` produces `thrust_coeff * u_i` newtons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput(pub InputVector);

impl ControlInput {
    pub fn new(u1: f64, u2: f64, u3: f64, u4: f64) -> Self {
        Self(Vector4::new(u1, u2, u3, u4))
    }

    pub fn uniform(u: f64) -> Self {
        Self(Vector4::repeat(u))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

/// When the magnet pulls on the board.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagnetMode {
    /// Constant pull regardless of height.
    AlwaysOn,
    /// Pull (and sliding friction) only at or below the contact height.
    ContactGated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// kg
    pub mass: f64,
    /// Diagonal of the body inertia matrix, kg·m².
    pub inertia: Vector3<f64>,
    /// N per unit command.
    pub thrust_coeff: f64,
    /// Yaw drag torque, N·m per unit command.
    pub torque_coeff: f64,
    /// Per-axis rotor offset from the center of mass, m.
    pub arm_length: f64,
    /// m/s²
    pub gravity: f64,
    /// Sliding friction coefficient between magnet holder and board.
    pub friction_mu: f64,
    /// Magnet pull magnitude, N, acting along world -z.
    pub magnet_force: f64,
    /// Velocity scale of the tanh sign smoothing, m/s.
    pub v_eps: f64,
    pub magnet_mode: MagnetMode,
    /// Height at or below which the drone counts as touching the board, m.
    pub z_contact: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            mass: 0.033885,
            inertia: Vector3::new(1.66e-5, 1.66e-5, 2.93e-5),
            thrust_coeff: 0.147,
            torque_coeff: 1.18e-4,
            arm_length: 0.046 / core::f64::consts::SQRT_2,
            gravity: 9.8,
            friction_mu: 0.35,
            magnet_force: 2.0,
            v_eps: 0.1,
            magnet_mode: MagnetMode::AlwaysOn,
            z_contact: 0.005,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.mass,
            self.inertia.x,
            self.inertia.y,
            self.inertia.z,
            self.thrust_coeff,
            self.torque_coeff,
            self.arm_length,
            self.gravity,
            self.friction_mu,
            self.magnet_force,
            self.v_eps,
            self.z_contact,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("model parameters must be finite"));
        }
        if self.mass <= 0.0 {
            return Err(Error::InvalidArgument("mass must be positive"));
        }
        if self.inertia.iter().any(|&i| i <= 0.0) {
            return Err(Error::InvalidArgument("inertia entries must be positive"));
        }
        if self.thrust_coeff <= 0.0 || self.torque_coeff <= 0.0 || self.arm_length <= 0.0 {
            return Err(Error::InvalidArgument(
                "thrust_coeff, torque_coeff and arm_length must be positive",
            ));
        }
        if self.friction_mu < 0.0 || self.magnet_force < 0.0 {
            return Err(Error::InvalidArgument("friction_mu and magnet_force must be >= 0"));
        }
        if self.v_eps <= 0.0 {
            return Err(Error::InvalidArgument("v_eps must be positive"));
        }
        Ok(())
    }

    /// Same parameters with the magnet removed.
    pub fn without_magnet(mut self) -> Self {
        self.magnet_force = 0.0;
        self
    }

    fn in_contact(&self, r: &Vector3<f64>) -> bool {
        match self.magnet_mode {
            MagnetMode::AlwaysOn => true,
            MagnetMode::ContactGated => r.z <= self.z_contact,
        }
    }

    /// Map from motor commands to body torques (roll, pitch, yaw).
    pub fn mixing_matrix(&self) -> SMatrix<f64, 3, 4> {
        let a = self.arm_length * self.thrust_coeff;
        let km = self.torque_coeff;
        SMatrix::<f64, 3, 4>::new(
            -a, -a, a, a, //
            -a, a, a, -a, //
            -km, km, -km, km,
        )
    }
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation taking body-frame vectors into the world frame.
///
/// The quaternion is normalized first, so slightly non-unit input is accepted.
pub fn quat_to_rotmat(q: &Vector4<f64>) -> Result<Matrix3<f64>> {
    if !q.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidArgument("quaternion must be finite"));
    }
    let n = q.norm();
    if n == 0.0 {
        return Err(Error::InvalidArgument("zero quaternion"));
    }
    let (s, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    Ok(Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - s * z),
        2.0 * (x * z + s * y),
        2.0 * (x * y + s * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - s * x),
        2.0 * (x * z - s * y),
        2.0 * (y * z + s * x),
        1.0 - 2.0 * (x * x + y * y),
    ))
}

/// Left-multiplication matrix: `left_mul(q) * p == q ⊗ p`.
pub fn left_mul(q: &Vector4<f64>) -> SMatrix<f64, 4, 4> {
    let s = q[0];
    let v = Vector3::new(q[1], q[2], q[3]);
    let mut l = SMatrix::<f64, 4, 4>::zeros();
    l[(0, 0)] = s;
    l.fixed_view_mut::<1, 3>(0, 1).copy_from(&(-v.transpose()));
    l.fixed_view_mut::<3, 1>(1, 0).copy_from(&v);
    l.fixed_view_mut::<3, 3>(1, 1)
        .copy_from(&(Matrix3::identity() * s + skew(&v)));
    l
}

/// Quaternion derivative `0.5 * L(q) * H * ω` for a body-frame angular velocity.
pub fn quat_kinematics(q: &Vector4<f64>, w: &Vector3<f64>) -> Vector4<f64> {
    // H embeds ω as a pure quaternion (0, ω).
    let hw = Vector4::new(0.0, w.x, w.y, w.z);
    left_mul(q) * hw * 0.5
}

pub fn thrust_force_body(u: &ControlInput, p: &ModelParams) -> Vector3<f64> {
    Vector3::new(0.0, 0.0, p.thrust_coeff * u.0.sum())
}

pub fn body_torques(u: &ControlInput, p: &ModelParams) -> Vector3<f64> {
    p.mixing_matrix() * u.0
}

/// Smoothed sliding friction in the board plane; the z component is always zero.
pub fn friction_force(v: &Vector3<f64>, p: &ModelParams) -> Vector3<f64> {
    let scale = p.friction_mu * p.mass * p.gravity;
    Vector3::new(
        -scale * math::tanh(v.x / p.v_eps),
        -scale * math::tanh(v.y / p.v_eps),
        0.0,
    )
}

pub fn magnet_force(r: &Vector3<f64>, p: &ModelParams) -> Vector3<f64> {
    if p.in_contact(r) {
        Vector3::new(0.0, 0.0, -p.magnet_force)
    } else {
        Vector3::zeros()
    }
}

/// Time derivative of the full state under constant motor commands.
pub fn continuous_dynamics(x: &State, u: &ControlInput, p: &ModelParams) -> Result<StateVector> {
    if !x.is_finite() || !u.is_finite() {
        return Err(Error::InvalidArgument("state and input must be finite"));
    }
    let rot = quat_to_rotmat(&x.q)?;
    let q_dot = quat_kinematics(&x.q, &x.w);

    let mut force = rot * thrust_force_body(u, p) + magnet_force(&x.r, p);
    if p.in_contact(&x.r) {
        force += friction_force(&x.v, p);
    }
    let v_dot = Vector3::new(0.0, 0.0, -p.gravity) + force / p.mass;

    let j = p.inertia;
    let jw = x.w.component_mul(&j);
    let w_dot = (body_torques(u, p) - x.w.cross(&jw)).component_div(&j);

    let mut dx = StateVector::zeros();
    dx.fixed_rows_mut::<3>(0).copy_from(&x.v);
    dx.fixed_rows_mut::<4>(3).copy_from(&q_dot);
    dx.fixed_rows_mut::<3>(7).copy_from(&v_dot);
    dx.fixed_rows_mut::<3>(10).copy_from(&w_dot);
    Ok(dx)
}
