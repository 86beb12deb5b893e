//! RK4 discretization, hover equilibrium, finite-difference linearization and the
//! infinite-horizon LQR stability check.

use nalgebra::{DMatrix, Schur};

use crate::error::{Error, Result};
use crate::math;
use crate::model::{continuous_dynamics, ControlInput, ModelParams, State};
use crate::{InputMatrix, InputVector, StateMatrix, StateVector, NU, NX};

/// Discrete-time linear model about an equilibrium pair.
///
/// Consumers work in delta coordinates: `dx = x - x_eq`, `du = u - u_eq`, and
/// `dx[k+1] = a * dx[k] + b * du[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: StateMatrix,
    pub b: InputMatrix,
    pub x_eq: State,
    pub u_eq: ControlInput,
    pub dt: f64,
}

impl LinearModel {
    pub fn delta_state(&self, x: &State) -> StateVector {
        x.to_vector() - self.x_eq.to_vector()
    }

    pub fn delta_input(&self, u: &ControlInput) -> InputVector {
        u.0 - self.u_eq.0
    }

    pub fn absolute_input(&self, du: &InputVector) -> ControlInput {
        ControlInput(du + self.u_eq.0)
    }
}

fn rk4_raw(x: &StateVector, u: &ControlInput, dt: f64, p: &ModelParams) -> Result<StateVector> {
    let f = |y: &StateVector| continuous_dynamics(&State::from_vector(y), u, p);
    let k1 = f(x)?;
    let k2 = f(&(x + k1 * (0.5 * dt)))?;
    let k3 = f(&(x + k2 * (0.5 * dt)))?;
    let k4 = f(&(x + k3 * dt))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

fn rk4_vector(x: &StateVector, u: &ControlInput, dt: f64, p: &ModelParams) -> Result<StateVector> {
    let next = rk4_raw(x, u, dt, p)?;
    let next = State::from_vector(&next).normalized().to_vector();
    if next.iter().all(|c| c.is_finite()) {
        Ok(next)
    } else {
        Err(Error::IntegrationFailure)
    }
}

/// One classical Runge-Kutta step with the input held constant, followed by quaternion
/// renormalization.
pub fn rk4_step(x: &State, u: &ControlInput, dt: f64, p: &ModelParams) -> Result<State> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument("dt must be positive"));
    }
    rk4_vector(&x.to_vector(), u, dt, p).map(|v| State::from_vector(&v))
}

/// Level hover at the origin with equal per-motor commands balancing gravity and magnet pull.
pub fn hover_equilibrium(p: &ModelParams) -> (State, ControlInput) {
    let per_motor = (p.mass * p.gravity + p.magnet_force) / (4.0 * p.thrust_coeff);
    (State::hover(), ControlInput::uniform(per_motor))
}

/// Norm of `rk4_step(x, u, dt) - x`.
pub fn equilibrium_residual(x: &State, u: &ControlInput, dt: f64, p: &ModelParams) -> Result<f64> {
    let next = rk4_step(x, u, dt, p)?;
    Ok((next.to_vector() - x.to_vector()).norm())
}

const EQUILIBRIUM_TOL: f64 = 1e-8;

fn fd_step(value: f64) -> f64 {
    (1e-6 * value.abs()).max(1e-6)
}

/// Jacobians of the discrete step map about `(x_eq, u_eq)` by central differences.
///
/// The differentiated map is the same one `rk4_step` applies during rollouts, quaternion
/// renormalization included.
pub fn linearize(x_eq: &State, u_eq: &ControlInput, dt: f64, p: &ModelParams) -> Result<LinearModel> {
    p.validate()?;
    let residual = equilibrium_residual(x_eq, u_eq, dt, p)?;
    if !(residual < EQUILIBRIUM_TOL) {
        return Err(Error::EquilibriumResidual { residual });
    }
    let x0 = x_eq.to_vector();
    let mut a = StateMatrix::zeros();
    for j in 0..NX {
        let h = fd_step(x0[j]);
        let mut xp = x0;
        let mut xm = x0;
        xp[j] += h;
        xm[j] -= h;
        let col = (rk4_vector(&xp, u_eq, dt, p)? - rk4_vector(&xm, u_eq, dt, p)?) / (2.0 * h);
        a.set_column(j, &col);
    }
    let mut b = InputMatrix::zeros();
    for j in 0..NU {
        let h = fd_step(u_eq.0[j]);
        let mut up = *u_eq;
        let mut um = *u_eq;
        up.0[j] += h;
        um.0[j] -= h;
        let col = (rk4_vector(&x0, &up, dt, p)? - rk4_vector(&x0, &um, dt, p)?) / (2.0 * h);
        b.set_column(j, &col);
    }
    Ok(LinearModel {
        a,
        b,
        x_eq: *x_eq,
        u_eq: *u_eq,
        dt,
    })
}

const RICCATI_TOL: f64 = 1e-10;
const RICCATI_MAX_ITER: usize = 10_000;

/// Infinite-horizon discrete LQR gain by Riccati fixed-point iteration.
///
/// Iteration stops once the max-norm change of `P` drops below `1e-10` relative to
/// `max(1, ‖P‖∞)`. The returned gain gives the feedback `u = -K x`.
pub fn dlqr_gain(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let m = b.ncols();
    for (dim, want) in [
        (a.ncols(), n),
        (b.nrows(), n),
        (q.nrows(), n),
        (q.ncols(), n),
        (r.nrows(), m),
        (r.ncols(), m),
    ] {
        if dim != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: dim,
            });
        }
    }
    let at = a.transpose();
    let bt = b.transpose();
    let gain = |p: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let s = r + &bt * p * b;
        let chol = s
            .cholesky()
            .ok_or(Error::InvalidArgument("R + BᵀPB is not positive definite"))?;
        Ok(chol.solve(&(&bt * p * a)))
    };

    let mut p = q.clone();
    let mut change = f64::INFINITY;
    for _ in 0..RICCATI_MAX_ITER {
        let k = gain(&p)?;
        let mut next = q + &at * &p * a - &at * &p * b * &k;
        next = (&next + next.transpose()) * 0.5;
        change = (&next - &p).amax();
        p = next;
        if !change.is_finite() {
            break;
        }
        if change < RICCATI_TOL * p.amax().max(1.0) {
            return gain(&p);
        }
    }
    Err(Error::NoConvergence {
        iterations: RICCATI_MAX_ITER,
        change,
    })
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square(), "spectral radius needs a square matrix");
    if m.nrows() == 0 {
        return 0.0;
    }
    match Schur::try_new(m.clone(), f64::EPSILON, 10_000) {
        Some(schur) => schur
            .complex_eigenvalues()
            .iter()
            .map(|z| math::hypot(z.re, z.im))
            .fold(0.0, f64::max),
        None => gelfand_estimate(m),
    }
}

// ‖M^(2^k)‖^(1/2^k) with rescaling to stay in range; slow to converge but never fails.
fn gelfand_estimate(m: &DMatrix<f64>) -> f64 {
    let mut power = m.clone();
    let mut log_scale = 0.0f64;
    let mut exponent = 1.0f64;
    let mut estimate = m.norm();
    for _ in 0..40 {
        let n = power.norm();
        if n == 0.0 {
            return 0.0;
        }
        estimate = libm::exp((libm::log(n) + log_scale) / exponent);
        log_scale = 2.0 * (log_scale + libm::log(n));
        power /= n;
        power = &power * &power;
        exponent *= 2.0;
    }
    estimate
}

/// LQR gain for the model and the spectral radius of the resulting closed loop `A - B K`.
pub fn lqr_closed_loop(
    lm: &LinearModel,
    q: &StateMatrix,
    r: &nalgebra::SMatrix<f64, NU, NU>,
) -> Result<(DMatrix<f64>, f64)> {
    let a = DMatrix::from_iterator(NX, NX, lm.a.iter().copied());
    let b = DMatrix::from_iterator(NX, NU, lm.b.iter().copied());
    let q = DMatrix::from_iterator(NX, NX, q.iter().copied());
    let r = DMatrix::from_iterator(NU, NU, r.iter().copied());
    let k = dlqr_gain(&a, &b, &q, &r)?;
    let rho = spectral_radius(&(&a - &b * &k));
    Ok((k, rho))
}
