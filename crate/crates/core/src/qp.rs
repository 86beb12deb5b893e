//! Finite-horizon MPC as a condensed, box-constrained quadratic program.
//!
//! States are eliminated through the linear dynamics, `X = Φ·dx_ic + Γ·U`, leaving a dense
//! problem over the stacked inputs `U = (du_0, …, du_{N-1})`:
//!
//! ```text
//! J(U) = Uᵀ H U + 2 gᵀ U + c,    lo ≤ U ≤ hi
//! ```
//!
//! which equals the tracking cost
//! `Σ_{i<N} (x_i - d_i)ᵀQ(x_i - d_i) + du_iᵀ R du_i + (x_N - d_N)ᵀ Qf (x_N - d_N)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SMatrix};

use crate::discretize::{hover_equilibrium, LinearModel};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::{InputMatrix, InputVector, StateMatrix, StateVector, NU, NX};

/// Horizon, weights, bounds and solver settings for the tracking MPC.
///
/// Weights are derived from allowed deviations: `Q = diag(1/max_dev_x²)`,
/// `R = diag(1/max_dev_u²)` and `Qf = terminal_factor · Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcConfig {
    pub horizon: usize,
    pub max_dev_x: StateVector,
    pub max_dev_u: InputVector,
    pub terminal_factor: f64,
    /// Absolute per-motor command bounds.
    pub u_min: f64,
    pub u_max: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

impl MpcConfig {
    /// Default weighting with bounds `[0, 2·hover]` for the given model.
    pub fn for_model(p: &ModelParams, horizon: usize) -> Self {
        let (_, u_eq) = hover_equilibrium(p);
        let mut max_dev_x = StateVector::zeros();
        max_dev_x.fixed_rows_mut::<3>(0).fill(0.01);
        max_dev_x.fixed_rows_mut::<4>(3).fill(1.0);
        max_dev_x.fixed_rows_mut::<3>(7).fill(0.5);
        max_dev_x.fixed_rows_mut::<3>(10).fill(5.0);
        Self {
            horizon,
            max_dev_x,
            max_dev_u: InputVector::repeat(0.5),
            terminal_factor: 10.0,
            u_min: 0.0,
            u_max: 2.0 * u_eq.0[0],
            solver_tol: 1e-6,
            solver_max_iter: 5_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::InvalidArgument("horizon must be at least 2"));
        }
        if self.max_dev_x.iter().any(|d| !(*d > 0.0) || !d.is_finite())
            || self.max_dev_u.iter().any(|d| !(*d > 0.0) || !d.is_finite())
        {
            return Err(Error::InvalidArgument("allowed deviations must be positive and finite"));
        }
        if !(self.terminal_factor > 1.0) {
            return Err(Error::InvalidArgument("terminal factor must exceed 1"));
        }
        if !(self.u_min < self.u_max) {
            return Err(Error::InvalidArgument("u_min must be below u_max"));
        }
        if !(self.solver_tol > 0.0) || self.solver_max_iter == 0 {
            return Err(Error::InvalidArgument("solver tolerance and iteration cap must be positive"));
        }
        Ok(())
    }

    pub fn q(&self) -> StateMatrix {
        StateMatrix::from_diagonal(&self.max_dev_x.map(|d| 1.0 / (d * d)))
    }

    pub fn r(&self) -> SMatrix<f64, NU, NU> {
        SMatrix::<f64, NU, NU>::from_diagonal(&self.max_dev_u.map(|d| 1.0 / (d * d)))
    }

    pub fn qf(&self) -> StateMatrix {
        self.q() * self.terminal_factor
    }
}

/// One MPC problem instance in delta coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub horizon: usize,
    pub a: StateMatrix,
    pub b: InputMatrix,
    /// Desired deltas for stages `0..=horizon`.
    pub x_des: Vec<StateVector>,
    pub x_ic: StateVector,
    pub q: StateMatrix,
    pub r: SMatrix<f64, NU, NU>,
    pub qf: StateMatrix,
    pub du_min: InputVector,
    pub du_max: InputVector,
}

impl QpProblem {
    /// Tracking cost of an input sequence, evaluated by rolling the dynamics forward.
    pub fn objective(&self, u: &[InputVector]) -> f64 {
        let mut x = self.x_ic;
        let mut cost = 0.0;
        for (i, du) in u.iter().enumerate() {
            let e = x - self.x_des[i];
            cost += (e.transpose() * self.q * e)[0] + (du.transpose() * self.r * du)[0];
            x = self.a * x + self.b * du;
        }
        let e = x - self.x_des[self.horizon];
        cost + (e.transpose() * self.qf * e)[0]
    }

    /// Implied state sequence `x_0..=x_N`.
    pub fn rollout(&self, u: &[InputVector]) -> Vec<StateVector> {
        let mut xs = Vec::with_capacity(u.len() + 1);
        let mut x = self.x_ic;
        xs.push(x);
        for du in u {
            x = self.a * x + self.b * du;
            xs.push(x);
        }
        xs
    }
}

/// Dense QP over the stacked inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedQp {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
    /// Constant part of the tracking cost.
    pub constant: f64,
}

impl CondensedQp {
    /// Tracking cost `UᵀHU + 2gᵀU + c`.
    pub fn objective(&self, u: &DVector<f64>) -> f64 {
        (u.transpose() * &self.h * u)[0] + 2.0 * self.g.dot(u) + self.constant
    }
}

/// State-elimination matrices for a fixed model, horizon and weights.
///
/// `H` and the maps from the initial condition and the references to `g` do not change
/// between receding-horizon steps, so they are built once.
#[derive(Debug, Clone)]
pub struct Condenser {
    horizon: usize,
    /// `A^k` for `k = 1..=N`, stacked vertically (`13N × 13`).
    phi: DMatrix<f64>,
    /// Block diagonal of the stage weights, `Q` for stages `1..N` and `Qf` for stage `N`.
    stage_weights: Vec<StateMatrix>,
    q0: StateMatrix,
    h: DMatrix<f64>,
    /// `Γᵀ Q̄`, maps stacked state residuals to the gradient.
    gamma_t_qbar: DMatrix<f64>,
}

impl Condenser {
    pub fn new(
        a: &StateMatrix,
        b: &InputMatrix,
        q: &StateMatrix,
        r: &SMatrix<f64, NU, NU>,
        qf: &StateMatrix,
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be positive"));
        }
        let n = horizon;
        let mut powers: Vec<StateMatrix> = Vec::with_capacity(n + 1);
        powers.push(StateMatrix::identity());
        for k in 1..=n {
            powers.push(a * powers[k - 1]);
        }
        let mut phi = DMatrix::zeros(NX * n, NX);
        for k in 1..=n {
            phi.view_mut((NX * (k - 1), 0), (NX, NX)).copy_from(&powers[k]);
        }
        // Γ block (k, j) = A^(k-1-j) B for j < k, stage k = 1..=N.
        let mut gamma = DMatrix::zeros(NX * n, NU * n);
        let ab: Vec<InputMatrix> = powers.iter().map(|p| p * b).collect();
        for k in 1..=n {
            for j in 0..k {
                gamma
                    .view_mut((NX * (k - 1), NU * j), (NX, NU))
                    .copy_from(&ab[k - 1 - j]);
            }
        }
        let stage_weights: Vec<StateMatrix> =
            (1..=n).map(|k| if k == n { *qf } else { *q }).collect();
        let mut qbar_gamma = DMatrix::zeros(NX * n, NU * n);
        for k in 0..n {
            let rows = gamma.rows(NX * k, NX);
            let weighted = stage_weights[k] * rows;
            qbar_gamma.rows_mut(NX * k, NX).copy_from(&weighted);
        }
        // Q̄ is symmetric block-diagonal, so Γᵀ Q̄ = (Q̄ Γ)ᵀ.
        let gamma_t_qbar = qbar_gamma.transpose();
        let mut h = gamma.transpose() * &qbar_gamma;
        for j in 0..n {
            let mut blk = h.view_mut((NU * j, NU * j), (NU, NU));
            blk += r;
        }
        let h = (&h + h.transpose()) * 0.5;
        Ok(Self {
            horizon: n,
            phi,
            stage_weights,
            q0: *q,
            h,
            gamma_t_qbar,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Linear term and constant for an initial condition and `N+1` stage references.
    pub fn linear_term(&self, x_ic: &StateVector, x_des: &[StateVector]) -> Result<(DVector<f64>, f64)> {
        let n = self.horizon;
        if x_des.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                got: x_des.len(),
            });
        }
        let free = &self.phi * x_ic;
        let mut resid = DVector::zeros(NX * n);
        let mut constant = {
            let e0 = x_ic - x_des[0];
            (e0.transpose() * self.q0 * e0)[0]
        };
        for k in 0..n {
            let e: StateVector = free.fixed_rows::<NX>(NX * k) - x_des[k + 1];
            constant += (e.transpose() * self.stage_weights[k] * e)[0];
            resid.fixed_rows_mut::<NX>(NX * k).copy_from(&e);
        }
        Ok((&self.gamma_t_qbar * resid, constant))
    }
}

/// Build the dense QP for one problem instance.
pub fn condense(p: &QpProblem) -> Result<CondensedQp> {
    if p.x_des.len() != p.horizon + 1 {
        return Err(Error::DimensionMismatch {
            expected: p.horizon + 1,
            got: p.x_des.len(),
        });
    }
    let c = Condenser::new(&p.a, &p.b, &p.q, &p.r, &p.qf, p.horizon)?;
    let (g, constant) = c.linear_term(&p.x_ic, &p.x_des)?;
    let (lo, hi) = stacked_bounds(&p.du_min, &p.du_max, p.horizon);
    Ok(CondensedQp {
        h: c.h,
        g,
        lo,
        hi,
        constant,
    })
}

pub(crate) fn stacked_bounds(lo: &InputVector, hi: &InputVector, horizon: usize) -> (DVector<f64>, DVector<f64>) {
    let lo = DVector::from_fn(NU * horizon, |i, _| lo[i % NU]);
    let hi = DVector::from_fn(NU * horizon, |i, _| hi[i % NU]);
    (lo, hi)
}

/// Solution of a condensed MPC problem, with the implied state trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub du: Vec<InputVector>,
    pub dx: Vec<StateVector>,
    pub objective: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Solve a full problem instance (condense, then the box QP).
pub fn solve_problem(p: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution> {
    let c = condense(p)?;
    let sol = solve_box_qp(&c.h, &c.g, &c.lo, &c.hi, tol, max_iter)?;
    let du: Vec<InputVector> = (0..p.horizon)
        .map(|k| sol.x.fixed_rows::<NU>(NU * k).into_owned())
        .collect();
    let dx = p.rollout(&du);
    Ok(QpSolution {
        objective: c.objective(&sol.x),
        residual: sol.residual,
        iterations: sol.iterations,
        du,
        dx,
    })
}

/// Result of the box-constrained solver.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxQpSolution {
    pub x: DVector<f64>,
    /// Projected-gradient KKT residual `‖x - clip(x - (Hx + g))‖∞`.
    pub residual: f64,
    pub iterations: usize,
    /// Value of `½xᵀHx + gᵀx` after each accepted iteration, starting with the initial point.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

/// Primal active-set solver for `min ½xᵀHx + gᵀx` subject to `lo ≤ x ≤ hi`, with `H`
/// positive definite.
///
/// The factorization of the full Hessian is kept so that solves with no active bounds,
/// the common case when tracking near hover, cost two triangular solves.
#[derive(Debug, Clone)]
pub struct BoxQpSolver {
    h: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl BoxQpSolver {
    pub fn new(h: &DMatrix<f64>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::DimensionMismatch {
                expected: h.nrows(),
                got: h.ncols(),
            });
        }
        let chol = h
            .clone()
            .cholesky()
            .ok_or(Error::InvalidArgument("hessian is not positive definite"))?;
        Ok(Self { h: h.clone(), chol })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// Projected-gradient KKT residual of `x`.
    pub fn kkt_residual(&self, g: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>, x: &DVector<f64>) -> f64 {
        let grad = &self.h * x + g;
        let mut worst = 0.0f64;
        for i in 0..x.len() {
            let projected = (x[i] - grad[i]).clamp(lo[i], hi[i]);
            worst = worst.max((x[i] - projected).abs());
        }
        worst
    }

    fn objective(&self, g: &DVector<f64>, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.h * x)[0] + g.dot(x)
    }

    pub fn solve(
        &self,
        g: &DVector<f64>,
        lo: &DVector<f64>,
        hi: &DVector<f64>,
        warm_start: Option<&DVector<f64>>,
        tol: f64,
        max_iter: usize,
    ) -> Result<BoxQpSolution> {
        let n = self.dim();
        for len in [g.len(), lo.len(), hi.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        if (0..n).any(|i| !(lo[i] <= hi[i])) {
            return Err(Error::InvalidArgument("lower bound above upper bound"));
        }

        let mut x = match warm_start {
            Some(w) if w.len() == n => w.clone(),
            Some(w) => return Err(Error::DimensionMismatch { expected: n, got: w.len() }),
            None => DVector::zeros(n),
        };
        let mut bound = vec![Bound::Free; n];
        for i in 0..n {
            if x[i] <= lo[i] {
                x[i] = lo[i];
                bound[i] = Bound::Lower;
            } else if x[i] >= hi[i] {
                x[i] = hi[i];
                bound[i] = Bound::Upper;
            }
        }

        let mut trace = vec![self.objective(g, &x)];
        // Set after an unblocked Newton step, which lands on the minimizer of the face.
        let mut face_optimal = false;
        for iter in 1..=max_iter {
            let free: Vec<usize> = (0..n).filter(|&i| bound[i] == Bound::Free).collect();
            let step = if face_optimal {
                DVector::zeros(free.len())
            } else {
                self.free_step(g, &x, &free)?
            };
            face_optimal = false;

            let step_norm = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
            let x_norm = x.amax();
            if step_norm <= 1e-13 * (1.0 + x_norm) {
                // Stationary on the current face: release the bound whose multiplier has
                // the wrong sign, if any.
                let grad = &self.h * &x + g;
                let mut release = None;
                let mut worst = -0.5 * tol;
                for i in 0..n {
                    let mult = match bound[i] {
                        Bound::Free => continue,
                        Bound::Lower => grad[i],
                        Bound::Upper => -grad[i],
                    };
                    if mult < worst {
                        worst = mult;
                        release = Some(i);
                    }
                }
                match release {
                    Some(i) => bound[i] = Bound::Free,
                    None => {
                        let residual = self.kkt_residual(g, lo, hi, &x);
                        return Ok(BoxQpSolution {
                            x,
                            residual,
                            iterations: iter,
                            objective_trace: trace,
                        });
                    }
                }
                continue;
            }

            let mut alpha = 1.0f64;
            let mut blocking = None;
            for (k, &i) in free.iter().enumerate() {
                let s = step[k];
                let limit = if s < 0.0 && x[i] + s < lo[i] {
                    (lo[i] - x[i]) / s
                } else if s > 0.0 && x[i] + s > hi[i] {
                    (hi[i] - x[i]) / s
                } else {
                    continue;
                };
                if limit < alpha {
                    alpha = limit.max(0.0);
                    blocking = Some(i);
                }
            }
            for (k, &i) in free.iter().enumerate() {
                x[i] += alpha * step[k];
            }
            match blocking {
                Some(i) => {
                    if step[free.iter().position(|&f| f == i).unwrap()] < 0.0 {
                        x[i] = lo[i];
                        bound[i] = Bound::Lower;
                    } else {
                        x[i] = hi[i];
                        bound[i] = Bound::Upper;
                    }
                }
                None => face_optimal = true,
            }
            trace.push(self.objective(g, &x));
        }
        let residual = self.kkt_residual(g, lo, hi, &x);
        Err(Error::SolverMaxIterations {
            iterations: max_iter,
            residual,
            best: x.iter().copied().collect(),
        })
    }

    // Newton step on the free variables with the bounded ones held fixed.
    fn free_step(&self, g: &DVector<f64>, x: &DVector<f64>, free: &[usize]) -> Result<DVector<f64>> {
        let n = self.dim();
        if free.is_empty() {
            return Ok(DVector::zeros(0));
        }
        let grad = &self.h * x + g;
        if free.len() == n {
            return Ok(-self.chol.solve(&grad));
        }
        let m = free.len();
        let sub = DMatrix::from_fn(m, m, |r, c| self.h[(free[r], free[c])]);
        let rhs = DVector::from_fn(m, |r, _| -grad[free[r]]);
        let chol = sub
            .cholesky()
            .ok_or(Error::InvalidArgument("hessian is not positive definite"))?;
        Ok(chol.solve(&rhs))
    }
}

/// Minimize `½xᵀHx + gᵀx` over the box `lo ≤ x ≤ hi`.
pub fn solve_box_qp(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<BoxQpSolution> {
    BoxQpSolver::new(h)?.solve(g, lo, hi, None, tol, max_iter)
}

/// Convenience constructor for an MPC problem from a linear model and configuration.
pub fn problem_for(
    lm: &LinearModel,
    cfg: &MpcConfig,
    x_ic: StateVector,
    x_des: Vec<StateVector>,
) -> QpProblem {
    QpProblem {
        horizon: cfg.horizon,
        a: lm.a,
        b: lm.b,
        x_des,
        x_ic,
        q: cfg.q(),
        r: cfg.r(),
        qf: cfg.qf(),
        du_min: InputVector::repeat(cfg.u_min) - lm.u_eq.0,
        du_max: InputVector::repeat(cfg.u_max) - lm.u_eq.0,
    }
}


/// Accelerated projected gradient for `min ½xᵀHx + gᵀx` over `lo ≤ x ≤ hi`.
///
/// The step is `1/L` with `L` a power-iteration estimate of the largest eigenvalue of `H`;
/// momentum is reset whenever the objective goes up. Converges slowly on ill-conditioned
/// Hessians, so the MPC loop uses [`BoxQpSolver`] instead.
pub fn solve_box_qp_fista(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<BoxQpSolution> {
    let n = h.nrows();
    if !h.is_square() {
        return Err(Error::DimensionMismatch { expected: n, got: h.ncols() });
    }
    for len in [g.len(), lo.len(), hi.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    if (0..n).any(|i| !(lo[i] <= hi[i])) {
        return Err(Error::InvalidArgument("lower bound above upper bound"));
    }
    let lipschitz = 1.01 * largest_eigenvalue(h);
    if !(lipschitz > 0.0) {
        return Err(Error::InvalidArgument("hessian has no positive curvature"));
    }
    let project = |v: DVector<f64>| DVector::from_fn(n, |i, _| v[i].clamp(lo[i], hi[i]));
    let objective = |x: &DVector<f64>| 0.5 * (x.transpose() * h * x)[0] + g.dot(x);
    let residual = |x: &DVector<f64>| {
        let grad = h * x + g;
        (0..n)
            .map(|i| (x[i] - (x[i] - grad[i]).clamp(lo[i], hi[i])).abs())
            .fold(0.0, f64::max)
    };

    let mut x = project(DVector::zeros(n));
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut f = objective(&x);
    let mut trace = vec![f];
    for iter in 1..=max_iter {
        let next = project(&y - (h * &y + g) / lipschitz);
        let f_next = objective(&next);
        if f_next > f {
            if t == 1.0 {
                // A plain projected-gradient step failed to descend: rounding floor.
                break;
            }
            // Momentum overshot: restart from the last accepted point.
            y = x.clone();
            t = 1.0;
            continue;
        }
        let t_next = (1.0 + crate::math::sqrt(1.0 + 4.0 * t * t)) / 2.0;
        y = &next + (&next - &x) * ((t - 1.0) / t_next);
        x = next;
        t = t_next;
        f = f_next;
        trace.push(f);
        let r = residual(&x);
        if r <= tol {
            return Ok(BoxQpSolution {
                x,
                residual: r,
                iterations: iter,
                objective_trace: trace,
            });
        }
    }
    Err(Error::SolverMaxIterations {
        iterations: trace.len() - 1,
        residual: residual(&x),
        best: x.iter().copied().collect(),
    })
}

fn largest_eigenvalue(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i % 7) as f64 * 0.1);
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = h * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w) / v.dot(&v);
        v = w / norm;
        if (next - lambda).abs() <= 1e-10 * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}
