//! Receding-horizon simulation: at each step the condensed QP is solved over the next
//! `N + 1` reference states, the first input is applied to the nonlinear plant through
//! [`rk4_step`], and the window slides forward by one.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::discretize::{rk4_step, LinearModel};
use crate::error::{Error, Result};
use crate::model::{ControlInput, ModelParams, State};
use crate::qp::{stacked_bounds, BoxQpSolver, Condenser, MpcConfig};
use crate::trajgen::ReferenceTrajectory;
use crate::{InputVector, StateVector, NU};

/// Solver statistics for one receding-horizon step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub iterations: usize,
    pub residual: f64,
    /// Tracking cost of the returned input sequence.
    pub objective: f64,
    /// Tracking cost of the solver's starting point.
    pub start_objective: f64,
}

/// MPC with the condensed Hessian and its factorization built once.
#[derive(Debug, Clone)]
pub struct MpcController {
    lm: LinearModel,
    cfg: MpcConfig,
    condenser: Condenser,
    solver: BoxQpSolver,
    lo: DVector<f64>,
    hi: DVector<f64>,
    previous: Option<DVector<f64>>,
}

impl MpcController {
    pub fn new(lm: &LinearModel, cfg: &MpcConfig) -> Result<Self> {
        cfg.validate()?;
        let condenser = Condenser::new(&lm.a, &lm.b, &cfg.q(), &cfg.r(), &cfg.qf(), cfg.horizon)?;
        let solver = BoxQpSolver::new(condenser.hessian())?;
        let du_min = InputVector::repeat(cfg.u_min) - lm.u_eq.0;
        let du_max = InputVector::repeat(cfg.u_max) - lm.u_eq.0;
        let (lo, hi) = stacked_bounds(&du_min, &du_max, cfg.horizon);
        Ok(Self {
            lm: lm.clone(),
            cfg: cfg.clone(),
            condenser,
            solver,
            lo,
            hi,
            previous: None,
        })
    }

    pub fn config(&self) -> &MpcConfig {
        &self.cfg
    }

    /// Forget the stored solution so the next step starts cold.
    pub fn reset(&mut self) {
        self.previous = None;
    }

    /// Control for `x_now` tracking `window` (`N + 1` desired states starting now).
    ///
    /// The solver starts from the previous solution shifted by one step, or from zero when
    /// that is cheaper.
    pub fn step(&mut self, x_now: &State, window: &[State]) -> Result<(ControlInput, StepStats)> {
        let n = self.cfg.horizon;
        if window.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                got: window.len(),
            });
        }
        if !x_now.is_finite() {
            return Err(Error::InvalidArgument("state must be finite"));
        }
        let x_ic = self.lm.delta_state(x_now);
        let x_des: Vec<StateVector> = window.iter().map(|s| self.lm.delta_state(s)).collect();
        let (g, constant) = self.condenser.linear_term(&x_ic, &x_des)?;
        let h = self.condenser.hessian();
        let cost = |u: &DVector<f64>| (u.transpose() * h * u)[0] + 2.0 * g.dot(u) + constant;

        let mut start = DVector::zeros(NU * n);
        if let Some(prev) = &self.previous {
            let mut shifted = DVector::zeros(NU * n);
            shifted.rows_mut(0, NU * (n - 1)).copy_from(&prev.rows(NU, NU * (n - 1)));
            if cost(&shifted) < cost(&start) {
                start = shifted;
            }
        }
        let start_objective = cost(&start);
        let sol = self.solver.solve(
            &g,
            &self.lo,
            &self.hi,
            Some(&start),
            self.cfg.solver_tol,
            self.cfg.solver_max_iter,
        )?;
        let du0: InputVector = sol.x.fixed_rows::<NU>(0).into_owned();
        let u = self
            .lm
            .absolute_input(&du0)
            .0
            .map(|c| c.clamp(self.cfg.u_min, self.cfg.u_max));
        let stats = StepStats {
            iterations: sol.iterations,
            residual: sol.residual,
            objective: cost(&sol.x),
            start_objective,
        };
        self.previous = Some(sol.x);
        Ok((ControlInput(u), stats))
    }
}

/// One cold-started MPC step.
pub fn mpc_step(lm: &LinearModel, cfg: &MpcConfig, x_now: &State, ref_window: &[State]) -> Result<ControlInput> {
    MpcController::new(lm, cfg)?.step(x_now, ref_window).map(|(u, _)| u)
}

/// Mean absolute per-axis position error plus per-step series.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingErrors {
    /// Mean of `|ref - actual|` for x, y and z, m.
    pub mean_abs: [f64; 3],
    /// Euclidean position error at each step, m.
    pub position: Vec<f64>,
    /// Euclidean velocity error at each step, m/s.
    pub velocity: Vec<f64>,
    /// Largest entry of `position`.
    pub max: f64,
}

impl TrackingErrors {
    /// Largest position error from step `skip` on, 0 if nothing is left.
    pub fn max_after(&self, skip: usize) -> f64 {
        self.position.iter().skip(skip).copied().fold(0.0, f64::max)
    }
}

/// Tracking errors between equally long reference and actual state sequences.
pub fn tracking_errors(reference: &[State], states: &[State]) -> Result<TrackingErrors> {
    if reference.len() != states.len() {
        return Err(Error::LengthMismatch {
            left: reference.len(),
            right: states.len(),
        });
    }
    if states.is_empty() {
        return Err(Error::InvalidArgument("no states to compare"));
    }
    let mut sum = [0.0; 3];
    let mut position = Vec::with_capacity(states.len());
    let mut velocity = Vec::with_capacity(states.len());
    for (d, s) in reference.iter().zip(states) {
        let e = d.r - s.r;
        for (k, acc) in sum.iter_mut().enumerate() {
            *acc += e[k].abs();
        }
        position.push(e.norm());
        velocity.push((d.v - s.v).norm());
    }
    let count = states.len() as f64;
    let max = position.iter().copied().fold(0.0, f64::max);
    Ok(TrackingErrors {
        mean_abs: sum.map(|s| s / count),
        position,
        velocity,
        max,
    })
}

/// Histories of one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// `states[0]` is the initial state; `states[k + 1] = rk4_step(states[k], controls[k])`.
    pub states: Vec<State>,
    /// One control per recorded state; the last one is computed from the terminal window.
    pub controls: Vec<ControlInput>,
    pub reference: ReferenceTrajectory,
    pub errors: TrackingErrors,
    pub stats: Vec<StepStats>,
    /// Filled in by callers that can read a clock.
    pub wall_time_s: Option<f64>,
}

impl SimResult {
    pub fn solver_iterations(&self) -> usize {
        self.stats.iter().map(|s| s.iterations).sum()
    }

    /// Mean control per motor over steps `range`.
    pub fn mean_control(&self, range: core::ops::Range<usize>) -> InputVector {
        let slice = &self.controls[range];
        slice.iter().fold(InputVector::zeros(), |acc, u| acc + u.0) / slice.len() as f64
    }
}

/// Closed-loop run over the unpadded part of `reference`, starting from `x0`.
pub fn run_simulation(
    reference: &ReferenceTrajectory,
    lm: &LinearModel,
    cfg: &MpcConfig,
    p: &ModelParams,
    x0: &State,
) -> Result<SimResult> {
    p.validate()?;
    let n = cfg.horizon;
    if reference.len() < n + 1 {
        return Err(Error::InvalidArgument("reference shorter than one horizon window"));
    }
    let steps = reference.len() - n;
    let mut ctrl = MpcController::new(lm, cfg)?;
    let mut states = Vec::with_capacity(steps);
    let mut controls = Vec::with_capacity(steps);
    let mut stats = Vec::with_capacity(steps);
    let mut x = *x0;
    for k in 0..steps {
        let (u, st) = ctrl
            .step(&x, &reference.states[k..=k + n])
            .map_err(|e| e.at_step(k))?;
        states.push(x);
        controls.push(u);
        stats.push(st);
        if k + 1 < steps {
            x = rk4_step(&x, &u, lm.dt, p).map_err(|e| e.at_step(k))?;
        }
    }
    let errors = tracking_errors(&reference.states[..steps], &states)?;
    Ok(SimResult {
        states,
        controls,
        reference: reference.clone(),
        errors,
        stats,
        wall_time_s: None,
    })
}
