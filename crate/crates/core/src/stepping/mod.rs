//! Time-stepping schemes: exponential Euler, its globally extrapolated
//! second-order variant (EE2), and the two-stage linearly implicit
//! Rosenbrock method ROS2.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::krylov::phiv::{PhiEvalReport, PhiOperator};
use crate::la::csr::CsrMatrix;
use crate::la::gmres::{gmres_solve, Ilu0};
use crate::la::vec_ops;

/// Uniform time grid; the step must divide the interval.
#[derive(Debug, Clone, Copy)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t_end > t0) {
            return Err(Error::Contract(format!(
                "time grid: need t_end > t0 and dt > 0, got [{t0}, {t_end}], dt {dt}"
            )));
        }
        let span = t_end - t0;
        let n_steps = (span / dt).round() as usize;
        if n_steps == 0 || ((n_steps as f64) * dt - span).abs() > 1e-12 * span {
            return Err(Error::Contract(format!(
                "time grid: dt {dt} does not divide the interval length {span}"
            )));
        }
        Ok(Self {
            t0,
            t_end,
            dt,
            n_steps,
        })
    }

    pub fn halved(&self) -> TimeGrid {
        TimeGrid {
            t0: self.t0,
            t_end: self.t_end,
            dt: self.dt / 2.0,
            n_steps: self.n_steps * 2,
        }
    }

    pub fn time_at(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.dt
    }
}

/// How phi-function actions are evaluated inside a time step.
#[derive(Debug, Clone, Copy)]
pub enum PhiEngine {
    /// Residual-time restarting with basis cap `m_max`.
    ResidualTime { m_max: usize },
    /// EXPOKIT-style substepping with fixed basis size `m`.
    Expokit { m: usize },
}

impl Default for PhiEngine {
    fn default() -> Self {
        PhiEngine::ResidualTime {
            m_max: crate::krylov::DEFAULT_M_MAX,
        }
    }
}

impl PhiEngine {
    pub fn eval(
        &self,
        op: &PhiOperator,
        v: &[f64],
        g: &[f64],
        dt: f64,
        tol: f64,
    ) -> Result<(Vec<f64>, PhiEvalReport)> {
        match *self {
            PhiEngine::ResidualTime { m_max } => op.rt(v, g, dt, tol, m_max),
            PhiEngine::Expokit { m } => op.expokit(v, g, dt, tol, m),
        }
    }
}

/// Outcome of one integration run. `error` stays NaN until a harness with a
/// reference solution fills it.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub y_final: Vec<f64>,
    pub fevals: usize,
    pub linear_solves: usize,
    pub wall_seconds: f64,
    pub error: f64,
}

/// One exponential Euler step: the exact solution of the constant-source
/// problem y' = -A y + g_n over [0, dt], evaluated by the configured phi
/// engine. Returns the new state and the matvecs spent.
pub fn exp_euler_step(
    op: &PhiOperator,
    y_n: &[f64],
    g_n: &[f64],
    dt: f64,
    engine: PhiEngine,
    tol: f64,
) -> Result<(Vec<f64>, usize)> {
    if !(dt > 0.0) {
        return Err(Error::Contract("exp euler: dt must be positive".into()));
    }
    let (y, report) = engine.eval(op, y_n, g_n, dt, tol)?;
    Ok((y, report.total_matvecs))
}

/// Plain exponential Euler run with the source frozen at each step's left
/// endpoint; first order for time-dependent sources, exact for constant g.
pub fn exp_euler_solve<G: Fn(f64) -> Vec<f64>>(
    a: &CsrMatrix,
    v: &[f64],
    g_sampler: G,
    grid: TimeGrid,
    engine: PhiEngine,
    tol: f64,
) -> Result<RunReport> {
    let start = Instant::now();
    let op = PhiOperator::new(a);
    let (y, fevals) = euler_run(&op, v, &g_sampler, grid, engine, tol)?;
    Ok(RunReport {
        y_final: y,
        fevals,
        linear_solves: 0,
        wall_seconds: start.elapsed().as_secs_f64(),
        error: f64::NAN,
    })
}

fn euler_run<G: Fn(f64) -> Vec<f64>>(
    op: &PhiOperator,
    v: &[f64],
    g_sampler: &G,
    grid: TimeGrid,
    engine: PhiEngine,
    tol: f64,
) -> Result<(Vec<f64>, usize)> {
    let mut y = v.to_vec();
    let mut fevals = 0usize;
    for step in 0..grid.n_steps {
        let g_n = g_sampler(grid.time_at(step));
        let (y_next, matvecs) = exp_euler_step(op, &y, &g_n, grid.dt, engine, tol)?;
        y = y_next;
        fevals += matvecs;
    }
    Ok((y, fevals))
}

/// Globally extrapolated second-order exponential Euler: run with steps dt
/// and dt/2, combine the endpoint values as 2 y_{dt/2} - y_dt.
pub fn ee2_solve<G: Fn(f64) -> Vec<f64>>(
    a: &CsrMatrix,
    v: &[f64],
    g_sampler: G,
    grid: TimeGrid,
    engine: PhiEngine,
    tol: f64,
) -> Result<RunReport> {
    let start = Instant::now();
    let op = PhiOperator::new(a);
    let (y_coarse, fe_coarse) = euler_run(&op, v, &g_sampler, grid, engine, tol)?;
    let (y_fine, fe_fine) = euler_run(&op, v, &g_sampler, grid.halved(), engine, tol)?;
    let y_final: Vec<f64> = y_fine
        .iter()
        .zip(&y_coarse)
        .map(|(f, c)| 2.0 * f - c)
        .collect();
    Ok(RunReport {
        y_final,
        fevals: fe_coarse + fe_fine,
        linear_solves: 0,
        wall_seconds: start.elapsed().as_secs_f64(),
        error: f64::NAN,
    })
}

/// Iterative solver settings for the shifted ROS2 systems.
#[derive(Debug, Clone, Copy)]
pub struct LinearSolverConfig {
    pub tol: f64,
    pub restart: usize,
    pub max_iters: usize,
}

impl Default for LinearSolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            restart: 100,
            max_iters: 100_000,
        }
    }
}

/// Two-stage Rosenbrock scheme with gamma = 1:
///
///   (I - dt J) k1 = f(t_n, y_n)
///   (I - dt J) k2 = f(t_{n+1}, y_n + dt k1) - 2 k1
///   y_{n+1} = y_n + (3/2) dt k1 + (1/2) dt k2
///
/// with f(t, y) = -A y + g(t) and J the approximate Jacobian -Ahat, so the
/// implicit operator is I + dt Ahat. Both solves share one shifted operator
/// and one ILU(0) factorization, built once for the whole run.
pub fn ros2_solve<G: Fn(f64) -> Vec<f64>>(
    a: &CsrMatrix,
    a_hat: &CsrMatrix,
    v: &[f64],
    g_sampler: G,
    grid: TimeGrid,
    solver: LinearSolverConfig,
) -> Result<RunReport> {
    let start = Instant::now();
    let shifted = a_hat.shifted_identity(-grid.dt)?;
    let precond = Ilu0::factor(&shifted)?;

    let mut y = v.to_vec();
    let mut fevals = 0usize;
    let mut linear_solves = 0usize;

    for step in 0..grid.n_steps {
        let t_n = grid.time_at(step);
        let t_next = grid.time_at(step + 1);

        let g_n = g_sampler(t_n);
        let ay = a.mul_vec(&y)?;
        fevals += 1;
        let f_n = vec_ops::sub(&g_n, &ay);

        let k1 = gmres_solve(
            &shifted,
            &f_n,
            solver.tol,
            solver.restart,
            solver.max_iters,
            Some(&precond),
        )
        .map_err(|e| wrap_step_error(e, step))?
        .solution;
        linear_solves += 1;

        let mut y_stage = y.clone();
        vec_ops::axpy(grid.dt, &k1, &mut y_stage);
        let g_next = g_sampler(t_next);
        let ay_stage = a.mul_vec(&y_stage)?;
        fevals += 1;
        let mut rhs2 = vec_ops::sub(&g_next, &ay_stage);
        vec_ops::axpy(-2.0, &k1, &mut rhs2);

        let k2 = gmres_solve(
            &shifted,
            &rhs2,
            solver.tol,
            solver.restart,
            solver.max_iters,
            Some(&precond),
        )
        .map_err(|e| wrap_step_error(e, step))?
        .solution;
        linear_solves += 1;

        vec_ops::axpy(1.5 * grid.dt, &k1, &mut y);
        vec_ops::axpy(0.5 * grid.dt, &k2, &mut y);
    }

    Ok(RunReport {
        y_final: y,
        fevals,
        linear_solves,
        wall_seconds: start.elapsed().as_secs_f64(),
        error: f64::NAN,
    })
}

fn wrap_step_error(e: Error, step: usize) -> Error {
    match e {
        Error::SolverFailure {
            context,
            best_residual,
            iterations,
        } => Error::SolverFailure {
            context: format!("{context} (time step {step})"),
            best_residual,
            iterations,
        },
        other => other,
    }
}
