//! Krylov evaluation of y(t) = v + t phi(-tA)(g - Av) with residual-based
//! stopping, residual-time (RT) restarting, and an EXPOKIT-style adaptive
//! substepping mode.

use crate::error::{Error, Result};
use crate::krylov::arnoldi::KrylovBasis;
use crate::la::csr::CsrMatrix;
use crate::la::expm::phi_action;
use crate::la::vec_ops;

/// One accepted advance of a restarted evaluation: which restart/substep,
/// the basis size, the accepted step length and the relative residual.
#[derive(Debug, Clone, Copy)]
pub struct RestartTrace {
    pub restart: usize,
    pub k: usize,
    pub delta: f64,
    pub residual: f64,
}

/// Work and convergence accounting for one phi evaluation.
#[derive(Debug, Clone, Default)]
pub struct PhiEvalReport {
    /// Arnoldi extensions across all restarts/substeps.
    pub matvecs: usize,
    /// All matrix-vector products, including residual-vector computations.
    pub total_matvecs: usize,
    /// RT restarts performed.
    pub restarts: usize,
    /// Substeps taken (EXPOKIT mode).
    pub substeps: usize,
    /// Final residual norm relative to the subproblem anchor ||g - A v||.
    pub final_residual_norm: f64,
    /// Accepted advances, one row per restart or substep.
    pub trace: Vec<RestartTrace>,
}

/// Exact solution of the Galerkin-projected IVP u' = -H u + beta e1,
/// u(0) = u0, at time t: u(t) = u0 + t phi(-tH)(beta e1 - H u0).
pub fn projected_solution(basis: &KrylovBasis, u0: &[f64], t: f64) -> Result<Vec<f64>> {
    let k = basis.k();
    if u0.len() != k {
        return Err(Error::Contract(
            "projected_solution: coefficient length != basis dimension".into(),
        ));
    }
    let h = basis.h_square();
    let mut rhs = h.mul_vec(u0)?;
    for r in rhs.iter_mut() {
        *r = -*r;
    }
    rhs[0] += basis.beta();
    let mut u = phi_action(&h, &rhs, t)?;
    for (ui, u0i) in u.iter_mut().zip(u0) {
        *ui += u0i;
    }
    Ok(u)
}

/// Exponential residual norm of the projected solution via the Hessenberg
/// shortcut: ||r_k(t)|| = H[k+1,k] * |u_k(t)|.
pub fn residual_norm(basis: &KrylovBasis, u_t: &[f64]) -> f64 {
    basis.last_subdiag() * u_t.last().map_or(0.0, |c| c.abs())
}

/// 64-point geometric backtracking grid over (0, t_end]: point j is
/// t_end * 2^(-20 j / 63), so j = 0 is the target time itself.
fn backtrack_point(t_end: f64, j: usize) -> f64 {
    t_end * 2f64.powf(-20.0 * j as f64 / 63.0)
}

const BACKTRACK_POINTS: usize = 64;

/// Phi evaluator bound to one operator; caches the operator norm that the
/// breakdown threshold needs.
pub struct PhiOperator<'a> {
    a: &'a CsrMatrix,
    a_norm1: f64,
}

impl<'a> PhiOperator<'a> {
    pub fn new(a: &'a CsrMatrix) -> Self {
        Self {
            a,
            a_norm1: a.norm1(),
        }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        self.a
    }

    /// Solve y' = -A y + g, y(0) = v up to `t_end` with residual-time
    /// restarting: build at most `m_max` Arnoldi steps, accept the solution
    /// at the largest grid time whose residual meets `tol * ||g - A v||`,
    /// restart from there.
    pub fn rt(
        &self,
        v: &[f64],
        g: &[f64],
        t_end: f64,
        tol: f64,
        m_max: usize,
    ) -> Result<(Vec<f64>, PhiEvalReport)> {
        self.check_args(v, g, tol)?;
        if m_max < 2 {
            return Err(Error::Contract("phiv rt: m_max must be at least 2".into()));
        }
        let mut report = PhiEvalReport::default();
        let mut y = v.to_vec();
        if t_end == 0.0 {
            return Ok((y, report));
        }
        let mut t_rem = t_end;
        // warm start for the backtracking walk: once a restart backtracks,
        // later restarts skip the doomed early acceptance checks and probe
        // the grid near the previously accepted index
        let mut backtrack_hint: Option<usize> = None;

        loop {
            let ay = self.a.mul_vec(&y)?;
            report.total_matvecs += 1;
            let r0 = vec_ops::sub(g, &ay);
            let beta = vec_ops::norm2(&r0);
            if beta == 0.0 {
                // equilibrium: y' = 0, nothing to integrate
                report.final_residual_norm = 0.0;
                return Ok((y, report));
            }
            let target = tol * beta;
            let mut basis = KrylovBasis::new(&r0, self.a_norm1)?;

            // The residual test costs a dense exponential, so past dimension
            // eight it runs on a geometric schedule instead of every step.
            let mut next_check = 1usize;
            let mut accepted: Option<(Vec<f64>, f64)> = None;
            loop {
                let extended = basis.extend(self.a)?;
                report.matvecs += 1;
                report.total_matvecs += 1;
                let k = basis.k();
                let at_cap = !extended || k >= m_max;
                let check = if backtrack_hint.is_some() {
                    basis.happy_breakdown()
                } else if k >= next_check || at_cap {
                    next_check = if k < 8 { k + 1 } else { k + 1 + k / 4 };
                    true
                } else {
                    false
                };
                if check {
                    let u = projected_solution(&basis, &vec![0.0; k], t_rem)?;
                    let res = residual_norm(&basis, &u);
                    if res <= target || basis.happy_breakdown() {
                        accepted = Some((u, res));
                        break;
                    }
                }
                if at_cap {
                    break;
                }
            }

            if let Some((u, res)) = accepted {
                y = basis.lift(&y, &u);
                report.final_residual_norm = res / beta;
                report.trace.push(RestartTrace {
                    restart: report.restarts,
                    k: basis.k(),
                    delta: t_rem,
                    residual: res / beta,
                });
                return Ok((y, report));
            }

            // Backtrack: largest grid time with residual under tolerance.
            // Probe from the warm-start index, stepping back toward larger
            // times while the test passes, forward while it fails.
            let eval = |basis: &KrylovBasis, j: usize| -> Result<(Vec<f64>, f64)> {
                let delta = backtrack_point(t_rem, j);
                let u = projected_solution(basis, &vec![0.0; basis.k()], delta)?;
                let res = residual_norm(basis, &u);
                Ok((u, res))
            };
            let mut j = backtrack_hint.unwrap_or(0).min(BACKTRACK_POINTS - 1);
            let mut best_res = f64::INFINITY;
            let (mut u, mut res) = eval(&basis, j)?;
            best_res = best_res.min(res / beta);
            if res <= target {
                // walk toward larger delta while still passing
                while j > 0 {
                    let (u_prev, res_prev) = eval(&basis, j - 1)?;
                    if res_prev <= target {
                        j -= 1;
                        u = u_prev;
                        res = res_prev;
                    } else {
                        break;
                    }
                }
            } else {
                // walk toward smaller delta until passing
                loop {
                    if j + 1 >= BACKTRACK_POINTS {
                        return Err(Error::RestartStagnation {
                            best_residual: best_res,
                        });
                    }
                    j += 1;
                    let out = eval(&basis, j)?;
                    u = out.0;
                    res = out.1;
                    best_res = best_res.min(res / beta);
                    if res <= target {
                        break;
                    }
                }
            }

            if j == 0 {
                // the full remaining interval passed after all
                y = basis.lift(&y, &u);
                report.final_residual_norm = res / beta;
                report.trace.push(RestartTrace {
                    restart: report.restarts,
                    k: basis.k(),
                    delta: t_rem,
                    residual: res / beta,
                });
                return Ok((y, report));
            }

            let delta = backtrack_point(t_rem, j);
            y = basis.lift(&y, &u);
            report.trace.push(RestartTrace {
                restart: report.restarts,
                k: basis.k(),
                delta,
                residual: res / beta,
            });
            backtrack_hint = Some(j);
            t_rem -= delta;
            report.restarts += 1;
        }
    }

    /// Solve the same problem by adaptive substepping with a fresh
    /// fixed-size basis per substep (the EXPOKIT phiv strategy): the local
    /// error estimate is the Hessenberg residual at the substep length, the
    /// budget is spread proportionally to substep length, and the substep
    /// adapts by the classical err^(-1/m) rule.
    pub fn expokit(
        &self,
        v: &[f64],
        g: &[f64],
        t_end: f64,
        tol: f64,
        m: usize,
    ) -> Result<(Vec<f64>, PhiEvalReport)> {
        self.check_args(v, g, tol)?;
        if m < 2 {
            return Err(Error::Contract("phiv expokit: m must be at least 2".into()));
        }
        let mut report = PhiEvalReport::default();
        let mut y = v.to_vec();
        if t_end == 0.0 {
            return Ok((y, report));
        }

        const SAFETY: f64 = 0.9;
        const GROWTH_CAP: f64 = 2.0;
        const SHRINK_FLOOR: f64 = 0.5;

        let mut t_now = 0.0;
        let mut tau = t_end;
        let mut budget_rate = f64::NAN; // tol * ||g - A v0|| / t_end, set below

        loop {
            let remaining = t_end - t_now;
            if remaining <= 1e-14 * t_end {
                break;
            }
            let ay = self.a.mul_vec(&y)?;
            report.total_matvecs += 1;
            let r = vec_ops::sub(g, &ay);
            let beta = vec_ops::norm2(&r);
            if beta == 0.0 {
                report.final_residual_norm = 0.0;
                return Ok((y, report));
            }
            if budget_rate.is_nan() {
                budget_rate = tol * beta / t_end;
            }

            let mut basis = KrylovBasis::new(&r, self.a_norm1)?;
            for _ in 0..m {
                report.matvecs += 1;
                report.total_matvecs += 1;
                if !basis.extend(self.a)? {
                    break;
                }
            }
            let k = basis.k();

            loop {
                tau = tau.min(t_end - t_now);
                let u = projected_solution(&basis, &vec![0.0; k], tau)?;
                let err = residual_norm(&basis, &u);
                let allowed = tau * budget_rate;
                let factor = if err > 0.0 {
                    (SAFETY * (allowed / err).powf(1.0 / k as f64))
                        .clamp(SHRINK_FLOOR, GROWTH_CAP)
                } else {
                    GROWTH_CAP
                };
                if err <= allowed {
                    y = basis.lift(&y, &u);
                    t_now += tau;
                    report.substeps += 1;
                    report.final_residual_norm = err / beta;
                    report.trace.push(RestartTrace {
                        restart: report.substeps - 1,
                        k,
                        delta: tau,
                        residual: err / beta,
                    });
                    tau *= factor;
                    break;
                }
                tau *= factor;
                if tau < 1e-12 * t_end {
                    return Err(Error::StepUnderflow { tau });
                }
            }
        }
        Ok((y, report))
    }

    fn check_args(&self, v: &[f64], g: &[f64], tol: f64) -> Result<()> {
        if v.len() != self.a.n_cols() || g.len() != self.a.n_cols() {
            return Err(Error::Contract("phiv: vector length mismatch".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::Contract("phiv: tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// One-shot RT evaluation (see [`PhiOperator::rt`]).
pub fn phiv_rt(
    a: &CsrMatrix,
    v: &[f64],
    g: &[f64],
    t_end: f64,
    tol: f64,
    m_max: usize,
) -> Result<(Vec<f64>, PhiEvalReport)> {
    PhiOperator::new(a).rt(v, g, t_end, tol, m_max)
}

/// One-shot EXPOKIT-style evaluation (see [`PhiOperator::expokit`]).
pub fn phiv_expokit(
    a: &CsrMatrix,
    v: &[f64],
    g: &[f64],
    t_end: f64,
    tol: f64,
    m: usize,
) -> Result<(Vec<f64>, PhiEvalReport)> {
    PhiOperator::new(a).expokit(v, g, t_end, tol, m)
}
