//! Benchmark matrix runner: builds the requested test problem, executes the
//! method/parameter grid in a worker pool, and writes CSV plus an aligned
//! text table.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use crate::ebk::{build_source_approx, ebk_solve, Interpolation};
use crate::error::{Error, Result};
use crate::fem::{assemble_operator_scaled, StretchedMesh};
use crate::harness::problems::{
    attach_reference, build_test1, build_test2, relative_error, TestProblem,
};
use crate::la::market::save_matrix_market;
use crate::la::vec_ops;
use crate::stepping::{
    ee2_solve, exp_euler_solve, ros2_solve, LinearSolverConfig, PhiEngine, TimeGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ebk,
    Ee2Rt,
    Ee2Expokit,
    ExpEuler,
    Ros2,
    Ros2Diff,
}

impl Method {
    pub fn parse(s: &str) -> Result<Method> {
        match s.trim().to_lowercase().as_str() {
            "ebk" => Ok(Method::Ebk),
            "ee2-rt" => Ok(Method::Ee2Rt),
            "ee2-expokit" => Ok(Method::Ee2Expokit),
            "expeuler" => Ok(Method::ExpEuler),
            "ros2" => Ok(Method::Ros2),
            "ros2-diff" => Ok(Method::Ros2Diff),
            other => Err(Error::Parse(format!("unknown method '{other}'"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Ebk => "ebk",
            Method::Ee2Rt => "ee2-rt",
            Method::Ee2Expokit => "ee2-expokit",
            Method::ExpEuler => "expeuler",
            Method::Ros2 => "ros2",
            Method::Ros2Diff => "ros2-diff",
        }
    }
}

/// Default stretch ratios: the 256 and 512 meshes use the IFISS values,
/// other sizes follow the log-linear fit through those two points.
pub fn default_stretch_ratio(mesh: usize) -> f64 {
    match mesh {
        256 => 52.17,
        512 => 87.5535,
        n => 0.8301 * (n as f64).powf(0.74678),
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub test: u8,
    pub mesh: usize,
    pub nu: f64,
    /// Wind amplitude factor; 2.0 matches the IFISS default double-glazing
    /// wind, which is twice the textbook formula.
    pub wind_scale: f64,
    pub stretch: Option<f64>,
    pub methods: Vec<Method>,
    pub dts: Vec<f64>,
    pub tols: Vec<f64>,
    pub ns_list: Vec<usize>,
    pub m_list: Vec<usize>,
    pub horizon: f64,
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub trace: bool,
    pub export_matrix: Option<PathBuf>,
    pub export_mesh: Option<PathBuf>,
    pub linear_source: bool,
    pub source_study: bool,
    pub ebk_k_max: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            test: 1,
            mesh: 64,
            nu: 1.0 / 6400.0,
            wind_scale: 2.0,
            stretch: None,
            methods: Vec::new(),
            dts: vec![20.0, 10.0, 5.0],
            tols: vec![1e-4],
            ns_list: Vec::new(),
            m_list: vec![2],
            horizon: 1000.0,
            out: None,
            jobs: 1,
            trace: false,
            export_matrix: None,
            export_mesh: None,
            linear_source: false,
            source_study: false,
            ebk_k_max: 100,
        }
    }
}

impl BenchConfig {
    /// Apply one key=value assignment (the config-file format mirrors the
    /// command-line flags).
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_f64 = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{key}: {e}")))
        };
        let parse_usize = |v: &str| -> Result<usize> {
            v.trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("{key}: {e}")))
        };
        let parse_bool = |v: &str| -> Result<bool> {
            match v.trim() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                other => Err(Error::Parse(format!("{key}: bad boolean '{other}'"))),
            }
        };
        match key {
            "test" => self.test = parse_usize(value)? as u8,
            "mesh" => self.mesh = parse_usize(value)?,
            "nu" => self.nu = parse_f64(value)?,
            "wind-scale" => self.wind_scale = parse_f64(value)?,
            "stretch" => self.stretch = Some(parse_f64(value)?),
            "method" => {
                for part in value.split(',').filter(|p| !p.trim().is_empty()) {
                    self.methods.push(Method::parse(part)?);
                }
            }
            "dt" => {
                self.dts = value
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(parse_f64)
                    .collect::<Result<_>>()?;
            }
            "tol" => {
                self.tols = value
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(parse_f64)
                    .collect::<Result<_>>()?;
            }
            "ns" => {
                self.ns_list = value
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(parse_usize)
                    .collect::<Result<_>>()?;
            }
            "m" => {
                self.m_list = value
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(parse_usize)
                    .collect::<Result<_>>()?;
            }
            "horizon" => self.horizon = parse_f64(value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "jobs" => self.jobs = parse_usize(value)?,
            "trace" => self.trace = parse_bool(value)?,
            "export-matrix" => self.export_matrix = Some(PathBuf::from(value.trim())),
            "export-mesh" => self.export_mesh = Some(PathBuf::from(value.trim())),
            "linear-source" => self.linear_source = parse_bool(value)?,
            "source-study" => self.source_study = parse_bool(value)?,
            "ebk-k-max" => self.ebk_k_max = parse_usize(value)?,
            other => return Err(Error::Parse(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse(format!(
                    "{}:{}: expected key=value",
                    path.display(),
                    lineno + 1
                )));
            };
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn default_ns(&self) -> usize {
        if self.test == 2 {
            80
        } else {
            120
        }
    }

    fn interpolation(&self) -> Interpolation {
        if self.linear_source {
            Interpolation::Linear
        } else {
            Interpolation::CubicHermite
        }
    }
}

/// One benchmark result row.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub method: &'static str,
    pub dt: Option<f64>,
    pub tol: Option<f64>,
    pub ns: Option<usize>,
    pub m: Option<usize>,
    pub cpu_s: f64,
    pub fevals: usize,
    pub lss: usize,
    pub error: f64,
    pub note: Option<String>,
    /// EBK rows: singular values and per-iteration residuals for tracing.
    pub trace_sigma: Vec<f64>,
    pub trace_residuals: Vec<f64>,
}

impl BenchRow {
    pub fn failed(&self) -> bool {
        self.error.is_nan()
    }
}

/// Source-approximation study row (the n_s selection workflow).
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub ns: usize,
    pub max_err: f64,
    pub rel_integral_err: f64,
    pub ebk_error: f64,
}

pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    pub study: Vec<StudyRow>,
    pub diagnostics: String,
    pub n_failed: usize,
}

#[derive(Debug, Clone, Copy)]
struct JobSpec {
    method: Method,
    dt: Option<f64>,
    tol: Option<f64>,
    ns: Option<usize>,
    m: Option<usize>,
}

fn job_matrix(config: &BenchConfig) -> Vec<JobSpec> {
    let mut jobs = Vec::new();
    let ns_list = if config.ns_list.is_empty() {
        vec![config.default_ns()]
    } else {
        config.ns_list.clone()
    };
    for &method in &config.methods {
        match method {
            Method::Ebk => {
                for &tol in &config.tols {
                    for &ns in &ns_list {
                        for &m in &config.m_list {
                            jobs.push(JobSpec {
                                method,
                                dt: None,
                                tol: Some(tol),
                                ns: Some(ns),
                                m: Some(m),
                            });
                        }
                    }
                }
            }
            Method::Ee2Rt | Method::Ee2Expokit | Method::ExpEuler => {
                for &dt in &config.dts {
                    for &tol in &config.tols {
                        jobs.push(JobSpec {
                            method,
                            dt: Some(dt),
                            tol: Some(tol),
                            ns: None,
                            m: None,
                        });
                    }
                }
            }
            Method::Ros2 | Method::Ros2Diff => {
                for &dt in &config.dts {
                    jobs.push(JobSpec {
                        method,
                        dt: Some(dt),
                        tol: None,
                        ns: None,
                        m: None,
                    });
                }
            }
        }
    }
    jobs
}

/// Build the operator and test problem for a configuration.
pub fn build_problem(config: &BenchConfig) -> Result<TestProblem> {
    let ratio = config
        .stretch
        .unwrap_or_else(|| default_stretch_ratio(config.mesh));
    let mesh = StretchedMesh::stretched(config.mesh, ratio)?;
    let op = Arc::new(assemble_operator_scaled(
        &mesh,
        config.nu,
        true,
        config.wind_scale,
    )?);
    let mut problem = match config.test {
        1 => build_test1(op, config.horizon, 1e-12)?,
        2 => build_test2(op, config.horizon)?,
        other => {
            return Err(Error::Contract(format!(
                "test must be 1 or 2, got {other}"
            )))
        }
    };
    if problem.exact_final.is_none() {
        attach_reference(&mut problem)?;
    }
    Ok(problem)
}

fn run_job(problem: &TestProblem, job: JobSpec, interp: Interpolation, k_max: usize) -> BenchRow {
    let start = Instant::now();
    let mut row = BenchRow {
        method: job.method.label(),
        dt: job.dt,
        tol: job.tol,
        ns: job.ns,
        m: job.m,
        cpu_s: 0.0,
        fevals: 0,
        lss: 0,
        error: f64::NAN,
        note: None,
        trace_sigma: Vec::new(),
        trace_residuals: Vec::new(),
    };

    let outcome = (|| -> Result<(Vec<f64>, usize, usize)> {
        match job.method {
            Method::Ebk => {
                let (shifted, extra) = problem.shifted_sampler()?;
                let src = build_source_approx(
                    |t| shifted(t),
                    problem.t_end,
                    job.ns.unwrap(),
                    job.m.unwrap(),
                    interp,
                )?;
                row.trace_sigma = src.singular_values().to_vec();
                let sol = ebk_solve(&problem.op.a, &problem.v, &src, job.tol.unwrap(), k_max)?;
                row.trace_residuals = sol.report.residual_profile.clone();
                Ok((sol.final_value(), sol.report.matvecs + extra, 0))
            }
            Method::Ee2Rt | Method::Ee2Expokit => {
                let engine = if matches!(job.method, Method::Ee2Rt) {
                    PhiEngine::ResidualTime {
                        m_max: crate::krylov::DEFAULT_M_MAX,
                    }
                } else {
                    PhiEngine::Expokit {
                        m: crate::krylov::DEFAULT_EXPOKIT_M,
                    }
                };
                let grid = TimeGrid::new(0.0, problem.t_end, job.dt.unwrap())?;
                let g = Arc::clone(&problem.g_sampler);
                let report = ee2_solve(
                    &problem.op.a,
                    &problem.v,
                    move |t| g(t),
                    grid,
                    engine,
                    job.tol.unwrap(),
                )?;
                Ok((report.y_final, report.fevals, report.linear_solves))
            }
            Method::ExpEuler => {
                let grid = TimeGrid::new(0.0, problem.t_end, job.dt.unwrap())?;
                let g = Arc::clone(&problem.g_sampler);
                let report = exp_euler_solve(
                    &problem.op.a,
                    &problem.v,
                    move |t| g(t),
                    grid,
                    PhiEngine::ResidualTime {
                        m_max: crate::krylov::DEFAULT_M_MAX,
                    },
                    job.tol.unwrap(),
                )?;
                Ok((report.y_final, report.fevals, report.linear_solves))
            }
            Method::Ros2 | Method::Ros2Diff => {
                let a_hat = if matches!(job.method, Method::Ros2) {
                    &problem.op.a
                } else {
                    &problem.op.a_diff
                };
                let grid = TimeGrid::new(0.0, problem.t_end, job.dt.unwrap())?;
                let g = Arc::clone(&problem.g_sampler);
                let report = ros2_solve(
                    &problem.op.a,
                    a_hat,
                    &problem.v,
                    move |t| g(t),
                    grid,
                    LinearSolverConfig::default(),
                )?;
                Ok((report.y_final, report.fevals, report.linear_solves))
            }
        }
    })();

    row.cpu_s = start.elapsed().as_secs_f64();
    match outcome {
        Ok((y, fevals, lss)) => {
            row.fevals = fevals;
            row.lss = lss;
            if y.iter().any(|x| !x.is_finite()) {
                row.note = Some("non-finite result".into());
            } else {
                match problem.truth().and_then(|t| relative_error(&y, t)) {
                    Ok(err) if err.is_finite() => row.error = err,
                    Ok(_) => row.note = Some("non-finite error".into()),
                    Err(e) => row.note = Some(e.to_string()),
                }
            }
        }
        Err(e) => {
            row.note = Some(e.to_string());
        }
    }
    row
}

/// Source-approximation study over a snapshot-count ladder: max and
/// integral-relative approximation error on a 10x finer grid, plus the error
/// of the EBK solve at tol 1e-6, all against the problem's reference.
pub fn source_study(
    problem: &TestProblem,
    ns_ladder: &[usize],
    m: usize,
    interp: Interpolation,
) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::new();
    let (shifted, _) = problem.shifted_sampler()?;
    for &ns in ns_ladder {
        let src = build_source_approx(|t| shifted(t), problem.t_end, ns, m, interp)?;
        let fine = (ns - 1) * 10;
        let mut max_err = 0.0f64;
        let mut int_err = 0.0f64;
        let mut int_norm = 0.0f64;
        let mut prev: Option<(f64, f64)> = None;
        for q in 0..=fine {
            let t = problem.t_end * q as f64 / fine as f64;
            let exact = shifted(t);
            let approx = src.value_at(t);
            let err = vec_ops::norm2(&vec_ops::sub(&exact, &approx));
            let nrm = vec_ops::norm2(&exact);
            max_err = max_err.max(err);
            if let Some((perr, pnrm)) = prev {
                let h = problem.t_end / fine as f64;
                int_err += 0.5 * h * (perr + err);
                int_norm += 0.5 * h * (pnrm + nrm);
            }
            prev = Some((err, nrm));
        }
        let sol = ebk_solve(&problem.op.a, &problem.v, &src, 1e-6, 150)?;
        let ebk_error = relative_error(&sol.final_value(), problem.truth()?)?;
        rows.push(StudyRow {
            ns,
            max_err,
            rel_integral_err: int_err / int_norm,
            ebk_error,
        });
    }
    Ok(rows)
}

/// Run the whole benchmark matrix described by `config`.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchOutcome> {
    let problem = build_problem(config)?;
    if let Some(path) = &config.export_matrix {
        save_matrix_market(path, &problem.op.a)?;
    }
    if let Some(path) = &config.export_mesh {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        problem.op.mesh.write_coordinates(&mut w)?;
    }
    let diagnostics = problem.op.diagnostics();

    let jobs = job_matrix(config);
    let interp = config.interpolation();
    let k_max = config.ebk_k_max;

    let mut rows: Vec<Option<BenchRow>> = (0..jobs.len()).map(|_| None).collect();
    let workers = config.jobs.max(1).min(jobs.len().max(1));
    if workers <= 1 {
        for (slot, job) in rows.iter_mut().zip(&jobs) {
            *slot = Some(run_job(&problem, *job, interp, k_max));
        }
    } else {
        let next = AtomicUsize::new(0);
        let results: Vec<std::sync::Mutex<Option<BenchRow>>> =
            (0..jobs.len()).map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    if idx >= jobs.len() {
                        break;
                    }
                    let row = run_job(&problem, jobs[idx], interp, k_max);
                    *results[idx].lock().unwrap() = Some(row);
                });
            }
        });
        for (slot, cell) in rows.iter_mut().zip(results) {
            *slot = cell.into_inner().unwrap();
        }
    }
    let rows: Vec<BenchRow> = rows.into_iter().map(|r| r.expect("job ran")).collect();

    let study = if config.source_study {
        source_study(&problem, &[30, 60, 120], 2, interp)?
    } else {
        Vec::new()
    };

    let n_failed = rows.iter().filter(|r| r.failed()).count();

    if let Some(out) = &config.out {
        write_csv(out, &rows)?;
        if !study.is_empty() {
            write_study_csv(&study_path(out), &study)?;
        }
        if config.trace {
            write_trace_csv(&trace_path(out), &rows)?;
        }
    }

    Ok(BenchOutcome {
        rows,
        study,
        diagnostics,
        n_failed,
    })
}

fn study_path(out: &Path) -> PathBuf {
    let mut stem = out.file_stem().unwrap_or_default().to_os_string();
    stem.push("_approx.csv");
    out.with_file_name(stem)
}

fn trace_path(out: &Path) -> PathBuf {
    let mut stem = out.file_stem().unwrap_or_default().to_os_string();
    stem.push("_trace.csv");
    out.with_file_name(stem)
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn write_csv(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "method,dt,tol,ns,m,cpu_s,fevals,lss,error")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{:.6},{},{},{}",
            r.method,
            fmt_opt_f64(r.dt),
            fmt_opt_f64(r.tol),
            fmt_opt_usize(r.ns),
            fmt_opt_usize(r.m),
            r.cpu_s,
            r.fevals,
            r.lss,
            if r.error.is_nan() {
                "NaN".to_string()
            } else {
                format!("{:.6e}", r.error)
            }
        )?;
    }
    Ok(())
}

fn write_study_csv(path: &Path, rows: &[StudyRow]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "ns,max_approx_err,rel_integral_err,ebk_error")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.6e},{:.6e},{:.6e}",
            r.ns, r.max_err, r.rel_integral_err, r.ebk_error
        )?;
    }
    Ok(())
}

fn write_trace_csv(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "row,method,kind,index,value")?;
    for (i, r) in rows.iter().enumerate() {
        for (j, s) in r.trace_sigma.iter().enumerate() {
            writeln!(w, "{i},{},sigma,{j},{s:.12e}", r.method)?;
        }
        for (j, res) in r.trace_residuals.iter().enumerate() {
            writeln!(w, "{i},{},residual,{j},{res:.12e}", r.method)?;
        }
    }
    Ok(())
}

/// Human-readable aligned table.
pub fn format_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>8} {:>9} {:>5} {:>3} {:>10} {:>8} {:>6} {:>12}  {}\n",
        "method", "dt", "tol", "ns", "m", "cpu_s", "fevals", "lss", "error", "note"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:>8} {:>9} {:>5} {:>3} {:>10.3} {:>8} {:>6} {:>12}  {}\n",
            r.method,
            fmt_opt_f64(r.dt),
            r.tol.map(|t| format!("{t:.0e}")).unwrap_or_default(),
            fmt_opt_usize(r.ns),
            fmt_opt_usize(r.m),
            r.cpu_s,
            r.fevals,
            r.lss,
            if r.error.is_nan() {
                "NaN".to_string()
            } else {
                format!("{:.3e}", r.error)
            },
            r.note.as_deref().unwrap_or("")
        ));
    }
    out
}

pub fn format_study(rows: &[StudyRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>5} {:>14} {:>16} {:>12}\n",
        "ns", "max||g-Up||", "rel_integral_err", "ebk_error"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:>5} {:>14.3e} {:>16.3e} {:>12.3e}\n",
            r.ns, r.max_err, r.rel_integral_err, r.ebk_error
        ));
    }
    out
}
