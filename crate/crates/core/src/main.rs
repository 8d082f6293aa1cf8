//! Command-line benchmark runner for the exponential integrator comparison.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use expint::harness::{format_study, format_table, run_benchmark, BenchConfig, Method};

/// Compare exponential time integrators (EBK, EE2/RT, EE2/EXPOKIT,
/// exponential Euler) and the ROS2 Rosenbrock baseline on an
/// advection-dominated advection-diffusion benchmark with stretched meshes.
#[derive(Parser, Debug)]
#[command(name = "expint", version, about)]
struct Cli {
    /// Config file with key=value lines mirroring the flags; explicit flags
    /// override file values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Benchmark problem: 1 (manufactured solution) or 2 (time-dependent
    /// boundary forcing).
    #[arg(long)]
    test: Option<u8>,

    /// Cells per side (64, 128, 256, 512; other even sizes >= 4 accepted).
    #[arg(long)]
    mesh: Option<usize>,

    /// Viscosity.
    #[arg(long)]
    nu: Option<f64>,

    /// Wind amplitude factor (2.0 matches the IFISS double-glazing wind).
    #[arg(long)]
    wind_scale: Option<f64>,

    /// Mesh grading ratio max h / min h; defaults per mesh size.
    #[arg(long)]
    stretch: Option<f64>,

    /// Methods to run: ebk, ee2-rt, ee2-expokit, expeuler, ros2, ros2-diff.
    /// Repeat the flag or separate with commas.
    #[arg(long = "method", value_delimiter = ',')]
    methods: Vec<String>,

    /// Time step grid for the stepping methods.
    #[arg(long = "dt", value_delimiter = ',')]
    dts: Vec<f64>,

    /// Tolerance grid for the Krylov-based methods.
    #[arg(long = "tol", value_delimiter = ',')]
    tols: Vec<f64>,

    /// Snapshot counts for EBK source approximation.
    #[arg(long = "ns", value_delimiter = ',')]
    ns: Vec<usize>,

    /// SVD truncation ranks for EBK.
    #[arg(long = "m", value_delimiter = ',')]
    m: Vec<usize>,

    /// Final time.
    #[arg(long)]
    horizon: Option<f64>,

    /// CSV output path (companion files <stem>_approx.csv and
    /// <stem>_trace.csv are written next to it when applicable).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for independent benchmark rows.
    #[arg(long)]
    jobs: Option<usize>,

    /// Emit singular-value and residual traces.
    #[arg(long)]
    trace: bool,

    /// Export the assembled operator in Matrix Market format.
    #[arg(long)]
    export_matrix: Option<PathBuf>,

    /// Export the mesh coordinates as plain text.
    #[arg(long)]
    export_mesh: Option<PathBuf>,

    /// Piecewise-linear source interpolation instead of the default
    /// fourth-order Hermite.
    #[arg(long)]
    linear_source: bool,

    /// Emit the snapshot-count selection study (ns in {30, 60, 120}).
    #[arg(long)]
    source_study: bool,
}

fn build_config(cli: &Cli) -> expint::Result<BenchConfig> {
    let mut config = BenchConfig::default();
    if let Some(path) = &cli.config {
        config.load_file(path)?;
    }
    if let Some(test) = cli.test {
        config.test = test;
    }
    if let Some(mesh) = cli.mesh {
        config.mesh = mesh;
    }
    if let Some(nu) = cli.nu {
        config.nu = nu;
    }
    if let Some(ws) = cli.wind_scale {
        config.wind_scale = ws;
    }
    if cli.stretch.is_some() {
        config.stretch = cli.stretch;
    }
    if !cli.methods.is_empty() {
        config.methods = cli
            .methods
            .iter()
            .map(|s| Method::parse(s))
            .collect::<expint::Result<_>>()?;
    }
    if !cli.dts.is_empty() {
        config.dts = cli.dts.clone();
    }
    if !cli.tols.is_empty() {
        config.tols = cli.tols.clone();
    }
    if !cli.ns.is_empty() {
        config.ns_list = cli.ns.clone();
    }
    if !cli.m.is_empty() {
        config.m_list = cli.m.clone();
    }
    if let Some(horizon) = cli.horizon {
        config.horizon = horizon;
    }
    if cli.out.is_some() {
        config.out = cli.out.clone();
    }
    if let Some(jobs) = cli.jobs {
        config.jobs = jobs;
    }
    if cli.trace {
        config.trace = true;
    }
    if cli.export_matrix.is_some() {
        config.export_matrix = cli.export_matrix.clone();
    }
    if cli.export_mesh.is_some() {
        config.export_mesh = cli.export_mesh.clone();
    }
    if cli.linear_source {
        config.linear_source = true;
    }
    if cli.source_study {
        config.source_study = true;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    match run_benchmark(&config) {
        Ok(outcome) => {
            print!("{}", outcome.diagnostics);
            println!();
            if !outcome.rows.is_empty() {
                print!("{}", format_table(&outcome.rows));
            } else {
                println!("(no methods requested; pass --method)");
            }
            if !outcome.study.is_empty() {
                println!("\nsource approximation study:");
                print!("{}", format_study(&outcome.study));
            }
            if outcome.n_failed > 0 {
                eprintln!("{} row(s) failed", outcome.n_failed);
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
