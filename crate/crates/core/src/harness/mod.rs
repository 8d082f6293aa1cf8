//! Benchmark problems and the run harness.

pub mod bench;
pub mod problems;

pub use bench::{
    build_problem, default_stretch_ratio, format_study, format_table, run_benchmark,
    source_study, write_csv, BenchConfig, BenchOutcome, BenchRow, Method, StudyRow,
};
pub use problems::{
    alpha, attach_reference, build_test1, build_test2, reference_solution, relative_error,
    Sampler, TestProblem,
};
