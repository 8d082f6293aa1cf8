//! Arnoldi-based phi-function evaluation with residual error control.

pub mod arnoldi;
pub mod phiv;

pub use arnoldi::KrylovBasis;
pub use phiv::{
    phiv_expokit, phiv_rt, projected_solution, residual_norm, PhiEvalReport, PhiOperator,
    RestartTrace,
};

/// Default Krylov dimension cap for RT restarting.
pub const DEFAULT_M_MAX: usize = 100;

/// Default basis size per substep for the EXPOKIT-style mode.
pub const DEFAULT_EXPOKIT_M: usize = 30;
