//! Exponential block Krylov method: low-rank source approximation from
//! snapshots, block Arnoldi projection, exact projected advance, residual
//! stopping over the whole time interval.

pub mod block;
pub mod solve;
pub mod source;

pub use block::BlockKrylovBasis;
pub use solve::{advance_polynomial, ebk_solve, project_ivp_advance, EbkReport, EbkSolution};
pub use source::{build_source_approx, Interpolation, SourceApprox};
