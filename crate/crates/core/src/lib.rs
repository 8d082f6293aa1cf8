//! Exponential time integrators for advection-diffusion problems on
//! stretched meshes, with a linearly implicit ROS2 baseline.
//!
//! The crate provides:
//! - sparse/dense linear algebra kernels ([`la`]): CSR matvec, dense matrix
//!   exponential, phi actions, thin SVD, ILU(0)-preconditioned GMRES;
//! - SUPG-stabilized Q1 finite element assembly on stretched Cartesian
//!   meshes ([`fem`]);
//! - Krylov evaluation of phi-function actions with residual-time and
//!   EXPOKIT-style restarting ([`krylov`]);
//! - the exponential block Krylov solver for whole-interval integration
//!   with low-rank sources ([`ebk`]);
//! - exponential Euler, its globally extrapolated second-order variant, and
//!   the two-stage Rosenbrock scheme ROS2 ([`stepping`]);
//! - benchmark problem construction and the run harness ([`harness`]).

pub mod error;
pub mod ebk;
pub mod fem;
pub mod harness;
pub mod krylov;
pub mod la;
pub mod stepping;

#[doc(hidden)]
pub mod testkit;

pub use error::{Error, Result};
