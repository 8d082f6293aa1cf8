//! Dense and sparse linear-algebra kernels: CSR matvec, norms, dense
//! matrix exponential and phi actions, thin SVD, dense LU, and restarted
//! GMRES with ILU(0) for shifted systems.

pub mod csr;
pub mod dense;
pub mod expm;
pub mod gmres;
pub mod market;
pub mod svd;
pub mod vec_ops;

pub use csr::CsrMatrix;
pub use dense::{DenseLu, DenseMatrix};
pub use expm::{expm, phi, phi_action};
pub use gmres::{gmres_solve, GmresOutcome, Ilu0};
pub use svd::{thin_svd, SvdResult};
