//! Small dense complex kernels: general matrices, Hermitian matrices with
//! parameterized storage, the Jacobi eigensolver and PSD projection.

mod cmatrix;
mod eigen;
mod hermitian;

pub use cmatrix::{inner, CMatrix};
pub use eigen::{eigh, min_eigenvalue, psd_project, EigenDecomposition};
pub use hermitian::{HermitianMatrix, MAX_DIM};
