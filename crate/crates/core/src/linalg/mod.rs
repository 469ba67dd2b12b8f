//! Sparse and banded linear algebra serving the assembly and solver stages.
//!
//! The module is deliberately small: CSR matrices for operator storage and
//! products, a banded LU with partial pivoting for every direct solve
//! (real and complex through the same generic code), an RCM ordering to
//! keep parsed meshes narrowly banded, and a shift-invert subspace
//! iteration for the lowest structural modes.

mod banded;
mod csr;
mod eig;
mod rcm;

pub use banded::{BandLdlt, BandLu, BandMatrix};
pub use csr::Csr;
pub use eig::{smallest_modes, RealModes};
pub use rcm::reverse_cuthill_mckee;
