//! Finite-element layer: hex8 element geometry, operator assembly
//! (mass, stiffness, damping), the quadratic/cubic nonlinear force
//! contractions, exact internal forces and tangents, and the
//! polarisation-driven load operators.

pub mod contractions;
pub mod dofmap;
pub mod hex8;
pub mod model;
pub mod piezo;

pub use contractions::{contract_g, contract_h};
pub use dofmap::DofMap;
pub use model::FeModel;
pub use piezo::{piezo_unit_ops, squared_loop_spectrum, PiezoUnitOps, SquaredLoopSpectrum};
