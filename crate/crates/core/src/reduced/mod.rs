//! Reduced dynamics on the invariant manifold: realification, periodic
//! orbits and backbone curves.
//!
//! The invariant-manifold expansion delivers complex normal-form dynamics
//! `ż_s = λ_s z_s + …` in conjugate coordinate pairs.  This module turns
//! each pair into two real coordinates (so standard real-valued integrators
//! and boundary-value solvers apply), checks that the complex coefficients
//! actually carry the conjugate symmetry that makes the real field exist,
//! and then works with the real system:
//!
//! * [`realify`] produces the real polynomial field with per-harmonic
//!   cosine/sine drive tables, rejecting coefficient tables whose
//!   realification residue exceeds [`REALIFICATION_TOL`];
//! * [`MappingObservable`] reads one physical displacement component
//!   through the full nonlinear mapping, so reduced results are compared
//!   with full-order references in physical coordinates;
//! * [`continue_frc`] traces periodic orbits across a drive-frequency
//!   window with harmonic balance and pseudo-arclength continuation,
//!   flagging saddle-nodes and Floquet stability;
//! * [`backbone`] extracts the amplitude–frequency relation of the
//!   conservative autonomous dynamics;
//! * [`frc_csv`] serialises either branch kind into the common CSV schema.

pub mod frc;
pub mod rom;

pub use frc::{backbone, continue_frc, frc_csv, ContinuationOptions, FrcBranch, FrcPoint};
pub use rom::{realify, HarmonicDrive, MappingObservable, RealizedRom, REALIFICATION_TOL};
