//! Independent reference solvers that arbitrate the reduced model.
//!
//! Model reduction is only trustworthy against answers obtained another
//! way, so this module keeps two full-order solvers whose algorithms share
//! nothing with the invariant-manifold pipeline beyond the assembled
//! operators themselves:
//!
//! * [`hb_full_order`] — frequency domain: every degree of freedom carries
//!   a truncated Fourier series, nonlinear terms enter through cycle
//!   sampling, and a banded Newton/arclength continuation traces the
//!   response branch including its folds.
//! * [`transient_newmark`] / [`integrate_cycles`] — time domain: implicit
//!   average-acceleration integration settles onto steady states one drive
//!   cycle at a time and keeps a per-cycle work–energy ledger as a
//!   self-consistency check.
//!
//! The [`duffing`] submodule supplies the single-dof fixture with known
//! closed-form behaviour (averaging amplitudes, backbone curvature) that
//! pins both solvers — and the reduction itself — to textbook answers
//! before they face the finite-element fixtures.

pub mod duffing;
pub mod hb;
pub mod newmark;

pub use duffing::{
    averaging_amplitudes, averaging_backbone, averaging_peak, duffing_fixture, duffing_loads,
};
pub use hb::{hb_full_order, hb_orbit, HbOptions, HbOrbit};
pub use newmark::{integrate_cycles, transient_newmark, TransientOptions, TransientResult};
