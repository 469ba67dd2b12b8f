//! Direct parametrisation of the invariant manifold tangent to a set of
//! master modes.
//!
//! The reduction seeks polynomial mappings `U = Ψ(z)`, `V = Υ(z)` from a few
//! complex normal coordinates to the full displacement and velocity fields,
//! together with reduced dynamics `ż_s = f_s(z)`, such that trajectories of
//! the reduced system are exact trajectories of the full one up to the
//! truncation order.  Substituting the ansatz into the equations of motion
//! and matching one monomial at a time turns the construction into a sequence
//! of linear "homological" solves that walk up the polynomial orders; each
//! solve is bordered by the resonant normal-form coefficients, which absorb
//! the content that no mapping coefficient could represent (the style kept
//! here is the minimal normal form: only near-resonant monomials feed the
//! reduced dynamics).
//!
//! The module is organised along that pipeline:
//!
//! * [`monomials`] — canonical multiset monomials and dense order-by-order
//!   bases in the normal coordinates;
//! * [`system`] — the [`SecondOrderSystem`] abstraction the expansion reads
//!   (mass, stiffness, Rayleigh damping, quadratic and cubic forces), with a
//!   finite-element implementation and a dense one for small test systems;
//! * [`rhs`] — the lower-order convolutions and force splittings feeding each
//!   homological right-hand side;
//! * [`homological`] — the bordered solver for one monomial, including the
//!   resonance test that decides the border;
//! * [`parametrise`] — the order-by-order drivers for the autonomous and the
//!   forced (non-autonomous) expansions, and the serialisable
//!   [`Parametrisation`] bundle they produce;
//! * [`residual`] — truncation-error diagnostics: the order-resolved residual
//!   tail along a ray and the direct full residual at a point.

pub mod homological;
pub mod monomials;
#[cfg(test)]
pub(crate) mod oracle;
pub mod parametrise;
pub mod residual;
pub mod rhs;
pub mod system;

pub use homological::{
    resonance_test, solve_homological, BorderedSolution, MasterTriples, HOMOLOGICAL_TOL,
};
pub use monomials::{enumerate_monomials, monomial_count, Monomial, MonomialBasis};
pub use parametrise::{
    parametrise_autonomous, parametrise_nonautonomous, CoeffSet, ForcingBranch, Parametrisation,
};
pub use residual::{
    autonomous_residual_direct, autonomous_residual_tail, fit_loglog_slope, ResidualTail,
};
pub use rhs::{rhs_autonomous, rhs_nonautonomous, RhsParts};
pub use system::{DenseSystem, FeSystem, SecondOrderSystem};
