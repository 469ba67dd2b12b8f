//! Reduced-order modelling of piezoelectrically actuated, geometrically
//! nonlinear structures by direct parametrisation of invariant manifolds.
//!
//! The crate implements the full pipeline:
//!
//! 1. [`mesh`] — hexahedral meshes (parsed or generated), polarisation
//!    loops and run configuration.
//! 2. [`materials`] — elasticity tensors and the electrostrictive
//!    inelastic strain/stress laws.
//! 3. [`fem`] — semi-discrete operators: M, C, K, quadratic/cubic
//!    contraction operators G(·,·), H(·,·,·) and the time-periodic
//!    polarisation-induced loads F_P(t), K_P(t).
//! 4. [`statics`] — the prestressed fixed point U₀ and the effective
//!    operators (tangent stiffness K̃, shifted quadratic operator G̃,
//!    per-harmonic forcing).
//! 5. [`spectral`] — real modes of (K̃, M) and the first-order complex
//!    eigentriples (Λ, X, Y) under Rayleigh damping.
//! 6. [`dpim`] — the parametrisation engine: monomial combinatorics,
//!    homological right-hand sides, bordered solves, and the assembled
//!    autonomous/non-autonomous expansion coefficients.
//! 7. [`reduced`] — realified reduced dynamics, periodic-orbit
//!    continuation (FRC) and backbone curves.
//! 8. [`oracles`] — independent full-order references: harmonic balance
//!    with alternating frequency/time evaluation, transient Newmark
//!    integration, and a single-dof Duffing anchor.
//!
//! # Units
//!
//! Geometry in μm, time in μs, pressure in MPa. The consistent mass unit
//! is then 10⁻¹² kg, so densities are entered in 10⁶ kg/m³ (e.g. silicon:
//! 2.329·10⁻³). Frequencies come out in rad/μs. Polarisation is kept in
//! C/m² with electrostrictive coefficients in m⁴/C², making 𝒬P²
//! dimensionless strain — no further conversion enters.
//!
//! # Scalar genericity
//!
//! The numeric kernels (sparse/banded algebra, element kernels) are
//! generic over [`scalar::Real`] (`f32`/`f64`) and [`scalar::Scalar`]
//! (real or complex), so real assembly and complex homological solves
//! share one implementation. The pipeline itself is instantiated at
//! these aliases:

pub mod dpim;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod materials;
pub mod mesh;
pub mod oracles;
pub mod reduced;
pub mod scalar;
pub mod spectral;
pub mod statics;

pub use error::{CoreError, Result};

/// Pipeline-default real scalar.
pub type Real64 = f64;

/// Pipeline-default complex scalar.
pub type C64 = num_complex::Complex<f64>;
