//! Scalar abstractions for the numerical kernels.
//!
//! Two levels of genericity are used throughout the crate:
//!
//! - [`Real`]: a floating-point type (`f32` or `f64`) over which meshes,
//!   matrices and solvers can be instantiated.
//! - [`Scalar`]: a field that is either a [`Real`] or its complex extension.
//!   The banded LU factorisation, the sparse matrix type and the finite
//!   element contraction kernels are generic over [`Scalar`], so the same
//!   code path serves real assembly and the complex-valued homological
//!   solves of the manifold parametrisation.
//!
//! The pipeline itself is instantiated at `f64` (see the crate-root
//! aliases); tolerances quoted in the module contracts assume that
//! precision.

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: the precision the engine is generic over.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Send
    + Sync
    + std::fmt::Debug
    + std::fmt::Display
    + 'static
{
    /// Lossless conversion from `f64` literals (coordinates, material
    /// constants, quadrature weights). Panics only if the target type
    /// cannot represent any finite `f64` approximation, which does not
    /// happen for `f32`/`f64`.
    fn from_f64_lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal must convert")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field scalar for linear algebra: a [`Real`] or a complex pair thereof.
///
/// Only the operations the solvers actually need are abstracted:
/// arithmetic, a modulus for pivot selection, complex conjugation and
/// mixed real×field scaling. Note that the banded solver performs a
/// *non-conjugating* (complex-symmetric capable) elimination; conjugation
/// is only used by callers checking Hermitian-type symmetries.
pub trait Scalar:
    Copy
    + NumAssign
    + std::ops::Neg<Output = Self>
    + Send
    + Sync
    + std::fmt::Debug
    + 'static
{
    /// Underlying real type.
    type R: Real;

    /// Modulus |x| (absolute value / complex magnitude), used for pivoting.
    fn modulus(self) -> Self::R;

    /// Embed a real value.
    fn from_real(r: Self::R) -> Self;

    /// Complex conjugate (identity for real types).
    fn conj(self) -> Self;

    /// Scale by a real factor.
    fn scale(self, r: Self::R) -> Self;

    /// Real part (identity for real types).
    fn real(self) -> Self::R;

    /// Imaginary part (zero for real types).
    fn imag(self) -> Self::R;
}

impl Scalar for f32 {
    type R = f32;
    fn modulus(self) -> f32 {
        self.abs()
    }
    fn from_real(r: f32) -> f32 {
        r
    }
    fn conj(self) -> f32 {
        self
    }
    fn scale(self, r: f32) -> f32 {
        self * r
    }
    fn real(self) -> f32 {
        self
    }
    fn imag(self) -> f32 {
        0.0
    }
}

impl Scalar for f64 {
    type R = f64;
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn from_real(r: f64) -> f64 {
        r
    }
    fn conj(self) -> f64 {
        self
    }
    fn scale(self, r: f64) -> f64 {
        self * r
    }
    fn real(self) -> f64 {
        self
    }
    fn imag(self) -> f64 {
        0.0
    }
}

impl<R: Real> Scalar for Complex<R> {
    type R = R;
    fn modulus(self) -> R {
        // Hypot-free magnitude: |re| + |im| would bias pivoting; use the
        // exact norm. `Complex::norm` requires `Float`, satisfied by `Real`.
        self.norm()
    }
    fn from_real(r: R) -> Self {
        Complex::new(r, R::zero())
    }
    fn conj(self) -> Self {
        Complex::new(self.re, -self.im)
    }
    fn scale(self, r: R) -> Self {
        Complex::new(self.re * r, self.im * r)
    }
    fn real(self) -> R {
        self.re
    }
    fn imag(self) -> R {
        self.im
    }
}
