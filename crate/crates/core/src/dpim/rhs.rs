//! Lower-order terms feeding each homological right-hand side.
//!
//! With all expansions stored as aggregated coefficients of canonical
//! monomials (the coefficient of `π_𝓘(z)` itself, multiplicities absorbed),
//! the chain-rule convolution in the invariance equations takes the form
//!
//! ```text
//! [π_𝓚] Σ_s (∂Ψ/∂z_s) f_s  =  Σ_s Σ_{𝓙 ⊆ 𝓚}  mult_s((𝓚∖𝓙)∪{s}) · Ψ_{(𝓚∖𝓙)∪{s}} · f_{s𝓙},
//! ```
//!
//! because `∂π_𝓘/∂z_s = mult_s(𝓘) π_{𝓘∖s}` — the multiplicity factor is the
//! price of working with distinct multisets instead of ordered index tuples.
//! Splitting the sum by the order `k = |𝓙|` of the reduced-dynamics factor
//! separates three roles: `k = 1` reproduces `σ_𝓚 Ψ_𝓚` (the eigenvalue sum
//! multiplying the unknown), `k = p` is the bordered unknown `Σ_s Ψ^{(1)}_s
//! f_{s𝓚}`, and everything in between — orders 2 through p−1 — is the known
//! convolution `μ_𝓚` (and `ν_𝓚` with the velocity mapping) assembled here.
//!
//! The nonlinear forces contribute through multiset splittings: the quadratic
//! term collects `G̃(Ψ_𝓐, Ψ_𝓑)` over all ordered pairs of sub-multisets with
//! `𝓐 ∪ 𝓑 = 𝓚`, the cubic over ordered triples.  Symmetry of the
//! contractions lets the loops visit each unordered splitting once and weight
//! it by its number of arrangements.
//!
//! The forced (non-autonomous) expansion at order `p` mixes the two series:
//! the chain rule differentiates the forced mapping along the autonomous
//! reduced dynamics and the autonomous mapping along the forced reduced
//! dynamics.  The `k = 0` term of the latter pairs the constant forced
//! coefficient `f̂^{(0)}` with the autonomous mapping of order `p + 1`, which
//! is why the forced order must stay strictly below the autonomous order.
//! One factor of the quadratic and cubic splittings lives on the forced
//! series, giving the prefactors 2 and 3.
//!
//! All functions here are pure bookkeeping over already-solved coefficients;
//! everything they return is independently validated against brute-force
//! polynomial expansion in the tests.

use num_complex::Complex64;

use super::homological::caxpy;
use super::monomials::{Monomial, MonomialBasis};
use super::parametrise::CoeffSet;
use super::system::SecondOrderSystem;

/// The four known lower-order contributions for one monomial: the velocity
/// and displacement chain-rule convolutions and the quadratic and cubic
/// force splittings.
pub struct RhsParts {
    /// Convolution of the displacement mapping with the reduced dynamics
    /// (enters the velocity row).
    pub mu: Vec<Complex64>,
    /// Convolution of the velocity mapping with the reduced dynamics
    /// (enters the force row through its mass image).
    pub nu: Vec<Complex64>,
    /// Quadratic force contributions of all lower-order splittings.
    pub g: Vec<Complex64>,
    /// Cubic force contributions of all lower-order splittings.
    pub h: Vec<Complex64>,
}

impl RhsParts {
    fn zeros(n: usize) -> Self {
        let zero = vec![Complex64::new(0.0, 0.0); n];
        RhsParts {
            mu: zero.clone(),
            nu: zero.clone(),
            g: zero.clone(),
            h: zero,
        }
    }
}

/// Number of distinct arrangements of three sub-multisets, for weighting one
/// canonical splitting of the cubic term.
fn triple_arrangements(a: &Monomial, b: &Monomial, c: &Monomial) -> f64 {
    if a == b && b == c {
        1.0
    } else if a == b || b == c || a == c {
        3.0
    } else {
        6.0
    }
}

/// Assembles μ, ν, G and H for one monomial of the autonomous expansion,
/// using coefficients of orders strictly below `monomial.order()`.
pub fn rhs_autonomous<S: SecondOrderSystem>(
    sys: &S,
    basis: &MonomialBasis,
    coeffs: &CoeffSet,
    monomial: &Monomial,
) -> RhsParts {
    let p = monomial.order();
    let n = sys.n_dofs();
    let two_n = basis.n_labels();
    let mut parts = RhsParts::zeros(n);

    // Chain-rule convolutions with reduced-dynamics orders 2..=p-1.
    for k in 2..p {
        for j_sub in monomial.sub_multisets(k) {
            let j_pos = basis.position(&j_sub);
            let rem = monomial
                .minus(&j_sub)
                .expect("sub-multiset enumeration must stay inside the monomial");
            for s in 0..two_n {
                let f_sj = coeffs.f[k][j_pos][s];
                if f_sj == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let src = rem.insert(s as u8);
                let weight = f_sj * src.multiplicity(s as u8) as f64;
                let src_pos = basis.position(&src);
                caxpy(&mut parts.mu, weight, &coeffs.psi[p - k + 1][src_pos]);
                caxpy(&mut parts.nu, weight, &coeffs.upsilon[p - k + 1][src_pos]);
            }
        }
    }

    // Quadratic splittings 𝓐 ∪ 𝓑 = 𝓚, each unordered pair visited once.
    for ka in 1..p {
        for a_sub in monomial.sub_multisets(ka) {
            let b_sub = monomial.minus(&a_sub).expect("splitting stays inside the monomial");
            if a_sub.labels() > b_sub.labels() {
                continue;
            }
            let factor = if a_sub == b_sub { 1.0 } else { 2.0 };
            let value = sys.quadratic(
                &coeffs.psi[ka][basis.position(&a_sub)],
                &coeffs.psi[p - ka][basis.position(&b_sub)],
            );
            caxpy(&mut parts.g, Complex64::new(factor, 0.0), &value);
        }
    }

    // Cubic splittings 𝓐 ∪ 𝓑 ∪ 𝓒 = 𝓚, canonical order 𝓐 ≤ 𝓑 ≤ 𝓒 with the
    // arrangement count as weight.  The canonical order is lexicographic on
    // the labels, not on the sizes, so all size combinations must be
    // enumerated and the filter alone picks the representative.
    for ka in 1..=p.saturating_sub(2) {
        for a_sub in monomial.sub_multisets(ka) {
            let rem_a = monomial.minus(&a_sub).expect("splitting stays inside the monomial");
            for kb in 1..p - ka {
                for b_sub in rem_a.sub_multisets(kb) {
                    if a_sub.labels() > b_sub.labels() {
                        continue;
                    }
                    let c_sub = rem_a.minus(&b_sub).expect("splitting stays inside the monomial");
                    if b_sub.labels() > c_sub.labels() {
                        continue;
                    }
                    let factor = triple_arrangements(&a_sub, &b_sub, &c_sub);
                    let value = sys.cubic(
                        &coeffs.psi[ka][basis.position(&a_sub)],
                        &coeffs.psi[kb][basis.position(&b_sub)],
                        &coeffs.psi[p - ka - kb][basis.position(&c_sub)],
                    );
                    caxpy(&mut parts.h, Complex64::new(factor, 0.0), &value);
                }
            }
        }
    }

    parts
}

/// Assembles μ̂, ν̂, Ĝ and Ĥ for one monomial of a forced-expansion branch.
///
/// `auto` must hold autonomous coefficients through order `monomial.order()+1`
/// and `branch` the forced coefficients of this harmonic through order
/// `monomial.order()-1`.  The external load contribution (the constant force
/// at order zero, the parametric-stiffness image of the autonomous mapping at
/// higher orders) is not part of this convolution and is added by the caller.
pub fn rhs_nonautonomous<S: SecondOrderSystem>(
    sys: &S,
    basis: &MonomialBasis,
    auto: &CoeffSet,
    branch: &CoeffSet,
    monomial: &Monomial,
) -> RhsParts {
    let p = monomial.order();
    let n = sys.n_dofs();
    let two_n = basis.n_labels();
    let mut parts = RhsParts::zeros(n);

    // Forced mapping differentiated along the autonomous reduced dynamics
    // (orders 2..=p; order p pairs with the forced linear coefficient).
    for k in 2..=p {
        for j_sub in monomial.sub_multisets(k) {
            let j_pos = basis.position(&j_sub);
            let rem = monomial
                .minus(&j_sub)
                .expect("sub-multiset enumeration must stay inside the monomial");
            for s in 0..two_n {
                let f_sj = auto.f[k][j_pos][s];
                if f_sj == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let src = rem.insert(s as u8);
                let weight = f_sj * src.multiplicity(s as u8) as f64;
                let src_pos = basis.position(&src);
                caxpy(&mut parts.mu, weight, &branch.psi[p - k + 1][src_pos]);
                caxpy(&mut parts.nu, weight, &branch.upsilon[p - k + 1][src_pos]);
            }
        }
    }

    // Autonomous mapping differentiated along the forced reduced dynamics
    // (orders 0..=p-1; the order-0 term reaches the autonomous order p+1).
    for k in 0..p {
        for j_sub in monomial.sub_multisets(k) {
            let j_pos = basis.position(&j_sub);
            let rem = monomial
                .minus(&j_sub)
                .expect("sub-multiset enumeration must stay inside the monomial");
            for s in 0..two_n {
                let f_sj = branch.f[k][j_pos][s];
                if f_sj == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let src = rem.insert(s as u8);
                let weight = f_sj * src.multiplicity(s as u8) as f64;
                let src_pos = basis.position(&src);
                caxpy(&mut parts.mu, weight, &auto.psi[p - k + 1][src_pos]);
                caxpy(&mut parts.nu, weight, &auto.upsilon[p - k + 1][src_pos]);
            }
        }
    }

    // Quadratic coupling between the two series: one slot autonomous, one
    // forced, hence the fixed factor of two.
    for ka in 1..=p {
        for a_sub in monomial.sub_multisets(ka) {
            let rem = monomial.minus(&a_sub).expect("splitting stays inside the monomial");
            let value = sys.quadratic(
                &auto.psi[ka][basis.position(&a_sub)],
                &branch.psi[p - ka][basis.position(&rem)],
            );
            caxpy(&mut parts.g, Complex64::new(2.0, 0.0), &value);
        }
    }

    // Cubic coupling: two autonomous slots (canonical pair, weight 2 when
    // distinct, enumerated over all size combinations) and one forced slot,
    // prefactor three for the slot choice.
    for ka in 1..p {
        for a_sub in monomial.sub_multisets(ka) {
            let rem_a = monomial.minus(&a_sub).expect("splitting stays inside the monomial");
            for kb in 1..=p - ka {
                for b_sub in rem_a.sub_multisets(kb) {
                    if a_sub.labels() > b_sub.labels() {
                        continue;
                    }
                    let c_sub = rem_a.minus(&b_sub).expect("splitting stays inside the monomial");
                    let pair_factor = if a_sub == b_sub { 1.0 } else { 2.0 };
                    let value = sys.cubic(
                        &auto.psi[ka][basis.position(&a_sub)],
                        &auto.psi[kb][basis.position(&b_sub)],
                        &branch.psi[p - ka - kb][basis.position(&c_sub)],
                    );
                    caxpy(&mut parts.h, Complex64::new(3.0 * pair_factor, 0.0), &value);
                }
            }
        }
    }

    parts
}
