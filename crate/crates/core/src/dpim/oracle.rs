//! Brute-force polynomial algebra used to verify the expansion machinery.
//!
//! Test-only.  Polynomials in the normal coordinates are stored as maps from
//! canonical multisets to coefficients, and every operation (differentiation,
//! products, matrix images, nonlinear contractions of two polynomials) is
//! performed term by term with no combinatorial shortcuts.  The production
//! code assembles the same quantities through per-order convolutions with
//! precomputed multiplicity factors; agreement between the two routes is the
//! correctness argument for those factors.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::linalg::Csr;
use crate::spectral::RayleighDamping;

use super::monomials::{Monomial, MonomialBasis};
use super::system::{DenseSystem, SecondOrderSystem};

/// Scalar-valued polynomial: multiset → coefficient.
pub struct ScalarPoly {
    pub terms: BTreeMap<Vec<u8>, Complex64>,
}

impl ScalarPoly {
    pub fn zero() -> Self {
        ScalarPoly {
            terms: BTreeMap::new(),
        }
    }

    /// Collects the component `s` of stored reduced-dynamics coefficients
    /// over the order range `lo..=hi` (empty when `lo > hi`).
    pub fn from_reduced(
        basis: &MonomialBasis,
        f: &[Vec<Vec<Complex64>>],
        s: usize,
        lo: usize,
        hi: usize,
    ) -> Self {
        let mut poly = ScalarPoly::zero();
        for p in lo..=hi.min(f.len().saturating_sub(1)) {
            for (idx, monomial) in basis.monomials(p).iter().enumerate() {
                let value = f[p][idx][s];
                if value != Complex64::new(0.0, 0.0) {
                    *poly
                        .terms
                        .entry(monomial.labels().to_vec())
                        .or_insert(Complex64::new(0.0, 0.0)) += value;
                }
            }
        }
        poly
    }
}

/// Vector-valued polynomial: multiset → coefficient vector.
pub struct VectorPoly {
    pub n: usize,
    pub terms: BTreeMap<Vec<u8>, Vec<Complex64>>,
}

fn union(a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out.sort_unstable();
    out
}

impl VectorPoly {
    pub fn zero(n: usize) -> Self {
        VectorPoly {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// Collects stored mapping coefficients over the order range `lo..=hi`.
    pub fn from_mapping(
        basis: &MonomialBasis,
        psi: &[Vec<Vec<Complex64>>],
        lo: usize,
        hi: usize,
    ) -> Self {
        let mut poly = VectorPoly::zero(psi.iter().flat_map(|o| o.first()).map(|v| v.len()).next().unwrap_or(0));
        for p in lo..=hi.min(psi.len().saturating_sub(1)) {
            for (idx, monomial) in basis.monomials(p).iter().enumerate() {
                poly.add_term(monomial.labels(), &psi[p][idx]);
            }
        }
        poly
    }

    pub fn add_term(&mut self, labels: &[u8], coeff: &[Complex64]) {
        if self.n == 0 {
            self.n = coeff.len();
        }
        let entry = self
            .terms
            .entry(labels.to_vec())
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); coeff.len()]);
        for (e, &c) in entry.iter_mut().zip(coeff) {
            *e += c;
        }
    }

    pub fn add_poly(&mut self, other: &VectorPoly, weight: Complex64) {
        for (labels, coeff) in &other.terms {
            let entry = self
                .terms
                .entry(labels.clone())
                .or_insert_with(|| vec![Complex64::new(0.0, 0.0); coeff.len()]);
            for (e, &c) in entry.iter_mut().zip(coeff) {
                *e += weight * c;
            }
        }
        if self.n == 0 {
            self.n = other.n;
        }
    }

    pub fn scale(&mut self, weight: Complex64) {
        for coeff in self.terms.values_mut() {
            for c in coeff.iter_mut() {
                *c *= weight;
            }
        }
    }

    /// Partial derivative with respect to coordinate `s`:
    /// ∂π_𝓘/∂z_s = mult_s(𝓘) π_{𝓘∖s}.
    pub fn derivative(&self, s: u8) -> VectorPoly {
        let mut out = VectorPoly::zero(self.n);
        for (labels, coeff) in &self.terms {
            let mult = labels.iter().filter(|&&l| l == s).count();
            if mult == 0 {
                continue;
            }
            let mut reduced = labels.clone();
            let pos = reduced.iter().position(|&l| l == s).expect("label present");
            reduced.remove(pos);
            let scaled: Vec<Complex64> = coeff.iter().map(|&c| c * mult as f64).collect();
            out.add_term(&reduced, &scaled);
        }
        out
    }

    /// Product with a scalar polynomial, term by term.
    pub fn mul_scalar(&self, f: &ScalarPoly) -> VectorPoly {
        let mut out = VectorPoly::zero(self.n);
        for (la, va) in &self.terms {
            for (lb, &wb) in &f.terms {
                let scaled: Vec<Complex64> = va.iter().map(|&c| c * wb).collect();
                out.add_term(&union(la, lb), &scaled);
            }
        }
        out
    }

    /// Image under a real matrix, term by term.
    pub fn apply_matrix(&self, a: &Csr<f64>) -> VectorPoly {
        let mut out = VectorPoly::zero(self.n);
        for (labels, coeff) in &self.terms {
            let mut image = vec![Complex64::new(0.0, 0.0); a.n_rows()];
            for (i, j, v) in a.iter() {
                image[i] += coeff[j] * v;
            }
            out.add_term(labels, &image);
        }
        out
    }

    /// Image under a complex matrix, term by term.
    pub fn apply_cmatrix(&self, a: &Csr<Complex64>) -> VectorPoly {
        let mut out = VectorPoly::zero(self.n);
        for (labels, coeff) in &self.terms {
            let mut image = vec![Complex64::new(0.0, 0.0); a.n_rows()];
            for (i, j, v) in a.iter() {
                image[i] += coeff[j] * v;
            }
            out.add_term(labels, &image);
        }
        out
    }

    /// Quadratic contraction of two polynomials: every term pair contracted
    /// numerically, results collected on the union multiset.
    pub fn quadratic_of<S: SecondOrderSystem>(sys: &S, a: &VectorPoly, b: &VectorPoly) -> VectorPoly {
        let mut out = VectorPoly::zero(sys.n_dofs());
        for (la, va) in &a.terms {
            for (lb, vb) in &b.terms {
                let value = sys.quadratic(va, vb);
                out.add_term(&union(la, lb), &value);
            }
        }
        out
    }

    /// Cubic contraction of three polynomials.
    pub fn cubic_of<S: SecondOrderSystem>(
        sys: &S,
        a: &VectorPoly,
        b: &VectorPoly,
        c: &VectorPoly,
    ) -> VectorPoly {
        let mut out = VectorPoly::zero(sys.n_dofs());
        for (la, va) in &a.terms {
            for (lb, vb) in &b.terms {
                let lab = union(la, lb);
                for (lc, vc) in &c.terms {
                    let value = sys.cubic(va, vb, vc);
                    out.add_term(&union(&lab, lc), &value);
                }
            }
        }
        out
    }

    /// Coefficient of one monomial (zeros when absent).
    pub fn coeff(&self, monomial: &Monomial, n: usize) -> Vec<Complex64> {
        self.terms
            .get(monomial.labels())
            .cloned()
            .unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); n])
    }

    /// Largest coefficient norm over all terms — the natural scale for
    /// relative comparisons.
    pub fn max_coeff_norm(&self) -> f64 {
        self.terms
            .values()
            .map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient norm among terms of order at most `max_order`.
    pub fn max_coeff_norm_through(&self, max_order: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(labels, _)| labels.len() <= max_order)
            .map(|(_, v)| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Shared three-dof fixture with symmetric random quadratic and cubic
/// tensors on a well-separated linear spectrum.
pub fn random_cubic_system(seed: u64, alpha: f64, beta: f64) -> DenseSystem {
    let mut rng = StdRng::seed_from_u64(seed);
    let m = Csr::from_triplets(3, 3, &[(0, 0, 1.2), (1, 1, 0.9), (2, 2, 1.4)]);
    let k = Csr::from_triplets(
        3,
        3,
        &[
            (0, 0, 4.0),
            (1, 1, 12.0),
            (2, 2, 29.0),
            (0, 1, -0.6),
            (1, 0, -0.6),
            (1, 2, 0.4),
            (2, 1, 0.4),
        ],
    );
    let mut sys = DenseSystem::linear(m, k, RayleighDamping { alpha, beta });
    for i in 0..3 {
        for j in 0..3 {
            for l in 0..3 {
                sys.g[i][j][l] = 0.3 * rng.gen_range(-1.0..1.0);
                for p in 0..3 {
                    sys.h[i][j][l][p] = 0.3 * rng.gen_range(-1.0..1.0);
                }
            }
        }
    }
    sys.symmetrise();
    sys
}
