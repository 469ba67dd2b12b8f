//! Bordered solves for the order-by-order manifold coefficients.
//!
//! Each monomial of the expansion yields one linear system in the unknown
//! displacement coefficient Ψ, velocity coefficient Υ and the reduced-dynamics
//! coefficients f_s.  In first-order (mass-bordered) form it reads
//!
//! ```text
//! (σ B + A) [Υ; Ψ] + Σ_s f_s B Y_s = [E; -M μ],
//! B = [[M, 0], [0, M]],   A = [[C, K̃], [-M, 0]],
//! ```
//!
//! where σ is the sum of the eigenvalues selected by the monomial (plus the
//! forcing exponent for the non-autonomous expansion), `E` collects the known
//! lower-order force terms and μ the lower-order convolution of the velocity
//! mapping.  When σ comes close to an eigenvalue Λ_s of the pencil, `σ B + A`
//! degenerates; the normal-form style keeps the corresponding f_s as an extra
//! unknown and appends the normalisation row X_sᵀ B [Υ; Ψ] = 0, which
//! regularises the system and diverts the near-resonant content into the
//! reduced dynamics.  Away from resonances all f_s are zero and the plain
//! solve applies.
//!
//! The implementation never forms the 2N×2N system.  The velocity block is
//! eliminated exactly (Υ = σΨ + Σ f_s φ_s + μ), leaving the N×N complex
//! symmetric banded matrix `D(σ) = σ²M + σC + K̃` plus one rank-one border per
//! resonant eigenvalue, condensed onto the borders by a small Schur
//! complement.  A full residual check of the first-order form guards the
//! elimination and the banded solves; its failure is reported as an error
//! rather than silently accepted.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::linalg::{BandMatrix, Csr};
use crate::spectral::Spectrum;

use super::system::SecondOrderSystem;

/// Relative residual bound enforced on every homological solve, measured on
/// the full first-order form against the norm of its right-hand side.
pub const HOMOLOGICAL_TOL: f64 = 1e-9;

/// Rounds of iterative refinement applied to each banded solve; two rounds
/// recover a backward-stable solution even close to a resonant σ.
const REFINE_ROUNDS: usize = 2;

/// Real matrix times complex vector.
pub(crate) fn cmatvec(a: &Csr<f64>, x: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.n_rows()];
    for (i, j, v) in a.iter() {
        out[i] += x[j] * v;
    }
    out
}

/// Lifts a real vector into the complex plane.
pub(crate) fn lift(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Euclidean norm of a complex vector.
pub(crate) fn cnorm(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Bilinear (non-conjugating) dot product of a real and a complex vector.
pub(crate) fn rcdot(a: &[f64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(&x, &y)| y * x).sum()
}

/// `out += w · x` for complex vectors.
pub(crate) fn caxpy(out: &mut [Complex64], w: Complex64, x: &[Complex64]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o += w * v;
    }
}

/// Eigendata of the master triples in the layout the homological solves
/// consume: one entry per first-order eigenvalue (masters then conjugates),
/// with the shared real mode shape and its mass image precomputed.
pub struct MasterTriples {
    /// First-order eigenvalues Λ_s, masters first, conjugates after.
    pub lambda: Vec<Complex64>,
    /// Real master shapes, one per column (columns s and n+s coincide).
    pub phi: Vec<Vec<f64>>,
    /// Mass images M φ_s, precomputed once.
    pub mphi: Vec<Vec<f64>>,
    /// Modal damping coefficients α + β ω_s² per column.
    pub c: Vec<f64>,
}

impl MasterTriples {
    pub fn new<S: SecondOrderSystem>(sys: &S, spectrum: &Spectrum) -> Self {
        let two_n = spectrum.lambda.len();
        let damping = spectrum.damping;
        let mut phi = Vec::with_capacity(two_n);
        let mut mphi = Vec::with_capacity(two_n);
        let mut c = Vec::with_capacity(two_n);
        for col in 0..two_n {
            let shape = spectrum.master_shape(col).to_vec();
            mphi.push(sys.mass().matvec(&shape));
            let omega = spectrum.master_omega(col);
            c.push(damping.alpha + damping.beta * omega * omega);
            phi.push(shape);
        }
        MasterTriples {
            lambda: spectrum.lambda.clone(),
            phi,
            mphi,
            c,
        }
    }

    pub fn n_triples(&self) -> usize {
        self.lambda.len()
    }
}

/// Indices of the eigenvalues whose imaginary part lies within the relative
/// tolerance of Im σ — the set of reduced-dynamics coefficients that must be
/// kept to avoid a small divisor.
///
/// Damping shifts the real parts, so only the oscillation frequencies are
/// compared; this captures both true internal resonances and the trivially
/// resonant monomials of each master.
pub fn resonance_test(sigma: Complex64, lambda: &[Complex64], rel_tol: f64) -> Vec<usize> {
    lambda
        .iter()
        .enumerate()
        .filter(|(_, l)| (sigma.im - l.im).abs() <= rel_tol * l.im.abs())
        .map(|(s, _)| s)
        .collect()
}

/// One solved manifold coefficient.
#[derive(Debug)]
pub struct BorderedSolution {
    /// Displacement coefficient Ψ.
    pub psi: Vec<Complex64>,
    /// Velocity coefficient Υ.
    pub upsilon: Vec<Complex64>,
    /// Reduced-dynamics coefficients f_s, all 2n entries (zero off the
    /// resonant set).
    pub f: Vec<Complex64>,
    /// Relative residual of the full first-order form actually achieved.
    pub residual: f64,
}

/// Solves one bordered homological system.
///
/// `e_top` is the assembled force-like right-hand side E (lower-order inertia
/// convolution, nonlinear forces and, for the forced expansion, the external
/// load), `mu` the velocity-row convolution μ, and `resonant` the output of
/// [`resonance_test`] for this σ.  `label` names the monomial in errors.
pub fn solve_homological<S: SecondOrderSystem>(
    sys: &S,
    masters: &MasterTriples,
    sigma: Complex64,
    e_top: &[Complex64],
    mu: &[Complex64],
    resonant: &[usize],
    label: &str,
) -> Result<BorderedSolution> {
    let n = sys.n_dofs();
    let two_n = masters.n_triples();
    let m = sys.mass();
    let k = sys.stiffness();
    let damping = sys.damping();
    let (alpha, beta) = (damping.alpha, damping.beta);

    let m_mu = cmatvec(m, mu);
    let rhs_scale = {
        // Norm of the stacked right-hand side [E; -Mμ] of the first-order form.
        let top: f64 = e_top.iter().map(|v| v.norm_sqr()).sum();
        let bottom: f64 = m_mu.iter().map(|v| v.norm_sqr()).sum();
        (top + bottom).sqrt()
    };
    if rhs_scale == 0.0 {
        // Nothing drives this monomial: the zero coefficient is exact.
        return Ok(BorderedSolution {
            psi: vec![Complex64::new(0.0, 0.0); n],
            upsilon: vec![Complex64::new(0.0, 0.0); n],
            f: vec![Complex64::new(0.0, 0.0); two_n],
            residual: 0.0,
        });
    }

    // D(σ) = σ²M + σC + K̃ = (σ² + ασ) M + (1 + βσ) K̃, complex symmetric and
    // banded with the stiffness sparsity.
    let sm = sigma * sigma + sigma * alpha;
    let sk = Complex64::new(1.0, 0.0) + sigma * beta;
    let bw = k.bandwidth().max(m.bandwidth());
    let mut band = BandMatrix::<Complex64>::zeros(n, bw, bw);
    band.add_csr_scaled(m, sm);
    band.add_csr_scaled(k, sk);
    let factor = band.factor().map_err(|e| match e {
        CoreError::SingularMatrix { .. } => CoreError::DegenerateMonomial {
            monomial: label.to_string(),
            msg: format!(
                "σ = {:.6e}{:+.6e}i renders the second-order operator singular \
                 and the resonant set does not absorb it",
                sigma.re, sigma.im
            ),
        },
        other => other,
    })?;
    let apply_d = |x: &[Complex64]| -> Vec<Complex64> {
        let mut out = cmatvec(m, x);
        let kx = cmatvec(k, x);
        for i in 0..n {
            out[i] = out[i] * sm + kx[i] * sk;
        }
        out
    };

    // Reduced right-hand side E - (σM + C) μ = E - (σ+α) Mμ - β K̃μ.
    let k_mu = cmatvec(k, mu);
    let mut rhs: Vec<Complex64> = e_top.to_vec();
    let s_alpha = sigma + alpha;
    for i in 0..n {
        rhs[i] -= m_mu[i] * s_alpha + k_mu[i] * beta;
    }
    let v = factor.solve_refined(apply_d, &rhs, REFINE_ROUNDS);

    // Border columns (σ + c_s + Λ_s) M φ_s and their D-preimages.
    let g: Vec<Complex64> = resonant
        .iter()
        .map(|&s| sigma + masters.c[s] + masters.lambda[s])
        .collect();
    let w: Vec<Vec<Complex64>> = resonant
        .iter()
        .map(|&s| factor.solve_refined(apply_d, &lift(&masters.mphi[s]), REFINE_ROUNDS))
        .collect();

    // Schur complement on the normalisation rows
    //   (σ - Λ̄_s) φ_sᵀ M Ψ + f_s = -φ_sᵀ M μ.
    let nr = resonant.len();
    let mut f = vec![Complex64::new(0.0, 0.0); two_n];
    if nr > 0 {
        let mut schur = nalgebra::DMatrix::<Complex64>::zeros(nr, nr);
        let mut rhs_b = nalgebra::DVector::<Complex64>::zeros(nr);
        for (row, &s) in resonant.iter().enumerate() {
            let detune = sigma - masters.lambda[s].conj();
            for (col, &r) in resonant.iter().enumerate() {
                let phi_m_w = rcdot(&masters.mphi[s], &w[col]);
                let delta = if s == r {
                    Complex64::new(1.0, 0.0)
                } else {
                    // Distinct resonant columns sharing a master shape would
                    // make the mass products overlap; the explicit product
                    // keeps the Schur system exact in that case too.
                    Complex64::new(rcdot_real(&masters.mphi[s], &masters.phi[r]), 0.0)
                };
                schur[(row, col)] = delta - detune * g[col] * phi_m_w;
            }
            rhs_b[row] = -rcdot(&masters.mphi[s], mu) - detune * rcdot(&masters.mphi[s], &v);
        }
        let solved = schur.lu().solve(&rhs_b).ok_or_else(|| CoreError::DegenerateMonomial {
            monomial: label.to_string(),
            msg: "the bordered Schur system is singular — coincident resonant eigenvalues".to_string(),
        })?;
        for (col, &s) in resonant.iter().enumerate() {
            f[s] = solved[col];
        }
    }

    // Assemble Ψ, then Υ = σΨ + Σ f_s φ_s + μ.
    let mut psi = v;
    for (col, &s) in resonant.iter().enumerate() {
        caxpy(&mut psi, -f[s] * g[col], &w[col]);
    }
    let mut upsilon: Vec<Complex64> = mu.to_vec();
    for i in 0..n {
        upsilon[i] += sigma * psi[i];
    }
    for &s in resonant {
        let fs = f[s];
        for i in 0..n {
            upsilon[i] += fs * masters.phi[s][i];
        }
    }

    // Full first-order residual: the elimination was exact in algebra, this
    // verifies it in floating point together with the banded solves.
    let m_ups = cmatvec(m, &upsilon);
    let k_ups = cmatvec(k, &upsilon);
    let k_psi = cmatvec(k, &psi);
    let m_psi = cmatvec(m, &psi);
    let mut res_sq = 0.0;
    for i in 0..n {
        // Top row: σMΥ + CΥ + K̃Ψ + Σ f_s Λ_s Mφ_s - E.
        let mut top = m_ups[i] * s_alpha + k_ups[i] * beta + k_psi[i] - e_top[i];
        // Bottom row: σMΨ - MΥ + Σ f_s Mφ_s + Mμ.
        let mut bottom = m_psi[i] * sigma - m_ups[i] + m_mu[i];
        for &s in resonant {
            top += f[s] * masters.lambda[s] * masters.mphi[s][i];
            bottom += f[s] * masters.mphi[s][i];
        }
        res_sq += top.norm_sqr() + bottom.norm_sqr();
    }
    let residual = res_sq.sqrt() / rhs_scale;
    if !residual.is_finite() || residual > HOMOLOGICAL_TOL {
        return Err(CoreError::Convergence {
            context: format!("homological solve for monomial {label}"),
            iterations: REFINE_ROUNDS,
            residual,
        });
    }

    Ok(BorderedSolution {
        psi,
        upsilon,
        f,
        residual,
    })
}

/// Plain real dot product (used for mass products between master shapes).
fn rcdot_real(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpim::system::DenseSystem;
    use crate::spectral::{build_first_order_eigentriples, solve_real_modes, RayleighDamping};

    /// Three-dof positive definite system with well-separated frequencies.
    fn small_system(alpha: f64, beta: f64) -> DenseSystem {
        let m = Csr::from_triplets(3, 3, &[(0, 0, 2.0), (1, 1, 1.0), (2, 2, 1.5)]);
        let k = Csr::from_triplets(
            3,
            3,
            &[
                (0, 0, 8.0),
                (1, 1, 3.0),
                (2, 2, 30.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 2, -0.5),
                (2, 1, -0.5),
            ],
        );
        DenseSystem::linear(m, k, RayleighDamping { alpha, beta })
    }

    fn spectrum_of(sys: &DenseSystem, masters: &[usize]) -> Spectrum {
        let modes = solve_real_modes(sys.stiffness(), sys.mass(), 3, 1e-12, 500).expect("modes");
        build_first_order_eigentriples(&modes, sys.damping(), masters).expect("triples")
    }

    fn residual_of(
        sys: &DenseSystem,
        masters: &MasterTriples,
        sigma: Complex64,
        e_top: &[Complex64],
        mu: &[Complex64],
        sol: &BorderedSolution,
    ) -> f64 {
        // Independent reassembly of the first-order residual.
        let n = sys.n_dofs();
        let damping = sys.damping();
        let m_ups = cmatvec(sys.mass(), &sol.upsilon);
        let k_ups = cmatvec(sys.stiffness(), &sol.upsilon);
        let k_psi = cmatvec(sys.stiffness(), &sol.psi);
        let m_psi = cmatvec(sys.mass(), &sol.psi);
        let m_mu = cmatvec(sys.mass(), mu);
        let mut num = 0.0;
        for i in 0..n {
            let mut top = sigma * m_ups[i]
                + damping.alpha * m_ups[i]
                + damping.beta * k_ups[i]
                + k_psi[i]
                - e_top[i];
            let mut bottom = sigma * m_psi[i] - m_ups[i] + m_mu[i];
            for s in 0..masters.n_triples() {
                top += sol.f[s] * masters.lambda[s] * masters.mphi[s][i];
                bottom += sol.f[s] * masters.mphi[s][i];
            }
            num += top.norm_sqr() + bottom.norm_sqr();
        }
        let scale: f64 = e_top.iter().map(|v| v.norm_sqr()).sum::<f64>()
            + m_mu.iter().map(|v| v.norm_sqr()).sum::<f64>();
        (num / scale).sqrt()
    }

    #[test]
    fn non_resonant_solve_satisfies_the_first_order_equations() {
        let sys = small_system(0.02, 1e-3);
        let spectrum = spectrum_of(&sys, &[0]);
        let masters = MasterTriples::new(&sys, &spectrum);
        let sigma = Complex64::new(-0.3, 0.9); // far from ±iω₁ ≈ ±1.95i
        let e: Vec<Complex64> = (0..3).map(|i| Complex64::new(1.0 + i as f64, -0.4 * i as f64)).collect();
        let mu: Vec<Complex64> = (0..3).map(|i| Complex64::new(0.1 * i as f64, 0.7)).collect();
        let resonant = resonance_test(sigma, &masters.lambda, 1e-2);
        assert!(resonant.is_empty(), "σ far from the spectrum must not be flagged resonant");
        let sol = solve_homological(&sys, &masters, sigma, &e, &mu, &resonant, "{test}").expect("solve");
        assert!(
            sol.f.iter().all(|f| f.norm() == 0.0),
            "non-resonant monomials must leave the reduced dynamics untouched"
        );
        let res = residual_of(&sys, &masters, sigma, &e, &mu, &sol);
        assert!(res <= 1e-9, "independent residual check failed: {res:.3e}");
    }

    #[test]
    fn near_resonant_solve_diverts_content_into_the_border() {
        let sys = small_system(0.02, 1e-3);
        let spectrum = spectrum_of(&sys, &[0]);
        let masters = MasterTriples::new(&sys, &spectrum);
        // Mimic the trivially resonant cubic monomial: σ = 2Λ₁ + Λ̄₁ sits a
        // damping-width away from Λ₁.
        let sigma = 2.0 * masters.lambda[0] + masters.lambda[1];
        let resonant = resonance_test(sigma, &masters.lambda, 1e-2);
        assert_eq!(resonant, vec![0], "σ ≈ Λ₁ must flag exactly the first triple");
        let e: Vec<Complex64> = (0..3).map(|i| Complex64::new(0.3 - 0.2 * i as f64, 1.1)).collect();
        let mu: Vec<Complex64> = (0..3).map(|i| Complex64::new(-0.05, 0.02 * i as f64)).collect();
        let sol = solve_homological(&sys, &masters, sigma, &e, &mu, &resonant, "{1 1 2}").expect("solve");
        assert!(
            sol.f[0].norm() > 0.0,
            "the resonant border must carry a nonzero reduced-dynamics coefficient"
        );
        let res = residual_of(&sys, &masters, sigma, &e, &mu, &sol);
        assert!(res <= 1e-9, "bordered solve residual too large: {res:.3e}");
        // The normalisation row must hold as well.
        let detune = sigma - masters.lambda[0].conj();
        let row = detune * rcdot(&masters.mphi[0], &sol.psi) + sol.f[0] + rcdot(&masters.mphi[0], mu.as_slice());
        assert!(row.norm() <= 1e-9, "normalisation row violated: {:.3e}", row.norm());
    }

    #[test]
    fn exact_resonance_without_border_is_reported_as_degenerate() {
        // Undamped system: σ = iω₁ makes D(σ) exactly singular, and with an
        // empty resonant set nothing can absorb it.
        let sys = small_system(0.0, 0.0);
        let spectrum = spectrum_of(&sys, &[0]);
        let masters = MasterTriples::new(&sys, &spectrum);
        let sigma = masters.lambda[0];
        let e = vec![Complex64::new(1.0, 0.0); 3];
        let mu = vec![Complex64::new(0.0, 0.0); 3];
        let err = solve_homological(&sys, &masters, sigma, &e, &mu, &[], "{1 1 2}").unwrap_err();
        match err {
            CoreError::DegenerateMonomial { monomial, .. } => {
                assert_eq!(monomial, "{1 1 2}", "the degeneracy report must name the monomial")
            }
            CoreError::Convergence { context, .. } => {
                assert!(
                    context.contains("{1 1 2}"),
                    "the failure report must name the monomial, got: {context}"
                )
            }
            other => panic!("expected a degeneracy or residual failure, got {other:?}"),
        }
    }

    #[test]
    fn zero_right_hand_side_returns_the_exact_zero_coefficient() {
        let sys = small_system(0.01, 1e-4);
        let spectrum = spectrum_of(&sys, &[0]);
        let masters = MasterTriples::new(&sys, &spectrum);
        let zero = vec![Complex64::new(0.0, 0.0); 3];
        let sol =
            solve_homological(&sys, &masters, Complex64::new(0.0, 3.0), &zero, &zero, &[], "{2 2}")
                .expect("zero solve");
        assert!(sol.psi.iter().all(|v| v.norm() == 0.0), "unforced monomial must stay zero");
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn resonance_test_matches_the_relative_frequency_criterion() {
        let lambda = [
            Complex64::new(-0.01, 2.0),
            Complex64::new(-0.01, -2.0),
        ];
        // Quadratic monomials of a single master: 2Λ₁, Λ₁+Λ̄₁, 2Λ̄₁ — none
        // oscillate near ±ω.
        assert!(resonance_test(2.0 * lambda[0], &lambda, 1e-2).is_empty());
        assert!(resonance_test(lambda[0] + lambda[1], &lambda, 1e-2).is_empty());
        // Cubic 2Λ₁+Λ̄₁ ≈ Λ₁ resonates with the first triple only.
        assert_eq!(resonance_test(2.0 * lambda[0] + lambda[1], &lambda, 1e-2), vec![0]);
        assert_eq!(resonance_test(lambda[0] + 2.0 * lambda[1], &lambda, 1e-2), vec![1]);
    }
}
