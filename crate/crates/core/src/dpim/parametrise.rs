//! Order-by-order construction of the invariant-manifold parametrisation.
//!
//! The reduction seeks polynomial mappings `U = Ψ(z)`, `U̇ = Υ(z)` from `2n`
//! complex normal coordinates (one conjugate pair per master mode) into the
//! full displacement and velocity space, together with polynomial reduced
//! dynamics `ż_s = f_s(z)`, such that trajectories of the reduced equations
//! are exact solutions of the semi-discrete equations of motion up to the
//! truncation order.  Forcing is handled by a second family of expansions,
//! one per signed drive harmonic `e^{±ij Ω t}`, whose coefficients correct
//! both the mappings and the reduced dynamics at first order in the load.
//!
//! Conventions:
//! - Coefficients are stored per canonical monomial (sorted multiset of
//!   coordinate labels, masters `0..n`, conjugates `n..2n`) and are the
//!   aggregated polynomial coefficients of `π_𝓘(z) = Π z_i`.
//! - Order one of the autonomous expansion is fixed by tangency to the
//!   master eigenspace: `Ψ^{(1)}_s = φ_s`, `Υ^{(1)}_s = Λ_s φ_s`,
//!   `f^{(1)} = diag(Λ)`.
//! - Higher orders solve one bordered system per monomial; the normal-form
//!   style keeps the reduced dynamics minimal, with nonzero `f` only on the
//!   resonant set of each monomial.
//! - The forced expansions are built at a frozen evaluation frequency Ω*
//!   (the damped frequency of the first master unless the caller chooses
//!   otherwise); sweeping the drive frequency reuses the coefficients and
//!   only changes the phase factors, which is accurate near resonance where
//!   the forced response matters.
//!
//! The coefficient bundle serialises to JSON (complex numbers as re/im
//! pairs) so a parametrisation can be stored next to its run manifest and
//! re-evaluated without redoing the solves.

use std::io::{Read as _, Write as _};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::spectral::Spectrum;
use crate::statics::HarmonicLoads;

use super::homological::{caxpy, cmatvec, lift, resonance_test, solve_homological, MasterTriples};
use super::monomials::{Monomial, MonomialBasis};
use super::rhs::{rhs_autonomous, rhs_nonautonomous};
use super::system::SecondOrderSystem;

/// Coefficients of one expansion family, indexed `[order][monomial][entry]`
/// with monomials in the enumeration order of [`MonomialBasis`].
///
/// `psi` and `upsilon` hold displacement and velocity vectors over the free
/// degrees of freedom; `f` holds reduced-dynamics coefficients over the `2n`
/// normal coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoeffSet {
    pub psi: Vec<Vec<Vec<Complex64>>>,
    pub upsilon: Vec<Vec<Vec<Complex64>>>,
    pub f: Vec<Vec<Vec<Complex64>>>,
    /// Worst relative residual among the bordered solves that filled this set.
    pub max_residual: f64,
}

impl CoeffSet {
    pub fn zeros(basis: &MonomialBasis, n_dofs: usize, two_n: usize, max_order: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let shape = |width: usize| -> Vec<Vec<Vec<Complex64>>> {
            (0..=max_order)
                .map(|p| vec![vec![zero; width]; basis.monomials(p).len()])
                .collect()
        };
        CoeffSet {
            psi: shape(n_dofs),
            upsilon: shape(n_dofs),
            f: shape(two_n),
            max_residual: 0.0,
        }
    }

    /// Highest stored order.
    pub fn max_order(&self) -> usize {
        self.psi.len() - 1
    }
}

/// One forced-expansion branch: the corrections carried by `e^{i j Ω t}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForcingBranch {
    /// Signed harmonic index j (negative for the conjugate exponential).
    pub harmonic: i32,
    /// Forcing exponent λ̂ = i j Ω* the branch was solved at.
    pub lambda_hat: Complex64,
    pub coeffs: CoeffSet,
}

/// A complete reduced-order parametrisation: autonomous manifold plus any
/// forced correction branches, with the eigendata needed to evaluate and to
/// realify the reduced dynamics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Parametrisation {
    pub n_masters: usize,
    pub n_dofs: usize,
    /// Autonomous expansion order o.
    pub order: usize,
    /// Forced expansion order q (meaningful when `forcing` is non-empty).
    pub forcing_order: usize,
    /// Frequency the forced branches were frozen at (rad/μs).
    pub omega_star: f64,
    /// Relative tolerance of the resonance test used during construction.
    pub resonance_tol: f64,
    /// First-order eigenvalues, masters then conjugates.
    pub lambda: Vec<Complex64>,
    pub autonomous: CoeffSet,
    pub forcing: Vec<ForcingBranch>,
}

/// Relative imaginary contamination allowed in evaluated physical fields.
const REALNESS_TOL: f64 = 1e-10;

/// Relative defect allowed when checking that normal coordinates come in
/// conjugate pairs.
const CONJUGACY_TOL: f64 = 1e-10;

impl Parametrisation {
    /// Monomial enumeration matching the stored coefficient layout.
    pub fn basis(&self) -> MonomialBasis {
        MonomialBasis::new(2 * self.n_masters, self.order)
    }

    /// Evaluates the autonomous mapping only: the displacement and velocity
    /// on the unforced invariant manifold at the given normal coordinates.
    pub fn evaluate_autonomous(&self, z: &[Complex64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_conjugacy(z)?;
        let (u, v) = self.accumulate_autonomous(z);
        self.realify_pair(u, v)
    }

    /// Evaluates the full mapping including the forced corrections at drive
    /// frequency `omega` and time `t`.
    ///
    /// The branch coefficients were frozen at Ω*, but the carrier phases use
    /// the actual drive frequency, matching how the reduced dynamics are
    /// swept along a response curve.
    pub fn evaluate(&self, z: &[Complex64], omega: f64, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_conjugacy(z)?;
        let (mut u, mut v) = self.accumulate_autonomous(z);
        let basis = self.basis();
        for branch in &self.forcing {
            let phase = (Complex64::new(0.0, branch.harmonic as f64 * omega) * t).exp();
            for p in 0..=branch.coeffs.max_order() {
                for (idx, monomial) in basis.monomials(p).iter().enumerate() {
                    let weight = phase * monomial.eval(z);
                    caxpy(&mut u, weight, &branch.coeffs.psi[p][idx]);
                    caxpy(&mut v, weight, &branch.coeffs.upsilon[p][idx]);
                }
            }
        }
        self.realify_pair(u, v)
    }

    fn accumulate_autonomous(&self, z: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let zero = Complex64::new(0.0, 0.0);
        let mut u = vec![zero; self.n_dofs];
        let mut v = vec![zero; self.n_dofs];
        let basis = self.basis();
        for p in 1..=self.order {
            for (idx, monomial) in basis.monomials(p).iter().enumerate() {
                let weight = monomial.eval(z);
                caxpy(&mut u, weight, &self.autonomous.psi[p][idx]);
                caxpy(&mut v, weight, &self.autonomous.upsilon[p][idx]);
            }
        }
        (u, v)
    }

    fn check_conjugacy(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != 2 * self.n_masters {
            return Err(CoreError::Dimension(format!(
                "expected {} normal coordinates (masters then conjugates), got {}",
                2 * self.n_masters,
                z.len()
            )));
        }
        for s in 0..self.n_masters {
            let defect = (z[self.n_masters + s] - z[s].conj()).norm();
            if defect > CONJUGACY_TOL * (1.0 + z[s].norm()) {
                return Err(CoreError::Config(format!(
                    "normal coordinates must come in conjugate pairs: coordinate {} deviates from \
                     the conjugate of coordinate {} by {:.3e}",
                    self.n_masters + s + 1,
                    s + 1,
                    defect
                )));
            }
        }
        Ok(())
    }

    fn realify_pair(&self, u: Vec<Complex64>, v: Vec<Complex64>) -> Result<(Vec<f64>, Vec<f64>)> {
        let re_norm = u
            .iter()
            .chain(v.iter())
            .map(|c| c.re * c.re)
            .sum::<f64>()
            .sqrt();
        let im_norm = u
            .iter()
            .chain(v.iter())
            .map(|c| c.im * c.im)
            .sum::<f64>()
            .sqrt();
        if im_norm > REALNESS_TOL * re_norm.max(f64::MIN_POSITIVE) {
            return Err(CoreError::Config(format!(
                "mapping evaluation produced a non-real field (imaginary residue {:.3e} of {:.3e}) — \
                 the coefficient bundle or the normal coordinates are inconsistent",
                im_norm, re_norm
            )));
        }
        Ok((
            u.into_iter().map(|c| c.re).collect(),
            v.into_iter().map(|c| c.re).collect(),
        ))
    }

    /// Writes the coefficient bundle as JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)
            .map_err(|e| CoreError::Config(format!("coefficient bundle serialisation: {e}")))?;
        let mut file = std::fs::File::create(path)?;
        file.write_all(json.as_bytes())?;
        Ok(())
    }

    /// Reads a coefficient bundle written by [`Parametrisation::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let mut json = String::new();
        std::fs::File::open(path)?.read_to_string(&mut json)?;
        serde_json::from_str(&json).map_err(|e| CoreError::Parse {
            line: 0,
            msg: format!("coefficient bundle: {e}"),
        })
    }
}

/// Builds the autonomous parametrisation to the requested order.
///
/// Order one is the master eigenspace; each higher order solves one bordered
/// system per monomial, with the right-hand side assembled from all lower
/// orders.  The resonance test with relative tolerance `resonance_tol`
/// decides which reduced-dynamics coefficients are kept (normal-form style:
/// all others are zero).
pub fn parametrise_autonomous<S: SecondOrderSystem>(
    sys: &S,
    spectrum: &Spectrum,
    order: usize,
    resonance_tol: f64,
) -> Result<Parametrisation> {
    if order < 1 {
        return Err(CoreError::Config(
            "the autonomous expansion order must be at least one".to_string(),
        ));
    }
    let n_masters = spectrum.n_masters();
    if n_masters == 0 {
        return Err(CoreError::Config(
            "at least one master mode is required".to_string(),
        ));
    }
    let two_n = 2 * n_masters;
    let n = sys.n_dofs();
    let basis = MonomialBasis::new(two_n, order);
    let masters = MasterTriples::new(sys, spectrum);
    let mut coeffs = CoeffSet::zeros(&basis, n, two_n, order);

    // Order one: tangency to the master eigenspace.
    for s in 0..two_n {
        let idx = basis.position(&Monomial::new(vec![s as u8]));
        let lambda = masters.lambda[s];
        coeffs.psi[1][idx] = lift(&masters.phi[s]);
        coeffs.upsilon[1][idx] = masters.phi[s].iter().map(|&v| lambda * v).collect();
        coeffs.f[1][idx][s] = lambda;
    }

    for p in 2..=order {
        for (idx, monomial) in basis.monomials(p).iter().enumerate() {
            let parts = rhs_autonomous(sys, &basis, &coeffs, monomial);
            let sigma: Complex64 = monomial
                .labels()
                .iter()
                .map(|&l| masters.lambda[l as usize])
                .sum();
            // E = -Mν - G - H.
            let m_nu = cmatvec(sys.mass(), &parts.nu);
            let e_top: Vec<Complex64> = (0..n)
                .map(|i| -m_nu[i] - parts.g[i] - parts.h[i])
                .collect();
            let resonant = resonance_test(sigma, &masters.lambda, resonance_tol);
            let label = format!("{monomial}");
            let sol = solve_homological(sys, &masters, sigma, &e_top, &parts.mu, &resonant, &label)?;
            coeffs.max_residual = coeffs.max_residual.max(sol.residual);
            coeffs.psi[p][idx] = sol.psi;
            coeffs.upsilon[p][idx] = sol.upsilon;
            coeffs.f[p][idx] = sol.f;
        }
    }

    Ok(Parametrisation {
        n_masters,
        n_dofs: n,
        order,
        forcing_order: 0,
        omega_star: 0.0,
        resonance_tol,
        lambda: masters.lambda.clone(),
        autonomous: coeffs,
        forcing: Vec::new(),
    })
}

/// Appends the forced-expansion branches to an autonomous parametrisation.
///
/// One branch is solved per signed harmonic of the drive, each to order
/// `forcing_order`, at the frozen evaluation frequency `omega_star`.  The
/// forced order must stay strictly below the autonomous order: the order-p
/// forced right-hand side differentiates the order p+1 autonomous mapping.
pub fn parametrise_nonautonomous<S: SecondOrderSystem>(
    sys: &S,
    spectrum: &Spectrum,
    param: &mut Parametrisation,
    loads: &HarmonicLoads,
    forcing_order: usize,
    omega_star: f64,
) -> Result<()> {
    if forcing_order >= param.order {
        return Err(CoreError::Config(format!(
            "forced expansion order {forcing_order} must stay strictly below the autonomous \
             order {}: the order-p forced right-hand side differentiates the order p+1 \
             autonomous mapping",
            param.order
        )));
    }
    if !(omega_star.is_finite() && omega_star > 0.0) {
        return Err(CoreError::Config(format!(
            "the frozen evaluation frequency must be positive, got {omega_star}"
        )));
    }
    let n = sys.n_dofs();
    let load_len = loads.forces.first().map(Vec::len).unwrap_or(0);
    if load_len != n {
        return Err(CoreError::Dimension(format!(
            "harmonic load vectors have {load_len} entries but the system has {n} degrees of freedom"
        )));
    }
    let two_n = 2 * param.n_masters;
    let basis = param.basis();
    let masters = MasterTriples::new(sys, spectrum);

    param.forcing.clear();
    param.forcing_order = forcing_order;
    param.omega_star = omega_star;

    for h in 1..=loads.n_harmonics() {
        for sign in [1i32, -1i32] {
            let j = sign * h as i32;
            let lambda_hat = Complex64::new(0.0, j as f64 * omega_star);
            let force = loads.force(j);
            let k_j = loads.stiffness(j);
            let mut coeffs = CoeffSet::zeros(&basis, n, two_n, forcing_order);

            for p in 0..=forcing_order {
                for (idx, monomial) in basis.monomials(p).iter().enumerate() {
                    let parts = rhs_nonautonomous(sys, &basis, &param.autonomous, &coeffs, monomial);
                    let sigma: Complex64 = lambda_hat
                        + monomial
                            .labels()
                            .iter()
                            .map(|&l| masters.lambda[l as usize])
                            .sum::<Complex64>();
                    // External load: the drive force itself at order zero,
                    // the parametric-stiffness image of the autonomous
                    // mapping above.
                    let f_ext: Vec<Complex64> = if p == 0 {
                        force.clone()
                    } else {
                        k_j.matvec(&param.autonomous.psi[p][idx])
                    };
                    let m_nu = cmatvec(sys.mass(), &parts.nu);
                    let e_top: Vec<Complex64> = (0..n)
                        .map(|i| -m_nu[i] - parts.g[i] - parts.h[i] + f_ext[i])
                        .collect();
                    let resonant = resonance_test(sigma, &masters.lambda, param.resonance_tol);
                    let label = format!("e^({j:+}iΩt)·{monomial}");
                    let sol =
                        solve_homological(sys, &masters, sigma, &e_top, &parts.mu, &resonant, &label)?;
                    coeffs.max_residual = coeffs.max_residual.max(sol.residual);
                    coeffs.psi[p][idx] = sol.psi;
                    coeffs.upsilon[p][idx] = sol.upsilon;
                    coeffs.f[p][idx] = sol.f;
                }
            }

            param.forcing.push(ForcingBranch {
                harmonic: j,
                lambda_hat,
                coeffs,
            });
        }
    }
    Ok(())
}
