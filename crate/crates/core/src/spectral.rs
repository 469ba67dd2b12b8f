//! Real eigensolution of the biased tangent problem and the complex
//! first-order eigentriples the manifold parametrisation is anchored to.
//!
//! The undamped problem (−ω²M + K̃)Φ = 0 has real, mass-normalised
//! modes. Casting the damped equations in first-order form
//!
//!   B = ⎡M 0⎤        A = ⎡ C  K̃⎤
//!       ⎣0 M⎦,           ⎣−M  0⎦,
//!
//! each retained master mode s contributes a conjugate pair of
//! eigenvalues Λ_s, Λ̄_s of the pencil (ΛB + A)Y = 0. Under Rayleigh
//! damping C = αM + βK̃ the damped triples follow in closed form from
//! (ω_s, Φ_s):
//!
//!   ξ_s = (α/ω_s + βω_s)/2,   Λ_s = −ξ_sω_s + iω_s√(1−ξ_s²),
//!   Y_s = [Λ_sΦ_s; Φ_s],      X_s = (Λ_s − Λ̄_s)⁻¹ [Φ_s; −Λ̄_sΦ_s],
//!
//! normalised so that XᵀBY = I and X_rᵀAY_s = −Λ_s δ_rs. Columns are
//! ordered masters-first then conjugates, so column n+s pairs with
//! column s.

use crate::error::{CoreError, Result};
use crate::linalg::{smallest_modes, Csr, RealModes};
use num_complex::Complex64;

/// Proportional (Rayleigh) damping C = α·M + β·K̃.
#[derive(Debug, Clone, Copy)]
pub struct RayleighDamping {
    pub alpha: f64,
    pub beta: f64,
}

impl RayleighDamping {
    /// Modal damping ratio ξ(ω) = (α/ω + β·ω)/2.
    pub fn ratio(&self, omega: f64) -> f64 {
        0.5 * (self.alpha / omega + self.beta * omega)
    }

    /// Assemble the damping matrix (used by the reference solvers; the
    /// eigentriples themselves are built analytically).
    pub fn matrix(&self, m: &Csr<f64>, k_tilde: &Csr<f64>) -> Csr<f64> {
        Csr::linear_combination(&[(self.alpha, m), (self.beta, k_tilde)])
    }
}

/// Smallest undamped eigenpairs of (K̃, M), mass-normalised, ascending.
pub fn solve_real_modes(
    k_tilde: &Csr<f64>,
    m: &Csr<f64>,
    n_modes: usize,
    tol: f64,
    max_iter: usize,
) -> Result<RealModes<f64>> {
    smallest_modes(k_tilde, m, n_modes, tol, max_iter)
}

/// Real modes plus the complex master eigentriples.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Undamped frequencies, ascending (rad/μs).
    pub omega: Vec<f64>,
    /// Mass-normalised mode shapes, one column per frequency.
    pub phi: Vec<Vec<f64>>,
    /// Master mode indices into `omega`/`phi` (0-based).
    pub masters: Vec<usize>,
    /// Damping model the triples were built under.
    pub damping: RayleighDamping,
    /// 2n complex eigenvalues: Λ_{m_1..m_n} then their conjugates.
    pub lambda: Vec<Complex64>,
    /// Left eigenvectors of the first-order pencil, 2N rows per column,
    /// velocity block on top; same column order as `lambda`.
    pub x: Vec<Vec<Complex64>>,
    /// Right eigenvectors, same layout.
    pub y: Vec<Vec<Complex64>>,
}

impl Spectrum {
    /// Number of master modes n (half the number of triples).
    pub fn n_masters(&self) -> usize {
        self.masters.len()
    }

    /// Master mode shape behind triple column `col` (columns s and n+s
    /// share the same real shape).
    pub fn master_shape(&self, col: usize) -> &[f64] {
        &self.phi[self.masters[col % self.n_masters()]]
    }

    /// Undamped frequency of the master behind triple column `col`.
    pub fn master_omega(&self, col: usize) -> f64 {
        self.omega[self.masters[col % self.n_masters()]]
    }
}

/// Build the complex master eigentriples from the real modes under
/// Rayleigh damping.
///
/// Fails when a master index is out of range, duplicated, or its mode
/// is overdamped (ξ_s ≥ 1), in which case no oscillatory manifold
/// exists for that mode.
pub fn build_first_order_eigentriples(
    modes: &RealModes<f64>,
    damping: RayleighDamping,
    masters: &[usize],
) -> Result<Spectrum> {
    let n_modes = modes.omega.len();
    if masters.is_empty() {
        return Err(CoreError::Config("no master modes selected".into()));
    }
    for (i, &s) in masters.iter().enumerate() {
        if s >= n_modes {
            return Err(CoreError::Config(format!(
                "master mode {} requested but only {n_modes} modes were solved",
                s + 1
            )));
        }
        if masters[..i].contains(&s) {
            return Err(CoreError::Config(format!(
                "master mode {} selected twice",
                s + 1
            )));
        }
    }

    let n = masters.len();
    let big_n = modes.phi.nrows();
    let phi_columns: Vec<Vec<f64>> = (0..n_modes)
        .map(|j| modes.phi.column(j).iter().copied().collect())
        .collect();
    let mut lambda = vec![Complex64::new(0.0, 0.0); 2 * n];
    let mut x = vec![vec![Complex64::new(0.0, 0.0); 2 * big_n]; 2 * n];
    let mut y = vec![vec![Complex64::new(0.0, 0.0); 2 * big_n]; 2 * n];

    for (s, &mode) in masters.iter().enumerate() {
        let omega = modes.omega[mode];
        let xi = damping.ratio(omega);
        if xi >= 1.0 {
            return Err(CoreError::Config(format!(
                "master mode {} is overdamped: damping ratio {xi:.3} ≥ 1",
                mode + 1
            )));
        }
        let lam = Complex64::new(-xi * omega, omega * (1.0 - xi * xi).sqrt());
        let a = (lam - lam.conj()).inv();
        let phi = &phi_columns[mode];
        for (i, &p) in phi.iter().enumerate() {
            // Right: velocity block Λφ over displacement block φ.
            y[s][i] = lam * p;
            y[s][big_n + i] = Complex64::new(p, 0.0);
            // Left: φ over −Λ̄φ, scaled to make XᵀBY the identity.
            x[s][i] = a * p;
            x[s][big_n + i] = -a * lam.conj() * p;
        }
        lambda[s] = lam;
        lambda[n + s] = lam.conj();
        for i in 0..2 * big_n {
            x[n + s][i] = x[s][i].conj();
            y[n + s][i] = y[s][i].conj();
        }
    }

    Ok(Spectrum {
        omega: modes.omega.clone(),
        phi: phi_columns,
        masters: masters.to_vec(),
        damping,
        lambda,
        x,
        y,
    })
}

/// Modal projection diagnostic for a parametric stiffness harmonic:
/// entries |Φ_jᵀ·K_P·Φ_i| / (ω_i·ω_j) over the solved modes. Small
/// values certify that the parametric coupling is a weak perturbation
/// of the modal model.
pub fn parametric_coupling_diagnostic(
    modes: &RealModes<f64>,
    k_p: &Csr<Complex64>,
) -> Vec<Vec<f64>> {
    let n_modes = modes.omega.len();
    let mut table = vec![vec![0.0; n_modes]; n_modes];
    for i in 0..n_modes {
        let phi_i: Vec<Complex64> = modes
            .phi
            .column(i)
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        let k_phi_i = k_p.matvec(&phi_i);
        for j in 0..n_modes {
            let bilinear: Complex64 = modes
                .phi
                .column(j)
                .iter()
                .zip(&k_phi_i)
                .map(|(&pj, &ki)| ki * pj)
                .sum();
            table[j][i] = bilinear.norm() / (modes.omega[i] * modes.omega[j]);
        }
    }
    table
}
