//! Realification of the reduced model.
//!
//! The parametrisation delivers complex reduced dynamics `ż_s = f_s(z) +
//! Σ_j e^{ijΩt} f̂_{sj}(z)` on conjugate coordinate pairs `z_{n+s} = z̄_s`.
//! For time integration and continuation a real vector field is preferable,
//! so each pair is replaced by real coordinates through
//!
//! ```text
//! z_s = (a_s − i b_s) / √2,
//! ```
//!
//! giving `ȧ_s = (f_s + f_{n+s})/√2` and `ḃ_s = i (f_s − f_{n+s})/√2`.  When
//! the coefficients are conjugate-symmetric these combinations have real
//! polynomial coefficients in `(a, b)` — the imaginary residue left after the
//! substitution is a direct measure of symmetry violation and is rejected
//! above a tight threshold.  The linear block of each pair realifies to
//! `[[Re Λ, Im Λ], [−Im Λ, Re Λ]]`, so the origin keeps the eigenvalues
//! `Re Λ ± i Im Λ`.
//!
//! Forced terms realify per drive harmonic: the branches `+j` and `−j`
//! combine into `cos(jΩt)` and `sin(jΩt)` components with real coefficients,
//! again with the residue check standing in for the conjugate pairing of the
//! two branches.
//!
//! Physical observables never read the normal coordinates directly: the
//! manifold geometry matters at finite amplitude, so [`MappingObservable`]
//! extracts one displacement row of the full mapping (autonomous and forced
//! parts) and evaluates it along reduced trajectories.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::dpim::monomials::{Monomial, MonomialBasis};
use crate::dpim::parametrise::Parametrisation;
use crate::error::{CoreError, Result};

/// Imaginary residue allowed in realified coefficients, relative to the
/// largest coefficient magnitude of the table it appears in.
pub const REALIFICATION_TOL: f64 = 1e-10;

/// Real cos/sin forcing polynomials for one drive harmonic `j ≥ 1`.
///
/// The field contribution is `cos(jΩt)·C(a,b) + sin(jΩt)·S(a,b)`, with
/// coefficients stored as `[order][monomial][coordinate]` over the real
/// monomial basis.
#[derive(Clone, Debug)]
pub struct HarmonicDrive {
    pub harmonic: usize,
    pub cos: Vec<Vec<Vec<f64>>>,
    pub sin: Vec<Vec<Vec<f64>>>,
}

/// The reduced model in real coordinates `(a_1..a_n, b_1..b_n)`.
///
/// `autonomous[p][m][c]` is the coefficient of real monomial `m` of order `p`
/// in the equation for coordinate `c`; labels `0..n` are the `a`s and
/// `n..2n` the `b`s, sharing the combinatorics of the complex basis.
#[derive(Clone, Debug)]
pub struct RealizedRom {
    pub n_masters: usize,
    pub order: usize,
    pub forcing_order: usize,
    /// Drive frequency the forced coefficients were computed at.
    pub omega_star: f64,
    /// Master eigenvalues; the linear block of the field realifies these.
    pub lambda: Vec<Complex64>,
    pub autonomous: Vec<Vec<Vec<f64>>>,
    pub drives: Vec<HarmonicDrive>,
}

impl RealizedRom {
    /// Monomial basis of the real coordinates (same combinatorics as the
    /// complex one: `2 n_masters` labels up to the autonomous order).
    pub fn basis(&self) -> MonomialBasis {
        MonomialBasis::new(2 * self.n_masters, self.order)
    }

    /// Field value at real coordinates `y` and drive phase `theta = Ωt`,
    /// with the forcing scaled by `eps`.
    pub fn eval_field(&self, basis: &MonomialBasis, y: &[f64], theta: f64, eps: f64) -> Vec<f64> {
        let two_n = 2 * self.n_masters;
        let mut out = vec![0.0; two_n];
        for p in 1..=self.order {
            for (idx, monomial) in basis.monomials(p).iter().enumerate() {
                let weight = eval_real(monomial, y);
                if weight != 0.0 {
                    for c in 0..two_n {
                        out[c] += weight * self.autonomous[p][idx][c];
                    }
                }
            }
        }
        if eps != 0.0 {
            for drive in &self.drives {
                let phase = drive.harmonic as f64 * theta;
                let (sin_w, cos_w) = (eps * phase.sin(), eps * phase.cos());
                for p in 0..=self.forcing_order {
                    for (idx, monomial) in basis.monomials(p).iter().enumerate() {
                        let weight = eval_real(monomial, y);
                        if weight != 0.0 {
                            for c in 0..two_n {
                                out[c] += weight
                                    * (cos_w * drive.cos[p][idx][c] + sin_w * drive.sin[p][idx][c]);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Copy with the linear damping of every pair removed: the diagonal
    /// `Re Λ` entries of each realified linear block are set to zero while
    /// all nonlinear coefficients are kept.  This is the conservative field
    /// whose periodic orbits trace the backbone.
    pub fn zero_linear_damping(&self) -> RealizedRom {
        let mut rom = self.clone();
        let basis = self.basis();
        for s in 0..self.n_masters {
            let a_pos = basis.position(&Monomial::new(vec![s as u8]));
            let b_pos = basis.position(&Monomial::new(vec![(self.n_masters + s) as u8]));
            rom.autonomous[1][a_pos][s] = 0.0;
            rom.autonomous[1][b_pos][self.n_masters + s] = 0.0;
        }
        rom
    }
}

/// Product of the coordinates named by a real monomial.
pub(crate) fn eval_real(monomial: &Monomial, y: &[f64]) -> f64 {
    monomial
        .labels()
        .iter()
        .map(|&l| y[l as usize])
        .product()
}

/// Expands one complex monomial under `z_s = (a_s − i b_s)/√2`,
/// `z̄_s = (a_s + i b_s)/√2` into real monomials with complex weights.
fn realify_monomial(labels: &[u8], n_masters: usize) -> Vec<(Monomial, Complex64)> {
    let n = n_masters as u8;
    let mut acc: BTreeMap<Monomial, Complex64> = BTreeMap::new();
    acc.insert(Monomial::new(vec![]), Complex64::new(1.0, 0.0));
    for &label in labels {
        let (pair, b_weight) = if label < n {
            (label, Complex64::new(0.0, -FRAC_1_SQRT_2))
        } else {
            (label - n, Complex64::new(0.0, FRAC_1_SQRT_2))
        };
        let mut next: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (monomial, weight) in &acc {
            *next.entry(monomial.insert(pair)).or_default() +=
                weight * Complex64::new(FRAC_1_SQRT_2, 0.0);
            *next.entry(monomial.insert(n + pair)).or_default() += weight * b_weight;
        }
        acc = next;
    }
    acc.into_iter().collect()
}

/// Strips the imaginary parts of an accumulated coefficient table, failing
/// when the residue exceeds [`REALIFICATION_TOL`] relative to the table's
/// largest coefficient.
fn take_real(table: Vec<Vec<Vec<Complex64>>>, what: &str) -> Result<Vec<Vec<Vec<f64>>>> {
    let scale = table
        .iter()
        .flatten()
        .flatten()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    let residue = table
        .iter()
        .flatten()
        .flatten()
        .map(|c| c.im.abs())
        .fold(0.0, f64::max);
    if residue > REALIFICATION_TOL * scale {
        return Err(CoreError::Config(format!(
            "conjugate symmetry violated: {what} has imaginary residue {residue:.3e} \
             against coefficient scale {scale:.3e}"
        )));
    }
    Ok(table
        .into_iter()
        .map(|order| order.into_iter().map(|m| m.iter().map(|c| c.re).collect()).collect())
        .collect())
}

/// Realifies the reduced dynamics of a parametrisation.
///
/// Requires conjugate-symmetric coefficients: the autonomous series must be
/// invariant under the label swap `z ↔ z̄` and the forced branches must come
/// in `±j` pairs; violations surface as an imaginary residue above
/// [`REALIFICATION_TOL`].
pub fn realify(param: &Parametrisation) -> Result<RealizedRom> {
    let n = param.n_masters;
    let two_n = 2 * n;
    let order = param.order;
    let basis = param.basis();
    let inv_sqrt2 = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let i_unit = Complex64::new(0.0, 1.0);

    let zeros: Vec<Vec<Vec<Complex64>>> = (0..=order)
        .map(|p| vec![vec![Complex64::new(0.0, 0.0); two_n]; basis.monomials(p).len()])
        .collect();

    let mut autonomous = zeros.clone();
    for p in 1..=order {
        for (idx, monomial) in basis.monomials(p).iter().enumerate() {
            let expansion = realify_monomial(monomial.labels(), n);
            for s in 0..n {
                let f_pair = (
                    param.autonomous.f[p][idx][s],
                    param.autonomous.f[p][idx][n + s],
                );
                let da = (f_pair.0 + f_pair.1) * inv_sqrt2;
                let db = i_unit * (f_pair.0 - f_pair.1) * inv_sqrt2;
                if da.norm() == 0.0 && db.norm() == 0.0 {
                    continue;
                }
                for (real_monomial, weight) in &expansion {
                    let pos = basis.position(real_monomial);
                    autonomous[p][pos][s] += da * weight;
                    autonomous[p][pos][n + s] += db * weight;
                }
            }
        }
    }
    let autonomous = take_real(autonomous, "the autonomous field")?;

    let mut harmonics: Vec<usize> = param
        .forcing
        .iter()
        .map(|b| b.harmonic.unsigned_abs() as usize)
        .collect();
    harmonics.sort_unstable();
    harmonics.dedup();
    let mut drives = Vec::with_capacity(harmonics.len());
    for j in harmonics {
        let plus = param
            .forcing
            .iter()
            .find(|b| b.harmonic == j as i32)
            .ok_or_else(|| {
                CoreError::Config(format!("drive harmonic {j} is missing its +{j} branch"))
            })?;
        let minus = param
            .forcing
            .iter()
            .find(|b| b.harmonic == -(j as i32))
            .ok_or_else(|| {
                CoreError::Config(format!("drive harmonic {j} is missing its -{j} branch"))
            })?;
        let q = param.forcing_order;
        let forced_zeros: Vec<Vec<Vec<Complex64>>> = (0..=q)
            .map(|p| vec![vec![Complex64::new(0.0, 0.0); two_n]; basis.monomials(p).len()])
            .collect();
        let mut cos_table = forced_zeros.clone();
        let mut sin_table = forced_zeros;
        for p in 0..=q {
            for (idx, monomial) in basis.monomials(p).iter().enumerate() {
                let expansion = realify_monomial(monomial.labels(), n);
                for s in 0..n {
                    let ga_plus =
                        (plus.coeffs.f[p][idx][s] + plus.coeffs.f[p][idx][n + s]) * inv_sqrt2;
                    let gb_plus = i_unit
                        * (plus.coeffs.f[p][idx][s] - plus.coeffs.f[p][idx][n + s])
                        * inv_sqrt2;
                    let ga_minus =
                        (minus.coeffs.f[p][idx][s] + minus.coeffs.f[p][idx][n + s]) * inv_sqrt2;
                    let gb_minus = i_unit
                        * (minus.coeffs.f[p][idx][s] - minus.coeffs.f[p][idx][n + s])
                        * inv_sqrt2;
                    let entries = [
                        (s, ga_plus + ga_minus, i_unit * (ga_plus - ga_minus)),
                        (n + s, gb_plus + gb_minus, i_unit * (gb_plus - gb_minus)),
                    ];
                    for (coord, cos_c, sin_c) in entries {
                        if cos_c.norm() == 0.0 && sin_c.norm() == 0.0 {
                            continue;
                        }
                        for (real_monomial, weight) in &expansion {
                            let pos = basis.position(real_monomial);
                            cos_table[p][pos][coord] += cos_c * weight;
                            sin_table[p][pos][coord] += sin_c * weight;
                        }
                    }
                }
            }
        }
        drives.push(HarmonicDrive {
            harmonic: j,
            cos: take_real(cos_table, &format!("the cosine drive of harmonic {j}"))?,
            sin: take_real(sin_table, &format!("the sine drive of harmonic {j}"))?,
        });
    }

    Ok(RealizedRom {
        n_masters: n,
        order,
        forcing_order: param.forcing_order,
        omega_star: param.omega_star,
        lambda: param.lambda[..n].to_vec(),
        autonomous,
        drives,
    })
}

/// One displacement row of the full mapping, for evaluating a physical
/// observable along reduced trajectories without touching the other dofs.
pub struct MappingObservable {
    basis: MonomialBasis,
    n_masters: usize,
    order: usize,
    forcing_order: usize,
    /// `autonomous[p][m]`: the observable's row of `Ψ` per monomial.
    autonomous: Vec<Vec<Complex64>>,
    /// Per forced branch: signed harmonic and the rows of `Ψ̂`.
    forcing: Vec<(i32, Vec<Vec<Complex64>>)>,
}

impl MappingObservable {
    pub fn new(param: &Parametrisation, dof: usize) -> Result<Self> {
        if dof >= param.n_dofs {
            return Err(CoreError::Dimension(format!(
                "observable dof {dof} is out of range for {} dofs",
                param.n_dofs
            )));
        }
        let basis = param.basis();
        let autonomous: Vec<Vec<Complex64>> = (0..=param.order)
            .map(|p| {
                (0..basis.monomials(p).len())
                    .map(|idx| param.autonomous.psi[p][idx][dof])
                    .collect()
            })
            .collect();
        let forcing = param
            .forcing
            .iter()
            .map(|branch| {
                let rows: Vec<Vec<Complex64>> = (0..=param.forcing_order)
                    .map(|p| {
                        (0..basis.monomials(p).len())
                            .map(|idx| branch.coeffs.psi[p][idx][dof])
                            .collect()
                    })
                    .collect();
                (branch.harmonic, rows)
            })
            .collect();
        Ok(MappingObservable {
            basis,
            n_masters: param.n_masters,
            order: param.order,
            forcing_order: param.forcing_order,
            autonomous,
            forcing,
        })
    }

    fn polynomial(&self, rows: &[Vec<Complex64>], max_order: usize, z: &[Complex64]) -> Complex64 {
        let mut out = Complex64::new(0.0, 0.0);
        for (p, row) in rows.iter().enumerate().take(max_order + 1) {
            for (idx, coeff) in row.iter().enumerate() {
                if coeff.norm() != 0.0 {
                    out += coeff * self.basis.monomials(p)[idx].eval(z);
                }
            }
        }
        out
    }

    /// Observable displacement from the autonomous mapping alone.
    pub fn eval_autonomous(&self, z: &[Complex64]) -> f64 {
        self.polynomial(&self.autonomous, self.order, z).re
    }

    /// Observable displacement including the forced mapping at drive phase
    /// `theta = Ωt`, with the drive scaled by `eps`.
    pub fn eval(&self, z: &[Complex64], theta: f64, eps: f64) -> f64 {
        let mut out = self.polynomial(&self.autonomous, self.order, z);
        if eps != 0.0 {
            for (harmonic, rows) in &self.forcing {
                let phase = Complex64::new(0.0, f64::from(*harmonic) * theta).exp();
                out += phase * self.polynomial(rows, self.forcing_order, z) * eps;
            }
        }
        out.re
    }

    /// Normal coordinates of one conjugate pair from real coordinates.
    pub fn lift(&self, y: &[f64]) -> Vec<Complex64> {
        let n = self.n_masters;
        let mut z = vec![Complex64::new(0.0, 0.0); 2 * n];
        for s in 0..n {
            z[s] = Complex64::new(y[s], -y[n + s]) * FRAC_1_SQRT_2;
            z[n + s] = z[s].conj();
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpim::oracle::random_cubic_system;
    use crate::dpim::parametrise::{
        parametrise_autonomous, parametrise_nonautonomous, Parametrisation,
    };
    use crate::dpim::system::DenseSystem;
    use crate::linalg::Csr;
    use crate::spectral::{
        build_first_order_eigentriples, solve_real_modes, RayleighDamping, Spectrum,
    };
    use crate::statics::HarmonicLoads;

    fn spectrum_of(sys: &DenseSystem, masters: &[usize]) -> Spectrum {
        let n = sys.m.n_rows();
        let modes = solve_real_modes(&sys.k, &sys.m, n, 1e-12, 500).expect("modes");
        build_first_order_eigentriples(&modes, sys.damping, masters).expect("triples")
    }

    fn forced_random_param() -> (DenseSystem, Parametrisation) {
        let sys = random_cubic_system(47, 0.02, 1e-3);
        let spectrum = spectrum_of(&sys, &[0]);
        let mut param = parametrise_autonomous(&sys, &spectrum, 5, 1e-2).expect("parametrise");
        let loads = HarmonicLoads {
            forces: vec![vec![
                Complex64::new(0.2, -0.1),
                Complex64::new(0.05, 0.15),
                Complex64::new(-0.1, 0.0),
            ]],
            stiffness: vec![Csr::zeros(3, 3)],
            higher_harmonic_fraction: 0.0,
        };
        parametrise_nonautonomous(&sys, &spectrum, &mut param, &loads, 3, spectrum.lambda[0].im)
            .expect("forced expansion");
        (sys, param)
    }

    #[test]
    fn linear_block_realifies_to_the_rotation_damping_form() {
        let sys = DenseSystem::linear(
            Csr::identity(1),
            Csr::from_triplets(1, 1, &[(0, 0, 9.0)]),
            RayleighDamping {
                alpha: 0.06,
                beta: 0.0,
            },
        );
        let spectrum = spectrum_of(&sys, &[0]);
        let param = parametrise_autonomous(&sys, &spectrum, 3, 1e-2).expect("parametrise");
        let rom = realify(&param).expect("realify");
        let basis = rom.basis();
        let a_pos = basis.position(&Monomial::new(vec![0]));
        let b_pos = basis.position(&Monomial::new(vec![1]));
        let lambda = rom.lambda[0];
        let block = [
            (rom.autonomous[1][a_pos][0], lambda.re),
            (rom.autonomous[1][b_pos][0], lambda.im),
            (rom.autonomous[1][a_pos][1], -lambda.im),
            (rom.autonomous[1][b_pos][1], lambda.re),
        ];
        for (got, want) in block {
            assert!(
                (got - want).abs() <= 1e-12 * lambda.norm(),
                "linear block entry {got} must equal {want}"
            );
        }
    }

    /// Defining property of the realification: at conjugate-consistent points
    /// the real field equals `(√2 Re f, −√2 Im f)` of the complex reduced
    /// dynamics, forced terms included.
    #[test]
    fn realified_field_matches_the_complex_dynamics_numerically() {
        let (_, param) = forced_random_param();
        let rom = realify(&param).expect("realify");
        let basis = rom.basis();
        let cbasis = param.basis();
        for (trial, &(a, b, theta)) in [
            (0.13_f64, -0.27_f64, 0.0_f64),
            (0.3, 0.05, 1.1),
            (-0.2, 0.33, 4.4),
        ]
        .iter()
        .enumerate()
        {
            let z1 = Complex64::new(a, -b) * FRAC_1_SQRT_2;
            let z = [z1, z1.conj()];
            let mut f = Complex64::new(0.0, 0.0);
            for p in 1..=param.order {
                for (idx, monomial) in cbasis.monomials(p).iter().enumerate() {
                    f += param.autonomous.f[p][idx][0] * monomial.eval(&z);
                }
            }
            for branch in &param.forcing {
                let phase = Complex64::new(0.0, f64::from(branch.harmonic) * theta).exp();
                for p in 0..=param.forcing_order {
                    for (idx, monomial) in cbasis.monomials(p).iter().enumerate() {
                        f += phase * branch.coeffs.f[p][idx][0] * monomial.eval(&z);
                    }
                }
            }
            let field = rom.eval_field(&basis, &[a, b], theta, 1.0);
            let expected = [2f64.sqrt() * f.re, -(2f64.sqrt()) * f.im];
            for c in 0..2 {
                assert!(
                    (field[c] - expected[c]).abs() <= 1e-12 * (1.0 + expected[c].abs()),
                    "trial {trial}: realified coordinate {c} gives {} against {}",
                    field[c],
                    expected[c]
                );
            }
        }
    }

    #[test]
    fn duffing_normal_form_realifies_to_the_amplitude_phase_form() {
        // ż = λz + iγ'z²z̄ in polar coordinates is ρ̇ = ρ Re λ,
        // θ̇ = Im λ + γ'ρ²; realified, the cubic terms at (a, 0) must reduce
        // to ȧ = Re λ·a, ḃ = −(Im λ + γ'a²/2)·a since ρ² = a²/2 there.
        let gamma_prime = 0.7;
        let lambda = Complex64::new(-0.01, 2.0);
        let basis = MonomialBasis::new(2, 3);
        let mut param = Parametrisation {
            n_masters: 1,
            n_dofs: 1,
            order: 3,
            forcing_order: 0,
            omega_star: 0.0,
            resonance_tol: 1e-2,
            lambda: vec![lambda, lambda.conj()],
            autonomous: crate::dpim::parametrise::CoeffSet::zeros(&basis, 1, 2, 3),
            forcing: vec![],
        };
        let z_pos = basis.position(&Monomial::new(vec![0]));
        let zbar_pos = basis.position(&Monomial::new(vec![1]));
        param.autonomous.f[1][z_pos][0] = lambda;
        param.autonomous.f[1][zbar_pos][1] = lambda.conj();
        let res_pos = basis.position(&Monomial::new(vec![0, 0, 1]));
        let res_conj = basis.position(&Monomial::new(vec![0, 1, 1]));
        param.autonomous.f[3][res_pos][0] = Complex64::new(0.0, gamma_prime);
        param.autonomous.f[3][res_conj][1] = Complex64::new(0.0, -gamma_prime);

        let rom = realify(&param).expect("realify");
        let rbasis = rom.basis();
        for &a in &[0.1, 0.4, 1.0] {
            let field = rom.eval_field(&rbasis, &[a, 0.0], 0.0, 0.0);
            let rho_sq = a * a / 2.0;
            assert!(
                (field[0] - lambda.re * a).abs() <= 1e-12,
                "radial rate at (a, 0) must be the damping rate times a"
            );
            let expected_b = -(lambda.im + gamma_prime * rho_sq) * a;
            assert!(
                (field[1] - expected_b).abs() <= 1e-12 * expected_b.abs(),
                "phase rate at (a, 0) must carry the amplitude-dependent frequency: \
                 got {}, expected {expected_b}",
                field[1]
            );
        }
    }

    #[test]
    fn order_zero_forcing_splits_into_cosine_and_sine_parts() {
        let sys = DenseSystem::linear(
            Csr::identity(1),
            Csr::from_triplets(1, 1, &[(0, 0, 4.0)]),
            RayleighDamping {
                alpha: 0.02,
                beta: 0.0,
            },
        );
        let spectrum = spectrum_of(&sys, &[0]);
        let mut param = parametrise_autonomous(&sys, &spectrum, 2, 1e-2).expect("parametrise");
        let loads = HarmonicLoads {
            forces: vec![vec![Complex64::new(0.3, -0.2)]],
            stiffness: vec![Csr::zeros(1, 1)],
            higher_harmonic_fraction: 0.0,
        };
        parametrise_nonautonomous(&sys, &spectrum, &mut param, &loads, 1, spectrum.lambda[0].im)
            .expect("forced expansion");
        let rom = realify(&param).expect("realify");
        let basis = rom.basis();
        // The constant drive term must reproduce 2 Re[e^{iθ} ĝ] exactly over
        // the whole cycle.
        let plus = param.forcing.iter().find(|b| b.harmonic == 1).expect("+1");
        let ga = (plus.coeffs.f[0][0][0] + plus.coeffs.f[0][0][1]) * FRAC_1_SQRT_2;
        for k in 0..8 {
            let theta = f64::from(k) * std::f64::consts::PI / 4.0;
            let field = rom.eval_field(&basis, &[0.0, 0.0], theta, 1.0);
            let expected = 2.0 * (Complex64::new(0.0, theta).exp() * ga).re;
            assert!(
                (field[0] - expected).abs() <= 1e-12 * (1.0 + expected.abs()),
                "constant drive must split into cos/sin parts exactly at theta {theta}"
            );
        }
    }

    #[test]
    fn symmetry_violation_is_rejected() {
        let (_, mut param) = forced_random_param();
        param.autonomous.f[3][0][0] += Complex64::new(0.1, 0.1);
        let err = realify(&param).unwrap_err();
        assert!(
            matches!(err, CoreError::Config(_)),
            "a broken conjugate pair must be rejected, got {err:?}"
        );

        let (_, mut param) = forced_random_param();
        param.forcing.retain(|b| b.harmonic != -1);
        let err = realify(&param).unwrap_err();
        assert!(
            matches!(err, CoreError::Config(_)),
            "a missing conjugate branch must be rejected, got {err:?}"
        );
    }

    #[test]
    fn observable_tracks_the_full_mapping_row() {
        let (_, param) = forced_random_param();
        let obs = MappingObservable::new(&param, 1).expect("observable");
        let y = [0.21, -0.13];
        let z = obs.lift(&y);
        assert!((z[0] - Complex64::new(0.21, 0.13) * FRAC_1_SQRT_2).norm() <= 1e-15);
        let theta = 0.8;
        let (u, _) = param.evaluate(&z, 1.0, theta).expect("mapping evaluation");
        let direct = obs.eval(&z, theta, 1.0);
        assert!(
            (direct - u[1]).abs() <= 1e-11 * (1.0 + u[1].abs()),
            "observable row {direct} must match the full mapping entry {}",
            u[1]
        );
        assert!(
            MappingObservable::new(&param, 3).is_err(),
            "an out-of-range dof must be rejected"
        );
    }
}
