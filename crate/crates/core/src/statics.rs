//! Static prestress solution and the effective operators of the
//! voltage-biased configuration.
//!
//! A polarisation loop enters the structural equations through its
//! square: the mean of P² over one drive period produces a constant
//! load F̂_P⁽⁰⁾ and a constant geometric stiffness K_P⁽⁰⁾, which bend
//! the structure into a deformed equilibrium U₀. Expanding about U₀
//! turns the original operators (K, G, H) into effective ones,
//!
//!   K̃·v   = (K − K_P⁽⁰⁾)·v + 2 G(v, U₀) + 3 H(v, U₀, U₀),
//!   G̃(a,b) = G(a, b) + 3 H(a, b, U₀),
//!
//! while H is unchanged. The oscillating part of P² contributes, per
//! harmonic j of the drive period, a complex force coefficient and a
//! parametric stiffness coefficient; the force is further shifted by
//! the static displacement, F̃_P_j = F̂_P_j + K_P_j·U₀, so that the
//! dynamic problem is written entirely in the displacement relative to
//! U₀. This module computes U₀ by a Newton iteration and packages all
//! of the above for the reduction and reference solvers.

use crate::error::{CoreError, Result};
use crate::fem::{contract_g, contract_h, piezo_unit_ops, squared_loop_spectrum, FeModel, PiezoUnitOps};
use crate::linalg::{BandMatrix, Csr};
use crate::mesh::PolarisationLoop;
use crate::scalar::Scalar;
use num_complex::Complex;
use num_traits::Zero;

/// One electrode group and the polarisation loop its voltage traverses.
#[derive(Debug, Clone)]
pub struct PiezoDrive {
    /// Unit load operators of the group (for P² = 1).
    pub ops: PiezoUnitOps,
    /// Polarisation over one drive period.
    pub polarisation: PolarisationLoop,
}

impl PiezoDrive {
    /// Assemble the unit operators of `group` and attach its loop.
    pub fn new(model: &FeModel, group: &str, polarisation: PolarisationLoop) -> Result<Self> {
        Ok(PiezoDrive {
            ops: piezo_unit_ops(model, group)?,
            polarisation,
        })
    }
}

/// Mean (period-averaged) piezoelectric loads: the constant force
/// F̂_P⁽⁰⁾ and the constant geometric stiffness K_P⁽⁰⁾.
pub fn mean_loads(model: &FeModel, drives: &[PiezoDrive]) -> Result<(Vec<f64>, Csr<f64>)> {
    let n = model.n_free();
    let mut force = vec![0.0; n];
    let mut stiffness = Csr::zeros(n, n);
    for drive in drives {
        let mean = squared_loop_spectrum(&drive.polarisation, 0)?.mean;
        for i in 0..n {
            force[i] += mean * drive.ops.force[i];
        }
        stiffness = Csr::linear_combination(&[(1.0, &stiffness), (mean, &drive.ops.stiffness)]);
    }
    Ok((force, stiffness))
}

/// Equilibrium under the mean piezoelectric load, with the effective
/// operators of the biased configuration.
#[derive(Debug, Clone)]
pub struct StaticState {
    /// Static displacement (free dofs).
    pub u0: Vec<f64>,
    /// Effective linear stiffness: tangent at U₀ minus K_P⁽⁰⁾.
    pub k_tilde: Csr<f64>,
    /// Mean parametric stiffness K_P⁽⁰⁾ (already folded into `k_tilde`).
    pub k_p0: Csr<f64>,
    /// Mean piezoelectric force F̂_P⁽⁰⁾.
    pub f_mean: Vec<f64>,
    /// Newton residual norms, starting with the unloaded guess.
    pub residual_history: Vec<f64>,
}

impl StaticState {
    /// Newton iterations taken.
    pub fn iterations(&self) -> usize {
        self.residual_history.len() - 1
    }

    /// Final residual norm.
    pub fn residual(&self) -> f64 {
        *self
            .residual_history
            .last()
            .expect("history holds at least the initial residual")
    }

    /// Effective quadratic operator G̃(a, b) = G(a, b) + 3 H(a, b, U₀).
    pub fn g_tilde<T: Scalar<R = f64>>(&self, model: &FeModel, a: &[T], b: &[T]) -> Vec<T> {
        let u0: Vec<T> = self.u0.iter().map(|&x| T::from_real(x)).collect();
        let mut g = contract_g(model, a, b);
        let h = contract_h(model, a, b, &u0);
        for (gi, hi) in g.iter_mut().zip(&h) {
            *gi += hi.scale(3.0);
        }
        g
    }
}

/// Euclidean norm.
fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solve the static problem
/// (K − K_P⁽⁰⁾)U₀ + G(U₀,U₀) + H(U₀,U₀,U₀) = F̂_P⁽⁰⁾
/// by Newton iteration with a halving line search, and assemble the
/// effective operators at the solution.
///
/// The convergence test is ‖residual‖ ≤ `tol`·‖F̂_P⁽⁰⁾‖, or absolute
/// `tol` when the mean load vanishes. An indefinite tangent along the
/// way aborts with a buckling error (stability loss is out of scope);
/// exceeding `max_iter` reports the last residual.
pub fn solve_fixed_point(
    model: &FeModel,
    drives: &[PiezoDrive],
    tol: f64,
    max_iter: usize,
) -> Result<StaticState> {
    let n = model.n_free();
    let (f_mean, k_p0) = mean_loads(model, drives)?;
    let load_norm = norm(&f_mean);
    let threshold = if load_norm > 0.0 { tol * load_norm } else { tol };

    let residual = |u: &[f64]| -> Vec<f64> {
        let mut r = model.internal_force(u);
        let coupling = k_p0.matvec(u);
        for i in 0..n {
            r[i] -= coupling[i] + f_mean[i];
        }
        r
    };

    let mut u = vec![0.0; n];
    let mut r = residual(&u);
    let mut history = vec![norm(&r)];

    while *history.last().expect("non-empty") > threshold {
        let iterations = history.len() - 1;
        let current = *history.last().expect("non-empty");
        if !current.is_finite() || iterations >= max_iter {
            return Err(CoreError::Convergence {
                context: "static Newton iteration".into(),
                iterations,
                residual: current,
            });
        }
        let tangent =
            Csr::linear_combination(&[(1.0, &model.tangent_stiffness(&u)), (-1.0, &k_p0)]);
        let bw = tangent.bandwidth();
        let mut band = BandMatrix::zeros(n, bw, bw);
        band.add_csr_scaled(&tangent, 1.0);
        let factor = band.factor_ldlt()?;
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let step = factor.solve_refined(|v| tangent.matvec(v), &rhs, 1);

        // Full Newton step, halved while the residual fails to decrease.
        let mut scale = 1.0;
        loop {
            let trial: Vec<f64> = (0..n).map(|i| u[i] + scale * step[i]).collect();
            let r_trial = residual(&trial);
            let n_trial = norm(&r_trial);
            if n_trial < current || scale <= 1.0 / 1024.0 {
                u = trial;
                r = r_trial;
                history.push(n_trial);
                break;
            }
            scale *= 0.5;
        }
    }

    let k_tilde = Csr::linear_combination(&[(1.0, &model.tangent_stiffness(&u)), (-1.0, &k_p0)]);
    Ok(StaticState {
        u0: u,
        k_tilde,
        k_p0,
        f_mean,
        residual_history: history,
    })
}

/// Oscillating piezoelectric loads, one complex coefficient pair per
/// harmonic of the drive period.
///
/// Index `j − 1` of the vectors holds the coefficient of `e^{+ijΩt}`;
/// the `e^{−ijΩt}` coefficient is its complex conjugate (the physical
/// load is real). Forces are the shifted F̃_P_j = F̂_P_j + K_P_j·U₀.
#[derive(Debug, Clone)]
pub struct HarmonicLoads {
    /// F̃_P_j for j = 1..=ĥ.
    pub forces: Vec<Vec<Complex<f64>>>,
    /// Parametric stiffness coefficients K_P_j for j = 1..=ĥ.
    pub stiffness: Vec<Csr<Complex<f64>>>,
    /// Fraction of the oscillating load power carried by harmonics ≥ 2
    /// (0 for a loop whose square is a pure fundamental).
    pub higher_harmonic_fraction: f64,
}

impl HarmonicLoads {
    pub fn n_harmonics(&self) -> usize {
        self.forces.len()
    }

    /// Force coefficient for signed harmonic `j` (`j ≠ 0`, |j| ≤ ĥ):
    /// negative `j` returns the conjugate coefficient.
    pub fn force(&self, j: i32) -> Vec<Complex<f64>> {
        let base = &self.forces[(j.unsigned_abs() as usize) - 1];
        if j > 0 {
            base.clone()
        } else {
            base.iter().map(|z| z.conj()).collect()
        }
    }

    /// Parametric stiffness coefficient for signed harmonic `j`.
    pub fn stiffness(&self, j: i32) -> Csr<Complex<f64>> {
        let base = &self.stiffness[(j.unsigned_abs() as usize) - 1];
        if j > 0 {
            base.clone()
        } else {
            base.map(|z| z.conj())
        }
    }
}

/// Fourier-decompose the oscillating piezoelectric loads about the
/// static state `u0`, keeping `n_harmonics` harmonics of the common
/// drive period.
///
/// The mean parts are excluded (they belong to the static problem);
/// each retained force harmonic includes the K_P_j·U₀ shift.
pub fn fourier_decompose_loads(
    model: &FeModel,
    drives: &[PiezoDrive],
    u0: &[f64],
    n_harmonics: usize,
) -> Result<HarmonicLoads> {
    if n_harmonics == 0 {
        return Err(CoreError::Config(
            "harmonic load decomposition requires at least one harmonic".into(),
        ));
    }
    if drives.is_empty() {
        return Err(CoreError::Config(
            "harmonic load decomposition requires at least one drive".into(),
        ));
    }
    let period = drives[0].polarisation.period();
    for drive in &drives[1..] {
        let p = drive.polarisation.period();
        if (p - period).abs() > 1e-9 * period.abs() {
            return Err(CoreError::Config(format!(
                "drive periods differ: group `{}` has period {p:.6e}, expected {period:.6e}",
                drive.ops.group
            )));
        }
    }

    let n = model.n_free();
    let u0c: Vec<Complex<f64>> = u0.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let spectra = drives
        .iter()
        .map(|d| squared_loop_spectrum(&d.polarisation, n_harmonics))
        .collect::<Result<Vec<_>>>()?;
    let complex_stiffness: Vec<Csr<Complex<f64>>> = drives
        .iter()
        .map(|d| d.ops.stiffness.map(|v| Complex::new(v, 0.0)))
        .collect();

    let mut forces = Vec::with_capacity(n_harmonics);
    let mut stiffness = Vec::with_capacity(n_harmonics);
    let mut power = vec![0.0; n_harmonics];
    for j in 1..=n_harmonics {
        let mut fj = vec![Complex::zero(); n];
        let mut terms = Vec::with_capacity(drives.len());
        for (g, drive) in drives.iter().enumerate() {
            // c·cos jθ + s·sin jθ = 2 Re[ ((c − i s)/2) e^{ijθ} ].
            let (c, s) = spectra[g].harmonics[j - 1];
            let coeff = Complex::new(c / 2.0, -s / 2.0);
            for i in 0..n {
                fj[i] += coeff * drive.ops.force[i];
            }
            terms.push((coeff, &complex_stiffness[g]));
        }
        power[j - 1] = fj.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let kj = Csr::linear_combination(&terms);
        let shift = kj.matvec(&u0c);
        for i in 0..n {
            fj[i] += shift[i];
        }
        forces.push(fj);
        stiffness.push(kj);
    }
    let total: f64 = power.iter().sum();
    let higher: f64 = power.iter().skip(1).sum();
    let higher_harmonic_fraction = if total > 0.0 { higher / total } else { 0.0 };

    Ok(HarmonicLoads {
        forces,
        stiffness,
        higher_harmonic_fraction,
    })
}

/// Render a free-dof displacement as CSV `node,ux,uy,uz` over all mesh
/// nodes (constrained components zero), 1-based node ids.
pub fn displacement_csv(model: &FeModel, u: &[f64]) -> String {
    let full = model.dofs.expand(u);
    let mut out = String::from("node,ux,uy,uz\n");
    for node in 0..model.mesh.n_nodes() {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e}\n",
            node + 1,
            full[3 * node],
            full[3 * node + 1],
            full[3 * node + 2]
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{ElasticityTensor, Material, MaterialMap};
    use crate::mesh::{generate_beam_mesh, BeamMeshSpec};

    /// Coarse clamped–clamped beam with PZT films, silicon core.
    fn beam_model() -> FeModel {
        let mesh = generate_beam_mesh(&BeamMeshSpec::clamped_clamped(1)).expect("mesh generates");
        let si = Material::new(
            ElasticityTensor::isotropic(160_000.0, 0.22).expect("valid isotropic"),
            2.329e-3,
        )
        .expect("valid material");
        let pzt = Material::new(
            ElasticityTensor::isotropic(70_000.0, 0.33).expect("valid isotropic"),
            7.6e-3,
        )
        .expect("valid material")
        .with_electrostriction(-0.046, 0.097);
        let mut mm = MaterialMap::new(si);
        mm.assign("pzt_a", pzt.clone());
        mm.assign("pzt_b", pzt);
        FeModel::new(mesh, &mm).expect("model builds")
    }

    /// Drive with P(θ) = p0 + p1 cos θ on one group.
    fn cosine_drive(model: &FeModel, group: &str, p0: f64, p1: f64) -> PiezoDrive {
        let lp = PolarisationLoop::from_phase_fn(1.0, 2.0, 64, |th| p0 + p1 * th.cos())
            .expect("valid loop");
        PiezoDrive::new(model, group, lp).expect("drive builds")
    }

    #[test]
    fn zero_polarisation_gives_undeformed_state() {
        let model = beam_model();
        let state = solve_fixed_point(&model, &[], 1e-10, 50).expect("static solve");
        assert_eq!(state.iterations(), 0, "no load must converge immediately");
        assert!(state.u0.iter().all(|&x| x == 0.0), "U₀ must vanish");
        let k = model.assemble_linear_stiffness();
        let defect: f64 = state
            .k_tilde
            .iter()
            .map(|(i, j, v)| (v - k.get(i, j)).abs())
            .fold(0.0, f64::max);
        assert!(defect == 0.0, "K̃ must equal K at zero load, defect {defect}");
    }

    #[test]
    fn small_load_matches_linear_solve() {
        let model = beam_model();
        let n = model.n_free();
        let drives = [cosine_drive(&model, "pzt_a", 1e-4, 2e-5)];
        let state = solve_fixed_point(&model, &drives, 1e-12, 50).expect("static solve");

        let (f_mean, k_p0) = mean_loads(&model, &drives).expect("mean loads");
        let a = Csr::linear_combination(&[
            (1.0, &model.assemble_linear_stiffness()),
            (-1.0, &k_p0),
        ]);
        let bw = a.bandwidth();
        let mut band = BandMatrix::zeros(n, bw, bw);
        band.add_csr_scaled(&a, 1.0);
        let linear = band
            .factor_ldlt()
            .expect("SPD")
            .solve_refined(|v| a.matvec(v), &f_mean, 1);

        let gap = norm(
            &state
                .u0
                .iter()
                .zip(&linear)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        let scale = norm(&linear);
        assert!(
            gap <= 1e-3 * scale,
            "nonlinear static solution must approach the linear one for a \
             tiny load: relative gap {:.3e}",
            gap / scale
        );
        assert!(scale > 0.0, "load must actually deflect the beam");
    }

    #[test]
    fn prestress_stiffens_the_beam() {
        let model = beam_model();
        // Strong bias on one face only: bends the beam and stretches it.
        let drives = [cosine_drive(&model, "pzt_a", 0.5, 0.1)];
        let state = solve_fixed_point(&model, &drives, 1e-10, 50).expect("static solve");
        assert!(
            norm(&state.u0) > 0.0,
            "biased drive must deflect the structure"
        );

        let m = model.assemble_mass();
        let k = model.assemble_linear_stiffness();
        let unbiased = crate::linalg::smallest_modes(&k, &m, 1, 1e-8, 200).expect("eigs of K");
        let biased =
            crate::linalg::smallest_modes(&state.k_tilde, &m, 1, 1e-8, 200).expect("eigs of K̃");
        assert!(
            biased.omega[0] > unbiased.omega[0],
            "prestress must raise the first eigenfrequency: {} vs {}",
            biased.omega[0],
            unbiased.omega[0]
        );
    }

    #[test]
    fn newton_converges_quadratically() {
        let model = beam_model();
        let drives = [
            cosine_drive(&model, "pzt_a", 0.4, 0.08),
            cosine_drive(&model, "pzt_b", 0.4, -0.08),
        ];
        let state = solve_fixed_point(&model, &drives, 1e-13, 50).expect("static solve");
        let h = &state.residual_history;
        assert!(
            h.len() >= 3,
            "need at least two Newton steps to observe the rate, got {}",
            h.len() - 1
        );
        // Quadratic convergence: r_{k+1}/r_k² bounded near the solution.
        // The bound is scaled by the initial residual to stay unit-free.
        let r0 = h[0];
        for k in h.len() - 2..h.len() - 1 {
            let ratio = h[k + 1] / (h[k] * h[k]);
            assert!(
                ratio * r0 < 1e3,
                "terminal contraction must be quadratic: r_{}={:.3e}, r_{}={:.3e}",
                k,
                h[k],
                k + 1,
                h[k + 1]
            );
        }
    }

    #[test]
    fn effective_stiffness_matches_operator_combination() {
        let model = beam_model();
        let n = model.n_free();
        let drives = [cosine_drive(&model, "pzt_a", 0.5, 0.1)];
        let state = solve_fixed_point(&model, &drives, 1e-10, 50).expect("static solve");

        let k = model.assemble_linear_stiffness();
        let mut rng = 0x1234_5678_9abc_def0u64;
        let mut unit = || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for _ in 0..10 {
            let v: Vec<f64> = (0..n).map(|_| unit()).collect();
            let via_matrix = state.k_tilde.matvec(&v);
            let mut explicit = k.matvec(&v);
            let kp = state.k_p0.matvec(&v);
            let g = contract_g(&model, &v, &state.u0);
            let h3 = contract_h(&model, &v, &state.u0, &state.u0);
            for i in 0..n {
                explicit[i] += 2.0 * g[i] + 3.0 * h3[i] - kp[i];
            }
            let gap: f64 = via_matrix
                .iter()
                .zip(&explicit)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let scale = norm(&via_matrix);
            assert!(
                gap <= 1e-10 * scale,
                "K̃·v must equal (K − K_P⁰)v + 2G(v,U₀) + 3H(v,U₀,U₀): gap {:.3e}",
                gap / scale
            );
        }
    }

    #[test]
    fn g_tilde_reduces_to_g_without_prestress() {
        let model = beam_model();
        let n = model.n_free();
        let state = solve_fixed_point(&model, &[], 1e-10, 50).expect("static solve");
        let a: Vec<f64> = (0..n).map(|i| ((i * 7 % 13) as f64 - 6.0) * 1e-3).collect();
        let b: Vec<f64> = (0..n).map(|i| ((i * 5 % 11) as f64 - 5.0) * 1e-3).collect();
        let gt = state.g_tilde(&model, &a, &b);
        let g = contract_g(&model, &a, &b);
        for i in 0..n {
            assert!(
                (gt[i] - g[i]).abs() <= 1e-14 * g[i].abs().max(1e-30),
                "G̃ must equal G at U₀ = 0 (entry {i})"
            );
        }
    }

    #[test]
    fn harmonic_loads_reconstruct_samples_and_conjugate_pairing() {
        let model = beam_model();
        let n = model.n_free();
        // Band-limited loops on both groups, complementary drive.
        let la = PolarisationLoop::from_phase_fn(1.0, 2.0, 64, |th| 0.3 + 0.1 * th.cos())
            .expect("valid loop");
        let lb = PolarisationLoop::from_phase_fn(1.0, 2.0, 64, |th| 0.3 - 0.1 * th.cos())
            .expect("valid loop");
        let drives = [
            PiezoDrive::new(&model, "pzt_a", la).expect("drive"),
            PiezoDrive::new(&model, "pzt_b", lb).expect("drive"),
        ];
        let zeros = vec![0.0; n];
        let loads =
            fourier_decompose_loads(&model, &drives, &zeros, 3).expect("decomposition");

        // Conjugate symmetry of signed accessors.
        let fp = loads.force(1);
        let fm = loads.force(-1);
        for i in 0..n {
            assert_eq!(fm[i], fp[i].conj(), "F_{{-1}} must be conj(F_1) at dof {i}");
        }

        // Reconstruction at sample phases matches the directly assembled
        // load to spectral (here: machine, the loops being band-limited)
        // accuracy.
        let (f_mean, _) = mean_loads(&model, &drives).expect("mean loads");
        let phases = drives[0].polarisation.phases();
        for &theta in &[phases[0], phases[9], phases[31], phases[50]] {
            let mut direct = vec![0.0; n];
            for d in &drives {
                let p = d.polarisation.value_at_phase(theta);
                for i in 0..n {
                    direct[i] += p * p * d.ops.force[i];
                }
            }
            let mut series = f_mean.clone();
            for j in 1..=loads.n_harmonics() {
                let fj = &loads.forces[j - 1];
                let phase = Complex::from_polar(1.0, j as f64 * theta);
                for i in 0..n {
                    series[i] += 2.0 * (fj[i] * phase).re;
                }
            }
            for i in 0..n {
                assert!(
                    (series[i] - direct[i]).abs() <= 1e-12 * direct[i].abs().max(1e-12),
                    "Fourier reconstruction at θ={theta} dof {i}: {} vs {}",
                    series[i],
                    direct[i]
                );
            }
        }
    }

    #[test]
    fn force_shift_equals_parametric_stiffness_times_u0() {
        let model = beam_model();
        let n = model.n_free();
        let drives = [cosine_drive(&model, "pzt_a", 0.4, 0.1)];
        let state = solve_fixed_point(&model, &drives, 1e-10, 50).expect("static solve");

        let zeros = vec![0.0; n];
        let raw = fourier_decompose_loads(&model, &drives, &zeros, 2).expect("raw loads");
        let shifted =
            fourier_decompose_loads(&model, &drives, &state.u0, 2).expect("shifted loads");
        let u0c: Vec<Complex<f64>> = state.u0.iter().map(|&x| Complex::new(x, 0.0)).collect();
        for j in 0..2 {
            let expected = raw.stiffness[j].matvec(&u0c);
            for i in 0..n {
                let gap = (shifted.forces[j][i] - raw.forces[j][i] - expected[i]).norm();
                assert!(
                    gap <= 1e-14 * expected[i].norm().max(1e-12),
                    "harmonic {} force shift must be K_P·U₀ at dof {i}",
                    j + 1
                );
            }
        }
    }

    #[test]
    fn pure_cosine_voltage_populates_two_harmonics_only() {
        // P ∝ V with V = V₀(1 + cos θ)/2 gives P² with harmonics 1 and 2
        // only; requesting a third must return (numerically) nothing there.
        let model = beam_model();
        let n = model.n_free();
        let lp = PolarisationLoop::from_phase_fn(1.0, 2.0, 64, |th| 0.2 * (1.0 + th.cos()))
            .expect("valid loop");
        let drives = [PiezoDrive::new(&model, "pzt_a", lp).expect("drive")];
        let zeros = vec![0.0; n];
        let loads = fourier_decompose_loads(&model, &drives, &zeros, 3).expect("decomposition");
        let amp = |v: &Vec<Complex<f64>>| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(amp(&loads.forces[0]) > 0.0, "fundamental must be present");
        assert!(amp(&loads.forces[1]) > 0.0, "second harmonic must be present");
        assert!(
            amp(&loads.forces[2]) <= 1e-12 * amp(&loads.forces[0]),
            "third harmonic of a squared pure-cosine drive must vanish"
        );
        assert!(
            loads.higher_harmonic_fraction > 0.0 && loads.higher_harmonic_fraction < 1.0,
            "higher-harmonic diagnostic must be a proper fraction, got {}",
            loads.higher_harmonic_fraction
        );
    }

    #[test]
    fn requesting_zero_harmonics_is_rejected() {
        let model = beam_model();
        let drives = [cosine_drive(&model, "pzt_a", 0.1, 0.05)];
        let err = fourier_decompose_loads(&model, &drives, &vec![0.0; model.n_free()], 0)
            .expect_err("zero harmonics must be rejected");
        assert!(matches!(err, CoreError::Config(_)), "got {err:?}");
    }
}
