//! Single-degree-of-freedom Duffing anchor.
//!
//! The oscillator `ü + (ω₀/Q) u̇ + ω₀² u + γ u³ = F cos Ωt` is the one
//! nonlinear system with trusted closed-form reference results, so it is
//! fed through the exact same machinery as the finite-element models: a
//! one-dof [`DenseSystem`] plus a harmonic load table.  First-order
//! averaging gives its frequency response implicitly as
//!
//! ```text
//! a² [ (ω₀² − Ω² + ¾ γ a²)² + (ω₀ Ω / Q)² ] = F²,
//! ```
//!
//! a cubic in `a²` solved here through the companion-matrix eigenvalues —
//! no iteration, all real branches at once.  The backbone of the same
//! approximation is `Ω(a) = ω₀ + 3γa²/(8ω₀)`.

use num_complex::Complex64;

use crate::dpim::DenseSystem;
use crate::error::{CoreError, Result};
use crate::linalg::Csr;
use crate::spectral::RayleighDamping;
use crate::statics::HarmonicLoads;

/// Relative imaginary part below which a companion eigenvalue counts as a
/// real root of the averaging cubic.
const REAL_ROOT_TOL: f64 = 1e-8;

/// One-dof Duffing oscillator as a dense second-order system: unit mass,
/// stiffness ω₀², cubic coefficient γ, mass-proportional damping ω₀/Q.
pub fn duffing_fixture(omega0: f64, gamma: f64, q_factor: f64) -> DenseSystem {
    let m = Csr::identity(1);
    let k = Csr::from_triplets(1, 1, &[(0, 0, omega0 * omega0)]);
    let mut sys = DenseSystem::linear(
        m,
        k,
        RayleighDamping {
            alpha: omega0 / q_factor,
            beta: 0.0,
        },
    );
    sys.h[0][0][0][0] = gamma;
    sys
}

/// Load table for `F cos Ωt` through the piezo-forcing pathway: a single
/// harmonic with complex coefficient F/2 (the e^{+iΩt} half of the cosine)
/// and zero parametric stiffness.
pub fn duffing_loads(force: f64) -> HarmonicLoads {
    HarmonicLoads {
        forces: vec![vec![Complex64::new(force / 2.0, 0.0)]],
        stiffness: vec![Csr::zeros(1, 1)],
        higher_harmonic_fraction: 0.0,
    }
}

/// All positive steady-state amplitudes of the averaged Duffing response at
/// drive frequency `omega`, ascending (one away from resonance, three on
/// the overhung part of a hardening branch).
pub fn averaging_amplitudes(
    omega0: f64,
    gamma: f64,
    q_factor: f64,
    force: f64,
    omega: f64,
) -> Result<Vec<f64>> {
    if omega0 <= 0.0 || q_factor <= 0.0 || omega <= 0.0 {
        return Err(CoreError::Config(format!(
            "averaging response needs positive ω₀, Q and Ω, got {omega0}, {q_factor}, {omega}"
        )));
    }
    let detuning = omega0 * omega0 - omega * omega;
    let damping_sq = (omega0 * omega / q_factor).powi(2);
    // Cubic in x = a²:  (9/16)γ²x³ + (3/2)γδx² + (δ² + d²)x − F² = 0.
    let c3 = 9.0 / 16.0 * gamma * gamma;
    let c2 = 1.5 * gamma * detuning;
    let c1 = detuning * detuning + damping_sq;
    let c0 = -force * force;
    let mut roots = Vec::new();
    if gamma == 0.0 {
        // Linear oscillator: the relation is linear in a².
        roots.push(-c0 / c1);
    } else {
        let companion = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[
                -c2 / c3,
                -c1 / c3,
                -c0 / c3,
                1.0,
                0.0,
                0.0,
                0.0,
                1.0,
                0.0,
            ],
        );
        let scale = [c2 / c3, c1 / c3, c0 / c3]
            .iter()
            .fold(1.0f64, |a, b| a.max(b.abs()));
        for ev in companion.complex_eigenvalues().iter() {
            if ev.im.abs() <= REAL_ROOT_TOL * scale.max(ev.re.abs()) {
                roots.push(ev.re);
            }
        }
    }
    let mut amplitudes: Vec<f64> = roots
        .into_iter()
        .filter(|&x| x > 0.0)
        .map(f64::sqrt)
        .collect();
    amplitudes.sort_by(|a, b| a.partial_cmp(b).expect("finite amplitudes"));
    Ok(amplitudes)
}

/// Averaged backbone: oscillation frequency at amplitude `a`.
pub fn averaging_backbone(omega0: f64, gamma: f64, amplitude: f64) -> f64 {
    omega0 + 3.0 * gamma * amplitude * amplitude / (8.0 * omega0)
}

/// Peak of the averaged response: the amplitude where the branch crosses
/// its backbone, `a·ω₀Ω/Q = F` with `Ω = Ω(a)` — solved by fixed-point
/// iteration (the correction is O(γa²/ω₀²)).
pub fn averaging_peak(omega0: f64, gamma: f64, q_factor: f64, force: f64) -> (f64, f64) {
    let mut amplitude = q_factor * force / (omega0 * omega0);
    for _ in 0..50 {
        let omega = averaging_backbone(omega0, gamma, amplitude);
        amplitude = q_factor * force / (omega0 * omega);
    }
    (averaging_backbone(omega0, gamma, amplitude), amplitude)
}
