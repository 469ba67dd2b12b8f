//! Full-order harmonic balance with alternating frequency/time evaluation.
//!
//! The reference frequency-response solver works on the complete
//! semi-discrete system rather than the reduced model: every free degree of
//! freedom carries a truncated Fourier series in the drive phase, the
//! linear operators act harmonic-by-harmonic in closed form, and the
//! quadratic/cubic restoring forces and the time-periodic piezoelectric
//! loads are evaluated by sampling over one cycle and projecting back onto
//! the retained harmonics.  The sampling rate oversamples the highest
//! retained harmonic several times so that the tripled frequency content of
//! the cubic terms cannot alias back into the retained band.
//!
//! Newton corrections act on all `(2H+1)·ndof` coefficients at once.  The
//! Jacobian couples degrees of freedom exactly like the finite-element
//! matrices do, so with dof-major coefficient ordering it is banded with
//! bandwidth `(FE bandwidth + 1)·(2H+1)`; it is factorised with the shared
//! banded LU and recycled across iterations (and continuation points) until
//! the contraction rate degrades, which keeps the expensive sample-wise
//! tangent assembly off the hot path on smooth branch segments.  Memory
//! grows as `ndof · bandwidth · (2H+1)²`, which confines the solver to the
//! fixture-scale meshes it exists for.
//!
//! Continuation across the frequency window uses the same scaled
//! pseudo-arclength scheme as the reduced solver, including fold flags from
//! the tangent's frequency component.  Stability is not computed from
//! full-order Floquet multipliers (a `2N×2N` monodromy per point is out of
//! scale); instead the branch is post-processed so that stability toggles
//! at each fold — exact for the single-resonance branches this oracle
//! validates, where one real multiplier crosses the unit circle at each
//! saddle-node and nothing else does.  The starting point must therefore
//! lie on a stable small-amplitude segment.

use std::f64::consts::PI;

use crate::dpim::SecondOrderSystem;
use crate::error::{CoreError, Result};
use crate::linalg::{BandMatrix, BandLu, Csr};
use crate::reduced::{FrcBranch, FrcPoint};
use crate::spectral::RayleighDamping;
use crate::statics::HarmonicLoads;

/// Step-control thresholds of the arclength driver.  Chord iterations are
/// cheap and converge linearly, so the cost signal is the number of
/// Jacobian refreshes a correction needed, backed by a loose iteration
/// ceiling.
const STEP_SLOW_REFRESHES: usize = 2;
const STEP_SLOW_ITERATIONS: usize = 20;
const STEP_FAST_ITERATIONS: usize = 16;
const STEP_GROWTH: f64 = 1.3;

/// Contraction factor above which the chord iteration refreshes its
/// Jacobian: a healthy Newton step shrinks the residual far more.
const CHORD_REFRESH_RATIO: f64 = 0.3;

/// Sample count of the fixed time-domain residual verification grid.
const TIME_RESIDUAL_SAMPLES: usize = 64;

/// Tuning knobs of the full-order harmonic-balance continuation.
#[derive(Clone, Debug)]
pub struct HbOptions {
    /// Retained harmonics per degree of freedom.
    pub n_harmonics: usize,
    /// Cycle samples per retained coefficient (alias control); the sample
    /// count is `oversample · (2H+1)`.
    pub oversample: usize,
    /// Relative residual accepted by the Newton corrector.
    pub newton_tol: f64,
    pub max_newton_iterations: usize,
    /// Arclength steps in the scaled `(coefficients, Ω/ω_ref)` space.
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_points: usize,
}

impl Default for HbOptions {
    fn default() -> Self {
        HbOptions {
            n_harmonics: 7,
            oversample: 4,
            newton_tol: 1e-9,
            max_newton_iterations: 25,
            initial_step: 0.005,
            min_step: 1e-9,
            max_step: 0.03,
            max_points: 3000,
        }
    }
}

/// One converged periodic orbit of the full-order system.
#[derive(Clone, Debug)]
pub struct HbOrbit {
    pub omega: f64,
    pub n_harmonics: usize,
    /// Dof-major coefficients: per dof the mean, `H` cosine and `H` sine
    /// amplitudes.
    pub coefficients: Vec<f64>,
    /// Relative frequency-domain Newton residual at acceptance.
    pub newton_residual: f64,
    /// Relative time-domain residual of the equations of motion over the
    /// verification grid.
    pub time_residual: f64,
}

impl HbOrbit {
    fn n_coeffs(&self) -> usize {
        2 * self.n_harmonics + 1
    }

    /// Displacement of every dof at drive phase `theta`.
    pub fn displacement(&self, theta: f64) -> Vec<f64> {
        let nc = self.n_coeffs();
        let n = self.coefficients.len() / nc;
        let mut u = vec![0.0; n];
        for (i, out) in u.iter_mut().enumerate() {
            let block = &self.coefficients[i * nc..(i + 1) * nc];
            let mut value = block[0];
            for h in 1..=self.n_harmonics {
                let ht = h as f64 * theta;
                value += block[h] * ht.cos() + block[self.n_harmonics + h] * ht.sin();
            }
            *out = value;
        }
        u
    }

    /// Velocity of every dof at drive phase `theta` (time derivative, so
    /// the phase rate is scaled by Ω).
    pub fn velocity(&self, theta: f64) -> Vec<f64> {
        let nc = self.n_coeffs();
        let n = self.coefficients.len() / nc;
        let mut v = vec![0.0; n];
        for (i, out) in v.iter_mut().enumerate() {
            let block = &self.coefficients[i * nc..(i + 1) * nc];
            let mut value = 0.0;
            for h in 1..=self.n_harmonics {
                let hf = h as f64;
                let ht = hf * theta;
                value += hf * (block[self.n_harmonics + h] * ht.cos() - block[h] * ht.sin());
            }
            *out = value * self.omega;
        }
        v
    }
}

/// Harmonic-balance discretisation of one `(system, loads, ε)` triple.
struct HbSolver<'a, S: SecondOrderSystem> {
    sys: &'a S,
    n: usize,
    n_harmonics: usize,
    n_coeffs: usize,
    n_samples: usize,
    eps: f64,
    damping: RayleighDamping,
    /// Cosine/sine coefficient vectors of the physical drive per harmonic.
    force_cos: Vec<Vec<f64>>,
    force_sin: Vec<Vec<f64>>,
    /// Cosine/sine coefficient matrices of the parametric stiffness.
    kp_cos: Vec<Csr<f64>>,
    kp_sin: Vec<Csr<f64>>,
    theta: Vec<f64>,
    cos_table: Vec<Vec<f64>>,
    sin_table: Vec<Vec<f64>>,
    /// Dof-level half bandwidth of the coupled operators.
    band_dof: usize,
}

impl<'a, S: SecondOrderSystem> HbSolver<'a, S> {
    fn new(sys: &'a S, loads: &HarmonicLoads, eps: f64, opts: &HbOptions) -> Result<Self> {
        let n = sys.n_dofs();
        let n_h = opts.n_harmonics;
        if n_h == 0 {
            return Err(CoreError::Config(
                "harmonic balance needs at least one harmonic".into(),
            ));
        }
        let n_coeffs = 2 * n_h + 1;
        let n_samples = opts.oversample.max(2) * n_coeffs;
        // Alias safety: cubic terms of an H-truncated series reach 3H, the
        // parametric products reach H + ĥ; sampling must keep all of it
        // clear of the retained band.
        let drive_h = loads.n_harmonics();
        if 3 * n_h + drive_h.max(n_h) >= n_samples {
            return Err(CoreError::Config(format!(
                "{n_samples} samples alias the cubic content of {n_h} harmonics"
            )));
        }
        for forces in &loads.forces {
            if forces.len() != n {
                return Err(CoreError::Dimension(format!(
                    "load table has {} dofs, system has {n}",
                    forces.len()
                )));
            }
        }
        // Physical fields from one-sided complex coefficients:
        // F̃ e^{ijθ} + c.c. = 2ReF̃ cos jθ − 2ImF̃ sin jθ.
        let force_cos: Vec<Vec<f64>> = loads
            .forces
            .iter()
            .map(|f| f.iter().map(|c| 2.0 * c.re).collect())
            .collect();
        let force_sin: Vec<Vec<f64>> = loads
            .forces
            .iter()
            .map(|f| f.iter().map(|c| -2.0 * c.im).collect())
            .collect();
        let kp_cos: Vec<Csr<f64>> = loads
            .stiffness
            .iter()
            .map(|k| k.map(|v| 2.0 * v.re))
            .collect();
        let kp_sin: Vec<Csr<f64>> = loads
            .stiffness
            .iter()
            .map(|k| k.map(|v| -2.0 * v.im))
            .collect();
        let theta: Vec<f64> = (0..n_samples)
            .map(|m| 2.0 * PI * m as f64 / n_samples as f64)
            .collect();
        let cos_table: Vec<Vec<f64>> = (0..=n_h)
            .map(|h| theta.iter().map(|t| (h as f64 * t).cos()).collect())
            .collect();
        let sin_table: Vec<Vec<f64>> = (0..=n_h)
            .map(|h| theta.iter().map(|t| (h as f64 * t).sin()).collect())
            .collect();
        // The tangent pattern is probed at a dense displacement so that
        // every structurally possible coupling is present.
        let probe: Vec<f64> = (0..n).map(|i| 1e-3 * (1.3 + (i as f64).sin())).collect();
        let mut band_dof = sys
            .mass()
            .bandwidth()
            .max(sys.stiffness().bandwidth())
            .max(sys.tangent(&probe).bandwidth());
        for k in kp_cos.iter().chain(&kp_sin) {
            band_dof = band_dof.max(k.bandwidth());
        }
        Ok(HbSolver {
            sys,
            n,
            n_harmonics: n_h,
            n_coeffs,
            n_samples,
            eps,
            damping: sys.damping(),
            force_cos,
            force_sin,
            kp_cos,
            kp_sin,
            theta,
            cos_table,
            sin_table,
            band_dof,
        })
    }

    fn n_unknowns(&self) -> usize {
        self.n * self.n_coeffs
    }

    /// Displacement samples of every dof at cycle sample `m`.
    fn displacement_sample(&self, x: &[f64], m: usize) -> Vec<f64> {
        let mut u = vec![0.0; self.n];
        for (i, out) in u.iter_mut().enumerate() {
            let block = &x[i * self.n_coeffs..(i + 1) * self.n_coeffs];
            let mut value = block[0];
            for h in 1..=self.n_harmonics {
                value += block[h] * self.cos_table[h][m]
                    + block[self.n_harmonics + h] * self.sin_table[h][m];
            }
            *out = value;
        }
        u
    }

    /// Nonlinear restoring force plus (negated) drive and parametric loads
    /// at phase `theta`, the alternating-direction integrand.
    fn aft_sample(&self, u: &[f64], theta: f64) -> Vec<f64> {
        let mut g = self.sys.quadratic(u, u);
        let h = self.sys.cubic(u, u, u);
        for i in 0..self.n {
            g[i] += h[i];
        }
        if self.eps != 0.0 {
            for (j, (fc, fs)) in self.force_cos.iter().zip(&self.force_sin).enumerate() {
                let jt = (j + 1) as f64 * theta;
                let (c, s) = (jt.cos(), jt.sin());
                for i in 0..self.n {
                    g[i] -= self.eps * (fc[i] * c + fs[i] * s);
                }
            }
            for (j, (kc, ks)) in self.kp_cos.iter().zip(&self.kp_sin).enumerate() {
                let jt = (j + 1) as f64 * theta;
                let (c, s) = (jt.cos(), jt.sin());
                for (i, k, v) in kc.iter() {
                    g[i] -= self.eps * c * v * u[k];
                }
                for (i, k, v) in ks.iter() {
                    g[i] -= self.eps * s * v * u[k];
                }
            }
        }
        g
    }

    /// Adds the frequency-domain linear operator `L(Ω)X` (or its Ω
    /// derivative) into `out`.
    fn add_linear(&self, x: &[f64], omega: f64, d_omega: bool, out: &mut [f64]) {
        let (alpha, beta) = (self.damping.alpha, self.damping.beta);
        let nc = self.n_coeffs;
        for (i, k, v) in self.sys.stiffness().iter() {
            let (row, col) = (i * nc, k * nc);
            if !d_omega {
                out[row] += v * x[col];
            }
            for h in 1..=self.n_harmonics {
                let hf = h as f64;
                let (c, s) = (h, self.n_harmonics + h);
                if d_omega {
                    out[row + c] += hf * beta * v * x[col + s];
                    out[row + s] -= hf * beta * v * x[col + c];
                } else {
                    out[row + c] += v * x[col + c] + hf * omega * beta * v * x[col + s];
                    out[row + s] += v * x[col + s] - hf * omega * beta * v * x[col + c];
                }
            }
        }
        for (i, k, v) in self.sys.mass().iter() {
            let (row, col) = (i * nc, k * nc);
            for h in 1..=self.n_harmonics {
                let hf = h as f64;
                let (c, s) = (h, self.n_harmonics + h);
                if d_omega {
                    out[row + c] +=
                        -2.0 * hf * hf * omega * v * x[col + c] + hf * alpha * v * x[col + s];
                    out[row + s] +=
                        -2.0 * hf * hf * omega * v * x[col + s] - hf * alpha * v * x[col + c];
                } else {
                    let w = hf * hf * omega * omega;
                    out[row + c] += -w * v * x[col + c] + hf * omega * alpha * v * x[col + s];
                    out[row + s] += -w * v * x[col + s] - hf * omega * alpha * v * x[col + c];
                }
            }
        }
    }

    /// Frequency-domain residual `L(Ω)X + P[aft]` and its natural scale.
    fn residual(&self, x: &[f64], omega: f64) -> (Vec<f64>, f64) {
        let n_unknowns = self.n_unknowns();
        let mut linear = vec![0.0; n_unknowns];
        self.add_linear(x, omega, false, &mut linear);
        let mut projected = vec![0.0; n_unknowns];
        let weight = 1.0 / self.n_samples as f64;
        for m in 0..self.n_samples {
            let u = self.displacement_sample(x, m);
            let g = self.aft_sample(&u, self.theta[m]);
            for (i, gi) in g.iter().enumerate() {
                let row = i * self.n_coeffs;
                projected[row] += weight * gi;
                for h in 1..=self.n_harmonics {
                    projected[row + h] += 2.0 * weight * gi * self.cos_table[h][m];
                    projected[row + self.n_harmonics + h] +=
                        2.0 * weight * gi * self.sin_table[h][m];
                }
            }
        }
        let scale = norm(&linear).max(norm(&projected));
        for (r, p) in linear.iter_mut().zip(&projected) {
            *r += p;
        }
        (linear, scale)
    }

    /// Ω derivative of the residual at fixed coefficients.
    fn residual_d_omega(&self, x: &[f64], omega: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_unknowns()];
        self.add_linear(x, omega, true, &mut out);
        out
    }

    /// Banded Newton matrix: the linear operator blocks plus the projected
    /// sample-wise tangents of the nonlinear and parametric forces.
    fn jacobian(&self, x: &[f64], omega: f64) -> Result<BandLu<f64>> {
        let nc = self.n_coeffs;
        let half = (self.band_dof + 1) * nc - 1;
        let mut band = BandMatrix::zeros(self.n_unknowns(), half, half);
        let (alpha, beta) = (self.damping.alpha, self.damping.beta);
        for (i, k, v) in self.sys.stiffness().iter() {
            let (row, col) = (i * nc, k * nc);
            band.add(row, col, v);
            for h in 1..=self.n_harmonics {
                let hf = h as f64;
                let (c, s) = (h, self.n_harmonics + h);
                band.add(row + c, col + c, v);
                band.add(row + s, col + s, v);
                band.add(row + c, col + s, hf * omega * beta * v);
                band.add(row + s, col + c, -hf * omega * beta * v);
            }
        }
        for (i, k, v) in self.sys.mass().iter() {
            let (row, col) = (i * nc, k * nc);
            for h in 1..=self.n_harmonics {
                let hf = h as f64;
                let w = hf * hf * omega * omega;
                let (c, s) = (h, self.n_harmonics + h);
                band.add(row + c, col + c, -w * v);
                band.add(row + s, col + s, -w * v);
                band.add(row + c, col + s, hf * omega * alpha * v);
                band.add(row + s, col + c, -hf * omega * alpha * v);
            }
        }
        let stiffness = self.sys.stiffness();
        let weight = 1.0 / self.n_samples as f64;
        for m in 0..self.n_samples {
            let u = self.displacement_sample(x, m);
            let tangent = self.sys.tangent(&u);
            // Strip the linear part already present in the harmonic blocks
            // and fold in the parametric stiffness at this sample.
            let mut terms: Vec<(f64, &Csr<f64>)> = vec![(1.0, &tangent), (-1.0, stiffness)];
            if self.eps != 0.0 {
                for (j, (kc, ks)) in self.kp_cos.iter().zip(&self.kp_sin).enumerate() {
                    let jt = (j + 1) as f64 * self.theta[m];
                    terms.push((-self.eps * jt.cos(), kc));
                    terms.push((-self.eps * jt.sin(), ks));
                }
            }
            let nonlinear = Csr::linear_combination(&terms);
            for (i, k, v) in nonlinear.iter() {
                if v == 0.0 {
                    continue;
                }
                let (row, col) = (i * nc, k * nc);
                for r in 0..nc {
                    let w_r = if r == 0 {
                        weight
                    } else if r <= self.n_harmonics {
                        2.0 * weight * self.cos_table[r][m]
                    } else {
                        2.0 * weight * self.sin_table[r - self.n_harmonics][m]
                    };
                    let vw = v * w_r;
                    for c in 0..nc {
                        let b_c = if c == 0 {
                            1.0
                        } else if c <= self.n_harmonics {
                            self.cos_table[c][m]
                        } else {
                            self.sin_table[c - self.n_harmonics][m]
                        };
                        band.add(row + r, col + c, vw * b_c);
                    }
                }
            }
        }
        band.factor()
    }

    /// Newton at fixed Ω reusing a cached factorisation until the
    /// contraction rate degrades.
    fn newton_fixed(
        &self,
        x: &mut [f64],
        omega: f64,
        cache: &mut Option<BandLu<f64>>,
        opts: &HbOptions,
    ) -> Result<(f64, usize)> {
        let mut last_norm = f64::INFINITY;
        for iteration in 0..=opts.max_newton_iterations {
            let (mut residual, scale) = self.residual(x, omega);
            let res_norm = norm(&residual);
            let rel = res_norm / scale.max(f64::MIN_POSITIVE);
            if rel <= opts.newton_tol || res_norm == 0.0 {
                return Ok((rel, iteration));
            }
            if iteration == opts.max_newton_iterations {
                break;
            }
            if cache.is_none() || res_norm > CHORD_REFRESH_RATIO * last_norm {
                *cache = Some(self.jacobian(x, omega)?);
            }
            for r in residual.iter_mut() {
                *r = -*r;
            }
            let lu = cache.as_ref().expect("jacobian cached above");
            lu.solve_in_place(&mut residual);
            for (xi, d) in x.iter_mut().zip(&residual) {
                *xi += d;
            }
            last_norm = res_norm;
        }
        Err(CoreError::Convergence {
            context: format!("full-order harmonic balance at drive frequency {omega}"),
            iterations: opts.max_newton_iterations,
            residual: f64::NAN,
        })
    }

    /// Bordered pseudo-arclength correction in `(X, ν = Ω/ω_ref)`, solved
    /// by block elimination on the banded Jacobian.
    #[allow(clippy::too_many_arguments)]
    fn newton_arclength(
        &self,
        u: &mut [f64],
        base: &[f64],
        tangent: &[f64],
        ds: f64,
        omega_ref: f64,
        cache: &mut Option<BandLu<f64>>,
        opts: &HbOptions,
    ) -> Option<(f64, usize, usize)> {
        let n_unknowns = self.n_unknowns();
        let mut last_norm = f64::INFINITY;
        let mut refreshes = 0;
        for iteration in 0..=opts.max_newton_iterations {
            let omega = u[n_unknowns] * omega_ref;
            if omega <= 0.0 || !omega.is_finite() {
                return None;
            }
            let x = &u[..n_unknowns];
            let (residual, scale) = self.residual(x, omega);
            let res_norm = norm(&residual);
            let rel = res_norm / scale.max(f64::MIN_POSITIVE);
            let constraint = tangent
                .iter()
                .zip(u.iter().zip(base))
                .map(|(t, (ui, bi))| t * (ui - bi))
                .sum::<f64>()
                - ds;
            if (rel <= opts.newton_tol || res_norm == 0.0)
                && constraint.abs() <= opts.newton_tol * (1.0 + ds.abs())
            {
                return Some((rel, iteration, refreshes));
            }
            if iteration == opts.max_newton_iterations {
                return None;
            }
            if cache.is_none() || res_norm > CHORD_REFRESH_RATIO * last_norm {
                *cache = Some(self.jacobian(x, omega).ok()?);
                refreshes += 1;
            }
            let lu = cache.as_ref().expect("jacobian cached above");
            let y_res = lu.solve(&residual);
            let d_omega: Vec<f64> = self
                .residual_d_omega(x, omega)
                .iter()
                .map(|v| v * omega_ref)
                .collect();
            let y_border = lu.solve(&d_omega);
            let t_dot_border: f64 = tangent[..n_unknowns]
                .iter()
                .zip(&y_border)
                .map(|(t, y)| t * y)
                .sum();
            let t_dot_res: f64 = tangent[..n_unknowns]
                .iter()
                .zip(&y_res)
                .map(|(t, y)| t * y)
                .sum();
            let denom = tangent[n_unknowns] - t_dot_border;
            if denom == 0.0 || !denom.is_finite() {
                return None;
            }
            let d_nu = (-constraint + t_dot_res) / denom;
            u[n_unknowns] += d_nu;
            for i in 0..n_unknowns {
                u[i] += -y_res[i] - d_nu * y_border[i];
            }
            last_norm = res_norm;
        }
        None
    }

    /// Unit branch tangent through `(x, Ω)` oriented against `previous`,
    /// using the cached factorisation.
    fn tangent_vector(
        &self,
        x: &[f64],
        omega: f64,
        omega_ref: f64,
        previous: &[f64],
        cache: &mut Option<BandLu<f64>>,
    ) -> Result<Vec<f64>> {
        let n_unknowns = self.n_unknowns();
        if cache.is_none() {
            *cache = Some(self.jacobian(x, omega)?);
        }
        let lu = cache.as_ref().expect("jacobian cached above");
        let d_omega: Vec<f64> = self
            .residual_d_omega(x, omega)
            .iter()
            .map(|v| v * omega_ref)
            .collect();
        let y_border = lu.solve(&d_omega);
        let denom = previous[n_unknowns]
            - previous[..n_unknowns]
                .iter()
                .zip(&y_border)
                .map(|(p, y)| p * y)
                .sum::<f64>();
        if denom == 0.0 || !denom.is_finite() {
            return Err(CoreError::Convergence {
                context: format!("harmonic-balance branch tangent at drive frequency {omega}"),
                iterations: 0,
                residual: f64::NAN,
            });
        }
        let t_nu = 1.0 / denom;
        let mut tangent: Vec<f64> = y_border.iter().map(|y| -t_nu * y).collect();
        tangent.push(t_nu);
        let scale = norm(&tangent);
        for t in tangent.iter_mut() {
            *t /= scale;
        }
        Ok(tangent)
    }

    /// Relative time-domain residual of the equations of motion on a fixed
    /// verification grid, independent of the projection machinery.
    fn time_residual(&self, x: &[f64], omega: f64) -> f64 {
        let nc = self.n_coeffs;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for m in 0..TIME_RESIDUAL_SAMPLES {
            let theta = 2.0 * PI * m as f64 / TIME_RESIDUAL_SAMPLES as f64;
            let mut u = vec![0.0; self.n];
            let mut du = vec![0.0; self.n];
            let mut ddu = vec![0.0; self.n];
            for i in 0..self.n {
                let block = &x[i * nc..(i + 1) * nc];
                let mut value = block[0];
                let mut slope = 0.0;
                let mut curve = 0.0;
                for h in 1..=self.n_harmonics {
                    let hf = h as f64;
                    let (cos_h, sin_h) = ((hf * theta).cos(), (hf * theta).sin());
                    let (ch, sh) = (block[h], block[self.n_harmonics + h]);
                    value += ch * cos_h + sh * sin_h;
                    slope += hf * (sh * cos_h - ch * sin_h);
                    curve -= hf * hf * (ch * cos_h + sh * sin_h);
                }
                u[i] = value;
                du[i] = slope * omega;
                ddu[i] = curve * omega * omega;
            }
            let inertia = self.sys.mass().matvec(&ddu);
            let m_v = self.sys.mass().matvec(&du);
            let k_u = self.sys.stiffness().matvec(&u);
            let k_v = self.sys.stiffness().matvec(&du);
            let aft = self.aft_sample(&u, theta);
            let mut residual = 0.0f64;
            let mut terms = [0.0f64; 4];
            for i in 0..self.n {
                let damping = self.damping.alpha * m_v[i] + self.damping.beta * k_v[i];
                let r = inertia[i] + damping + k_u[i] + aft[i];
                residual += r * r;
                terms[0] += inertia[i] * inertia[i];
                terms[1] += damping * damping;
                terms[2] += k_u[i] * k_u[i];
                terms[3] += aft[i] * aft[i];
            }
            worst = worst.max(residual.sqrt());
            let sample_scale = terms.iter().fold(0.0f64, |a, &t| a.max(t.sqrt()));
            scale = scale.max(sample_scale);
        }
        worst / scale.max(f64::MIN_POSITIVE)
    }

    /// Observables of an accepted point.
    fn extract_point(
        &self,
        x: &[f64],
        omega: f64,
        modal_row: &[f64],
        observed: usize,
        fold: bool,
    ) -> FrcPoint {
        let nc = self.n_coeffs;
        let block = &x[observed * nc..(observed + 1) * nc];
        let amp_phys = trig_peak(block, self.n_harmonics);
        // Half the peak modal coordinate matches the reduced model's |z|
        // at leading order (u ≈ z + z̄ along the mode).
        let mut modal_block = vec![0.0; nc];
        for (i, w) in modal_row.iter().enumerate() {
            for (r, out) in modal_block.iter_mut().enumerate() {
                *out += w * x[i * nc + r];
            }
        }
        let amp_norm = 0.5 * trig_peak(&modal_block, self.n_harmonics);
        let phase = f64::atan2(-block[self.n_harmonics + 1], block[1]);
        FrcPoint {
            omega,
            amp_phys,
            amp_norm,
            phase,
            stable: true,
            fold,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// True cycle peak `max_θ |p(θ)|` of one trigonometric polynomial given as
/// a coefficient block (mean, `H` cosines, `H` sines): a dense scan seeds a
/// safeguarded Newton search on the extremum condition `p·p' = 0`, so the
/// reported amplitude is the continuous peak rather than a sampled
/// underestimate.
fn trig_peak(block: &[f64], n_h: usize) -> f64 {
    let eval = |theta: f64| -> (f64, f64, f64) {
        let mut value = block[0];
        let mut slope = 0.0;
        let mut curve = 0.0;
        for h in 1..=n_h {
            let hf = h as f64;
            let (c, s) = ((hf * theta).cos(), (hf * theta).sin());
            let (ch, sh) = (block[h], block[n_h + h]);
            value += ch * c + sh * s;
            slope += hf * (sh * c - ch * s);
            curve -= hf * hf * (ch * c + sh * s);
        }
        (value, slope, curve)
    };
    let n_scan = (8 * (2 * n_h + 1)).max(32);
    let spacing = 2.0 * PI / n_scan as f64;
    let mut best = 0.0f64;
    let mut seed = 0.0f64;
    for m in 0..n_scan {
        let theta = m as f64 * spacing;
        let (value, _, _) = eval(theta);
        if value.abs() > best {
            best = value.abs();
            seed = theta;
        }
    }
    let mut theta = seed;
    for _ in 0..8 {
        let (value, slope, curve) = eval(theta);
        let gradient = value * slope;
        let hessian = slope * slope + value * curve;
        if hessian >= 0.0 {
            break;
        }
        let step = gradient / hessian;
        if !step.is_finite() || step.abs() > spacing {
            break;
        }
        theta -= step;
        best = best.max(eval(theta).0.abs());
        if step.abs() <= 1e-15 {
            break;
        }
    }
    best
}

/// Solves one full-order periodic orbit at a fixed drive frequency,
/// starting from rest or from `warm_start` coefficients.
pub fn hb_orbit<S: SecondOrderSystem>(
    sys: &S,
    loads: &HarmonicLoads,
    omega: f64,
    eps: f64,
    warm_start: Option<&[f64]>,
    opts: &HbOptions,
) -> Result<HbOrbit> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(CoreError::Config(format!(
            "invalid drive frequency {omega}"
        )));
    }
    let solver = HbSolver::new(sys, loads, eps, opts)?;
    let mut x = match warm_start {
        Some(w) => {
            if w.len() != solver.n_unknowns() {
                return Err(CoreError::Dimension(format!(
                    "warm start has {} coefficients, expected {}",
                    w.len(),
                    solver.n_unknowns()
                )));
            }
            w.to_vec()
        }
        None => vec![0.0; solver.n_unknowns()],
    };
    let mut cache = None;
    let (newton_residual, _) = solver.newton_fixed(&mut x, omega, &mut cache, opts)?;
    let time_residual = solver.time_residual(&x, omega);
    Ok(HbOrbit {
        omega,
        n_harmonics: solver.n_harmonics,
        coefficients: x,
        newton_residual,
        time_residual,
    })
}

/// Continues the full-order periodic orbits across a drive-frequency
/// window.
///
/// `modal_row` is `M·φ` for the mass-normalised master mode (so the modal
/// coordinate is its dot product with the displacement); `observed` is the
/// degree of freedom reported as the physical amplitude.  The branch
/// follows the same conventions as the reduced solver: fold flags from the
/// tangent's frequency component, partial branches with a diagnostic on
/// arclength underflow or point-budget exhaustion.  `max_residual` reports
/// the worst relative residual over accepted points, frequency- and
/// time-domain alike.  Stability comes from fold parity (see the module
/// documentation), so the branch must start on a stable segment.
#[allow(clippy::too_many_arguments)]
pub fn hb_full_order<S: SecondOrderSystem>(
    sys: &S,
    loads: &HarmonicLoads,
    master_mode: &[f64],
    observed: usize,
    omega_lo: f64,
    omega_hi: f64,
    eps: f64,
    opts: &HbOptions,
) -> Result<FrcBranch> {
    if !(omega_lo.is_finite() && omega_hi.is_finite()) || omega_lo <= 0.0 || omega_hi <= omega_lo
    {
        return Err(CoreError::Config(format!(
            "invalid drive-frequency window [{omega_lo}, {omega_hi}]"
        )));
    }
    let solver = HbSolver::new(sys, loads, eps, opts)?;
    if observed >= solver.n {
        return Err(CoreError::Dimension(format!(
            "observed dof {observed} outside the {} dofs of the system",
            solver.n
        )));
    }
    if master_mode.len() != solver.n {
        return Err(CoreError::Dimension(format!(
            "master mode has {} entries, system has {}",
            master_mode.len(),
            solver.n
        )));
    }
    let modal_row = solver.sys.mass().matvec(master_mode);
    let omega_ref = 0.5 * (omega_lo + omega_hi);
    let n_unknowns = solver.n_unknowns();

    let mut cache = None;
    let mut x = vec![0.0; n_unknowns];
    let (first_rel, _) = solver.newton_fixed(&mut x, omega_lo, &mut cache, opts)?;
    let mut max_residual = first_rel.max(solver.time_residual(&x, omega_lo));

    let mut e_nu = vec![0.0; n_unknowns + 1];
    e_nu[n_unknowns] = 1.0;
    let mut tangent = solver.tangent_vector(&x, omega_lo, omega_ref, &e_nu, &mut cache)?;
    let mut points = vec![solver.extract_point(&x, omega_lo, &modal_row, observed, false)];

    let mut u = x.clone();
    u.push(omega_lo / omega_ref);

    let mut ds = opts.initial_step;
    let mut diagnostic = None;
    loop {
        if points.len() >= opts.max_points {
            diagnostic = Some(format!(
                "point budget of {} exhausted before leaving the window",
                opts.max_points
            ));
            break;
        }
        let mut trial: Vec<f64> = u
            .iter()
            .zip(&tangent)
            .map(|(ui, ti)| ui + ds * ti)
            .collect();
        match solver.newton_arclength(
            &mut trial,
            &u,
            &tangent,
            ds,
            omega_ref,
            &mut cache,
            opts,
        ) {
            Some((rel, iterations, refreshes)) => {
                let omega = trial[n_unknowns] * omega_ref;
                let x = &trial[..n_unknowns];
                let new_tangent =
                    solver.tangent_vector(x, omega, omega_ref, &tangent, &mut cache)?;
                let fold = new_tangent[n_unknowns] * tangent[n_unknowns] < 0.0;
                points.push(solver.extract_point(x, omega, &modal_row, observed, fold));
                max_residual = max_residual
                    .max(rel)
                    .max(solver.time_residual(x, omega));
                u = trial;
                tangent = new_tangent;
                if refreshes >= STEP_SLOW_REFRESHES || iterations >= STEP_SLOW_ITERATIONS {
                    ds *= 0.5;
                } else if iterations <= STEP_FAST_ITERATIONS {
                    ds *= STEP_GROWTH;
                }
                ds = ds.clamp(opts.min_step, opts.max_step);
                if (omega > omega_hi && tangent[n_unknowns] > 0.0)
                    || (omega < omega_lo && tangent[n_unknowns] < 0.0)
                {
                    break;
                }
            }
            None => {
                ds *= 0.5;
                cache = None;
                if ds < opts.min_step {
                    diagnostic = Some(format!(
                        "continuation stalled at Ω = {:.6}: arclength step underflow",
                        u[n_unknowns] * omega_ref
                    ));
                    break;
                }
            }
        }
    }
    // Stability by fold parity: each saddle-node hands one real Floquet
    // multiplier through the unit circle.
    let mut unstable = false;
    for point in points.iter_mut() {
        if point.fold {
            unstable = !unstable;
        }
        point.stable = !unstable;
    }
    Ok(FrcBranch {
        points,
        max_residual,
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpim::DenseSystem;
    use crate::oracles::duffing::{averaging_amplitudes, duffing_fixture, duffing_loads};
    use num_complex::Complex64;

    /// Two-dof linear system with distinct resonances and mixed damping.
    fn linear_two_dof() -> DenseSystem {
        let m = Csr::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 2.0)]);
        let k = Csr::from_triplets(2, 2, &[(0, 0, 5.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 7.0)]);
        DenseSystem::linear(
            m,
            k,
            RayleighDamping {
                alpha: 0.02,
                beta: 1e-3,
            },
        )
    }

    #[test]
    fn linear_branch_matches_the_direct_frequency_solve() {
        let sys = linear_two_dof();
        let force = vec![
            Complex64::new(0.03, -0.01),
            Complex64::new(0.0, 0.02),
        ];
        let loads = HarmonicLoads {
            forces: vec![force.clone()],
            stiffness: vec![Csr::zeros(2, 2)],
            higher_harmonic_fraction: 0.0,
        };
        let opts = HbOptions {
            n_harmonics: 5,
            // Headroom for the 1e-8 comparison: near resonance the
            // residual-to-coefficient amplification is of order 1/(2ξ).
            newton_tol: 1e-12,
            initial_step: 0.01,
            max_step: 0.02,
            ..Default::default()
        };
        let branch =
            hb_full_order(&sys, &loads, &[1.0, 0.0], 0, 1.9, 2.4, 1.0, &opts).expect("branch");
        assert!(branch.diagnostic.is_none(), "{:?}", branch.diagnostic);
        assert!(branch.points.len() >= 10);
        for point in &branch.points {
            // Direct frequency-domain solve of the complex 2×2 system
            // (K − Ω²M + iΩC) U = 2F̃.
            let om = point.omega;
            let mut a = nalgebra::DMatrix::<Complex64>::zeros(2, 2);
            for (i, k, v) in sys.k.iter() {
                a[(i, k)] += Complex64::new(v, om * 1e-3 * v);
            }
            for (i, k, v) in sys.m.iter() {
                a[(i, k)] += Complex64::new(-om * om * v, om * 0.02 * v);
            }
            let rhs = nalgebra::DVector::from_vec(vec![2.0 * force[0], 2.0 * force[1]]);
            let sol = a.lu().solve(&rhs).expect("direct solve");
            let exact = sol[0].norm();
            assert!(
                (point.amp_phys - exact).abs() <= 1e-8 * exact.max(1e-12),
                "harmonic-balance amplitude {} must match the direct solve {exact} at Ω={om}",
                point.amp_phys
            );
            assert!(point.stable && !point.fold, "a linear branch has no folds");
        }
    }

    #[test]
    fn duffing_branch_matches_the_averaging_formula_at_moderate_amplitude() {
        let (omega0, gamma, q_factor, force) = (1.0, 0.5, 100.0, 5e-4);
        let sys = duffing_fixture(omega0, gamma, q_factor);
        let loads = duffing_loads(force);
        let opts = HbOptions {
            initial_step: 0.002,
            max_step: 0.004,
            ..Default::default()
        };
        let branch =
            hb_full_order(&sys, &loads, &[1.0], 0, 0.98, 1.025, 1.0, &opts).expect("branch");
        assert!(branch.diagnostic.is_none(), "{:?}", branch.diagnostic);
        assert!(
            branch.max_residual <= 1e-8,
            "orbit residual {} must satisfy the time-domain invariant",
            branch.max_residual
        );
        let mut checked = 0;
        for point in &branch.points {
            let roots = averaging_amplitudes(omega0, gamma, q_factor, force, point.omega)
                .expect("averaging roots");
            let nearest = roots
                .iter()
                .map(|a| (a - point.amp_phys).abs())
                .fold(f64::INFINITY, f64::min);
            if point.amp_phys > 0.01 {
                checked += 1;
                assert!(
                    nearest <= 0.01 * point.amp_phys,
                    "amplitude {} at Ω={} must sit within 1% of an averaging root {roots:?}",
                    point.amp_phys,
                    point.omega
                );
            }
        }
        assert!(checked >= 5, "the sweep must cross the resonance peak");
    }

    #[test]
    fn hardening_overhang_folds_twice_with_parity_stability() {
        let (omega0, gamma, q_factor, force) = (1.0, 0.5, 100.0, 2.5e-3);
        let sys = duffing_fixture(omega0, gamma, q_factor);
        let loads = duffing_loads(force);
        let opts = HbOptions {
            initial_step: 0.002,
            max_step: 0.006,
            ..Default::default()
        };
        let branch =
            hb_full_order(&sys, &loads, &[1.0], 0, 0.985, 1.05, 1.0, &opts).expect("branch");
        assert!(branch.diagnostic.is_none(), "{:?}", branch.diagnostic);
        let folds: Vec<usize> = branch
            .points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.fold.then_some(i))
            .collect();
        assert_eq!(folds.len(), 2, "one saddle-node pair brackets the overhang");
        assert!(
            branch.points[folds[0]..folds[1]].iter().all(|p| !p.stable),
            "the middle sheet between the folds must be flagged unstable"
        );
        assert!(
            branch.points[..folds[0]].iter().all(|p| p.stable)
                && branch.points[folds[1]..].iter().all(|p| p.stable),
            "the outer sheets must be flagged stable"
        );
        // Hardening: the first fold (top of the overhang) sits above the
        // second (bottom), and both live in the averaging-predicted
        // overhang neighbourhood just above the natural frequency.
        let omega_fold_high = branch.points[folds[0]].omega;
        let omega_fold_low = branch.points[folds[1]].omega;
        assert!(
            omega_fold_low < omega_fold_high,
            "hardening overhang folds back to lower frequency"
        );
        for omega in [omega_fold_low, omega_fold_high] {
            assert!(
                (1.005..1.02).contains(&omega),
                "fold frequency {omega} must sit in the hardening overhang band"
            );
        }
        let peak = branch
            .points
            .iter()
            .map(|p| p.amp_phys)
            .fold(0.0f64, f64::max);
        let (_, peak_estimate) = crate::oracles::duffing::averaging_peak(
            omega0, gamma, q_factor, force,
        );
        assert!(
            (peak - peak_estimate).abs() <= 0.05 * peak_estimate,
            "branch peak {peak} must sit near the averaging estimate {peak_estimate}"
        );
    }

    #[test]
    fn single_orbit_solver_reports_its_residuals() {
        let sys = duffing_fixture(1.0, 0.5, 100.0);
        let loads = duffing_loads(5e-4);
        let orbit = hb_orbit(&sys, &loads, 0.99, 1.0, None, &Default::default()).expect("orbit");
        assert!(orbit.newton_residual <= 1e-9);
        assert!(orbit.time_residual <= 1e-8);
        // The velocity series is the phase derivative scaled by Ω.
        let theta = 0.37;
        let step = 1e-6;
        let up = orbit.displacement(theta + step);
        let down = orbit.displacement(theta - step);
        let v = orbit.velocity(theta);
        let fd = (up[0] - down[0]) / (2.0 * step) * orbit.omega;
        assert!(
            (v[0] - fd).abs() <= 1e-6 * (1.0 + fd.abs()),
            "velocity {} must match the finite difference {fd}",
            v[0]
        );
    }

    #[test]
    fn zero_forcing_scale_keeps_the_trivial_branch() {
        let sys = duffing_fixture(1.0, 0.5, 50.0);
        let loads = duffing_loads(1e-3);
        let branch = hb_full_order(&sys, &loads, &[1.0], 0, 0.9, 1.1, 0.0, &Default::default())
            .expect("branch");
        for point in &branch.points {
            assert!(
                point.amp_phys <= 1e-12,
                "unforced harmonic balance must stay on the origin"
            );
        }
    }
}
