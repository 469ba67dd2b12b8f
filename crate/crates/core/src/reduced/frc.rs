//! Periodic-orbit continuation of the planar realified ROM.
//!
//! For a single conjugate master pair the realified reduced model is a
//! two-dimensional, time-periodic vector field.  Periodic orbits at drive
//! frequency `Ω` are discretised by harmonic balance: both coordinates are
//! truncated trigonometric polynomials in the drive phase `θ = Ωt`, and the
//! field is projected back onto the retained harmonics by sampling over one
//! cycle (alternating frequency–time).  The sample count is chosen so that
//! the polynomial field of a truncated series never aliases back onto the
//! retained harmonics.
//!
//! The Newton-corrected harmonic-balance system is embedded in
//! pseudo-arclength continuation over `Ω`, with the frequency scaled by the
//! master's linear frequency so that arclength mixes comparable quantities.
//! The arclength step halves when Newton works hard and grows when it
//! converges quickly; a step underflow ends the branch early with a
//! diagnostic instead of an error, returning the part already computed.
//!
//! Stability comes from the monodromy matrix of the variational equations,
//! integrated with a classical Runge–Kutta scheme over one period using the
//! exact trigonometric interpolation of the orbit; saddle-node points are
//! flagged where the continuation tangent's frequency component changes
//! sign.  Physical amplitudes are read through the manifold mapping — not
//! from the normal coordinates — via a [`MappingObservable`].

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};

use super::rom::{MappingObservable, RealizedRom};

/// Floquet multipliers may exceed unit magnitude by this much before an
/// orbit is declared unstable, absorbing integration rounding at folds.
const FLOQUET_TOL: f64 = 1e-6;

/// Newton iteration counts at which the arclength step is halved / grown.
const STEP_SLOW_ITERATIONS: usize = 8;
const STEP_FAST_ITERATIONS: usize = 3;
const STEP_GROWTH: f64 = 1.3;

/// Tuning knobs of the harmonic-balance continuation.
#[derive(Clone, Debug)]
pub struct ContinuationOptions {
    /// Retained harmonics per coordinate.
    pub n_harmonics: usize,
    /// Samples per cycle for the frequency–time projections.
    pub n_samples: usize,
    /// Relative periodic-orbit residual required at every accepted point.
    pub newton_tol: f64,
    pub max_newton_iterations: usize,
    /// Arclength steps in the scaled `(coefficients, Ω/ω_ref)` space.
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Accepted-point budget before the branch is cut off with a diagnostic.
    pub max_points: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            n_harmonics: 9,
            n_samples: 128,
            newton_tol: 1e-10,
            max_newton_iterations: 12,
            initial_step: 0.01,
            min_step: 1e-9,
            max_step: 0.05,
            max_points: 4000,
        }
    }
}

/// One accepted point of a frequency-response or backbone branch.
#[derive(Clone, Debug)]
pub struct FrcPoint {
    /// Drive frequency (rad/μs).
    pub omega: f64,
    /// Peak observable displacement over one cycle, through the mapping.
    pub amp_phys: f64,
    /// Peak normal-coordinate modulus `|z|` over one cycle.
    pub amp_norm: f64,
    /// Argument of the first harmonic of the `a` coordinate relative to the
    /// cosine drive.
    pub phase: f64,
    pub stable: bool,
    /// Set where the continuation tangent's frequency component changes
    /// sign, bracketing a saddle-node.
    pub fold: bool,
}

/// A continued branch; `diagnostic` is set when the branch is partial.
#[derive(Debug)]
pub struct FrcBranch {
    pub points: Vec<FrcPoint>,
    /// Largest relative periodic-orbit residual over the accepted points.
    pub max_residual: f64,
    pub diagnostic: Option<String>,
}

/// FRC/backbone points in the common CSV schema.
pub fn frc_csv(points: &[FrcPoint]) -> String {
    let mut out = String::from("omega,amp_phys,amp_norm,phase,stable,fold\n");
    for p in points {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{},{}\n",
            p.omega,
            p.amp_phys,
            p.amp_norm,
            p.phase,
            i32::from(p.stable),
            i32::from(p.fold)
        ));
    }
    out
}

/// Highest polynomial order the flattened planar evaluator supports.
const MAX_PLANAR_ORDER: usize = 15;

/// One power-product term `c_a a^i b^j` / `c_b a^i b^j` of the planar field.
#[derive(Clone, Copy)]
struct Term {
    a_pow: usize,
    b_pow: usize,
    c_a: f64,
    c_b: f64,
}

struct DriveTerms {
    harmonic: f64,
    cos: Vec<Term>,
    sin: Vec<Term>,
}

/// The realified field of one master pair flattened to monomial power lists
/// for fast repeated evaluation with analytic derivatives.
struct PlanarField {
    order: usize,
    autonomous: Vec<Term>,
    drives: Vec<DriveTerms>,
}

impl PlanarField {
    fn new(rom: &RealizedRom) -> Result<Self> {
        if rom.n_masters != 1 {
            return Err(CoreError::Config(format!(
                "periodic-orbit continuation expects a single master pair, got {}",
                rom.n_masters
            )));
        }
        if rom.order > MAX_PLANAR_ORDER {
            return Err(CoreError::Config(format!(
                "planar evaluator supports orders up to {MAX_PLANAR_ORDER}, got {}",
                rom.order
            )));
        }
        let basis = rom.basis();
        let flatten = |table: &[Vec<Vec<f64>>], lo: usize| -> Vec<Term> {
            let mut terms = Vec::new();
            for (p, coeffs) in table.iter().enumerate().skip(lo) {
                for (idx, entry) in coeffs.iter().enumerate() {
                    if entry[0] != 0.0 || entry[1] != 0.0 {
                        let monomial = &basis.monomials(p)[idx];
                        terms.push(Term {
                            a_pow: monomial.multiplicity(0),
                            b_pow: monomial.multiplicity(1),
                            c_a: entry[0],
                            c_b: entry[1],
                        });
                    }
                }
            }
            terms
        };
        Ok(PlanarField {
            order: rom.order,
            autonomous: flatten(&rom.autonomous, 1),
            drives: rom
                .drives
                .iter()
                .map(|d| DriveTerms {
                    harmonic: d.harmonic as f64,
                    cos: flatten(&d.cos, 0),
                    sin: flatten(&d.sin, 0),
                })
                .collect(),
        })
    }

    /// Field value and Jacobian with respect to `(a, b)` at one phase.
    fn eval(&self, a: f64, b: f64, theta: f64, eps: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let mut pow_a = [1.0; MAX_PLANAR_ORDER + 1];
        let mut pow_b = [1.0; MAX_PLANAR_ORDER + 1];
        for p in 1..=self.order {
            pow_a[p] = pow_a[p - 1] * a;
            pow_b[p] = pow_b[p - 1] * b;
        }
        let mut g = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        let mut accumulate = |terms: &[Term], weight: f64| {
            for t in terms {
                let value = weight * pow_a[t.a_pow] * pow_b[t.b_pow];
                g[0] += t.c_a * value;
                g[1] += t.c_b * value;
                if t.a_pow > 0 {
                    let da = weight * t.a_pow as f64 * pow_a[t.a_pow - 1] * pow_b[t.b_pow];
                    jac[0][0] += t.c_a * da;
                    jac[1][0] += t.c_b * da;
                }
                if t.b_pow > 0 {
                    let db = weight * t.b_pow as f64 * pow_a[t.a_pow] * pow_b[t.b_pow - 1];
                    jac[0][1] += t.c_a * db;
                    jac[1][1] += t.c_b * db;
                }
            }
        };
        accumulate(&self.autonomous, 1.0);
        if eps != 0.0 {
            for drive in &self.drives {
                let phase = drive.harmonic * theta;
                accumulate(&drive.cos, eps * phase.cos());
                accumulate(&drive.sin, eps * phase.sin());
            }
        }
        (g, jac)
    }
}

/// Harmonic-balance discretisation: residual, Jacobian and projections for
/// one `(field, ε)` pair on fixed sample and harmonic grids.
struct HbProblem<'a> {
    field: &'a PlanarField,
    n_harmonics: usize,
    /// Coefficients per coordinate: mean, cosines, sines.
    n_coeffs: usize,
    n_samples: usize,
    eps: f64,
    /// `cos_table[h][i] = cos(h θ_i)`, rows `0..=H`.
    cos_table: Vec<Vec<f64>>,
    sin_table: Vec<Vec<f64>>,
    theta: Vec<f64>,
}

impl<'a> HbProblem<'a> {
    fn new(field: &'a PlanarField, opts: &ContinuationOptions, eps: f64) -> Result<Self> {
        let (n_h, n_t) = (opts.n_harmonics, opts.n_samples);
        if n_h == 0 || n_t == 0 {
            return Err(CoreError::Config(
                "harmonic balance needs at least one harmonic and one sample".into(),
            ));
        }
        // No polynomial image of the truncated series may alias onto a
        // retained harmonic: content reaches order·H, and frequency k folds
        // onto |N_t - k|.
        if field.order * n_h + n_h >= n_t {
            return Err(CoreError::Config(format!(
                "{n_t} samples alias order-{} content of {n_h} harmonics",
                field.order
            )));
        }
        let theta: Vec<f64> = (0..n_t).map(|i| 2.0 * PI * i as f64 / n_t as f64).collect();
        let cos_table: Vec<Vec<f64>> = (0..=n_h)
            .map(|h| theta.iter().map(|t| (h as f64 * t).cos()).collect())
            .collect();
        let sin_table: Vec<Vec<f64>> = (0..=n_h)
            .map(|h| theta.iter().map(|t| (h as f64 * t).sin()).collect())
            .collect();
        Ok(HbProblem {
            field,
            n_harmonics: n_h,
            n_coeffs: 2 * n_h + 1,
            n_samples: n_t,
            eps,
            cos_table,
            sin_table,
            theta,
        })
    }

    fn n_unknowns(&self) -> usize {
        2 * self.n_coeffs
    }

    /// Series value of one coordinate block at sample `i`.
    fn series_at_sample(&self, block: &[f64], i: usize) -> f64 {
        let mut value = block[0];
        for h in 1..=self.n_harmonics {
            value += block[h] * self.cos_table[h][i]
                + block[self.n_harmonics + h] * self.sin_table[h][i];
        }
        value
    }

    /// Series value of one coordinate block at an arbitrary phase.
    fn series_at_phase(&self, block: &[f64], theta: f64) -> f64 {
        let mut value = block[0];
        for h in 1..=self.n_harmonics {
            let ht = h as f64 * theta;
            value += block[h] * ht.cos() + block[self.n_harmonics + h] * ht.sin();
        }
        value
    }

    /// Fourier coefficients of the phase derivative of `x` (both blocks).
    fn derivative_coeffs(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_unknowns());
        for block in 0..2 {
            let offset = block * self.n_coeffs;
            for h in 1..=self.n_harmonics {
                out[offset + h] = h as f64 * x[offset + self.n_harmonics + h];
                out[offset + self.n_harmonics + h] = -(h as f64) * x[offset + h];
            }
        }
        out
    }

    /// Projects samples onto the retained harmonics of one block.
    fn project(&self, samples: &[f64], out: &mut [f64]) {
        let inv = 1.0 / self.n_samples as f64;
        out[0] = samples.iter().sum::<f64>() * inv;
        for h in 1..=self.n_harmonics {
            let mut c = 0.0;
            let mut s = 0.0;
            for i in 0..self.n_samples {
                c += samples[i] * self.cos_table[h][i];
                s += samples[i] * self.sin_table[h][i];
            }
            out[h] = 2.0 * c * inv;
            out[self.n_harmonics + h] = 2.0 * s * inv;
        }
    }

    /// Residual `Ω·X' − P[g]`, its natural scale, and the per-sample field
    /// Jacobians for reuse.
    fn residual(&self, x: &DVector<f64>, omega: f64) -> (DVector<f64>, f64, Vec<[[f64; 2]; 2]>) {
        let (a_block, b_block) = x.as_slice().split_at(self.n_coeffs);
        let mut g_a = vec![0.0; self.n_samples];
        let mut g_b = vec![0.0; self.n_samples];
        let mut jacs = Vec::with_capacity(self.n_samples);
        for i in 0..self.n_samples {
            let a = self.series_at_sample(a_block, i);
            let b = self.series_at_sample(b_block, i);
            let (g, jac) = self.field.eval(a, b, self.theta[i], self.eps);
            g_a[i] = g[0];
            g_b[i] = g[1];
            jacs.push(jac);
        }
        let mut projected = DVector::zeros(self.n_unknowns());
        self.project(&g_a, &mut projected.as_mut_slice()[..self.n_coeffs]);
        self.project(&g_b, &mut projected.as_mut_slice()[self.n_coeffs..]);
        let derivative = self.derivative_coeffs(x) * omega;
        let scale = derivative.norm().max(projected.norm());
        (derivative - projected, scale, jacs)
    }

    /// Jacobian of the residual with respect to the coefficients.
    fn jacobian(&self, omega: f64, jacs: &[[[f64; 2]; 2]]) -> DMatrix<f64> {
        let n = self.n_unknowns();
        let mut out = DMatrix::zeros(n, n);
        // Derivative part: block-diagonal pairing of cosines and sines.
        for block in 0..2 {
            let offset = block * self.n_coeffs;
            for h in 1..=self.n_harmonics {
                out[(offset + h, offset + self.n_harmonics + h)] = omega * h as f64;
                out[(offset + self.n_harmonics + h, offset + h)] = -omega * h as f64;
            }
        }
        // Field part: project each basis function through the sample
        // Jacobians.
        let mut disturbed_a = vec![0.0; self.n_samples];
        let mut disturbed_b = vec![0.0; self.n_samples];
        let mut proj = vec![0.0; self.n_coeffs];
        for col in 0..n {
            let coord = col / self.n_coeffs;
            let within = col % self.n_coeffs;
            for i in 0..self.n_samples {
                let basis_value = if within == 0 {
                    1.0
                } else if within <= self.n_harmonics {
                    self.cos_table[within][i]
                } else {
                    self.sin_table[within - self.n_harmonics][i]
                };
                disturbed_a[i] = jacs[i][0][coord] * basis_value;
                disturbed_b[i] = jacs[i][1][coord] * basis_value;
            }
            self.project(&disturbed_a, &mut proj);
            for row in 0..self.n_coeffs {
                out[(row, col)] -= proj[row];
            }
            self.project(&disturbed_b, &mut proj);
            for row in 0..self.n_coeffs {
                out[(self.n_coeffs + row, col)] -= proj[row];
            }
        }
        out
    }

    /// Newton at fixed `Ω`, for the first point of a branch.
    fn newton_fixed(
        &self,
        x: &mut DVector<f64>,
        omega: f64,
        opts: &ContinuationOptions,
    ) -> Result<(f64, usize)> {
        for iteration in 0..=opts.max_newton_iterations {
            let (residual, scale, jacs) = self.residual(x, omega);
            let rel = residual.norm() / scale.max(f64::MIN_POSITIVE);
            if rel <= opts.newton_tol || residual.norm() == 0.0 {
                return Ok((rel.min(1.0), iteration));
            }
            if iteration == opts.max_newton_iterations {
                break;
            }
            let jacobian = self.jacobian(omega, &jacs);
            match jacobian.lu().solve(&(-&residual)) {
                Some(delta) => *x += delta,
                None => break,
            }
        }
        Err(CoreError::Convergence {
            context: format!("harmonic-balance Newton at drive frequency {omega}"),
            iterations: opts.max_newton_iterations,
            residual: f64::NAN,
        })
    }

    /// Bordered Newton correction of the pseudo-arclength system; `u` stacks
    /// the coefficients and the scaled frequency `Ω/ω_ref`.
    fn newton_arclength(
        &self,
        u: &mut DVector<f64>,
        base: &DVector<f64>,
        tangent: &DVector<f64>,
        ds: f64,
        omega_ref: f64,
        opts: &ContinuationOptions,
    ) -> Option<(f64, usize)> {
        let n = self.n_unknowns();
        for iteration in 0..=opts.max_newton_iterations {
            let x = DVector::from_column_slice(&u.as_slice()[..n]);
            let omega = u[n] * omega_ref;
            if omega <= 0.0 || !omega.is_finite() {
                return None;
            }
            let (residual, scale, jacs) = self.residual(&x, omega);
            let constraint = tangent.dot(&(&*u - base)) - ds;
            let rel = residual.norm() / scale.max(f64::MIN_POSITIVE);
            if (rel <= opts.newton_tol || residual.norm() == 0.0)
                && constraint.abs() <= opts.newton_tol * (1.0 + ds.abs())
            {
                return Some((rel.min(1.0), iteration));
            }
            if iteration == opts.max_newton_iterations {
                break;
            }
            let jacobian = self.jacobian(omega, &jacs);
            let d_omega = self.derivative_coeffs(&x) * omega_ref;
            let mut bordered = DMatrix::zeros(n + 1, n + 1);
            bordered.view_mut((0, 0), (n, n)).copy_from(&jacobian);
            bordered.view_mut((0, n), (n, 1)).copy_from(&d_omega);
            bordered.view_mut((n, 0), (1, n + 1)).copy_from(&tangent.transpose());
            let mut rhs = DVector::zeros(n + 1);
            rhs.rows_mut(0, n).copy_from(&(-&residual));
            rhs[n] = -constraint;
            let delta = bordered.lu().solve(&rhs)?;
            *u += delta;
        }
        None
    }

    /// Unit tangent of the branch through `(x, Ω)`, oriented against the
    /// previous tangent.
    fn tangent(
        &self,
        x: &DVector<f64>,
        omega: f64,
        omega_ref: f64,
        previous: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let n = self.n_unknowns();
        let (_, _, jacs) = self.residual(x, omega);
        let jacobian = self.jacobian(omega, &jacs);
        let d_omega = self.derivative_coeffs(x) * omega_ref;
        let mut bordered = DMatrix::zeros(n + 1, n + 1);
        bordered.view_mut((0, 0), (n, n)).copy_from(&jacobian);
        bordered.view_mut((0, n), (n, 1)).copy_from(&d_omega);
        bordered.view_mut((n, 0), (1, n + 1)).copy_from(&previous.transpose());
        let mut rhs = DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let tangent = bordered
            .lu()
            .solve(&rhs)
            .ok_or_else(|| CoreError::Convergence {
                context: format!("pseudo-arclength tangent at drive frequency {omega}"),
                iterations: 0,
                residual: f64::NAN,
            })?;
        Ok(&tangent / tangent.norm())
    }

    /// Stability of the orbit via the monodromy matrix of the variational
    /// equations, integrated over one period.
    fn floquet_stable(&self, x: &DVector<f64>, omega: f64) -> bool {
        let (a_block, b_block) = x.as_slice().split_at(self.n_coeffs);
        let steps = 4 * self.n_samples;
        let h = 2.0 * PI / steps as f64;
        let rate = |theta: f64| -> [[f64; 2]; 2] {
            let a = self.series_at_phase(a_block, theta);
            let b = self.series_at_phase(b_block, theta);
            let (_, jac) = self.field.eval(a, b, theta, self.eps);
            let mut out = jac;
            for row in &mut out {
                for entry in row.iter_mut() {
                    *entry /= omega;
                }
            }
            out
        };
        let mul = |m: &[[f64; 2]; 2], p: &[[f64; 2]; 2]| -> [[f64; 2]; 2] {
            let mut out = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] = m[i][0] * p[0][j] + m[i][1] * p[1][j];
                }
            }
            out
        };
        let saxpy = |p: &[[f64; 2]; 2], w: f64, k: &[[f64; 2]; 2]| -> [[f64; 2]; 2] {
            let mut out = *p;
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += w * k[i][j];
                }
            }
            out
        };
        let mut phi = [[1.0, 0.0], [0.0, 1.0]];
        for step in 0..steps {
            let theta = step as f64 * h;
            let a1 = rate(theta);
            let a2 = rate(theta + 0.5 * h);
            let a4 = rate(theta + h);
            let k1 = mul(&a1, &phi);
            let k2 = mul(&a2, &saxpy(&phi, 0.5 * h, &k1));
            let k3 = mul(&a2, &saxpy(&phi, 0.5 * h, &k2));
            let k4 = mul(&a4, &saxpy(&phi, h, &k3));
            for i in 0..2 {
                for j in 0..2 {
                    phi[i][j] +=
                        h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
                }
            }
        }
        let trace = phi[0][0] + phi[1][1];
        let det = phi[0][0] * phi[1][1] - phi[0][1] * phi[1][0];
        let disc = trace * trace - 4.0 * det;
        let largest = if disc >= 0.0 {
            let root = disc.sqrt();
            (0.5 * (trace + root)).abs().max((0.5 * (trace - root)).abs())
        } else {
            det.abs().sqrt()
        };
        largest <= 1.0 + FLOQUET_TOL
    }

    /// Assembles an accepted point's observables.
    fn extract_point(
        &self,
        observable: &MappingObservable,
        x: &DVector<f64>,
        omega: f64,
        stable: bool,
        fold: bool,
    ) -> FrcPoint {
        let (a_block, b_block) = x.as_slice().split_at(self.n_coeffs);
        let mut amp_norm: f64 = 0.0;
        let mut amp_phys: f64 = 0.0;
        for i in 0..self.n_samples {
            let a = self.series_at_sample(a_block, i);
            let b = self.series_at_sample(b_block, i);
            amp_norm = amp_norm.max(((a * a + b * b) / 2.0).sqrt());
            let z = observable.lift(&[a, b]);
            amp_phys = amp_phys.max(observable.eval(&z, self.theta[i], self.eps).abs());
        }
        let phase = f64::atan2(-a_block[self.n_harmonics + 1], a_block[1]);
        FrcPoint {
            omega,
            amp_phys,
            amp_norm,
            phase,
            stable,
            fold,
        }
    }
}

/// Continues the periodic orbits of the realified ROM across a drive-
/// frequency window, with the forcing scaled by `eps`.
///
/// The branch starts from the small-amplitude solution at `omega_lo` and
/// ends when it leaves the window (folds included), exhausting the point
/// budget or an arclength underflow instead returns the partial branch with
/// a diagnostic.
pub fn continue_frc(
    rom: &RealizedRom,
    observable: &MappingObservable,
    omega_lo: f64,
    omega_hi: f64,
    eps: f64,
    opts: &ContinuationOptions,
) -> Result<FrcBranch> {
    if !(omega_lo.is_finite() && omega_hi.is_finite()) || omega_lo <= 0.0 || omega_hi <= omega_lo
    {
        return Err(CoreError::Config(format!(
            "invalid drive-frequency window [{omega_lo}, {omega_hi}]"
        )));
    }
    let field = PlanarField::new(rom)?;
    let hb = HbProblem::new(&field, opts, eps)?;
    let omega_ref = rom.lambda[0].im;
    if omega_ref <= 0.0 {
        return Err(CoreError::Config(
            "master eigenvalue must have a positive frequency".into(),
        ));
    }
    let n = hb.n_unknowns();

    let mut x = DVector::zeros(n);
    let (first_residual, _) = hb.newton_fixed(&mut x, omega_lo, opts)?;
    let mut max_residual = first_residual;

    let e_nu = {
        let mut t = DVector::zeros(n + 1);
        t[n] = 1.0;
        t
    };
    let mut tangent = hb.tangent(&x, omega_lo, omega_ref, &e_nu)?;
    let stable = hb.floquet_stable(&x, omega_lo);
    let mut points = vec![hb.extract_point(observable, &x, omega_lo, stable, false)];

    let mut u = DVector::zeros(n + 1);
    u.rows_mut(0, n).copy_from(&x);
    u[n] = omega_lo / omega_ref;

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
        let mut trial = &u + &tangent * ds;
        match hb.newton_arclength(&mut trial, &u, &tangent, ds, omega_ref, opts) {
            Some((residual, iterations)) => {
                let x = DVector::from_column_slice(&trial.as_slice()[..n]);
                let omega = trial[n] * omega_ref;
                let new_tangent = hb.tangent(&x, omega, omega_ref, &tangent)?;
                let fold = new_tangent[n] * tangent[n] < 0.0;
                let stable = hb.floquet_stable(&x, omega);
                points.push(hb.extract_point(observable, &x, omega, stable, fold));
                max_residual = max_residual.max(residual);
                u = trial;
                tangent = new_tangent;
                if iterations >= STEP_SLOW_ITERATIONS {
                    ds *= 0.5;
                } else if iterations <= STEP_FAST_ITERATIONS {
                    ds *= STEP_GROWTH;
                }
                ds = ds.clamp(opts.min_step, opts.max_step);
                if (omega > omega_hi && tangent[n] > 0.0)
                    || (omega < omega_lo && tangent[n] < 0.0)
                {
                    break;
                }
            }
            None => {
                ds *= 0.5;
                if ds < opts.min_step {
                    diagnostic = Some(format!(
                        "continuation stalled at Ω = {:.6}: arclength step underflow",
                        u[n] * omega_ref
                    ));
                    break;
                }
            }
        }
    }
    Ok(FrcBranch {
        points,
        max_residual,
        diagnostic,
    })
}

/// Amplitude–frequency relation of the conservative autonomous ROM.
///
/// The linear damping is removed (the nonlinear coefficients keep any
/// damping-induced parts) and the oscillation frequency is read from the
/// phase rate along each amplitude level.  `amp_norm` carries the
/// normal-coordinate amplitude `ρ`, `amp_phys` the peak observable over one
/// revolution of the autonomous mapping.
pub fn backbone(
    rom: &RealizedRom,
    observable: &MappingObservable,
    rho_max: f64,
    n_points: usize,
) -> Result<Vec<FrcPoint>> {
    if rom.n_masters != 1 {
        return Err(CoreError::Config(format!(
            "backbone extraction expects a single master pair, got {}",
            rom.n_masters
        )));
    }
    if !(rho_max.is_finite() && rho_max > 0.0) || n_points < 2 {
        return Err(CoreError::Config(format!(
            "invalid backbone range: rho_max {rho_max}, {n_points} points"
        )));
    }
    let conservative = rom.zero_linear_damping();
    let field = PlanarField::new(&conservative)?;
    let n_theta = 64;
    let mut points = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let rho = rho_max * k as f64 / (n_points - 1) as f64;
        let omega = if rho == 0.0 {
            rom.lambda[0].im
        } else {
            let (g, _) = field.eval(SQRT_2 * rho, 0.0, 0.0, 0.0);
            -g[1] / (SQRT_2 * rho)
        };
        let mut amp_phys: f64 = 0.0;
        for i in 0..n_theta {
            let theta = 2.0 * PI * i as f64 / n_theta as f64;
            let y = [SQRT_2 * rho * theta.cos(), -SQRT_2 * rho * theta.sin()];
            let z = observable.lift(&y);
            amp_phys = amp_phys.max(observable.eval_autonomous(&z).abs());
        }
        points.push(FrcPoint {
            omega,
            amp_phys,
            amp_norm: rho,
            phase: 0.0,
            stable: true,
            fold: false,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpim::parametrise::{parametrise_autonomous, parametrise_nonautonomous};
    use crate::dpim::system::DenseSystem;
    use crate::linalg::Csr;
    use crate::reduced::rom::realify;
    use crate::spectral::{
        build_first_order_eigentriples, solve_real_modes, RayleighDamping, Spectrum,
    };
    use crate::statics::HarmonicLoads;
    use num_complex::Complex64;

    fn duffing(omega0: f64, gamma: f64, q_factor: f64) -> DenseSystem {
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

    fn spectrum_of(sys: &DenseSystem) -> Spectrum {
        let modes = solve_real_modes(&sys.k, &sys.m, 1, 1e-12, 500).expect("modes");
        build_first_order_eigentriples(&modes, sys.damping, &[0]).expect("triples")
    }

    /// Full pipeline to a realified forced ROM of the single-dof oscillator
    /// driven by `force·cos Ωt`.
    fn duffing_rom(
        omega0: f64,
        gamma: f64,
        q_factor: f64,
        force: f64,
    ) -> (RealizedRom, MappingObservable, crate::dpim::parametrise::Parametrisation) {
        let sys = duffing(omega0, gamma, q_factor);
        let spectrum = spectrum_of(&sys);
        let mut param = parametrise_autonomous(&sys, &spectrum, 3, 1e-2).expect("parametrise");
        let loads = HarmonicLoads {
            forces: vec![vec![Complex64::new(force / 2.0, 0.0)]],
            stiffness: vec![Csr::zeros(1, 1)],
            higher_harmonic_fraction: 0.0,
        };
        parametrise_nonautonomous(&sys, &spectrum, &mut param, &loads, 2, spectrum.lambda[0].im)
            .expect("forced expansion");
        let rom = realify(&param).expect("realify");
        let observable = MappingObservable::new(&param, 0).expect("observable");
        (rom, observable, param)
    }

    #[test]
    fn linear_rom_traces_the_lorentzian_response() {
        let (omega0, q_factor, force) = (2.0, 50.0, 1e-3);
        let (rom, observable, param) = duffing_rom(omega0, 0.0, q_factor, force);
        let lambda = param.lambda[0];
        let f_hat = param
            .forcing
            .iter()
            .find(|b| b.harmonic == 1)
            .expect("+1 branch")
            .coeffs
            .f[0][0][0];
        let window = (0.985 * lambda.im, 1.015 * lambda.im);
        // Fine steps so the narrow resonance window is densely resolved.
        let opts = ContinuationOptions {
            initial_step: 1e-3,
            max_step: 1.5e-3,
            ..Default::default()
        };
        let branch =
            continue_frc(&rom, &observable, window.0, window.1, 1.0, &opts).expect("continuation");
        assert!(branch.diagnostic.is_none(), "{:?}", branch.diagnostic);
        assert!(
            branch.max_residual <= 1e-10,
            "periodic-orbit residual {} must stay below 1e-10",
            branch.max_residual
        );
        assert!(branch.points.len() >= 10, "branch must resolve the window");
        let mut peak = (0.0, 0.0);
        for point in &branch.points {
            assert!(point.stable, "a damped linear response is always stable");
            assert!(!point.fold, "a linear response has no saddle-nodes");
            // The ROM of a linear system is the linear complex mode equation
            // ż = λz + f̂ e^{iΩt}; its exact response modulus is a Lorentzian.
            let expected = f_hat.norm() / (Complex64::new(0.0, point.omega) - lambda).norm();
            assert!(
                (point.amp_norm - expected).abs() <= 1e-8 * expected,
                "normal amplitude {} must follow the closed form {expected} at Ω={}",
                point.amp_norm,
                point.omega
            );
            // Physical amplitude against the exact transfer function of the
            // oscillator; the frozen-coefficient error stays small inside
            // the resonance window.
            let denom = Complex64::new(
                omega0 * omega0 - point.omega * point.omega,
                omega0 / q_factor * point.omega,
            );
            let exact = force / denom.norm();
            assert!(
                (point.amp_phys - exact).abs() <= 2e-2 * exact,
                "physical amplitude {} must track the exact response {exact} at Ω={}",
                point.amp_phys,
                point.omega
            );
            if point.amp_norm > peak.1 {
                peak = (point.omega, point.amp_norm);
            }
        }
        let half_width = omega0 / (2.0 * q_factor);
        assert!(
            (peak.0 - lambda.im).abs() <= half_width / 5.0,
            "resonance peak at {} must sit near the damped frequency {}",
            peak.0,
            lambda.im
        );
    }

    #[test]
    fn hardening_duffing_folds_and_loses_stability_between_them() {
        let (omega0, q_factor, gamma, force) = (1.0, 100.0, 0.5, 2.5e-3);
        let (rom, observable, _) = duffing_rom(omega0, gamma, q_factor, force);
        let branch = continue_frc(
            &rom,
            &observable,
            0.985 * omega0,
            1.05 * omega0,
            1.0,
            &Default::default(),
        )
        .expect("continuation");
        assert!(branch.diagnostic.is_none(), "{:?}", branch.diagnostic);
        assert!(branch.max_residual <= 1e-10);
        let folds: Vec<usize> = branch
            .points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.fold.then_some(i))
            .collect();
        assert_eq!(
            folds.len(),
            2,
            "a hardening branch crossing its overhang has exactly one fold pair"
        );
        let flips: Vec<usize> = branch
            .points
            .windows(2)
            .enumerate()
            .filter_map(|(i, w)| (w[0].stable != w[1].stable).then_some(i + 1))
            .collect();
        assert_eq!(flips.len(), 2, "stability must change exactly twice");
        for (fold, flip) in folds.iter().zip(&flips) {
            assert!(
                fold.abs_diff(*flip) <= 1,
                "stability changes must coincide with the folds ({folds:?} vs {flips:?})"
            );
        }
        // Between the folds the middle sheet is unstable.
        assert!(
            branch.points[folds[0]..folds[1]].iter().all(|p| !p.stable),
            "the overhung middle branch must be unstable"
        );
        // First-order averaging puts the peak amplitude at Q·F/ω₀².
        let peak = branch
            .points
            .iter()
            .map(|p| p.amp_phys)
            .fold(0.0, f64::max);
        let averaged = q_factor * force / (omega0 * omega0);
        assert!(
            (peak - averaged).abs() <= 0.05 * averaged,
            "peak amplitude {peak} must sit near the averaging estimate {averaged}"
        );
    }

    #[test]
    fn zero_forcing_scale_collapses_to_the_trivial_branch() {
        let (rom, observable, _) = duffing_rom(1.0, 0.5, 100.0, 2.5e-3);
        let branch = continue_frc(&rom, &observable, 0.97, 1.03, 0.0, &Default::default())
            .expect("continuation");
        assert!(branch.diagnostic.is_none());
        for point in &branch.points {
            assert!(
                point.amp_norm <= 1e-12 && point.amp_phys <= 1e-12,
                "without forcing the only periodic orbit is the origin"
            );
            assert!(point.stable && !point.fold);
        }
        let omegas: Vec<f64> = branch.points.iter().map(|p| p.omega).collect();
        assert!(
            omegas.last().expect("points") > &1.03,
            "the trivial branch must still traverse the window, got {omegas:?}"
        );
    }

    #[test]
    fn backbone_is_vertical_for_linear_and_quadratic_for_duffing() {
        let (rom, observable, _) = duffing_rom(2.0, 0.0, 100.0, 0.0);
        let points = backbone(&rom, &observable, 0.3, 8).expect("backbone");
        for p in &points {
            assert!(
                (p.omega - rom.lambda[0].im).abs() <= 1e-12 * rom.lambda[0].im,
                "a linear backbone is vertical at the damped frequency"
            );
        }

        let (omega0, gamma) = (1.0, 0.5);
        let (rom, observable, _) = duffing_rom(omega0, gamma, 100.0, 0.0);
        let points = backbone(&rom, &observable, 0.025, 6).expect("backbone");
        let omega_origin = points[0].omega;
        // Fit ω = ω₀ + c₃·A² through the physical amplitudes.
        let (mut num, mut den) = (0.0, 0.0);
        for p in &points[1..] {
            let a_sq = p.amp_phys * p.amp_phys;
            num += a_sq * (p.omega - omega_origin);
            den += a_sq * a_sq;
        }
        let c3 = num / den;
        let expected = 3.0 * gamma / (8.0 * omega0);
        assert!(
            (c3 - expected).abs() <= 0.01 * expected,
            "backbone curvature {c3} must match the averaging value {expected} within 1%"
        );
    }

    #[test]
    fn csv_export_follows_the_common_schema() {
        let points = vec![FrcPoint {
            omega: 1.5,
            amp_phys: 0.25,
            amp_norm: 0.13,
            phase: -0.7,
            stable: true,
            fold: false,
        }];
        let csv = frc_csv(&points);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("omega,amp_phys,amp_norm,phase,stable,fold"),
            "header must match the documented schema"
        );
        let row = lines.next().expect("data row");
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[4], "1");
        assert_eq!(fields[5], "0");
        assert!((fields[0].parse::<f64>().expect("omega") - 1.5).abs() < 1e-15);
    }
}
