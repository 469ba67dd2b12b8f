//! Truncation-error diagnostics for the autonomous parametrisation.
//!
//! Substituting the order-`o` expansion into the unforced equations of motion
//! leaves a residual whose Taylor series starts at order `o + 1`: every
//! coefficient up to `o` is zeroed by a homological solve (and verified there
//! to machine accuracy), while the orders above come from products of solved
//! coefficients that no equation cancels.  The highest such product pairs the
//! cubic force with three order-`o` mapping factors, so the tail terminates
//! exactly at order `3o`.
//!
//! Along a fixed ray `z = r ẑ` the tail is a *polynomial in the amplitude*
//! `r`: each residual order `m` contributes `r^m` times a constant vector that
//! only depends on the direction `ẑ`.  [`autonomous_residual_tail`] assembles
//! those vectors once — per-order aggregates of the mapping, its derivatives,
//! and the reduced dynamics at `ẑ`, convolved by order — after which
//! evaluating the residual at any amplitude is a handful of vector sums.
//! That turns an amplitude sweep over a fine `r` grid from thousands of
//! nonlinear contractions into a few hundred, independent of the grid.
//!
//! [`autonomous_residual_direct`] evaluates the full residual at one point
//! with no order bookkeeping at all — totals only — and is the cross-check
//! that the tail algebra (in particular its claim that orders `≤ o` cancel)
//! is honest.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

use super::homological::{caxpy, cmatvec, cnorm};
use super::monomials::{Monomial, MonomialBasis};
use super::parametrise::Parametrisation;
use super::system::SecondOrderSystem;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Per-order aggregates of the expansion at one point of normal-coordinate
/// space: the mapping, the velocity mapping, their partial derivatives, and
/// the reduced dynamics, each summed over the monomials of its order.
struct RayAggregates {
    /// `psi[p][i] = Σ_{|𝓘|=p} Ψ_𝓘[i] π_𝓘(ẑ)`.
    psi: Vec<Vec<Complex64>>,
    /// Same sum over the velocity coefficients `Υ`.
    ups: Vec<Vec<Complex64>>,
    /// `dpsi[p][s][i] = Σ_{|𝓘|=p} mult_s(𝓘) π_{𝓘∖s}(ẑ) Ψ_𝓘[i]` — the
    /// derivative with respect to `z_s`, an order `p - 1` quantity.
    dpsi: Vec<Vec<Vec<Complex64>>>,
    /// Derivative aggregates of the velocity mapping.
    dups: Vec<Vec<Vec<Complex64>>>,
    /// `f[p][s] = Σ_{|𝓘|=p} f_{s𝓘} π_𝓘(ẑ)`.
    f: Vec<Vec<Complex64>>,
}

fn aggregates(param: &Parametrisation, basis: &MonomialBasis, z: &[Complex64]) -> RayAggregates {
    let n = param.n_dofs;
    let two_n = 2 * param.n_masters;
    let order = param.order;
    let zero_vec = vec![C_ZERO; n];
    let mut agg = RayAggregates {
        psi: vec![zero_vec.clone(); order + 1],
        ups: vec![zero_vec.clone(); order + 1],
        dpsi: vec![vec![zero_vec.clone(); two_n]; order + 1],
        dups: vec![vec![zero_vec; two_n]; order + 1],
        f: vec![vec![C_ZERO; two_n]; order + 1],
    };
    for p in 1..=order {
        for (idx, monomial) in basis.monomials(p).iter().enumerate() {
            let weight = monomial.eval(z);
            if weight != C_ZERO {
                caxpy(&mut agg.psi[p], weight, &param.autonomous.psi[p][idx]);
                caxpy(&mut agg.ups[p], weight, &param.autonomous.upsilon[p][idx]);
                for s in 0..two_n {
                    agg.f[p][s] += weight * param.autonomous.f[p][idx][s];
                }
            }
            for &s in &monomial.distinct_labels() {
                let reduced = monomial
                    .minus(&Monomial::new(vec![s]))
                    .expect("a distinct label is always removable");
                let dweight = monomial.multiplicity(s) as f64 * reduced.eval(z);
                if dweight != C_ZERO {
                    caxpy(&mut agg.dpsi[p][s as usize], dweight, &param.autonomous.psi[p][idx]);
                    caxpy(&mut agg.dups[p][s as usize], dweight, &param.autonomous.upsilon[p][idx]);
                }
            }
        }
    }
    agg
}

/// The residual of the unforced equations of motion along one ray of
/// normal-coordinate space, resolved by polynomial order.
///
/// Holds one force-row and one velocity-row vector per order in
/// `o + 1 ..= 3o`; [`eval`](Self::eval) sums them with the amplitude powers.
pub struct ResidualTail {
    terms: Vec<(usize, Vec<Complex64>, Vec<Complex64>)>,
}

impl ResidualTail {
    /// Lowest order present in the tail (`o + 1`).
    pub fn lowest_order(&self) -> usize {
        self.terms.first().map_or(0, |(m, _, _)| *m)
    }

    /// Stacked Euclidean norm of the residual at ray amplitude `r`.
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.terms.first().map_or(0, |(_, t, _)| t.len());
        let mut top = vec![C_ZERO; n];
        let mut bottom = vec![C_ZERO; n];
        for (m, t, b) in &self.terms {
            let weight = Complex64::new(r.powi(*m as i32), 0.0);
            caxpy(&mut top, weight, t);
            caxpy(&mut bottom, weight, b);
        }
        cnorm(&top).hypot(cnorm(&bottom))
    }
}

/// Assembles the order-resolved residual tail along the ray through `zhat`.
///
/// The direction is typically a unit vector of conjugate-pair form, but any
/// complex direction is admissible.  The cost is dominated by the nonlinear
/// contractions between per-order aggregates — a few hundred at order seven —
/// and is independent of how many amplitudes the tail is later evaluated at.
pub fn autonomous_residual_tail<S: SecondOrderSystem>(
    system: &S,
    param: &Parametrisation,
    zhat: &[Complex64],
) -> Result<ResidualTail> {
    let two_n = 2 * param.n_masters;
    if zhat.len() != two_n {
        return Err(CoreError::Dimension(format!(
            "ray direction has {} entries for {} normal coordinates",
            zhat.len(),
            two_n
        )));
    }
    let order = param.order;
    let n = param.n_dofs;
    let basis = param.basis();
    let agg = aggregates(param, &basis, zhat);

    let mut terms = Vec::with_capacity(2 * order);
    for m in order + 1..=3 * order {
        let mut chain_top = vec![C_ZERO; n];
        let mut chain_bottom = vec![C_ZERO; n];
        let mut has_chain = false;
        // Chain rule ∇Υ·f (and ∇Ψ·f): a derivative of order `p - 1` against a
        // reduced-dynamics factor of order `k` lands at `p - 1 + k = m`.  Both
        // factors are solved quantities of order at most `o`, so only the
        // combinations spilling past the truncation survive here.
        for p in 1..=order {
            let k = m + 1 - p;
            if k < 1 || k > order {
                continue;
            }
            for s in 0..two_n {
                let weight = agg.f[k][s];
                if weight != C_ZERO {
                    caxpy(&mut chain_top, weight, &agg.dups[p][s]);
                    caxpy(&mut chain_bottom, weight, &agg.dpsi[p][s]);
                    has_chain = true;
                }
            }
        }
        let mut top = if has_chain {
            cmatvec(system.mass(), &chain_top)
        } else {
            vec![C_ZERO; n]
        };
        let bottom = if has_chain {
            cmatvec(system.mass(), &chain_bottom)
        } else {
            vec![C_ZERO; n]
        };
        // Quadratic force: splittings a + b = m with both factors solved.
        for a in 1..=order {
            let b = m - a;
            if b < a || b > order {
                continue;
            }
            let factor = if a == b { 1.0 } else { 2.0 };
            let product = system.quadratic(&agg.psi[a], &agg.psi[b]);
            caxpy(&mut top, Complex64::new(factor, 0.0), &product);
        }
        // Cubic force: splittings a + b + c = m, counted once per unordered
        // triple of orders and weighted by its number of arrangements.
        for a in 1..=order {
            for b in a..=order {
                let Some(c) = m.checked_sub(a + b) else { continue };
                if c < b || c > order {
                    continue;
                }
                let factor = if a == c {
                    1.0
                } else if a == b || b == c {
                    3.0
                } else {
                    6.0
                };
                let product = system.cubic(&agg.psi[a], &agg.psi[b], &agg.psi[c]);
                caxpy(&mut top, Complex64::new(factor, 0.0), &product);
            }
        }
        terms.push((m, top, bottom));
    }
    Ok(ResidualTail { terms })
}

/// Full residual of the unforced equations of motion at one point, assembled
/// from totals with no order bookkeeping.
///
/// Unlike the tail this includes the orders at and below the truncation, so
/// it reports the homological solver floor plus the genuine truncation error.
pub fn autonomous_residual_direct<S: SecondOrderSystem>(
    system: &S,
    param: &Parametrisation,
    z: &[Complex64],
) -> Result<f64> {
    let two_n = 2 * param.n_masters;
    if z.len() != two_n {
        return Err(CoreError::Dimension(format!(
            "evaluation point has {} entries for {} normal coordinates",
            z.len(),
            two_n
        )));
    }
    let n = param.n_dofs;
    let basis = param.basis();
    let agg = aggregates(param, &basis, z);

    let mut psi = vec![C_ZERO; n];
    let mut ups = vec![C_ZERO; n];
    let mut f = vec![C_ZERO; two_n];
    let mut dpsi = vec![vec![C_ZERO; n]; two_n];
    let mut dups = vec![vec![C_ZERO; n]; two_n];
    let one = Complex64::new(1.0, 0.0);
    for p in 1..=param.order {
        caxpy(&mut psi, one, &agg.psi[p]);
        caxpy(&mut ups, one, &agg.ups[p]);
        for s in 0..two_n {
            f[s] += agg.f[p][s];
            caxpy(&mut dpsi[s], one, &agg.dpsi[p][s]);
            caxpy(&mut dups[s], one, &agg.dups[p][s]);
        }
    }

    let mut chain_top = vec![C_ZERO; n];
    let mut chain_bottom = vec![C_ZERO; n];
    for s in 0..two_n {
        caxpy(&mut chain_top, f[s], &dups[s]);
        caxpy(&mut chain_bottom, f[s], &dpsi[s]);
    }
    let damping = system.damping();
    let mut top = cmatvec(system.mass(), &chain_top);
    let m_ups = cmatvec(system.mass(), &ups);
    let k_ups = cmatvec(system.stiffness(), &ups);
    caxpy(&mut top, Complex64::new(damping.alpha, 0.0), &m_ups);
    caxpy(&mut top, Complex64::new(damping.beta, 0.0), &k_ups);
    caxpy(&mut top, one, &cmatvec(system.stiffness(), &psi));
    caxpy(&mut top, one, &system.quadratic(&psi, &psi));
    caxpy(&mut top, one, &system.cubic(&psi, &psi, &psi));

    let mut bottom = cmatvec(system.mass(), &chain_bottom);
    caxpy(&mut bottom, -one, &m_ups);

    Ok(cnorm(&top).hypot(cnorm(&bottom)))
}

/// Least-squares slope of `ln y` against `ln x`.
///
/// Samples with a non-positive coordinate are ignored; returns `NaN` when
/// fewer than two usable samples remain.
pub fn fit_loglog_slope(samples: &[(f64, f64)]) -> f64 {
    let points: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if points.len() < 2 {
        return f64::NAN;
    }
    let inv = 1.0 / points.len() as f64;
    let x_mean = points.iter().map(|(x, _)| x).sum::<f64>() * inv;
    let y_mean = points.iter().map(|(_, y)| y).sum::<f64>() * inv;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in &points {
        num += (x - x_mean) * (y - y_mean);
        den += (x - x_mean) * (x - x_mean);
    }
    num / den
}
