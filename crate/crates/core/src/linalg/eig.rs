//! Smallest eigenpairs of the symmetric generalized problem K Φ = ω² M Φ.
//!
//! Subspace iteration on the shift-inverted operator K⁻¹M: the banded
//! factorisation of K is reused across iterations, a Rayleigh–Ritz
//! projection extracts approximations, and iteration continues until the
//! leading `n_modes` pairs satisfy ‖KΦ − ω²MΦ‖ ≤ tol·‖KΦ‖. Only the lowest
//! few structural modes are ever requested, for which this is both simple
//! and fast. The starting block is filled by a fixed-seed SplitMix64
//! stream so results are bit-reproducible run to run.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{CoreError, Result};
use crate::linalg::{BandMatrix, Csr};
use crate::scalar::{Real, Scalar};
use num_traits::Float;

/// Mass-normalised solution of K Φ = ω² M Φ, ascending in ω.
#[derive(Debug, Clone)]
pub struct RealModes<R: nalgebra::Scalar> {
    /// Angular eigenfrequencies ω_j (rad per time unit).
    pub omega: Vec<R>,
    /// Mode shapes as columns, ΦᵀMΦ = I.
    pub phi: DMatrix<R>,
}

/// Compute the `n_modes` smallest eigenpairs of (K, M), both symmetric
/// with K positive definite (a non-positive Ritz value trips the buckling
/// guard). `tol` bounds the relative residual ‖KΦ − ω²MΦ‖/‖KΦ‖.
pub fn smallest_modes<R>(
    k: &Csr<R>,
    m: &Csr<R>,
    n_modes: usize,
    tol: R,
    max_iter: usize,
) -> Result<RealModes<R>>
where
    R: Real + Scalar<R = R> + nalgebra::RealField + Copy,
{
    let n = k.n_rows();
    if k.n_cols() != n || m.n_rows() != n || m.n_cols() != n {
        return Err(CoreError::Dimension(format!(
            "eigenproblem operators must be square and conforming (K {}x{}, M {}x{})",
            k.n_rows(),
            k.n_cols(),
            m.n_rows(),
            m.n_cols()
        )));
    }
    if n_modes == 0 || n_modes > n {
        return Err(CoreError::Config(format!(
            "requested {n_modes} modes from an {n}-dof system"
        )));
    }

    // Banded factorisation of K, reused throughout the iteration.
    let bw = k.bandwidth();
    let mut kb = BandMatrix::<R>::zeros(n, bw, bw);
    kb.add_csr_scaled(k, R::one());
    let klu = kb.factor()?;

    // Subspace width: extra vectors accelerate convergence of the wanted set.
    let s = (2 * n_modes).max(n_modes + 8).min(n);

    // Deterministic starting block.
    let mut seed = 0x2545f4914f6cdd1du64;
    let mut x = DMatrix::<R>::zeros(n, s);
    for j in 0..s {
        for i in 0..n {
            seed = splitmix64(seed);
            let u = ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            x[(i, j)] = R::from_f64_lit(u);
        }
    }

    let mut theta_prev = vec![<R as Float>::max_value(); n_modes];
    for iteration in 0..max_iter {
        // Y = M X, Z = K⁻¹ Y.
        let mut y = DMatrix::<R>::zeros(n, s);
        let mut z = DMatrix::<R>::zeros(n, s);
        let mut col = vec![R::zero(); n];
        for j in 0..s {
            let xj: Vec<R> = x.column(j).iter().copied().collect();
            m.matvec_into(&xj, &mut col);
            for i in 0..n {
                y[(i, j)] = col[i];
            }
            let zj = klu.solve_refined(|v| k.matvec(v), &col, 1);
            for i in 0..n {
                z[(i, j)] = zj[i];
            }
        }

        // Rayleigh–Ritz on span(Z): Ar = Zᵀ K Z = Zᵀ Y, Br = Zᵀ M Z.
        let mut ar = z.transpose() * &y;
        let mut mz = DMatrix::<R>::zeros(n, s);
        for j in 0..s {
            let zj: Vec<R> = z.column(j).iter().copied().collect();
            m.matvec_into(&zj, &mut col);
            for i in 0..n {
                mz[(i, j)] = col[i];
            }
        }
        let mut br = z.transpose() * &mz;
        // Symmetrise against assembly round-off.
        symmetrise(&mut ar);
        symmetrise(&mut br);

        let (theta, q) = small_gevp(ar, br)?;
        x = &z * &q;

        // Ritz-value stagnation check, then the authoritative residual test
        // (also run periodically so early convergence is noticed).
        let stalled = (0..n_modes).all(|j| {
            let d = Float::abs(theta[j] - theta_prev[j]);
            d <= R::from_f64_lit(1e-13) * Float::max(Float::abs(theta[j]), R::one())
        });
        theta_prev[..n_modes].copy_from_slice(&theta[..n_modes]);

        if stalled || iteration % 5 == 4 || iteration + 1 == max_iter {
            let mut worst = R::zero();
            for j in 0..n_modes {
                if theta[j] <= R::zero() {
                    return Err(CoreError::Buckling(format!(
                        "non-positive eigenvalue {:e} for mode {j}",
                        theta[j]
                            .to_f64()
                            .expect("eigenvalue converts to f64")
                    )));
                }
                let xj: Vec<R> = x.column(j).iter().copied().collect();
                let kx = k.matvec(&xj);
                let mx = m.matvec(&xj);
                let mut num = R::zero();
                let mut den = R::zero();
                for i in 0..n {
                    let r = kx[i] - theta[j] * mx[i];
                    num += r * r;
                    den += kx[i] * kx[i];
                }
                let rel = Float::sqrt(num / Float::max(den, <R as Float>::min_positive_value()));
                if rel > worst {
                    worst = rel;
                }
            }
            if worst <= tol {
                let mut omega = Vec::with_capacity(n_modes);
                let mut phi = DMatrix::<R>::zeros(n, n_modes);
                for j in 0..n_modes {
                    omega.push(Float::sqrt(theta[j]));
                    let mut cj: DVector<R> = x.column(j).into_owned();
                    fix_sign(&mut cj);
                    phi.set_column(j, &cj);
                }
                return Ok(RealModes { omega, phi });
            }
            if iteration + 1 == max_iter {
                return Err(CoreError::Convergence {
                    context: "subspace eigeniteration".into(),
                    iterations: max_iter,
                    residual: worst.to_f64().expect("residual converts to f64"),
                });
            }
        }
    }
    unreachable!("loop exits via return")
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn symmetrise<R: nalgebra::RealField + Copy>(a: &mut DMatrix<R>) {
    let s = a.nrows();
    for i in 0..s {
        for j in (i + 1)..s {
            let v = (a[(i, j)] + a[(j, i)]) / nalgebra::convert::<f64, R>(2.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Dense symmetric-definite GEVP: A q = θ B q with B SPD; ascending θ,
/// B-orthonormal columns in Q.
fn small_gevp<R: nalgebra::RealField + Copy>(
    a: DMatrix<R>,
    b: DMatrix<R>,
) -> Result<(Vec<R>, DMatrix<R>)> {
    let s = a.nrows();
    let chol = Cholesky::<R, Dyn>::new(b).ok_or_else(|| CoreError::Convergence {
        context: "Rayleigh–Ritz projection lost definiteness".into(),
        iterations: 0,
        residual: f64::NAN,
    })?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .expect("triangular factor of an SPD matrix is invertible");
    let mut c = &linv * a * linv.transpose();
    symmetrise(&mut c);
    let se = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&i, &j| {
        se.eigenvalues[i]
            .partial_cmp(&se.eigenvalues[j])
            .expect("eigenvalues are finite")
    });
    let theta: Vec<R> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut q = DMatrix::<R>::zeros(s, s);
    for (newj, &oldj) in order.iter().enumerate() {
        q.set_column(newj, &se.eigenvectors.column(oldj));
    }
    let q = linv.transpose() * q;
    Ok((theta, q))
}

/// Deterministic sign convention: the entry of largest magnitude is positive.
fn fix_sign<R: nalgebra::RealField + Copy>(v: &mut DVector<R>) {
    let mut imax = 0;
    let mut best = R::zero();
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            imax = i;
        }
    }
    if v[imax] < R::zero() {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_pencil_has_known_modes() {
        // K = diag(1,4,9), M = I → ω = (1,2,3), axis-aligned modes.
        let k = Csr::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 4.0), (2, 2, 9.0)]);
        let m = Csr::<f64>::identity(3);
        let modes = smallest_modes(&k, &m, 3, 1e-12, 100).expect("solver succeeds");
        assert_relative_eq!(modes.omega[0], 1.0, max_relative = 1e-10);
        assert_relative_eq!(modes.omega[1], 2.0, max_relative = 1e-10);
        assert_relative_eq!(modes.omega[2], 3.0, max_relative = 1e-10);
        for j in 0..3 {
            assert_relative_eq!(modes.phi[(j, j)].abs(), 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn single_dof_k4_m1() {
        let k = Csr::from_triplets(1, 1, &[(0, 0, 4.0)]);
        let m = Csr::from_triplets(1, 1, &[(0, 0, 1.0)]);
        let modes = smallest_modes(&k, &m, 1, 1e-12, 50).expect("solver succeeds");
        assert_relative_eq!(modes.omega[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(modes.phi[(0, 0)], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn tridiagonal_chain_matches_analytic_spectrum() {
        // Fixed-fixed spring chain: K tridiag(-1, 2, -1), M = I/(n+1)²-ish.
        // Analytic eigenvalues of tridiag are 2 − 2cos(jπ/(n+1)).
        let n = 50;
        let mut kt = Vec::new();
        for i in 0..n {
            kt.push((i, i, 2.0));
            if i + 1 < n {
                kt.push((i, i + 1, -1.0));
                kt.push((i + 1, i, -1.0));
            }
        }
        let k = Csr::from_triplets(n, n, &kt);
        let m = Csr::<f64>::identity(n);
        let modes = smallest_modes(&k, &m, 4, 1e-11, 300).expect("solver succeeds");
        for j in 0..4 {
            let lam = 2.0 - 2.0 * ((j as f64 + 1.0) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert_relative_eq!(modes.omega[j] * modes.omega[j], lam, max_relative = 1e-9);
        }
        // Mass-normalisation: ΦᵀMΦ = I.
        for a in 0..4 {
            for b in 0..4 {
                let pa: Vec<f64> = modes.phi.column(a).iter().copied().collect();
                let mb = m.matvec(&modes.phi.column(b).iter().copied().collect::<Vec<_>>());
                let dot: f64 = pa.iter().zip(&mb).map(|(x, y)| x * y).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_relative_eq!(dot, expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn indefinite_stiffness_trips_buckling_guard() {
        let k = Csr::from_triplets(2, 2, &[(0, 0, -1.0), (1, 1, 4.0)]);
        let m = Csr::<f64>::identity(2);
        let err = smallest_modes(&k, &m, 1, 1e-10, 100).expect_err("must flag buckling");
        assert!(matches!(err, CoreError::Buckling(_)), "got {err:?}");
    }

    #[test]
    fn reproducible_across_runs() {
        let n = 20;
        let mut kt = Vec::new();
        for i in 0..n {
            kt.push((i, i, 3.0 + (i as f64 * 0.3).sin()));
            if i + 1 < n {
                kt.push((i, i + 1, -1.0));
                kt.push((i + 1, i, -1.0));
            }
        }
        let k = Csr::from_triplets(n, n, &kt);
        let m = Csr::<f64>::identity(n);
        let a = smallest_modes(&k, &m, 3, 1e-11, 200).expect("first run");
        let b = smallest_modes(&k, &m, 3, 1e-11, 200).expect("second run");
        assert_eq!(a.omega, b.omega);
        assert_eq!(a.phi, b.phi);
    }
}
