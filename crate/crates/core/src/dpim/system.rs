//! The second-order dynamical system seen by the reduction machinery.
//!
//! Every consumer of the equations of motion — the invariant-manifold
//! parametrisation, the harmonic-balance and transient reference solvers —
//! needs the same five ingredients: the mass matrix, the effective linear
//! stiffness about the operating point, mass/stiffness-proportional damping
//! coefficients, and the quadratic and cubic force contractions.  The trait
//! below captures exactly that, so the same algorithms run on a full
//! finite-element model and on small explicit systems used for verification
//! and single-degree-of-freedom benchmarks.
//!
//! Conventions: all vectors live on the free degrees of freedom; the damping
//! matrix is never formed, since `C = α M + β K` lets every consumer fold the
//! two scalars into its own operators; `quadratic` and `cubic` are symmetric
//! in their arguments and return the force contribution, i.e. the equations of
//! motion read `M ü + C u̇ + K u + quadratic(u,u) + cubic(u,u,u) = f(t)`.

use crate::fem::{contract_h, FeModel};
use crate::linalg::Csr;
use crate::scalar::Scalar;
use crate::spectral::RayleighDamping;
use crate::statics::StaticState;

/// Mass, stiffness, damping coefficients and nonlinear force contractions of
/// a structure about its operating point.
pub trait SecondOrderSystem {
    /// Number of degrees of freedom.
    fn n_dofs(&self) -> usize;

    /// Mass matrix (symmetric positive definite).
    fn mass(&self) -> &Csr<f64>;

    /// Effective linear stiffness about the operating point.
    fn stiffness(&self) -> &Csr<f64>;

    /// Mass- and stiffness-proportional damping coefficients.
    fn damping(&self) -> RayleighDamping;

    /// Symmetric quadratic force contraction evaluated at `(a, b)`.
    fn quadratic<T: Scalar<R = f64>>(&self, a: &[T], b: &[T]) -> Vec<T>;

    /// Symmetric cubic force contraction evaluated at `(a, b, c)`.
    fn cubic<T: Scalar<R = f64>>(&self, a: &[T], b: &[T], c: &[T]) -> Vec<T>;

    /// Assembled tangent operator of the restoring force at displacement
    /// `u`: `K + 2 G(u, ·) + 3 H(u, u, ·)`.  Used by the time-domain and
    /// harmonic-balance Newton loops of the reference solvers.
    fn tangent(&self, u: &[f64]) -> Csr<f64>;
}

/// Finite-element model linearised about a biased static equilibrium.
///
/// The stiffness is the prestressed operator assembled by the static solve;
/// the quadratic contraction carries the cubic-through-bias correction, so
/// the trait exposes the dynamics of the displacement *relative to* the
/// equilibrium.
pub struct FeSystem<'a> {
    pub model: &'a FeModel,
    pub state: &'a StaticState,
    pub damping: RayleighDamping,
    mass: Csr<f64>,
}

impl<'a> FeSystem<'a> {
    pub fn new(model: &'a FeModel, state: &'a StaticState, damping: RayleighDamping) -> Self {
        let mass = model.assemble_mass();
        FeSystem {
            model,
            state,
            damping,
            mass,
        }
    }
}

impl SecondOrderSystem for FeSystem<'_> {
    fn n_dofs(&self) -> usize {
        self.model.n_free()
    }

    fn mass(&self) -> &Csr<f64> {
        &self.mass
    }

    fn stiffness(&self) -> &Csr<f64> {
        &self.state.k_tilde
    }

    fn damping(&self) -> RayleighDamping {
        self.damping
    }

    fn quadratic<T: Scalar<R = f64>>(&self, a: &[T], b: &[T]) -> Vec<T> {
        self.state.g_tilde(self.model, a, b)
    }

    fn cubic<T: Scalar<R = f64>>(&self, a: &[T], b: &[T], c: &[T]) -> Vec<T> {
        contract_h(self.model, a, b, c)
    }

    fn tangent(&self, u: &[f64]) -> Csr<f64> {
        // The effective stiffness subtracts the mean parametric part, so the
        // tangent about the equilibrium does the same at every displacement.
        let total: Vec<f64> = self
            .state
            .u0
            .iter()
            .zip(u)
            .map(|(u0, du)| u0 + du)
            .collect();
        let full = self.model.tangent_stiffness(&total);
        Csr::linear_combination(&[(1.0, &full), (-1.0, &self.state.k_p0)])
    }
}

/// Small explicit system with dense nonlinear tensors.
///
/// `g[i][j][k]` and `h[i][j][k][l]` are the components of the quadratic and
/// cubic force tensors; they must be symmetric in their trailing indices
/// (use [`DenseSystem::symmetrise`] after filling arbitrary entries).  Used
/// for single-degree-of-freedom benchmark fixtures and for verification
/// against brute-force polynomial algebra, where the finite-element
/// contractions would obscure the arithmetic under test.
pub struct DenseSystem {
    pub m: Csr<f64>,
    pub k: Csr<f64>,
    pub damping: RayleighDamping,
    pub g: Vec<Vec<Vec<f64>>>,
    pub h: Vec<Vec<Vec<Vec<f64>>>>,
}

impl DenseSystem {
    /// Linear system of the given size: zero nonlinear tensors.
    pub fn linear(m: Csr<f64>, k: Csr<f64>, damping: RayleighDamping) -> Self {
        let n = m.n_rows();
        DenseSystem {
            m,
            k,
            damping,
            g: vec![vec![vec![0.0; n]; n]; n],
            h: vec![vec![vec![vec![0.0; n]; n]; n]; n],
        }
    }

    /// Replaces both tensors by their symmetric parts over the trailing
    /// indices, leaving the force they produce on symmetric arguments
    /// unchanged up to the averaging.
    pub fn symmetrise(&mut self) {
        let n = self.g.len();
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let avg = 0.5 * (self.g[i][j][k] + self.g[i][k][j]);
                    self.g[i][j][k] = avg;
                    self.g[i][k][j] = avg;
                }
            }
        }
        // The cubic sweep reads entries it would overwrite in place, so
        // rebuild from a snapshot.
        let src = self.h.clone();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let avg = (src[i][j][k][l]
                            + src[i][j][l][k]
                            + src[i][k][j][l]
                            + src[i][k][l][j]
                            + src[i][l][j][k]
                            + src[i][l][k][j])
                            / 6.0;
                        self.h[i][j][k][l] = avg;
                    }
                }
            }
        }
    }
}

impl SecondOrderSystem for DenseSystem {
    fn n_dofs(&self) -> usize {
        self.m.n_rows()
    }

    fn mass(&self) -> &Csr<f64> {
        &self.m
    }

    fn stiffness(&self) -> &Csr<f64> {
        &self.k
    }

    fn damping(&self) -> RayleighDamping {
        self.damping
    }

    fn quadratic<T: Scalar<R = f64>>(&self, a: &[T], b: &[T]) -> Vec<T> {
        let n = self.n_dofs();
        let mut out = vec![T::from_real(0.0); n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let w = self.g[i][j][k];
                    if w != 0.0 {
                        out[i] += (a[j] * b[k]).scale(w);
                    }
                }
            }
        }
        out
    }

    fn cubic<T: Scalar<R = f64>>(&self, a: &[T], b: &[T], c: &[T]) -> Vec<T> {
        let n = self.n_dofs();
        let mut out = vec![T::from_real(0.0); n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let w = self.h[i][j][k][l];
                        if w != 0.0 {
                            out[i] += (a[j] * b[k] * c[l]).scale(w);
                        }
                    }
                }
            }
        }
        out
    }

    fn tangent(&self, u: &[f64]) -> Csr<f64> {
        let n = self.n_dofs();
        let mut triplets = Vec::new();
        for (i, j, v) in self.k.iter() {
            triplets.push((i, j, v));
        }
        // With symmetrised tensors the derivative of G(u,u) in direction m
        // is 2 Σ_j g[i][m][j] u_j, and of H(u,u,u) is 3 Σ_{j,l} h[i][m][j][l]
        // u_j u_l.
        for i in 0..n {
            for m in 0..n {
                let mut v = 0.0;
                for j in 0..n {
                    v += 2.0 * self.g[i][m][j] * u[j];
                    for l in 0..n {
                        v += 3.0 * self.h[i][m][j][l] * u[j] * u[l];
                    }
                }
                if v != 0.0 {
                    triplets.push((i, m, v));
                }
            }
        }
        Csr::from_triplets(n, n, &triplets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn sample_system() -> DenseSystem {
        let m = Csr::identity(2);
        let k = Csr::from_triplets(2, 2, &[(0, 0, 4.0), (1, 1, 9.0)]);
        let mut sys = DenseSystem::linear(m, k, RayleighDamping { alpha: 0.0, beta: 0.0 });
        sys.g[0][0][1] = 3.0;
        sys.h[1][0][0][1] = 5.0;
        sys.symmetrise();
        sys
    }

    #[test]
    fn symmetrised_tensors_give_argument_order_independence() {
        let sys = sample_system();
        let a = [C64::new(1.0, 2.0), C64::new(-0.5, 0.3)];
        let b = [C64::new(0.7, -1.1), C64::new(2.0, 0.0)];
        let c = [C64::new(0.2, 0.4), C64::new(-1.0, 0.6)];
        let gab = sys.quadratic(&a, &b);
        let gba = sys.quadratic(&b, &a);
        for i in 0..2 {
            assert!(
                (gab[i] - gba[i]).norm() < 1e-14,
                "quadratic contraction must be symmetric in its arguments"
            );
        }
        let habc = sys.cubic(&a, &b, &c);
        let hcab = sys.cubic(&c, &a, &b);
        let hbca = sys.cubic(&b, &c, &a);
        for i in 0..2 {
            assert!(
                (habc[i] - hcab[i]).norm() < 1e-14 && (habc[i] - hbca[i]).norm() < 1e-14,
                "cubic contraction must be symmetric under argument rotation"
            );
        }
    }

    #[test]
    fn tangent_matches_a_finite_difference_of_the_force() {
        let sys = sample_system();
        let u = [0.3f64, -0.2];
        let tangent = sys.tangent(&u);
        let force = |w: &[f64]| -> Vec<f64> {
            let k = sys.stiffness().matvec(w);
            let g = sys.quadratic(w, w);
            let h = sys.cubic(w, w, w);
            (0..2).map(|i| k[i] + g[i] + h[i]).collect()
        };
        let step = 1e-6;
        for dir in 0..2 {
            let mut up = u;
            let mut down = u;
            up[dir] += step;
            down[dir] -= step;
            let (fp, fm) = (force(&up), force(&down));
            for i in 0..2 {
                let fd = (fp[i] - fm[i]) / (2.0 * step);
                assert!(
                    (tangent.get(i, dir) - fd).abs() <= 1e-7 * (1.0 + fd.abs()),
                    "tangent entry ({i},{dir}) = {} must match the finite difference {fd}",
                    tangent.get(i, dir)
                );
            }
        }
    }

    #[test]
    fn contractions_match_hand_expansion_on_real_input() {
        let sys = sample_system();
        let u = [2.0f64, -1.0];
        // g[0][0][1] = g[0][1][0] = 1.5 after symmetrisation:
        // force_0 = 1.5 u0 u1 + 1.5 u1 u0 = 3 u0 u1.
        let g = sys.quadratic(&u, &u);
        assert!((g[0] - 3.0 * 2.0 * (-1.0)).abs() < 1e-14, "quadratic force must match hand expansion");
        assert!(g[1].abs() < 1e-14);
        // h[1][0][0][1] = 5 spread over three slots of u0 u0 u1:
        // force_1 = 5 u0^2 u1 regardless of the symmetrised layout.
        let h = sys.cubic(&u, &u, &u);
        assert!((h[1] - 5.0 * 4.0 * (-1.0)).abs() < 1e-13, "cubic force must match hand expansion");
        assert!(h[0].abs() < 1e-14);
    }
}
