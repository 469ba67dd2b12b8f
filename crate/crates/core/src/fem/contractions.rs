//! Quadratic and cubic nonlinear force contractions.
//!
//! With Green–Lagrange strain E(u) = e(u) + ½Q(u,u), where
//! e(u) = sym ∇u and Q(a,b)_ij = ½(a_{k,i} b_{k,j} + b_{k,i} a_{k,j}),
//! the Saint-Venant–Kirchhoff internal force splits exactly into
//! f_int(U) = K U + G(U,U) + H(U,U,U). This module evaluates the
//! symmetric bilinear G and trilinear H against arbitrary vectors:
//!
//!   δuᵀ G(a,b)   = ½ ∫ 𝒜e(a):Q(b,δu) + 𝒜e(b):Q(a,δu) + 𝒜Q(a,b):e(δu)
//!   δuᵀ H(a,b,c) = ⅙ ∫ 𝒜Q(a,b):Q(c,δu) + 𝒜Q(b,c):Q(a,δu) + 𝒜Q(c,a):Q(b,δu)
//!
//! Both are generic over real and complex vectors (the elasticity tensor
//! and geometry stay real), which the invariant-manifold solver relies
//! on to form complex right-hand sides with the full-order operators.

use nalgebra::Matrix6;

use crate::fem::hex8::QuadraturePoint;
use crate::fem::model::FeModel;
use crate::scalar::Scalar;

/// Gather the 24 element dof values, zero on fixed dofs.
#[inline]
pub(crate) fn gather<T: Scalar<R = f64>>(dofs: &[Option<usize>; 24], u: &[T]) -> [T; 24] {
    let mut vals = [T::zero(); 24];
    for (slot, d) in dofs.iter().enumerate() {
        if let Some(j) = *d {
            vals[slot] = u[j];
        }
    }
    vals
}

/// Displacement gradient g[k][i] = ∂u_k/∂x_i at a quadrature point.
#[inline]
pub(crate) fn grad<T: Scalar<R = f64>>(qp: &QuadraturePoint, vals: &[T; 24]) -> [[T; 3]; 3] {
    let mut g = [[T::zero(); 3]; 3];
    for a in 0..8 {
        for k in 0..3 {
            let v = vals[3 * a + k];
            for i in 0..3 {
                g[k][i] += v.scale(qp.dndx[a][i]);
            }
        }
    }
    g
}

/// Linear strain e(u) in engineering Voigt order (11,22,33,23,31,12).
#[inline]
pub(crate) fn voigt_lin<T: Scalar<R = f64>>(g: &[[T; 3]; 3]) -> [T; 6] {
    [
        g[0][0],
        g[1][1],
        g[2][2],
        g[1][2] + g[2][1],
        g[0][2] + g[2][0],
        g[0][1] + g[1][0],
    ]
}

/// Q(a,b) in engineering Voigt order: Q_ij = ½(a_{k,i}b_{k,j} + b_{k,i}a_{k,j}),
/// shear rows doubled.
#[inline]
pub(crate) fn voigt_q<T: Scalar<R = f64>>(ga: &[[T; 3]; 3], gb: &[[T; 3]; 3]) -> [T; 6] {
    let dot = |i: usize, j: usize| -> T {
        let mut acc = T::zero();
        for k in 0..3 {
            acc += ga[k][i] * gb[k][j] + gb[k][i] * ga[k][j];
        }
        acc.scale(0.5)
    };
    let q11 = dot(0, 0);
    let q22 = dot(1, 1);
    let q33 = dot(2, 2);
    let q23 = dot(1, 2);
    let q31 = dot(2, 0);
    let q12 = dot(0, 1);
    [q11, q22, q33, q23 + q23, q31 + q31, q12 + q12]
}

/// Apply the (real) elasticity tensor to a Voigt strain.
#[inline]
pub(crate) fn apply_c<T: Scalar<R = f64>>(c: &Matrix6<f64>, e: &[T; 6]) -> [T; 6] {
    let mut s = [T::zero(); 6];
    for i in 0..6 {
        let mut acc = T::zero();
        for j in 0..6 {
            acc += e[j].scale(c[(i, j)]);
        }
        s[i] = acc;
    }
    s
}

/// Voigt stress back to a symmetric 3×3 matrix.
#[inline]
pub(crate) fn voigt_to_mat<T: Scalar<R = f64>>(s: &[T; 6]) -> [[T; 3]; 3] {
    [
        [s[0], s[5], s[4]],
        [s[5], s[1], s[3]],
        [s[4], s[3], s[2]],
    ]
}

/// Accumulate nodal forces f[3a+k] += Σ_j R[k][j] ∂N_a/∂x_j (the
/// quadrature weight is folded into R).
#[inline]
pub(crate) fn scatter_force<T: Scalar<R = f64>>(
    dofs: &[Option<usize>; 24],
    qp: &QuadraturePoint,
    r: &[[T; 3]; 3],
    out: &mut [T],
) {
    for a in 0..8 {
        for k in 0..3 {
            if let Some(dof) = dofs[3 * a + k] {
                let mut acc = T::zero();
                for j in 0..3 {
                    acc += r[k][j].scale(qp.dndx[a][j]);
                }
                out[dof] += acc;
            }
        }
    }
}

#[inline]
fn matmul_add<T: Scalar<R = f64>>(g: &[[T; 3]; 3], s: &[[T; 3]; 3], r: &mut [[T; 3]; 3]) {
    for k in 0..3 {
        for j in 0..3 {
            let mut acc = T::zero();
            for i in 0..3 {
                acc += g[k][i] * s[i][j];
            }
            r[k][j] += acc;
        }
    }
}

/// The symmetric quadratic force G(a, b).
pub fn contract_g<T: Scalar<R = f64>>(model: &FeModel, a: &[T], b: &[T]) -> Vec<T> {
    assert_eq!(a.len(), model.n_free(), "vector length mismatch");
    assert_eq!(b.len(), model.n_free(), "vector length mismatch");
    let mut out = vec![T::zero(); model.n_free()];
    for e in 0..model.mesh.n_elems() {
        let c = model.material_of(e).elasticity.voigt();
        let dofs = &model.elem_dofs[e];
        let va = gather(dofs, a);
        let vb = gather(dofs, b);
        for qp in &model.elem_qps[e] {
            let ga = grad(qp, &va);
            let gb = grad(qp, &vb);
            let sa = voigt_to_mat(&apply_c(c, &voigt_lin(&ga)));
            let sb = voigt_to_mat(&apply_c(c, &voigt_lin(&gb)));
            let sq = voigt_to_mat(&apply_c(c, &voigt_q(&ga, &gb)));
            let mut r = sq;
            matmul_add(&gb, &sa, &mut r);
            matmul_add(&ga, &sb, &mut r);
            for row in r.iter_mut() {
                for v in row.iter_mut() {
                    *v = v.scale(0.5 * qp.weight_detj);
                }
            }
            scatter_force(dofs, qp, &r, &mut out);
        }
    }
    out
}

/// The symmetric cubic force H(a, b, c).
pub fn contract_h<T: Scalar<R = f64>>(model: &FeModel, a: &[T], b: &[T], c: &[T]) -> Vec<T> {
    assert_eq!(a.len(), model.n_free(), "vector length mismatch");
    assert_eq!(b.len(), model.n_free(), "vector length mismatch");
    assert_eq!(c.len(), model.n_free(), "vector length mismatch");
    let mut out = vec![T::zero(); model.n_free()];
    for e in 0..model.mesh.n_elems() {
        let cm = model.material_of(e).elasticity.voigt();
        let dofs = &model.elem_dofs[e];
        let va = gather(dofs, a);
        let vb = gather(dofs, b);
        let vc = gather(dofs, c);
        for qp in &model.elem_qps[e] {
            let ga = grad(qp, &va);
            let gb = grad(qp, &vb);
            let gc = grad(qp, &vc);
            let sab = voigt_to_mat(&apply_c(cm, &voigt_q(&ga, &gb)));
            let sbc = voigt_to_mat(&apply_c(cm, &voigt_q(&gb, &gc)));
            let sca = voigt_to_mat(&apply_c(cm, &voigt_q(&gc, &ga)));
            let mut r = [[T::zero(); 3]; 3];
            matmul_add(&gc, &sab, &mut r);
            matmul_add(&ga, &sbc, &mut r);
            matmul_add(&gb, &sca, &mut r);
            for row in r.iter_mut() {
                for v in row.iter_mut() {
                    *v = v.scale(qp.weight_detj / 6.0);
                }
            }
            scatter_force(dofs, qp, &r, &mut out);
        }
    }
    out
}
