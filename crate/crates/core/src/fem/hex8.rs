//! Eight-node trilinear hexahedron: shape functions, reference-domain
//! gradients, and 2×2×2 Gauss quadrature data in physical coordinates.
//!
//! Node ordering follows the usual counterclockwise convention: nodes
//! 0–3 on the ζ = −1 face at (ξ,η) = (−,−), (+,−), (+,+), (−,+), nodes
//! 4–7 directly above on the ζ = +1 face. A right-handed element
//! (positive Jacobian determinant everywhere) is required.

use nalgebra::{Matrix3, Vector3};

use crate::error::{CoreError, Result};

/// Number of nodes and of quadrature points (2×2×2 Gauss).
pub const N_NODES: usize = 8;
pub const N_QP: usize = 8;

/// Reference coordinates of the element nodes.
const NODE_XI: [[f64; 3]; N_NODES] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// The 2×2×2 Gauss abscissae (weights are all unity).
pub fn gauss_points() -> [[f64; 3]; N_QP] {
    let g = 1.0 / 3.0_f64.sqrt();
    let mut pts = [[0.0; 3]; N_QP];
    for (q, p) in pts.iter_mut().enumerate() {
        p[0] = if q & 1 == 0 { -g } else { g };
        p[1] = if q & 2 == 0 { -g } else { g };
        p[2] = if q & 4 == 0 { -g } else { g };
    }
    pts
}

/// Shape function values N_n(ξ).
pub fn shape_values(xi: &[f64; 3]) -> [f64; N_NODES] {
    let mut n = [0.0; N_NODES];
    for (a, v) in n.iter_mut().enumerate() {
        *v = 0.125
            * (1.0 + NODE_XI[a][0] * xi[0])
            * (1.0 + NODE_XI[a][1] * xi[1])
            * (1.0 + NODE_XI[a][2] * xi[2]);
    }
    n
}

/// Reference-domain gradients ∂N_n/∂ξ_i at ξ.
pub fn shape_gradients(xi: &[f64; 3]) -> [[f64; 3]; N_NODES] {
    let mut g = [[0.0; 3]; N_NODES];
    for (a, ga) in g.iter_mut().enumerate() {
        let f = [
            1.0 + NODE_XI[a][0] * xi[0],
            1.0 + NODE_XI[a][1] * xi[1],
            1.0 + NODE_XI[a][2] * xi[2],
        ];
        ga[0] = 0.125 * NODE_XI[a][0] * f[1] * f[2];
        ga[1] = 0.125 * f[0] * NODE_XI[a][1] * f[2];
        ga[2] = 0.125 * f[0] * f[1] * NODE_XI[a][2];
    }
    g
}

/// Jacobian determinants at each Gauss point; negative values flag an
/// inverted or degenerate element.
pub fn jacobian_dets(coords: &[[f64; 3]; N_NODES]) -> [f64; N_QP] {
    let mut dets = [0.0; N_QP];
    for (q, xi) in gauss_points().iter().enumerate() {
        dets[q] = jacobian(coords, xi).determinant();
    }
    dets
}

/// Physical-space quadrature data at one Gauss point.
#[derive(Debug, Clone, Copy)]
pub struct QuadraturePoint {
    /// Shape values N_n at the point.
    pub shape: [f64; N_NODES],
    /// Physical gradients ∂N_n/∂x_j.
    pub dndx: [[f64; 3]; N_NODES],
    /// Gauss weight times Jacobian determinant.
    pub weight_detj: f64,
}

/// Quadrature data for an element given its node coordinates.
pub fn element_quadrature(coords: &[[f64; 3]; N_NODES]) -> Result<[QuadraturePoint; N_QP]> {
    let mut out = [QuadraturePoint {
        shape: [0.0; N_NODES],
        dndx: [[0.0; 3]; N_NODES],
        weight_detj: 0.0,
    }; N_QP];
    for (q, xi) in gauss_points().iter().enumerate() {
        let j = jacobian(coords, xi);
        let det = j.determinant();
        if det <= 0.0 {
            return Err(CoreError::Geometry(format!(
                "non-positive Jacobian determinant {det:.3e} at quadrature point {q}"
            )));
        }
        let inv = j.try_inverse().ok_or_else(|| {
            CoreError::Geometry(format!("singular Jacobian at quadrature point {q}"))
        })?;
        let grads = shape_gradients(xi);
        let qp = &mut out[q];
        qp.shape = shape_values(xi);
        qp.weight_detj = det;
        for a in 0..N_NODES {
            let dxi = Vector3::from_column_slice(&grads[a]);
            let dx = inv * dxi;
            qp.dndx[a] = [dx[0], dx[1], dx[2]];
        }
    }
    Ok(out)
}

/// J(i,j) = ∂x_j/∂ξ_i at ξ.
fn jacobian(coords: &[[f64; 3]; N_NODES], xi: &[f64; 3]) -> Matrix3<f64> {
    let grads = shape_gradients(xi);
    let mut j = Matrix3::zeros();
    for a in 0..N_NODES {
        for i in 0..3 {
            for k in 0..3 {
                j[(i, k)] += grads[a][i] * coords[a][k];
            }
        }
    }
    j
}
