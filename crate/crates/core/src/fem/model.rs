//! Assembled finite-element model: mesh + dof numbering + resolved
//! materials + cached element quadrature, with the structural operators.
//!
//! All operators act on free-dof vectors (Dirichlet dofs eliminated).
//! The internal force is the exact Saint-Venant–Kirchhoff force with
//! Green–Lagrange strain; its Taylor expansion about the origin is
//! reproduced term-for-term by the linear stiffness and the G/H
//! contractions in [`crate::fem::contractions`].

use crate::error::{CoreError, Result};
use crate::fem::contractions::{apply_c, gather, grad, scatter_force, voigt_lin, voigt_q, voigt_to_mat};
use crate::fem::dofmap::DofMap;
use crate::fem::hex8::{self, QuadraturePoint, N_QP};
use crate::linalg::Csr;
use crate::materials::{Material, MaterialMap};
use crate::mesh::Mesh;

/// A mesh with everything needed to evaluate structural operators.
#[derive(Debug, Clone)]
pub struct FeModel {
    pub mesh: Mesh,
    pub dofs: DofMap,
    /// Distinct materials; index 0 is the default.
    pub materials: Vec<Material>,
    /// Material index per element.
    pub elem_material: Vec<usize>,
    /// Cached quadrature data per element.
    pub elem_qps: Vec<[QuadraturePoint; N_QP]>,
    /// Free-dof index per element slot (node-major, 3 per node).
    pub elem_dofs: Vec<[Option<usize>; 24]>,
}

impl FeModel {
    /// Validate the mesh, resolve per-element materials from set
    /// assignments, and cache quadrature data.
    pub fn new(mesh: Mesh, materials: &MaterialMap) -> Result<Self> {
        mesh.validate()?;
        let dofs = DofMap::build(&mesh);

        let mut mat_list = vec![materials.default_material().clone()];
        let mut elem_material = vec![0usize; mesh.n_elems()];
        let mut claimed_by: Vec<Option<String>> = vec![None; mesh.n_elems()];
        for (set_name, material) in materials.assignments() {
            let Some(elems) = mesh.elem_sets.get(set_name) else {
                return Err(CoreError::Config(format!(
                    "material assigned to unknown element set `{set_name}`"
                )));
            };
            let mat_idx = mat_list.len();
            mat_list.push(material.clone());
            for &e in elems {
                if let Some(other) = &claimed_by[e] {
                    return Err(CoreError::Config(format!(
                        "element {} belongs to material sets `{other}` and `{set_name}`",
                        e + 1
                    )));
                }
                claimed_by[e] = Some(set_name.to_string());
                elem_material[e] = mat_idx;
            }
        }

        let mut elem_qps = Vec::with_capacity(mesh.n_elems());
        let mut elem_dofs = Vec::with_capacity(mesh.n_elems());
        for e in 0..mesh.n_elems() {
            let qps = hex8::element_quadrature(&mesh.element_coords(e)).map_err(|err| {
                CoreError::Geometry(format!("element {}: {err}", e + 1))
            })?;
            elem_qps.push(qps);
            let mut slots = [None; 24];
            for (a, &node) in mesh.elems[e].iter().enumerate() {
                for c in 0..3 {
                    slots[3 * a + c] = dofs.get(node, c);
                }
            }
            elem_dofs.push(slots);
        }

        Ok(FeModel {
            mesh,
            dofs,
            materials: mat_list,
            elem_material,
            elem_qps,
            elem_dofs,
        })
    }

    pub fn n_free(&self) -> usize {
        self.dofs.n_free()
    }

    #[inline]
    pub fn material_of(&self, e: usize) -> &Material {
        &self.materials[self.elem_material[e]]
    }

    /// Consistent mass matrix M (symmetric positive definite).
    pub fn assemble_mass(&self) -> Csr<f64> {
        let n = self.n_free();
        let mut triplets = Vec::new();
        for e in 0..self.mesh.n_elems() {
            let rho = self.material_of(e).rho;
            let dofs = &self.elem_dofs[e];
            let mut me = [[0.0f64; 8]; 8];
            for qp in &self.elem_qps[e] {
                for a in 0..8 {
                    for b in 0..8 {
                        me[a][b] += rho * qp.weight_detj * qp.shape[a] * qp.shape[b];
                    }
                }
            }
            for a in 0..8 {
                for b in 0..8 {
                    for k in 0..3 {
                        if let (Some(i), Some(j)) = (dofs[3 * a + k], dofs[3 * b + k]) {
                            triplets.push((i, j, me[a][b]));
                        }
                    }
                }
            }
        }
        Csr::from_triplets(n, n, &triplets)
    }

    /// Linear elastic stiffness K = ∂f_int/∂U at U = 0.
    pub fn assemble_linear_stiffness(&self) -> Csr<f64> {
        self.tangent_stiffness(&vec![0.0; self.n_free()])
    }

    /// Exact internal force f_int(U) for the Saint-Venant–Kirchhoff law
    /// (piezo loads excluded; they are separate additive operators).
    pub fn internal_force(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n_free(), "vector length mismatch");
        let mut out = vec![0.0; self.n_free()];
        for e in 0..self.mesh.n_elems() {
            let c = self.material_of(e).elasticity.voigt();
            let dofs = &self.elem_dofs[e];
            let vu = gather(dofs, u);
            for qp in &self.elem_qps[e] {
                let gu = grad(qp, &vu);
                // E = e(u) + ½ Q(u,u) in engineering Voigt.
                let el = voigt_lin(&gu);
                let eq = voigt_q(&gu, &gu);
                let mut ev = [0.0; 6];
                for i in 0..6 {
                    ev[i] = el[i] + 0.5 * eq[i];
                }
                let s = voigt_to_mat(&apply_c(c, &ev));
                // First Piola row form: R = (I + ∇u) S.
                let mut r = s;
                for k in 0..3 {
                    for j in 0..3 {
                        let mut acc = 0.0;
                        for i in 0..3 {
                            acc += gu[k][i] * s[i][j];
                        }
                        r[k][j] = (s[k][j] + acc) * qp.weight_detj;
                    }
                }
                scatter_force(dofs, qp, &r, &mut out);
            }
        }
        out
    }

    /// Exact tangent stiffness ∂f_int/∂U at state `u` (material part plus
    /// geometric part with the current stress). Piezo contributions are
    /// assembled separately and subtracted by the caller.
    pub fn tangent_stiffness(&self, u: &[f64]) -> Csr<f64> {
        assert_eq!(u.len(), self.n_free(), "vector length mismatch");
        let n = self.n_free();
        let mut triplets = Vec::new();
        let mut ke = [[0.0f64; 24]; 24];
        for e in 0..self.mesh.n_elems() {
            let c = self.material_of(e).elasticity.voigt();
            let dofs = &self.elem_dofs[e];
            let vu = gather(dofs, u);
            for row in ke.iter_mut() {
                row.fill(0.0);
            }
            for qp in &self.elem_qps[e] {
                let gu = grad(qp, &vu);
                // Strain-displacement matrix at the current state:
                // rows are Voigt components of e(v) + Q(u,v).
                let mut bmat = [[0.0f64; 24]; 6];
                for a in 0..8 {
                    let d = qp.dndx[a];
                    // Linear part (component k enters row patterns directly).
                    bmat[0][3 * a] += d[0];
                    bmat[1][3 * a + 1] += d[1];
                    bmat[2][3 * a + 2] += d[2];
                    bmat[3][3 * a + 1] += d[2];
                    bmat[3][3 * a + 2] += d[1];
                    bmat[4][3 * a] += d[2];
                    bmat[4][3 * a + 2] += d[0];
                    bmat[5][3 * a] += d[1];
                    bmat[5][3 * a + 1] += d[0];
                    // Geometric part Q(u,v) for each component k of v.
                    for k in 0..3 {
                        let col = 3 * a + k;
                        bmat[0][col] += gu[k][0] * d[0];
                        bmat[1][col] += gu[k][1] * d[1];
                        bmat[2][col] += gu[k][2] * d[2];
                        bmat[3][col] += gu[k][1] * d[2] + gu[k][2] * d[1];
                        bmat[4][col] += gu[k][2] * d[0] + gu[k][0] * d[2];
                        bmat[5][col] += gu[k][0] * d[1] + gu[k][1] * d[0];
                    }
                }
                // Material part w · Bᵀ C B.
                let mut cb = [[0.0f64; 24]; 6];
                for i in 0..6 {
                    for col in 0..24 {
                        let mut acc = 0.0;
                        for j in 0..6 {
                            acc += c[(i, j)] * bmat[j][col];
                        }
                        cb[i][col] = acc;
                    }
                }
                for row in 0..24 {
                    for col in 0..24 {
                        let mut acc = 0.0;
                        for i in 0..6 {
                            acc += bmat[i][row] * cb[i][col];
                        }
                        ke[row][col] += qp.weight_detj * acc;
                    }
                }
                // Geometric part with current stress S(u).
                let el = voigt_lin(&gu);
                let eq = voigt_q(&gu, &gu);
                let mut ev = [0.0; 6];
                for i in 0..6 {
                    ev[i] = el[i] + 0.5 * eq[i];
                }
                let s = voigt_to_mat(&apply_c(c, &ev));
                for a in 0..8 {
                    for b in 0..8 {
                        let mut acc = 0.0;
                        for i in 0..3 {
                            for j in 0..3 {
                                acc += qp.dndx[a][j] * s[j][i] * qp.dndx[b][i];
                            }
                        }
                        let w = qp.weight_detj * acc;
                        for k in 0..3 {
                            ke[3 * a + k][3 * b + k] += w;
                        }
                    }
                }
            }
            for row in 0..24 {
                let Some(i) = dofs[row] else { continue };
                for col in 0..24 {
                    if let Some(j) = dofs[col] {
                        triplets.push((i, j, ke[row][col]));
                    }
                }
            }
        }
        Csr::from_triplets(n, n, &triplets)
    }
}
