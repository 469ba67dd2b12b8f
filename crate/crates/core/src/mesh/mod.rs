//! Mesh model and input formats: hex8 meshes with named node/element
//! sets, a plain-text mesh grammar, a structured beam-with-patches
//! generator, polarisation loop tables, and the flat run configuration.
//!
//! Conventions:
//! - coordinates in μm; node and element indices are 0-based internally,
//!   1-based in files;
//! - the Dirichlet boundary is the node set named `"clamp"` — every valid
//!   mesh must provide it, non-empty;
//! - piezo patches are the element sets `"pzt_a"` (top film) and
//!   `"pzt_b"` (bottom film); bulk elements belong to `"bulk"`.

pub mod beam;
pub mod config;
pub mod io;
pub mod loops;

use std::collections::BTreeMap;

pub use beam::{generate_beam_mesh, BeamDivisions, BeamMeshSpec};
pub use config::{parse_config, RunConfig};
pub use io::{parse_mesh, write_mesh};
pub use loops::{parse_polarisation_csv, write_polarisation_csv, PolarisationLoop};

use crate::error::{CoreError, Result};
use crate::fem::hex8;

/// Name of the node set holding the fixed (Dirichlet) nodes.
pub const DIRICHLET_SET: &str = "clamp";

/// A hex8 mesh with named node and element sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    /// Node coordinates (μm).
    pub coords: Vec<[f64; 3]>,
    /// Element connectivity, eight 0-based node indices each.
    pub elems: Vec<[usize; 8]>,
    /// Named node sets (0-based indices, ascending).
    pub node_sets: BTreeMap<String, Vec<usize>>,
    /// Named element sets (0-based indices, ascending).
    pub elem_sets: BTreeMap<String, Vec<usize>>,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elems(&self) -> usize {
        self.elems.len()
    }

    /// Coordinates of one element's nodes in connectivity order.
    pub fn element_coords(&self, e: usize) -> [[f64; 3]; 8] {
        let mut c = [[0.0; 3]; 8];
        for (a, &n) in self.elems[e].iter().enumerate() {
            c[a] = self.coords[n];
        }
        c
    }

    /// Nodes of the Dirichlet set.
    pub fn dirichlet_nodes(&self) -> &[usize] {
        self.node_sets
            .get(DIRICHLET_SET)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Check the structural invariants:
    /// - element connectivity within bounds, no repeated node in an element;
    /// - set indices within bounds;
    /// - positive Jacobian determinant at every quadrature point;
    /// - non-empty Dirichlet (`"clamp"`) node set.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_nodes();
        for (e, conn) in self.elems.iter().enumerate() {
            for &node in conn {
                if node >= n {
                    return Err(CoreError::Geometry(format!(
                        "element {} references node {} but the mesh has {} nodes",
                        e + 1,
                        node + 1,
                        n
                    )));
                }
            }
            for a in 0..8 {
                for b in (a + 1)..8 {
                    if conn[a] == conn[b] {
                        return Err(CoreError::Geometry(format!(
                            "element {} repeats node {}",
                            e + 1,
                            conn[a] + 1
                        )));
                    }
                }
            }
        }
        for (name, ids) in &self.node_sets {
            if let Some(&bad) = ids.iter().find(|&&i| i >= n) {
                return Err(CoreError::Geometry(format!(
                    "node set `{name}` references node {} but the mesh has {n} nodes",
                    bad + 1
                )));
            }
        }
        for (name, ids) in &self.elem_sets {
            if let Some(&bad) = ids.iter().find(|&&i| i >= self.n_elems()) {
                return Err(CoreError::Geometry(format!(
                    "element set `{name}` references element {} but the mesh has {} elements",
                    bad + 1,
                    self.n_elems()
                )));
            }
        }
        for e in 0..self.n_elems() {
            let dets = hex8::jacobian_dets(&self.element_coords(e));
            for (q, &d) in dets.iter().enumerate() {
                if d <= 0.0 {
                    return Err(CoreError::Geometry(format!(
                        "element {} is degenerate: Jacobian determinant {d:.3e} \
                         at quadrature point {q}",
                        e + 1
                    )));
                }
            }
        }
        if self.dirichlet_nodes().is_empty() {
            return Err(CoreError::Geometry(format!(
                "mesh has no non-empty `{DIRICHLET_SET}` node set; at least one \
                 fixed node is required"
            )));
        }
        Ok(())
    }

    /// Axis-aligned bounding box as (min, max) corners.
    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for c in &self.coords {
            for i in 0..3 {
                lo[i] = lo[i].min(c[i]);
                hi[i] = hi[i].max(c[i]);
            }
        }
        (lo, hi)
    }
}
