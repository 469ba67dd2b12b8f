//! Structured generator for straight beams with thin piezo films.
//!
//! The beam occupies x ∈ [0, L₁], y ∈ [0, W], z ∈ [−T₁/2, T₁/2]. Piezo
//! patches are thin element layers of thickness T₂ bonded on top
//! (element set `pzt_a`, z > T₁/2) and below (`pzt_b`, z < −T₁/2) over
//! x ∈ [0, L₂] — and, for a doubly clamped beam, mirrored over
//! x ∈ [L₁−L₂, L₁]. Element boundaries coincide exactly with patch
//! edges so patch loads integrate cleanly.
//!
//! Refinement r multiplies the per-block subdivision counts in all three
//! directions, so every block's element count scales exactly by r³.

use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::mesh::{Mesh, DIRICHLET_SET};

/// Per-block subdivision counts at refinement 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamDivisions {
    /// Elements along x inside one patch interval.
    pub nx_patch: usize,
    /// Elements along x in the patch-free mid section.
    pub nx_mid: usize,
    /// Elements across the width.
    pub ny: usize,
    /// Elements through the core thickness.
    pub nz: usize,
    /// Elements through each film thickness.
    pub nz_patch: usize,
}

/// Geometry and discretisation of a beam-with-patches mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamMeshSpec {
    /// Beam length L₁ (μm).
    pub length: f64,
    /// Beam width W (μm).
    pub width: f64,
    /// Core thickness T₁ (μm).
    pub thickness: f64,
    /// Patch length L₂ from each anchor (μm); 0 disables the films.
    pub patch_length: f64,
    /// Film thickness T₂ (μm).
    pub patch_thickness: f64,
    /// Clamped-clamped if true (patches at both anchors, both end faces
    /// fixed); cantilever otherwise (patches and clamp at x = 0 only).
    pub clamped_both_ends: bool,
    /// Mesh refinement factor r ≥ 1.
    pub refinement: usize,
    /// Subdivision counts at r = 1.
    pub divisions: BeamDivisions,
}

impl BeamMeshSpec {
    /// Doubly clamped microbeam: 100 × 2.2 × 1 μm core with 7.5 μm long,
    /// 10 nm thick films at both anchors.
    pub fn clamped_clamped(refinement: usize) -> Self {
        BeamMeshSpec {
            length: 100.0,
            width: 2.2,
            thickness: 1.0,
            patch_length: 7.5,
            patch_thickness: 0.01,
            clamped_both_ends: true,
            refinement,
            divisions: BeamDivisions {
                nx_patch: 2,
                nx_mid: 10,
                ny: 1,
                nz: 1,
                nz_patch: 1,
            },
        }
    }

    /// Cantilever: 15 × 0.3 × 0.2 μm core with a single 5 μm film pair
    /// at the anchor.
    pub fn cantilever(refinement: usize) -> Self {
        BeamMeshSpec {
            length: 15.0,
            width: 0.3,
            thickness: 0.2,
            patch_length: 5.0,
            patch_thickness: 0.01,
            clamped_both_ends: false,
            refinement,
            divisions: BeamDivisions {
                nx_patch: 3,
                nx_mid: 6,
                ny: 1,
                nz: 1,
                nz_patch: 1,
            },
        }
    }
}

/// Generate the structured mesh for a [`BeamMeshSpec`].
pub fn generate_beam_mesh(spec: &BeamMeshSpec) -> Result<Mesh> {
    if spec.refinement == 0 {
        return Err(CoreError::Geometry("refinement must be at least 1".into()));
    }
    if spec.length <= 0.0 || spec.width <= 0.0 || spec.thickness <= 0.0 {
        return Err(CoreError::Geometry(format!(
            "beam dimensions must be positive, got {} × {} × {}",
            spec.length, spec.width, spec.thickness
        )));
    }
    if spec.patch_length < 0.0 {
        return Err(CoreError::Geometry("patch length must be non-negative".into()));
    }
    let patch_span = if spec.clamped_both_ends {
        2.0 * spec.patch_length
    } else {
        spec.patch_length
    };
    if patch_span >= spec.length {
        return Err(CoreError::Geometry(format!(
            "patches of length {} do not fit a beam of length {}",
            spec.patch_length, spec.length
        )));
    }
    let has_patches = spec.patch_length > 0.0;
    if has_patches && spec.patch_thickness <= 0.0 {
        return Err(CoreError::Geometry(
            "patch thickness must be positive when patches are present".into(),
        ));
    }

    let r = spec.refinement;
    let d = spec.divisions;
    let (np, nm, ny, nz) = (d.nx_patch * r, d.nx_mid * r, d.ny * r, d.nz * r);
    let nzf = if has_patches { d.nz_patch * r } else { 0 };

    // x stations per segment, patch edges exact.
    let mut x_stations: Vec<f64> = Vec::new();
    let mut segments: Vec<(f64, f64, usize)> = Vec::new();
    if has_patches {
        segments.push((0.0, spec.patch_length, np));
        if spec.clamped_both_ends {
            segments.push((spec.patch_length, spec.length - spec.patch_length, nm));
            segments.push((spec.length - spec.patch_length, spec.length, np));
        } else {
            segments.push((spec.patch_length, spec.length, nm));
        }
    } else {
        segments.push((0.0, spec.length, nm));
    }
    x_stations.push(0.0);
    for &(x0, x1, n) in &segments {
        for i in 1..=n {
            x_stations.push(x0 + (x1 - x0) * i as f64 / n as f64);
        }
    }
    let nx_total = x_stations.len() - 1;

    // Station index ranges (inclusive) covered by films.
    let mut film_station_ranges: Vec<(usize, usize)> = Vec::new();
    if has_patches {
        film_station_ranges.push((0, np));
        if spec.clamped_both_ends {
            film_station_ranges.push((nx_total - np, nx_total));
        }
    }
    let station_in_film = |ix: usize| film_station_ranges.iter().any(|&(a, b)| ix >= a && ix <= b);
    let element_in_film =
        |ix: usize| film_station_ranges.iter().any(|&(a, b)| ix >= a && ix + 1 <= b);

    // z levels: bottom film (ascending), core, top film.
    let zh = spec.thickness / 2.0;
    let dzf = if nzf > 0 { spec.patch_thickness / nzf as f64 } else { 0.0 };
    let mut z_levels: Vec<f64> = Vec::new();
    for k in (1..=nzf).rev() {
        z_levels.push(-zh - k as f64 * dzf);
    }
    for iz in 0..=nz {
        z_levels.push(-zh + spec.thickness * iz as f64 / nz as f64);
    }
    for k in 1..=nzf {
        z_levels.push(zh + k as f64 * dzf);
    }
    let core_lo = nzf; // level index of z = −T₁/2
    let core_hi = nzf + nz; // level index of z = +T₁/2
    let n_levels = z_levels.len();

    let y_of = |iy: usize| spec.width * iy as f64 / ny as f64;

    // Node table: station-major for a narrow assembly bandwidth.
    let mut node_id = vec![vec![vec![usize::MAX; ny + 1]; n_levels]; nx_total + 1];
    let mut coords: Vec<[f64; 3]> = Vec::new();
    for ix in 0..=nx_total {
        let film = station_in_film(ix);
        let (lvl_lo, lvl_hi) = if film { (0, n_levels - 1) } else { (core_lo, core_hi) };
        for lvl in lvl_lo..=lvl_hi {
            for iy in 0..=ny {
                node_id[ix][lvl][iy] = coords.len();
                coords.push([x_stations[ix], y_of(iy), z_levels[lvl]]);
            }
        }
    }

    // Elements: core everywhere, films only over patch stations.
    let mut elems: Vec<[usize; 8]> = Vec::new();
    let mut bulk = Vec::new();
    let mut pzt_a = Vec::new();
    let mut pzt_b = Vec::new();
    for ix in 0..nx_total {
        let film = element_in_film(ix);
        let (lvl_lo, lvl_hi) = if film { (0, n_levels - 1) } else { (core_lo, core_hi) };
        for lvl in lvl_lo..lvl_hi {
            for iy in 0..ny {
                let conn = [
                    node_id[ix][lvl][iy],
                    node_id[ix + 1][lvl][iy],
                    node_id[ix + 1][lvl][iy + 1],
                    node_id[ix][lvl][iy + 1],
                    node_id[ix][lvl + 1][iy],
                    node_id[ix + 1][lvl + 1][iy],
                    node_id[ix + 1][lvl + 1][iy + 1],
                    node_id[ix][lvl + 1][iy + 1],
                ];
                debug_assert!(conn.iter().all(|&n| n != usize::MAX));
                let e = elems.len();
                elems.push(conn);
                if lvl < core_lo {
                    pzt_b.push(e);
                } else if lvl >= core_hi {
                    pzt_a.push(e);
                } else {
                    bulk.push(e);
                }
            }
        }
    }

    // Clamp: the full cross-section at fixed ends (films included).
    let mut clamp: Vec<usize> = Vec::new();
    let mut clamp_station = |ix: usize| {
        for lvl in 0..n_levels {
            for iy in 0..=ny {
                let id = node_id[ix][lvl][iy];
                if id != usize::MAX {
                    clamp.push(id);
                }
            }
        }
    };
    clamp_station(0);
    if spec.clamped_both_ends {
        clamp_station(nx_total);
    }
    clamp.sort_unstable();

    let mut node_sets = BTreeMap::new();
    node_sets.insert(DIRICHLET_SET.to_string(), clamp);
    let mut elem_sets = BTreeMap::new();
    elem_sets.insert("bulk".to_string(), bulk);
    elem_sets.insert("pzt_a".to_string(), pzt_a);
    elem_sets.insert("pzt_b".to_string(), pzt_b);

    let mesh = Mesh {
        coords,
        elems,
        node_sets,
        elem_sets,
    };
    mesh.validate()?;
    Ok(mesh)
}
