//! Calibration probe: first eigenfrequencies of the clamped–clamped
//! beam fixture at several discretisations, to pick meshes for the
//! test fixtures. Run with `--release`.

use piezorom_core::fem::FeModel;
use piezorom_core::linalg::smallest_modes;
use piezorom_core::materials::{ElasticityTensor, Material, MaterialMap};
use piezorom_core::mesh::{generate_beam_mesh, BeamDivisions, BeamMeshSpec};

fn materials() -> MaterialMap {
    let si = Material::new(
        ElasticityTensor::isotropic(160000.0, 0.22).expect("valid"),
        2.329e-3,
    )
    .expect("valid");
    let pzt = Material::new(
        ElasticityTensor::isotropic(70000.0, 0.33).expect("valid"),
        7.6e-3,
    )
    .expect("valid")
    .with_electrostriction(-0.046, 0.097);
    let mut mm = MaterialMap::new(si);
    mm.assign("pzt_a", pzt.clone());
    mm.assign("pzt_b", pzt);
    mm
}

fn probe(label: &str, spec: &BeamMeshSpec) {
    let t0 = std::time::Instant::now();
    let mesh = generate_beam_mesh(spec).expect("generates");
    let model = FeModel::new(mesh, &materials()).expect("builds");
    let m = model.assemble_mass();
    let k = model.assemble_linear_stiffness();
    let modes = smallest_modes(&k, &m, 3, 1e-6, 400).expect("eigensolve");
    println!(
        "{label:<34} n_free {:>6}  bw {:>4}  omega {:.4} {:.4} {:.4}  ({:.2?})",
        model.n_free(),
        k.bandwidth(),
        modes.omega[0],
        modes.omega[1],
        modes.omega[2],
        t0.elapsed()
    );
}

fn main() {
    for r in [1usize, 2, 3] {
        probe(
            &format!("cc fixture r={r}"),
            &BeamMeshSpec::clamped_clamped(r),
        );
    }
    // Combined x/thickness refinement to locate the converged regime.
    for (nxp, nxm, ny, nz) in [
        (30, 340, 1, 4),
        (30, 400, 1, 4),
        (30, 340, 1, 6),
        (45, 510, 1, 4),
        (60, 680, 1, 4),
        (30, 340, 2, 4),
    ] {
        let mut spec = BeamMeshSpec::clamped_clamped(1);
        spec.divisions = BeamDivisions {
            nx_patch: nxp,
            nx_mid: nxm,
            ny,
            nz,
            nz_patch: 1,
        };
        probe(&format!("cc nxp={nxp} nxm={nxm} ny={ny} nz={nz}"), &spec);
    }
    for r in [1usize, 2] {
        probe(&format!("cant fixture r={r}"), &BeamMeshSpec::cantilever(r));
    }
}
