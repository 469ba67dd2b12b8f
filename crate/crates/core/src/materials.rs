//! Material laws: elasticity tensors and the electrostrictive
//! (Landau–Devonshire) inelastic strain/stress relations.
//!
//! Stresses are Saint-Venant–Kirchhoff: S = 𝒜 : (e − e^p), with the
//! inelastic strain e^p quadratic in the imposed polarisation P. Units are
//! MPa for the elastic constants, C/m² for P and m⁴/C² for the
//! electrostrictive coefficients, so 𝒬P² is a dimensionless strain.
//!
//! Voigt convention used throughout: strain/stress vectors ordered
//! (11, 22, 33, 23, 31, 12), with *engineering* shear strains (γ = 2e) in
//! the strain vector, so the stiffness matrix carries the shear moduli
//! unmodified (𝒜₂₃₂₃ etc. appear once).

use std::collections::BTreeMap;

use nalgebra::{Matrix6, Vector6};

use crate::error::{CoreError, Result};

/// Fourth-order elasticity tensor in symmetric 6×6 Voigt storage (MPa).
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticityTensor {
    voigt: Matrix6<f64>,
}

impl ElasticityTensor {
    /// Isotropic law from Young's modulus (MPa) and Poisson's ratio.
    pub fn isotropic(e: f64, nu: f64) -> Result<Self> {
        if e <= 0.0 {
            return Err(CoreError::Material(format!(
                "Young's modulus must be positive, got {e}"
            )));
        }
        if nu <= -1.0 || nu >= 0.5 - 1e-6 {
            return Err(CoreError::Material(format!(
                "Poisson's ratio {nu} outside (-1, 0.5): incompressible or inadmissible"
            )));
        }
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        let mut v = Matrix6::zeros();
        for i in 0..3 {
            for j in 0..3 {
                v[(i, j)] = lambda;
            }
            v[(i, i)] = lambda + 2.0 * mu;
            v[(i + 3, i + 3)] = mu;
        }
        Self::from_voigt(v)
    }

    /// Orthotropic law from the nine independent constants (MPa).
    ///
    /// Arguments follow tensor index naming: `a1111 = 𝒜₁₁₁₁`, …,
    /// `a2323 = 𝒜₂₃₂₃` (shear moduli enter the Voigt diagonal directly).
    #[allow(clippy::too_many_arguments)]
    pub fn orthotropic(
        a1111: f64,
        a1122: f64,
        a2222: f64,
        a1133: f64,
        a2233: f64,
        a3333: f64,
        a2323: f64,
        a3131: f64,
        a1212: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("A1111", a1111),
            ("A2222", a2222),
            ("A3333", a3333),
            ("A2323", a2323),
            ("A3131", a3131),
            ("A1212", a1212),
        ] {
            if v <= 0.0 {
                return Err(CoreError::Material(format!(
                    "orthotropic constant {name} must be positive, got {v}"
                )));
            }
        }
        let mut v = Matrix6::zeros();
        v[(0, 0)] = a1111;
        v[(1, 1)] = a2222;
        v[(2, 2)] = a3333;
        v[(0, 1)] = a1122;
        v[(1, 0)] = a1122;
        v[(0, 2)] = a1133;
        v[(2, 0)] = a1133;
        v[(1, 2)] = a2233;
        v[(2, 1)] = a2233;
        v[(3, 3)] = a2323;
        v[(4, 4)] = a3131;
        v[(5, 5)] = a1212;
        Self::from_voigt(v)
    }

    /// Validate symmetry and positive definiteness, then wrap.
    pub fn from_voigt(voigt: Matrix6<f64>) -> Result<Self> {
        let defect = (voigt - voigt.transpose()).abs().max();
        if defect > 1e-9 * voigt.abs().max() {
            return Err(CoreError::Material(
                "elasticity tensor must be symmetric in Voigt form".into(),
            ));
        }
        let eig = voigt.symmetric_eigenvalues();
        if eig.min() <= 0.0 {
            return Err(CoreError::Material(format!(
                "elasticity tensor must be positive definite (min eigenvalue {:.3e})",
                eig.min()
            )));
        }
        Ok(ElasticityTensor { voigt })
    }

    /// The 6×6 Voigt matrix.
    pub fn voigt(&self) -> &Matrix6<f64> {
        &self.voigt
    }

    /// Stress from engineering-shear Voigt strain: S = 𝒜 e.
    pub fn stress(&self, strain: &Vector6<f64>) -> Vector6<f64> {
        self.voigt * strain
    }
}

/// Electrostrictive coefficients and the derived stress factors.
///
/// The transverse-isotropic law has two independent coefficients; the
/// inelastic strain for polarisation P along the film normal e₃ is
/// diagonal: e^p₁₁ = e^p₂₂ = 𝒬₁₁₃₃P², e^p₃₃ = 𝒬₃₃₃₃P². The matching
/// inelastic stress S^p = 𝒜 : e^p keeps only the same diagonal pattern,
/// S^p₁₁ = S^p₂₂ = α₁P², S^p₃₃ = α₃P², with α recomputed from the bound
/// elasticity tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrostrictionCoeffs {
    /// 𝒬₁₁₃₃ (m⁴/C²).
    pub q1133: f64,
    /// 𝒬₃₃₃₃ (m⁴/C²).
    pub q3333: f64,
    /// Derived in-plane stress factor α₁ (MPa·m⁴/C²).
    alpha1: f64,
    /// Derived normal stress factor α₃ (MPa·m⁴/C²).
    alpha3: f64,
}

impl ElectrostrictionCoeffs {
    /// Bind coefficients to an elasticity tensor, deriving the stress
    /// factors α₁ = 𝒜₁₁₁₁e̅₁₁ + 𝒜₁₁₂₂e̅₂₂ + 𝒜₁₁₃₃e̅₃₃ and
    /// α₃ = 𝒜₃₃₃₃e̅₃₃ + 2𝒜₁₁₃₃e̅₁₁, where e̅ is the unit-P² strain.
    /// The derivation applies 𝒜 to e̅ in full, so it requires the
    /// elasticity to be transverse-isotropic about e₃ (S^p₁₁ = S^p₂₂).
    pub fn new(q1133: f64, q3333: f64, elasticity: &ElasticityTensor) -> Self {
        let unit = Vector6::new(q1133, q1133, q3333, 0.0, 0.0, 0.0);
        let stress = elasticity.stress(&unit);
        let scale = stress.abs().max().max(1.0);
        assert!(
            (stress[0] - stress[1]).abs() <= 1e-9 * scale,
            "electrostrictive stress must be transverse isotropic \
             (S11 = {}, S22 = {}); use an in-plane isotropic elasticity tensor",
            stress[0],
            stress[1]
        );
        ElectrostrictionCoeffs {
            q1133,
            q3333,
            alpha1: stress[0],
            alpha3: stress[2],
        }
    }

    /// Inelastic strain for polarisation `p`, as a Voigt vector
    /// (shear components vanish). Even in `p`.
    pub fn inelastic_strain(&self, p: f64) -> Vector6<f64> {
        let p2 = p * p;
        Vector6::new(self.q1133 * p2, self.q1133 * p2, self.q3333 * p2, 0.0, 0.0, 0.0)
    }

    /// Inelastic stress S^p for polarisation `p`, as a Voigt vector. Even
    /// in `p`; equals the bound 𝒜 applied to [`Self::inelastic_strain`].
    pub fn inelastic_stress(&self, p: f64) -> Vector6<f64> {
        let p2 = p * p;
        Vector6::new(self.alpha1 * p2, self.alpha1 * p2, self.alpha3 * p2, 0.0, 0.0, 0.0)
    }

    /// The derived factors (α₁, α₃).
    pub fn alphas(&self) -> (f64, f64) {
        (self.alpha1, self.alpha3)
    }
}

/// A bulk or piezo material: elasticity, density, and (for piezo patches)
/// the electrostrictive response.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub elasticity: ElasticityTensor,
    /// Mass density in 10⁶ kg/m³ (consistent with μm/μs/MPa units).
    pub rho: f64,
    /// Present only for electrostrictive (piezo patch) materials.
    pub electrostriction: Option<ElectrostrictionCoeffs>,
}

impl Material {
    pub fn new(elasticity: ElasticityTensor, rho: f64) -> Result<Self> {
        if rho <= 0.0 {
            return Err(CoreError::Material(format!(
                "density must be positive, got {rho}"
            )));
        }
        Ok(Material {
            elasticity,
            rho,
            electrostriction: None,
        })
    }

    pub fn with_electrostriction(mut self, q1133: f64, q3333: f64) -> Self {
        self.electrostriction = Some(ElectrostrictionCoeffs::new(q1133, q3333, &self.elasticity));
        self
    }
}

/// Materials keyed by element-set name, with a default for unlisted sets.
#[derive(Debug, Clone)]
pub struct MaterialMap {
    default: Material,
    by_set: BTreeMap<String, Material>,
}

impl MaterialMap {
    pub fn new(default: Material) -> Self {
        MaterialMap {
            default,
            by_set: BTreeMap::new(),
        }
    }

    pub fn assign(&mut self, element_set: &str, material: Material) {
        self.by_set.insert(element_set.to_string(), material);
    }

    /// Material for an element set name (the default if unassigned).
    pub fn for_set(&self, set: Option<&str>) -> &Material {
        set.and_then(|s| self.by_set.get(s)).unwrap_or(&self.default)
    }

    pub fn default_material(&self) -> &Material {
        &self.default
    }

    /// Explicit set assignments, in set-name order.
    pub fn assignments(&self) -> impl Iterator<Item = (&str, &Material)> {
        self.by_set.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Parse a flat `key = value` materials file.
///
/// Grammar (one entry per line, `#` comments):
///   `<name>.E`, `<name>.nu`           — isotropic elasticity, or
///   `<name>.A1111` … `<name>.A1212`   — the nine orthotropic constants;
///   `<name>.rho`                      — density (10⁶ kg/m³), required;
///   `<name>.Q1133`, `<name>.Q3333`    — electrostriction (optional pair);
///   `assign.<element-set> = <name>`   — bind a material to a mesh set;
///   `default = <name>`                — material for unlisted sets.
pub fn parse_materials(text: &str) -> Result<MaterialMap> {
    let mut raw: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut assigns: Vec<(String, String)> = Vec::new();
    let mut default_name: Option<String> = None;

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let stripped = line.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or(CoreError::Parse {
            line: line_no,
            msg: format!("expected `key = value`, got `{stripped}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key == "default" {
            default_name = Some(value.to_string());
            continue;
        }
        let (head, tail) = key.split_once('.').ok_or(CoreError::Parse {
            line: line_no,
            msg: format!("expected dotted key `<material>.<property>`, got `{key}`"),
        })?;
        if head == "assign" {
            assigns.push((tail.to_string(), value.to_string()));
            continue;
        }
        let num: f64 = value.parse().map_err(|_| CoreError::Parse {
            line: line_no,
            msg: format!("`{value}` is not a number"),
        })?;
        raw.entry(head.to_string())
            .or_default()
            .insert(tail.to_string(), num);
    }

    let mut built: BTreeMap<String, Material> = BTreeMap::new();
    for (name, props) in &raw {
        built.insert(name.clone(), build_material(name, props)?);
    }
    let default_name = default_name.ok_or_else(|| CoreError::Config(
        "materials file must name a `default` material".into(),
    ))?;
    let default = built
        .get(&default_name)
        .ok_or_else(|| CoreError::Config(format!("default material `{default_name}` not defined")))?
        .clone();
    let mut map = MaterialMap::new(default);
    for (set, name) in assigns {
        let mat = built
            .get(&name)
            .ok_or_else(|| CoreError::Config(format!("assigned material `{name}` not defined")))?;
        map.assign(&set, mat.clone());
    }
    Ok(map)
}

fn build_material(name: &str, props: &BTreeMap<String, f64>) -> Result<Material> {
    let rho = *props
        .get("rho")
        .ok_or_else(|| CoreError::Config(format!("material `{name}` missing `rho`")))?;
    let elasticity = if props.contains_key("E") {
        let e = props["E"];
        let nu = *props
            .get("nu")
            .ok_or_else(|| CoreError::Config(format!("material `{name}` has E but no nu")))?;
        ElasticityTensor::isotropic(e, nu)?
    } else {
        let get = |k: &str| -> Result<f64> {
            props
                .get(k)
                .copied()
                .ok_or_else(|| CoreError::Config(format!("material `{name}` missing `{k}`")))
        };
        ElasticityTensor::orthotropic(
            get("A1111")?,
            get("A1122")?,
            get("A2222")?,
            get("A1133")?,
            get("A2233")?,
            get("A3333")?,
            get("A2323")?,
            get("A3131")?,
            get("A1212")?,
        )?
    };
    let mut mat = Material::new(elasticity, rho)?;
    match (props.get("Q1133"), props.get("Q3333")) {
        (Some(&q1), Some(&q3)) => mat = mat.with_electrostriction(q1, q3),
        (None, None) => {}
        _ => {
            return Err(CoreError::Config(format!(
                "material `{name}` must define both Q1133 and Q3333 or neither"
            )))
        }
    }
    Ok(mat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn isotropic_nu_zero_reduces_to_youngs_modulus() {
        let t = ElasticityTensor::isotropic(123.0, 0.0).expect("valid material");
        assert_relative_eq!(t.voigt()[(0, 0)], 123.0);
        assert_relative_eq!(t.voigt()[(0, 1)], 0.0);
        assert_relative_eq!(t.voigt()[(3, 3)], 61.5);
    }

    #[test]
    fn isotropic_silicon_matches_lame_formula() {
        // E = 160000 MPa, ν = 0.22 (silicon in the beam fixtures).
        let (e, nu) = (160000.0, 0.22);
        let t = ElasticityTensor::isotropic(e, nu).expect("valid material");
        let expect = e * (1.0 - nu) / ((1.0 + nu) * (1.0 - 2.0 * nu));
        assert_relative_eq!(t.voigt()[(0, 0)], expect, max_relative = 1e-14);
    }

    #[test]
    fn near_incompressible_is_rejected() {
        let err = ElasticityTensor::isotropic(70000.0, 0.5 - 1e-9).expect_err("must reject");
        assert!(matches!(err, CoreError::Material(_)));
    }

    #[test]
    fn orthotropic_silicon_table_is_positive_definite() {
        // Single-crystal silicon constants (MPa).
        let t = ElasticityTensor::orthotropic(
            194250.0, 35776.0, 194250.0, 64422.0, 64422.0, 165605.0, 50591.0, 79237.0, 79237.0,
        )
        .expect("orthotropic silicon is admissible");
        assert!(t.voigt().symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn isotropic_through_orthotropic_path_matches() {
        let iso = ElasticityTensor::isotropic(70000.0, 0.33).expect("valid");
        let v = iso.voigt();
        let ortho = ElasticityTensor::orthotropic(
            v[(0, 0)],
            v[(0, 1)],
            v[(1, 1)],
            v[(0, 2)],
            v[(1, 2)],
            v[(2, 2)],
            v[(3, 3)],
            v[(4, 4)],
            v[(5, 5)],
        )
        .expect("valid");
        assert_eq!(iso, ortho);
    }

    #[test]
    fn zero_shear_modulus_is_rejected() {
        let err = ElasticityTensor::orthotropic(
            194250.0, 35776.0, 194250.0, 64422.0, 64422.0, 165605.0, 0.0, 79237.0, 79237.0,
        )
        .expect_err("A2323 = 0 must be rejected");
        assert!(matches!(err, CoreError::Material(_)));
    }

    #[test]
    fn inelastic_strain_values_and_parity() {
        let pzt = ElasticityTensor::isotropic(70000.0, 0.33).expect("valid");
        let es = ElectrostrictionCoeffs::new(-0.046, 0.097, &pzt);
        let s = es.inelastic_strain(0.3);
        assert_relative_eq!(s[0], -0.046 * 0.09, max_relative = 1e-14);
        assert_relative_eq!(s[2], 0.097 * 0.09, max_relative = 1e-14);
        assert_eq!(s[3], 0.0);
        assert_eq!(es.inelastic_strain(-0.3), es.inelastic_strain(0.3));
        assert_eq!(es.inelastic_strain(0.0), Vector6::zeros());
    }

    #[test]
    fn inelastic_stress_is_tensor_times_strain() {
        // α factors must equal an independent 6×6 Voigt multiply.
        let pzt = ElasticityTensor::isotropic(70000.0, 0.33).expect("valid");
        let es = ElectrostrictionCoeffs::new(-0.046, 0.097, &pzt);
        for &p in &[0.0, 0.2, 1.0, -0.7] {
            let direct = es.inelastic_stress(p);
            let via_tensor = pzt.stress(&es.inelastic_strain(p));
            for i in 0..6 {
                assert_relative_eq!(direct[i], via_tensor[i], epsilon = 1e-10);
            }
        }
        // Quadratic law: doubling P quadruples the stress.
        let s1 = es.inelastic_stress(0.5);
        let s2 = es.inelastic_stress(1.0);
        for i in 0..6 {
            assert_relative_eq!(s2[i], 4.0 * s1[i], max_relative = 1e-14);
        }
    }

    #[test]
    fn parses_materials_file_with_assignments() {
        let text = "
            # silicon bulk
            si.E = 160000
            si.nu = 0.22
            si.rho = 2.329e-3
            pzt.E = 70000
            pzt.nu = 0.33
            pzt.rho = 7.6e-3
            pzt.Q1133 = -0.046
            pzt.Q3333 = 0.097
            default = si
            assign.pzt_a = pzt
            assign.pzt_b = pzt
        ";
        let map = parse_materials(text).expect("parses");
        assert!(map.for_set(Some("pzt_a")).electrostriction.is_some());
        assert!(map.for_set(Some("bulk")).electrostriction.is_none());
        assert_relative_eq!(map.for_set(None).rho, 2.329e-3);
    }

    #[test]
    fn unknown_default_is_a_config_error() {
        let err = parse_materials("si.E=1\nsi.nu=0\nsi.rho=1\ndefault = missing")
            .expect_err("must fail");
        assert!(matches!(err, CoreError::Config(_)));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_materials("si.E = 160000\nnota keyvalue\n").expect_err("must fail");
        match err {
            CoreError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
