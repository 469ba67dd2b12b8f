//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` comments. Unknown or repeated keys are
//! errors so that a configuration file always means what it says. All
//! keys have defaults; frequencies are rad/μs, times μs.

use std::collections::BTreeSet;

use crate::error::{CoreError, Result};

/// Reduction and continuation settings for a model run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Master mode number (1-based; 1 = fundamental).
    pub master_mode: usize,
    /// Autonomous expansion order o ≥ 1.
    pub order: usize,
    /// Non-autonomous expansion order q; 0 disables forcing terms,
    /// otherwise 1 ≤ q < o.
    pub na_order: usize,
    /// Forcing harmonics ĥ ≥ 1 kept from the polarisation spectrum.
    pub forcing_harmonics: usize,
    /// Quality factor defining Rayleigh damping α = ω₁/Q (with β = 0)
    /// unless `alpha`/`beta` are set explicitly.
    pub quality_factor: f64,
    /// Mass-proportional Rayleigh coefficient (rad/μs); NaN = derive from Q.
    pub alpha: f64,
    /// Stiffness-proportional Rayleigh coefficient (μs); NaN = derive from Q.
    pub beta: f64,
    /// Update the expansion point by the static polarisation response
    /// (switching this off reduces to a linear-modes expansion basis).
    pub static_update: bool,
    /// Relative tolerance for the internal-resonance test.
    pub resonance_tol: f64,
    /// Relative residual tolerance for static Newton iterations.
    pub newton_tol: f64,
    /// Newton iteration cap.
    pub newton_max_iter: usize,
    /// Relative residual tolerance ‖KΦ − ω²MΦ‖/‖KΦ‖ for the eigensolver.
    /// The default sits above the f64 evaluation floor for meshes mixing
    /// μm-scale bulk with 10 nm films: forming KΦ for a low mode cancels
    /// enormous film-stiffness entries, so the attainable relative
    /// residual degrades to roughly 1e-9…1e-7 as meshes grow.
    pub eig_tol: f64,
    /// Number of vibration modes to compute and report.
    pub n_modes: usize,
    /// Relative residual bound for each homological solve.
    pub homological_tol: f64,
    /// Frequency window for continuation (rad/μs); equal values = auto
    /// window around the master eigenfrequency.
    pub omega_min: f64,
    pub omega_max: f64,
    /// Initial, minimum and maximum pseudo-arclength steps.
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    /// Continuation step cap.
    pub max_steps: usize,
    /// Harmonics retained in the reduced-model harmonic balance.
    pub rom_harmonics: usize,
    /// Time samples per period for the reduced model's nonlinear terms.
    pub rom_time_samples: usize,
    /// Harmonics retained in the full-order harmonic-balance reference.
    pub hb_harmonics: usize,
    /// Time steps per period for the transient reference.
    pub newmark_steps_per_period: usize,
    /// Periods to integrate in the transient reference.
    pub newmark_periods: usize,
    /// Length used to normalise reported amplitudes (μm); 0 = auto
    /// (the structure thickness).
    pub amp_scale: f64,
    /// Observation point: node index (1-based in files; 0 = auto, the
    /// largest master-mode deflection) and displacement component 0..2.
    pub observe_node: usize,
    pub observe_comp: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            master_mode: 1,
            order: 3,
            na_order: 1,
            forcing_harmonics: 1,
            quality_factor: 100.0,
            alpha: f64::NAN,
            beta: f64::NAN,
            static_update: true,
            resonance_tol: 1e-2,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            eig_tol: 1e-7,
            n_modes: 10,
            homological_tol: 1e-9,
            omega_min: 0.0,
            omega_max: 0.0,
            ds0: 0.01,
            ds_min: 1e-6,
            ds_max: 0.05,
            max_steps: 2000,
            rom_harmonics: 9,
            rom_time_samples: 128,
            hb_harmonics: 7,
            newmark_steps_per_period: 256,
            newmark_periods: 400,
            amp_scale: 0.0,
            observe_node: 0,
            observe_comp: 2,
        }
    }
}

impl RunConfig {
    /// Check cross-field constraints.
    pub fn validate(&self) -> Result<()> {
        if self.master_mode == 0 {
            return Err(CoreError::Config("master_mode must be at least 1".into()));
        }
        if self.order == 0 {
            return Err(CoreError::Config("order must be at least 1".into()));
        }
        if self.na_order != 0 && self.na_order >= self.order {
            return Err(CoreError::Config(format!(
                "na_order must be 0 or in 1..order (got na_order = {}, order = {})",
                self.na_order, self.order
            )));
        }
        if self.forcing_harmonics == 0 {
            return Err(CoreError::Config("forcing_harmonics must be at least 1".into()));
        }
        if self.quality_factor <= 0.0 {
            return Err(CoreError::Config("quality_factor must be positive".into()));
        }
        for (name, v) in [
            ("resonance_tol", self.resonance_tol),
            ("newton_tol", self.newton_tol),
            ("eig_tol", self.eig_tol),
            ("homological_tol", self.homological_tol),
            ("ds0", self.ds0),
            ("ds_min", self.ds_min),
            ("ds_max", self.ds_max),
        ] {
            if !(v > 0.0) {
                return Err(CoreError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.observe_comp > 2 {
            return Err(CoreError::Config(format!(
                "observe_comp must be 0, 1 or 2, got {}",
                self.observe_comp
            )));
        }
        Ok(())
    }

    /// Rayleigh coefficients (α, β) given the master eigenfrequency;
    /// explicit `alpha`/`beta` keys win over the quality factor.
    pub fn rayleigh(&self, omega_master: f64) -> (f64, f64) {
        if self.alpha.is_nan() && self.beta.is_nan() {
            (omega_master / self.quality_factor, 0.0)
        } else {
            (
                if self.alpha.is_nan() { 0.0 } else { self.alpha },
                if self.beta.is_nan() { 0.0 } else { self.beta },
            )
        }
    }
}

/// Parse a flat `key = value` configuration, verifying [`RunConfig::validate`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or(CoreError::Parse {
            line,
            msg: format!("expected `key = value`, got `{body}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(CoreError::Parse {
                line,
                msg: format!("key `{key}` is set twice"),
            });
        }
        set_key(&mut cfg, key, value).map_err(|msg| CoreError::Parse { line, msg })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn set_key(cfg: &mut RunConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    fn as_usize(v: &str) -> std::result::Result<usize, String> {
        v.parse().map_err(|_| format!("`{v}` is not an unsigned integer"))
    }
    fn as_f64(v: &str) -> std::result::Result<f64, String> {
        v.parse().map_err(|_| format!("`{v}` is not a number"))
    }
    fn as_bool(v: &str) -> std::result::Result<bool, String> {
        match v {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(format!("`{v}` is not a boolean (true/false)")),
        }
    }
    match key {
        "master_mode" => cfg.master_mode = as_usize(value)?,
        "order" => cfg.order = as_usize(value)?,
        "na_order" => cfg.na_order = as_usize(value)?,
        "forcing_harmonics" => cfg.forcing_harmonics = as_usize(value)?,
        "quality_factor" => cfg.quality_factor = as_f64(value)?,
        "alpha" => cfg.alpha = as_f64(value)?,
        "beta" => cfg.beta = as_f64(value)?,
        "static_update" => cfg.static_update = as_bool(value)?,
        "resonance_tol" => cfg.resonance_tol = as_f64(value)?,
        "newton_tol" => cfg.newton_tol = as_f64(value)?,
        "newton_max_iter" => cfg.newton_max_iter = as_usize(value)?,
        "eig_tol" => cfg.eig_tol = as_f64(value)?,
        "n_modes" => cfg.n_modes = as_usize(value)?,
        "homological_tol" => cfg.homological_tol = as_f64(value)?,
        "omega_min" => cfg.omega_min = as_f64(value)?,
        "omega_max" => cfg.omega_max = as_f64(value)?,
        "ds0" => cfg.ds0 = as_f64(value)?,
        "ds_min" => cfg.ds_min = as_f64(value)?,
        "ds_max" => cfg.ds_max = as_f64(value)?,
        "max_steps" => cfg.max_steps = as_usize(value)?,
        "rom_harmonics" => cfg.rom_harmonics = as_usize(value)?,
        "rom_time_samples" => cfg.rom_time_samples = as_usize(value)?,
        "hb_harmonics" => cfg.hb_harmonics = as_usize(value)?,
        "newmark_steps_per_period" => cfg.newmark_steps_per_period = as_usize(value)?,
        "newmark_periods" => cfg.newmark_periods = as_usize(value)?,
        "amp_scale" => cfg.amp_scale = as_f64(value)?,
        "observe_node" => cfg.observe_node = as_usize(value)?,
        "observe_comp" => cfg.observe_comp = as_usize(value)?,
        other => return Err(format!("unknown key `{other}`")),
    }
    Ok(())
}
