//! Polarisation loop tables: the imposed polarisation P over one forcing
//! period, supplied per patch group as a sampled curve.
//!
//! The table stores (t, P) samples spanning exactly one period, endpoints
//! included, so `t` runs from 0 to T and P(0) must close the loop within
//! 1e-9 of the loop's amplitude scale. During frequency sweeps the loop
//! is read as a function of phase θ = 2π t / T, making the polarisation
//! history frequency-independent.
//!
//! CSV format: optional `# key = value` comment lines (notably
//! `# V0 = <volts>`), then the header `t,P`, then one `t,P` row per
//! sample. P is in C/m², t in μs (nominal).

use std::f64::consts::TAU;
use std::fmt::Write as _;

use crate::error::{CoreError, Result};

/// Minimum number of samples for a usable loop table.
pub const MIN_SAMPLES: usize = 16;

/// Relative tolerance for the periodic-closure check P(0) ≈ P(T).
pub const CLOSURE_TOL: f64 = 1e-9;

/// One patch group's polarisation over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarisationLoop {
    /// (t, P) samples, strictly increasing t from 0 to the period T.
    pub samples: Vec<(f64, f64)>,
    /// Actuation voltage amplitude metadata (V); not used numerically.
    pub voltage: f64,
}

impl PolarisationLoop {
    /// Build from samples, checking all invariants.
    pub fn new(samples: Vec<(f64, f64)>, voltage: f64) -> Result<Self> {
        let lp = PolarisationLoop { samples, voltage };
        lp.validate()?;
        Ok(lp)
    }

    /// Sample a phase function P(θ), θ ∈ [0, 2π], at `n` intervals
    /// (n + 1 rows, endpoints included) over a nominal period `period`.
    pub fn from_phase_fn(
        voltage: f64,
        period: f64,
        n: usize,
        p_of_theta: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let samples = (0..=n)
            .map(|i| {
                let frac = i as f64 / n as f64;
                (frac * period, p_of_theta(TAU * frac))
            })
            .collect();
        Self::new(samples, voltage)
    }

    /// The period T (time of the last sample).
    pub fn period(&self) -> f64 {
        self.samples.last().map(|&(t, _)| t).unwrap_or(0.0)
    }

    /// Largest |P| over the loop.
    pub fn amplitude(&self) -> f64 {
        self.samples
            .iter()
            .map(|&(_, p)| p.abs())
            .fold(0.0, f64::max)
    }

    /// P at phase θ (radians, any real value) by periodic linear
    /// interpolation of the table.
    pub fn value_at_phase(&self, theta: f64) -> f64 {
        let frac = (theta / TAU).rem_euclid(1.0);
        let t = frac * self.period();
        let idx = self
            .samples
            .partition_point(|&(ti, _)| ti <= t)
            .clamp(1, self.samples.len() - 1);
        let (t0, p0) = self.samples[idx - 1];
        let (t1, p1) = self.samples[idx];
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        p0 + w * (p1 - p0)
    }

    /// Phases θ_i = 2π t_i / T of the sample times.
    pub fn phases(&self) -> Vec<f64> {
        let period = self.period();
        self.samples.iter().map(|&(t, _)| TAU * t / period).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.samples.len() < MIN_SAMPLES {
            return Err(CoreError::Config(format!(
                "polarisation loop needs at least {MIN_SAMPLES} samples, got {}",
                self.samples.len()
            )));
        }
        let t0 = self.samples[0].0;
        let period = self.period();
        if period <= 0.0 {
            return Err(CoreError::Config(
                "polarisation loop period must be positive".into(),
            ));
        }
        if t0.abs() > 1e-12 * period {
            return Err(CoreError::Config(format!(
                "polarisation loop must start at t = 0, got t = {t0}"
            )));
        }
        for (i, w) in self.samples.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(CoreError::Config(format!(
                    "polarisation samples must have strictly increasing t; \
                     row {} (t = {}) does not advance past row {} (t = {})",
                    i + 2,
                    w[1].0,
                    i + 1,
                    w[0].0
                )));
            }
        }
        let scale = self.amplitude().max(f64::MIN_POSITIVE);
        let gap = (self.samples[0].1 - self.samples[self.samples.len() - 1].1).abs();
        if gap > CLOSURE_TOL * scale {
            return Err(CoreError::Config(format!(
                "polarisation loop does not close: P at row 1 is {} but P at row {} is {} \
                 (gap {:.3e} exceeds {:.0e} of the loop amplitude)",
                self.samples[0].1,
                self.samples.len(),
                self.samples[self.samples.len() - 1].1,
                gap,
                CLOSURE_TOL
            )));
        }
        Ok(())
    }
}

/// Parse the loop CSV format.
pub fn parse_polarisation_csv(text: &str) -> Result<PolarisationLoop> {
    let mut voltage = 0.0;
    let mut samples = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                if k.trim() == "V0" {
                    voltage = v.trim().parse().map_err(|_| CoreError::Parse {
                        line: line_no,
                        msg: format!("V0 value `{}` is not a number", v.trim()),
                    })?;
                }
            }
            continue;
        }
        if !saw_header {
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if cols != ["t", "P"] {
                return Err(CoreError::Parse {
                    line: line_no,
                    msg: format!("expected header `t,P`, got `{trimmed}`"),
                });
            }
            saw_header = true;
            continue;
        }
        let (ts, ps) = trimmed.split_once(',').ok_or(CoreError::Parse {
            line: line_no,
            msg: format!("expected `t,P` row, got `{trimmed}`"),
        })?;
        let t: f64 = ts.trim().parse().map_err(|_| CoreError::Parse {
            line: line_no,
            msg: format!("t value `{}` is not a number", ts.trim()),
        })?;
        let p: f64 = ps.trim().parse().map_err(|_| CoreError::Parse {
            line: line_no,
            msg: format!("P value `{}` is not a number", ps.trim()),
        })?;
        samples.push((t, p));
    }
    if !saw_header {
        return Err(CoreError::Parse {
            line: 1,
            msg: "missing `t,P` header".into(),
        });
    }
    PolarisationLoop::new(samples, voltage)
}

/// Serialise a loop to the CSV format (full precision; round-trips).
pub fn write_polarisation_csv(lp: &PolarisationLoop) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# V0 = {:.17e}", lp.voltage);
    out.push_str("t,P\n");
    for &(t, p) in &lp.samples {
        let _ = writeln!(out, "{t:.17e},{p:.17e}");
    }
    out
}
