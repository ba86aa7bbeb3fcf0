//! Run configuration: a versioned JSON document with field-path errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dephasing::DephasingSettings;
use crate::error::{Error, Result};
use crate::fom::PlatformTable;
use crate::gate::GateSpec;
use crate::optimizer::{Miscalibrated, OptimizerSettings, SweepSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Miscalibration probe settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSettings {
    pub field: Miscalibrated,
    pub perturbations: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Value of the config's frequency unit in units of Ω_G. Rates and knots
    /// are multiplied by it and times divided by it when loading.
    #[serde(default = "one")]
    pub frequency_unit: f64,
    #[serde(default = "GateSpec::reference")]
    pub gate: GateSpec,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub dephasing: DephasingSettings,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub miscalibration: Option<ProbeSettings>,
    /// Platforms for the figure-of-merit table; `None` uses the bundled table.
    #[serde(default)]
    pub fom: Option<PlatformTable>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: SCHEMA_VERSION,
            frequency_unit: 1.0,
            gate: GateSpec::reference(),
            optimizer: OptimizerSettings::default(),
            dephasing: DephasingSettings::default(),
            sweep: None,
            miscalibration: None,
            fom: None,
            output_dir: default_output_dir(),
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Parse, check the schema version and convert to units of Ω_G.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut c: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path.is_empty() { ".".to_string() } else { path }, e.inner().to_string())
        })?;
        if c.version != SCHEMA_VERSION {
            return Err(Error::config("version", format!("unsupported schema version {}, expected {SCHEMA_VERSION}", c.version)));
        }
        c.normalize_units()?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))?;
        Self::from_json(&text)
    }

    fn normalize_units(&mut self) -> Result<()> {
        let s = self.frequency_unit;
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::config("frequency_unit", "must be finite and > 0"));
        }
        if s == 1.0 {
            return Ok(());
        }
        let g = &mut self.gate;
        let p = &mut g.params;
        for r in [&mut p.kappa_c, &mut p.kappa_l, &mut p.gamma_e, &mut p.gamma_dp, &mut p.g, &mut p.omega0, &mut p.delta_lambda] {
            *r *= s;
        }
        if let Some(k) = &mut p.kappa_l_b {
            *k *= s;
        }
        g.window.t_in /= s;
        g.window.t_gate /= s;
        g.grid.t0 /= s;
        if let Some(t) = &mut g.grid.t_end {
            *t /= s;
        }
        g.tau_g /= s;
        if let Some(t) = &mut g.pulse_center {
            *t /= s;
        }
        if let Some(t) = &mut g.controls.tau_spline {
            *t /= s;
        }
        if let Some(k) = &mut g.controls.knots {
            k.iter_mut().for_each(|v| *v *= s);
        }
        self.frequency_unit = 1.0;
        Ok(())
    }

    /// Checks that need more than one field.
    pub fn validate(&self) -> Result<()> {
        let g = &self.gate;
        g.params.validate().map_err(|e| Error::config("gate.params", e.to_string()))?;
        let grid = g.time_grid().map_err(|e| Error::config("gate.grid", e.to_string()))?;
        g.window.validate(&grid).map_err(|e| Error::config("gate.window", e.to_string()))?;
        if !(g.tau_g > 0.0) {
            return Err(Error::config("gate.tau_g", "must be > 0"));
        }
        if let Some(k) = &g.controls.knots {
            if k.len() != g.controls.n_knots {
                return Err(Error::config("gate.controls.knots", format!("expected {} values, got {}", g.controls.n_knots, k.len())));
            }
        }
        if self.optimizer.starts == 0 {
            return Err(Error::config("optimizer.starts", "must be >= 1"));
        }
        if self.optimizer.nelder_mead.budget == 0 {
            return Err(Error::config("optimizer.nelder_mead.budget", "must be >= 1"));
        }
        if self.dephasing.n_traj == 0 {
            return Err(Error::config("dephasing.n_traj", "must be >= 1"));
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        Ok(())
    }

    /// Canonical JSON of the resolved config, with every default filled in.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the canonical JSON, ignoring the output directory.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        Ok(hex::encode(Sha256::digest(c.canonical_json()?.as_bytes())))
    }
}
