use std::path::Path;

use serde::{Deserialize, Serialize};
use vegpattern_core::simulate::PdeConfig;
use vegpattern_core::ModelParams;

use crate::error::CliError;

/// Evenly spaced values from `min` to `max` inclusive; `steps` = 0 gives an empty grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub const fn new(min: f64, max: f64, steps: usize) -> Self {
        Self { min, max, steps }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    pub fn spacing(&self) -> Option<f64> {
        (self.steps > 1).then(|| (self.max - self.min) / (self.steps - 1) as f64)
    }

    fn check(&self, key: &str) -> Result<(), CliError> {
        if !self.min.is_finite() || !self.max.is_finite() || (self.steps > 1 && self.max < self.min) {
            return Err(CliError::Config(format!("{key}: need finite min <= max")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BifScanConfig {
    pub r: Grid,
    /// Number of R samples for the periodic-orbit branch; 0 skips it.
    pub cycle_samples: usize,
    /// (R with an orbit, R without one) for the homoclinic search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homoclinic: Option<[f64; 2]>,
}

impl Default for BifScanConfig {
    fn default() -> Self {
        Self {
            r: Grid::new(0.5, 25.0, 246),
            cycle_samples: 0,
            homoclinic: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    pub theta2: Grid,
    pub r: Grid,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            theta2: Grid::new(0.0, 1.0, 51),
            r: Grid::new(0.1, 25.0, 250),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuringConfig {
    /// Largest wavenumber in the dispersion table.
    pub k_max: u32,
    /// R grid of the Turing curve.
    pub r: Grid,
    /// R bracket searched for Turing-Hopf points.
    pub th_bracket: [f64; 2],
}

impl Default for TuringConfig {
    fn default() -> Self {
        Self {
            k_max: 20,
            r: Grid::new(1.13, 2.07, 941),
            th_bracket: [1.13, 2.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalFormConfig {
    pub th_bracket: [f64; 2],
    /// R near the wanted Turing-Hopf point.
    pub r_hint: f64,
    pub eps1: Grid,
    pub eps2: Grid,
    /// Extra (ε₁, ε₂) points reported with their amplitude equilibria.
    pub samples: Vec<[f64; 2]>,
}

impl Default for NormalFormConfig {
    fn default() -> Self {
        Self {
            th_bracket: [1.13, 2.5],
            r_hint: 1.56,
            eps1: Grid::new(-0.05, 0.05, 41),
            eps2: Grid::new(-0.02, 0.02, 41),
            samples: vec![
                [0.01, -0.005],
                [0.01, 0.01],
                [-0.01, 0.015],
                [-0.03, 0.01],
                [-0.04, -0.005],
                [-0.01, -0.005],
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimKind {
    Pde,
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Cosine,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    pub shape: Shape,
    pub amp: f64,
    pub freq: f64,
    /// Base state (w, b); defaults to the vegetated equilibrium.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<[f64; 2]>,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            shape: Shape::Cosine,
            amp: 0.1,
            freq: 1.0,
            base: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeConfig {
    pub t_end: f64,
    pub tol: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self { t_end: 1000.0, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub kind: SimKind,
    /// Run at (ε₁, ε₂) from the Turing-Hopf point located with the normal-form settings
    /// instead of at the model's R and d1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub th_offset: Option<[f64; 2]>,
    pub init: InitConfig,
    pub pde: PdeConfig,
    pub ode: OdeConfig,
    /// Write every n-th snapshot (PDE) or accepted step (ODE).
    pub dump_every: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            kind: SimKind::Pde,
            th_offset: None,
            init: InitConfig::default(),
            pde: PdeConfig::default(),
            ode: OdeConfig::default(),
            dump_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateMapConfig {
    pub theta2: Grid,
    pub d1: Grid,
}

impl Default for StateMapConfig {
    fn default() -> Self {
        Self {
            theta2: Grid::new(0.5, 2.0, 31),
            d1: Grid::new(0.0, 0.5, 26),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Worker threads for scans; 0 lets the pool pick one per core.
    pub workers: usize,
    /// Copied verbatim into the `timestamp` metadata line.
    pub timestamp: String,
    pub model: ModelParams,
    pub bif_scan: BifScanConfig,
    pub map2d: MapConfig,
    pub turing: TuringConfig,
    pub normal_form: NormalFormConfig,
    pub simulate: SimulateConfig,
    pub state_map: StateMapConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            workers: 0,
            timestamp: "unset".into(),
            model: ModelParams::default(),
            bif_scan: BifScanConfig::default(),
            map2d: MapConfig::default(),
            turing: TuringConfig::default(),
            normal_form: NormalFormConfig::default(),
            simulate: SimulateConfig::default(),
            state_map: StateMapConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.checked()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Reads `path` (if given) and applies `key=value` overrides on top.
    pub fn load(path: Option<&Path>, sets: &[String]) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        // parse the file on its own first so errors carry its line numbers
        let file_cfg: RunConfig = toml::from_str(&text).map_err(|e| match path {
            Some(p) => CliError::Config(format!("{}: {e}", p.display())),
            None => CliError::Config(e.to_string()),
        })?;
        if sets.is_empty() {
            return file_cfg.checked();
        }
        let mut table: toml::Table = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        for set in sets {
            apply_override(&mut table, set)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("--set: {}", e.message())))?;
        cfg.checked()
    }

    fn checked(self) -> Result<Self, CliError> {
        self.model.validated().map_err(|e| CliError::Config(format!("model: {e}")))?;
        for (key, g) in [
            ("bif_scan.r", self.bif_scan.r),
            ("map2d.theta2", self.map2d.theta2),
            ("map2d.r", self.map2d.r),
            ("turing.r", self.turing.r),
            ("normal_form.eps1", self.normal_form.eps1),
            ("normal_form.eps2", self.normal_form.eps2),
            ("state_map.theta2", self.state_map.theta2),
            ("state_map.d1", self.state_map.d1),
        ] {
            g.check(key)?;
        }
        if self.simulate.dump_every == 0 {
            return Err(CliError::Config("simulate.dump_every must be at least 1".into()));
        }
        Ok(self)
    }
}

fn apply_override(table: &mut toml::Table, set: &str) -> Result<(), CliError> {
    let (key, raw) = set
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {set}: expected key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("--set {set}: empty key")));
    }
    // anything that is not a TOML literal is taken as a bare string
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts.split_last().expect("non-empty key");
    let mut node = table;
    for part in path {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("--set {key}: {part} is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}
