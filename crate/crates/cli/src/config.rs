use std::path::Path;

use gbbm::env::{Mode, PeriodicField};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub field: FieldConfig,
    pub sim: SimConfig,
    pub eigen: EigenConfig,
    pub speed: SpeedConfig,
    pub rate: RateConfig,
    pub simulate: SimulateConfig,
    pub halfspace: HalfspaceConfig,
    pub shape: ShapeConfig,
    pub tilted: TiltedConfig,
    pub fkpp: FkppConfig,
    pub mckean: McKeanConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            field: FieldConfig::default(),
            sim: SimConfig::default(),
            eigen: EigenConfig::default(),
            speed: SpeedConfig::default(),
            rate: RateConfig::default(),
            simulate: SimulateConfig::default(),
            halfspace: HalfspaceConfig::default(),
            shape: ShapeConfig::default(),
            tilted: TiltedConfig::default(),
            fkpp: FkppConfig::default(),
            mckean: McKeanConfig::default(),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Config, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// `g(x) = offset + sum amp cos(2 pi k.x + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub dim: usize,
    pub offset: f64,
    #[serde(default)]
    pub modes: Vec<Mode>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig { dim: 1, offset: 1.0, modes: vec![Mode::new(&[1], 0.5, 0.0)] }
    }
}

impl FieldConfig {
    pub fn build(&self) -> Result<PeriodicField, CliError> {
        PeriodicField::new(self.dim, self.modes.clone(), self.offset).map_err(|e| CliError::Config(format!("field: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub cap: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { dt: 0.01, cap: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenConfig {
    pub direction: Vec<f64>,
    pub lambda: Vec<f64>,
    pub truncation: Option<usize>,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig { direction: vec![1.0], lambda: (0..=8).map(|k| 0.5 * f64::from(k)).collect(), truncation: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeedConfig {
    pub directions: usize,
}

impl Default for SpeedConfig {
    fn default() -> Self {
        SpeedConfig { directions: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateConfig {
    pub direction: Vec<f64>,
    /// Defaults to a grid around `c*`.
    pub zeta: Option<Vec<f64>>,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig { direction: vec![1.0], zeta: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub x0: Vec<f64>,
    pub times: Vec<f64>,
    pub reps: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { x0: vec![0.0], times: vec![1.0, 2.0, 4.0], reps: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HalfspaceConfig {
    pub side: Side,
    pub direction: Vec<f64>,
    pub epsilon: f64,
    pub t_list: Vec<f64>,
    pub reps: usize,
}

impl Default for HalfspaceConfig {
    fn default() -> Self {
        HalfspaceConfig { side: Side::Upper, direction: vec![1.0], epsilon: 0.3, t_list: vec![1.0, 2.0, 3.0, 4.0], reps: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapeConfig {
    pub directions: usize,
    pub t_list: Vec<f64>,
    pub epsilon: f64,
    pub reps: usize,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        ShapeConfig { directions: 64, t_list: vec![2.0, 4.0, 6.0], epsilon: 0.2, reps: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TiltedConfig {
    pub direction: Vec<f64>,
    pub t: f64,
    pub reps: usize,
    pub dt: f64,
    pub eta: Vec<f64>,
}

impl Default for TiltedConfig {
    fn default() -> Self {
        TiltedConfig { direction: vec![1.0], t: 20.0, reps: 2000, dt: 0.005, eta: vec![-0.3, 0.3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FkppConfig {
    /// `+1` for a front moving right, `-1` for left.
    pub orientation: i8,
    pub dx: f64,
    pub t_end: f64,
    /// Defaults to `c* t_end + 10`.
    pub half_width: Option<f64>,
}

impl Default for FkppConfig {
    fn default() -> Self {
        FkppConfig { orientation: 1, dx: 0.05, t_end: 40.0, half_width: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum McKeanKind {
    Indicator,
    Sigmoid { scale: f64 },
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McKeanConfig {
    pub function: McKeanKind,
    pub t: f64,
    pub probes: Vec<f64>,
    pub reps: usize,
    pub pde_dx: f64,
}

impl Default for McKeanConfig {
    fn default() -> Self {
        McKeanConfig { function: McKeanKind::Indicator, t: 1.0, probes: vec![-1.0, 0.0, 1.0, 2.0], reps: 2000, pde_dx: 0.02 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = Config::default();
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = Config::parse("seed = 7\n[field]\ndim = 2\noffset = 2.0\n").unwrap();
        assert_eq!(c.seed, 7);
        assert!(c.field.modes.is_empty());
        assert_eq!(c.sim, SimConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::parse("sede = 7\n").is_err());
        assert!(Config::parse("[sim]\ndt = 0.01\nstep = 2\n").is_err());
    }

    #[test]
    fn mckean_kinds_parse() {
        let c = Config::parse("[mckean]\nfunction = { kind = \"sigmoid\", scale = 0.5 }\n").unwrap();
        assert_eq!(c.mckean.function, McKeanKind::Sigmoid { scale: 0.5 });
    }
}
