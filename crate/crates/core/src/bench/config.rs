//! Simulation and experiment configuration (TOML).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::BenchError;
use crate::adaptive::{StrategyRegistry, StrategySpec};
use crate::sim::DeviceInstance;

pub const DEFAULT_CONFIG: &str = include_str!("../../configs/default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
pub enum Experiment {
    A,
    B,
    C,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::A => "A",
            Experiment::B => "B",
            Experiment::C => "C",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "A" | "a" => Ok(Experiment::A),
            "B" | "b" => Ok(Experiment::B),
            "C" | "c" => Ok(Experiment::C),
            _ => Err(format!("unknown experiment `{s}` (expected A, B or C)")),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    Low,
    High,
    Adaptive,
}

impl Behavior {
    pub const ALL: [Behavior; 3] = [Behavior::Low, Behavior::High, Behavior::Adaptive];

    pub fn name(self) -> &'static str {
        match self {
            Behavior::Low => "low",
            Behavior::High => "high",
            Behavior::Adaptive => "adaptive",
        }
    }

    /// The strategies SelectStrategy may choose from.
    pub fn strategy_ids(self, registry: &StrategyRegistry) -> Vec<String> {
        match self {
            Behavior::Low => vec!["low_torque".to_string()],
            Behavior::High => vec!["high_torque".to_string()],
            Behavior::Adaptive => registry.ids(),
        }
    }
}

impl FromStr for Behavior {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "low" => Ok(Behavior::Low),
            "high" => Ok(Behavior::High),
            "adaptive" => Ok(Behavior::Adaptive),
            _ => Err(format!("unknown behavior `{s}` (expected low, high or adaptive)")),
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum DataPolicy {
    /// Every trial starts with an empty data store.
    #[serde(rename = "reset-per-trial", alias = "reset")]
    ResetPerTrial,
    /// Records carry over from one trial to the next.
    #[serde(rename = "retain")]
    Retain,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub devices: Vec<String>,
    /// Total rotation to achieve, rad; `inf` means tighten until the
    /// device threshold is reached.
    pub target: f64,
    pub trials: u32,
    pub num_attempts: u32,
    pub data_policy: DataPolicy,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dt: Option<f64>,
    seed: Option<u64>,
    margin: Option<f64>,
    episode_timeout: Option<f64>,
    #[serde(default)]
    strategies: Vec<StrategySpec>,
    #[serde(default)]
    devices: BTreeMap<String, DeviceInstance>,
    #[serde(default)]
    experiments: BTreeMap<String, ExperimentSpec>,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dt: f64,
    pub seed: u64,
    pub margin: f64,
    /// Simulated seconds after which an episode is abandoned.
    pub episode_timeout: f64,
    pub registry: StrategyRegistry,
    pub devices: BTreeMap<String, DeviceInstance>,
    pub experiments: BTreeMap<Experiment, ExperimentSpec>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("built-in configuration is valid")
    }
}

impl SimConfig {
    /// Parses a complete configuration.
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        let mut cfg = SimConfig {
            dt: 0.1,
            seed: 0,
            margin: 0.0,
            episode_timeout: 3600.0,
            registry: StrategyRegistry::default(),
            devices: BTreeMap::new(),
            experiments: BTreeMap::new(),
        };
        cfg.apply(raw)?;
        Ok(cfg)
    }

    /// The built-in defaults overlaid with `text`.
    pub fn with_overrides(text: &str) -> Result<Self, BenchError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        let mut cfg = SimConfig::default();
        cfg.apply(raw)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::with_overrides(&text)
    }

    fn apply(&mut self, raw: RawConfig) -> Result<(), BenchError> {
        self.dt = raw.dt.unwrap_or(self.dt);
        self.seed = raw.seed.unwrap_or(self.seed);
        self.margin = raw.margin.unwrap_or(self.margin);
        self.episode_timeout = raw.episode_timeout.unwrap_or(self.episode_timeout);
        if !raw.strategies.is_empty() {
            let mut merged: Vec<StrategySpec> = self.registry.iter().cloned().collect();
            for s in raw.strategies {
                match merged.iter_mut().find(|m| m.id == s.id) {
                    Some(slot) => *slot = s,
                    None => merged.push(s),
                }
            }
            self.registry = StrategyRegistry::new(merged)?;
        }
        for (id, mut device) in raw.devices {
            device.id = id.clone();
            device.validate().map_err(|e| BenchError::Config(e.to_string()))?;
            self.devices.insert(id, device);
        }
        for (name, spec) in raw.experiments {
            let exp = name.parse::<Experiment>().map_err(BenchError::Config)?;
            self.experiments.insert(exp, spec);
        }
        if !(self.dt > 0.0) {
            return Err(BenchError::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.margin >= 0.0) {
            return Err(BenchError::Config(format!("margin must be ≥ 0, got {}", self.margin)));
        }
        if !(self.episode_timeout > 0.0) {
            return Err(BenchError::Config("episode_timeout must be > 0".into()));
        }
        Ok(())
    }

    pub fn device(&self, id: &str) -> Result<&DeviceInstance, BenchError> {
        self.devices
            .get(id)
            .ok_or_else(|| BenchError::Config(format!("unknown device `{id}`")))
    }

    pub fn experiment(&self, exp: Experiment) -> Result<&ExperimentSpec, BenchError> {
        self.experiments
            .get(&exp)
            .ok_or_else(|| BenchError::Config(format!("experiment {exp} is not configured")))
    }
}

/// Fully resolved settings for one `run`.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub behavior: Behavior,
    pub trials: u32,
    pub num_attempts: u32,
    pub seed: u64,
    pub devices: Vec<DeviceInstance>,
    pub target: f64,
    pub data_policy: DataPolicy,
    pub dt: f64,
    pub margin: f64,
    pub episode_timeout: f64,
    pub registry: StrategyRegistry,
    /// Run reset-per-trial trials on worker threads.
    pub parallel: bool,
}

impl ExperimentConfig {
    pub fn new(sim: &SimConfig, experiment: Experiment, behavior: Behavior) -> Result<Self, BenchError> {
        let spec = sim.experiment(experiment)?;
        let devices = spec
            .devices
            .iter()
            .map(|id| sim.device(id).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            experiment,
            behavior,
            trials: spec.trials,
            num_attempts: spec.num_attempts,
            seed: sim.seed,
            devices,
            target: spec.target,
            data_policy: spec.data_policy,
            dt: sim.dt,
            margin: sim.margin,
            episode_timeout: sim.episode_timeout,
            registry: sim.registry.clone(),
            parallel: false,
        })
    }

    /// Defaults for `experiment` from the built-in configuration.
    pub fn defaults(experiment: Experiment, behavior: Behavior) -> Self {
        Self::new(&SimConfig::default(), experiment, behavior).expect("built-in experiments are configured")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks everything a run relies on before trial 1 starts.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.trials == 0 {
            return Err(BenchError::Config("trials must be ≥ 1".into()));
        }
        if self.num_attempts == 0 {
            return Err(BenchError::Config("num_attempts must be ≥ 1".into()));
        }
        if self.devices.is_empty() {
            return Err(BenchError::Config("experiment has no devices".into()));
        }
        if self.target.is_nan() || self.target <= 0.0 {
            return Err(BenchError::Config(format!("target must be > 0, got {}", self.target)));
        }
        let ids = self.behavior.strategy_ids(&self.registry);
        let strategies = self.registry.restricted_to(&ids)?;
        for d in &self.devices {
            d.validate().map_err(|e| BenchError::Config(e.to_string()))?;
            for s in strategies.iter() {
                if s.window_width() < d.symmetry_angle() {
                    return Err(BenchError::Config(format!(
                        "strategy `{}` window {:.4} rad is narrower than the {:.4} rad symmetry angle of device `{}`",
                        s.id,
                        s.window_width(),
                        d.symmetry_angle(),
                        d.id
                    )));
                }
            }
        }
        Ok(())
    }
}
