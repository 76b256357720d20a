use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Strategy ID emitted when no registered strategy covers the recorded torque.
pub const NO_STRATEGIES: &str = "no_strategies";

/// One manipulation strategy: its torque allowance, continuous-twist window,
/// timing and nuisance failure rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub id: String,
    /// Maximum permitted torque magnitude, N·m.
    pub ft_limit: f64,
    /// Safe continuous-twist window relative to the grasp frame, rad.
    pub angle_min: f64,
    pub angle_max: f64,
    /// rad/s
    pub twist_rate: f64,
    pub t_approach: f64,
    pub t_grasp: f64,
    pub t_retract: f64,
    /// Probability that any one motion segment fails.
    pub p_segment_failure: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("strategy `{id}`: {problem}")]
    Invalid { id: String, problem: String },
    #[error("duplicate strategy id `{0}`")]
    Duplicate(String),
    #[error("unknown strategy `{0}`")]
    Unknown(String),
    #[error("strategy id `{0}` is reserved")]
    Reserved(String),
}

impl StrategySpec {
    pub fn window_width(&self) -> f64 {
        self.angle_max - self.angle_min
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        let invalid = |problem: &str| StrategyError::Invalid {
            id: self.id.clone(),
            problem: problem.to_string(),
        };
        if self.id == NO_STRATEGIES {
            return Err(StrategyError::Reserved(self.id.clone()));
        }
        if !(self.ft_limit > 0.0) {
            return Err(invalid("ft_limit must be > 0"));
        }
        if !(self.twist_rate > 0.0) {
            return Err(invalid("twist_rate must be > 0"));
        }
        if !(self.angle_max > self.angle_min) {
            return Err(invalid("angle_max must exceed angle_min"));
        }
        if [self.t_approach, self.t_grasp, self.t_retract]
            .iter()
            .any(|t| !(*t >= 0.0))
        {
            return Err(invalid("segment durations must be ≥ 0"));
        }
        if !(0.0..=1.0).contains(&self.p_segment_failure) {
            return Err(invalid("p_segment_failure must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Head-on grasp, wrist rotation: fast, 0.5 N·m.
    pub fn low_torque() -> Self {
        Self {
            id: "low_torque".into(),
            ft_limit: 0.5,
            angle_min: 0.0,
            angle_max: PI,
            twist_rate: 0.157,
            t_approach: 8.0,
            t_grasp: 4.0,
            t_retract: 4.0,
            p_segment_failure: 0.009,
        }
    }

    /// Side grasp, series of half-rotations: slow, 5 N·m.
    pub fn high_torque() -> Self {
        Self {
            id: "high_torque".into(),
            ft_limit: 5.0,
            angle_min: 0.0,
            angle_max: PI,
            twist_rate: 0.027,
            t_approach: 10.0,
            t_grasp: 8.0,
            t_retract: 8.0,
            p_segment_failure: 0.03,
        }
    }
}

/// Ordered set of strategies; order breaks ft_limit ties during selection.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrategyRegistry {
    strategies: Vec<StrategySpec>,
}

impl StrategyRegistry {
    pub fn new(strategies: Vec<StrategySpec>) -> Result<Self, StrategyError> {
        for (i, s) in strategies.iter().enumerate() {
            s.validate()?;
            if strategies[..i].iter().any(|o| o.id == s.id) {
                return Err(StrategyError::Duplicate(s.id.clone()));
            }
        }
        Ok(Self { strategies })
    }

    pub fn defaults() -> Self {
        Self::new(vec![StrategySpec::low_torque(), StrategySpec::high_torque()])
            .expect("default strategies are valid")
    }

    pub fn get(&self, id: &str) -> Option<&StrategySpec> {
        self.strategies.iter().find(|s| s.id == id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &StrategySpec> {
        self.strategies.iter()
    }

    pub fn ids(&self) -> Vec<String> {
        self.strategies.iter().map(|s| s.id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    /// The sub-registry containing only `ids`, kept in registry order.
    pub fn restricted_to<S: AsRef<str>>(&self, ids: &[S]) -> Result<Self, StrategyError> {
        for id in ids {
            if self.get(id.as_ref()).is_none() {
                return Err(StrategyError::Unknown(id.as_ref().to_string()));
            }
        }
        Ok(Self {
            strategies: self
                .strategies
                .iter()
                .filter(|s| ids.iter().any(|id| id.as_ref() == s.id))
                .cloned()
                .collect(),
        })
    }
}
