//! Experiment harness: configuration, the canonical tree, the episode
//! runner and result output.

pub mod config;
pub mod results;
pub mod run;
pub mod tree;

use thiserror::Error;

use crate::adaptive::{StoreError, StrategyError};
use crate::def::{Diagnostic, InstantiateError};

pub use config::{Behavior, DataPolicy, Experiment, ExperimentConfig, ExperimentSpec, SimConfig};
pub use results::{emit_results, fastest_time, results_csv, summary, write_results_csv};
pub use run::{run_episode, run_experiment, run_experiment_with, trial_seed, EpisodeResult, EpisodeSpec, ExperimentRun};
pub use tree::{build_canonical_tree, canonical_xml, declared_strategy_ids};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("tree has errors:\n{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Tree(Vec<Diagnostic>),
    #[error(transparent)]
    Instantiate(#[from] InstantiateError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
