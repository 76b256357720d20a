//! Episode loop and experiment runner.

use std::collections::BTreeMap;

use crate::adaptive::{DataStore, NO_STRATEGIES};
use crate::bt::{Blackboard, NodeStatus, ScopeId, TickTrace, Value};
use crate::def::{build_tree, LeafRegistry, TreeDocument};
use crate::sim::{leaf_registry, DeviceInstance, Episode, SegmentRecord, Selection, World};

use super::config::{DataPolicy, ExperimentConfig};
use super::tree::build_canonical_tree;
use super::BenchError;

pub const REASON_TIMEOUT: &str = "timeout";

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub trial: u32,
    pub device_id: String,
    pub success: bool,
    /// Genuine failures plus the attempt that ended the episode, at most
    /// the configured number of attempts.
    pub attempts_consumed: u32,
    /// s
    pub sim_time: f64,
    /// Strategies used, consecutive repeats collapsed.
    pub strategy_sequence: Vec<String>,
    pub failure_reasons: Vec<String>,
    pub selections: Vec<Selection>,
    pub segments: Vec<SegmentRecord>,
    /// Largest torque recorded for the device by the end of the episode.
    pub max_torque: f64,
    pub tree_ticks: u64,
    pub errors: Vec<String>,
    /// Cumulative twist on the blackboard at the end, rad.
    pub progress: f64,
    /// Handle rotation over the episode, rad.
    pub rotation: f64,
}

impl EpisodeResult {
    pub fn motion_segments(&self) -> usize {
        self.segments.len()
    }
}

pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub results: Vec<EpisodeResult>,
    /// Every F/T record produced during the run.
    pub archive: DataStore,
}

impl ExperimentRun {
    pub fn all_succeeded(&self) -> bool {
        self.results.iter().all(|r| r.success)
    }

    pub fn for_device<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a EpisodeResult> + 'a {
        self.results.iter().filter(move |r| r.device_id == id)
    }
}

/// Per-trial seed: a splitmix64 finalizer over the base seed, the device
/// index and the trial number. The behavior is deliberately not mixed in,
/// so behaviors sharing a strategy see the same random draws.
pub fn trial_seed(base: u64, device_index: usize, trial: u32) -> u64 {
    let mut z = base
        .wrapping_add((device_index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add((trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Receives the tick number, the episode and the trace after every tick.
pub type Observer<'a> = &'a mut dyn FnMut(u64, &Episode, NodeStatus, &TickTrace);

pub struct EpisodeSpec<'a> {
    pub doc: &'a TreeDocument,
    pub leaves: &'a LeafRegistry<Episode>,
    pub config: &'a ExperimentConfig,
    pub device: &'a DeviceInstance,
    pub trial: u32,
    pub seed: u64,
}

fn initial_blackboard(cfg: &ExperimentConfig) -> Blackboard {
    let mut bb = Blackboard::new();
    let init: [(&str, Value); 4] = [
        ("num_attempts", Value::Int(cfg.num_attempts as i64)),
        ("target", Value::Real(cfg.target)),
        ("progress", Value::Real(0.0)),
        ("attempt", Value::Int(1)),
    ];
    for (k, v) in init {
        bb.set(ScopeId::ROOT, k, v).expect("fresh blackboard");
    }
    bb
}

fn collapse(selections: &[Selection]) -> Vec<String> {
    let mut seq: Vec<String> = Vec::new();
    for s in selections.iter().filter(|s| s.strategy_id != NO_STRATEGIES) {
        if seq.last() != Some(&s.strategy_id) {
            seq.push(s.strategy_id.clone());
        }
    }
    seq
}

/// Runs one episode to completion, starting from `store`. Returns the
/// result and the store with this episode's records appended.
pub fn run_episode(
    spec: &EpisodeSpec<'_>,
    store: DataStore,
    mut observer: Option<Observer<'_>>,
) -> Result<(EpisodeResult, DataStore), BenchError> {
    let cfg = spec.config;
    let world = World::new(spec.device.clone(), cfg.dt, spec.seed).map_err(|e| BenchError::Config(e.to_string()))?;
    let mut ep = Episode::new(world, store, cfg.registry.clone(), spec.trial, cfg.margin);
    let mut tree = build_tree(spec.doc, spec.leaves, initial_blackboard(cfg))?;
    let max_ticks = (cfg.episode_timeout / cfg.dt).ceil() as u64 * 4 + 1000;
    let mut reasons = Vec::new();
    let mut genuine = 0u32;
    let mut exhausted = false;
    let mut errors = Vec::new();
    let status = loop {
        let (status, trace) = tree.tick(&mut ep);
        for r in &trace.retries {
            reasons.push(r.reason.clone().unwrap_or_else(|| "unspecified".to_string()));
            if !r.exempt {
                genuine += 1;
            }
            exhausted |= r.exhausted;
        }
        errors.extend(trace.errors.iter().map(ToString::to_string));
        if let Some(obs) = observer.as_mut() {
            obs(tree.tick_count(), &ep, status, &trace);
        }
        if status.is_done() {
            break status;
        }
        if ep.world.sim_time() >= cfg.episode_timeout || tree.tick_count() >= max_ticks {
            tree.halt(&mut ep);
            reasons.push(REASON_TIMEOUT.to_string());
            break NodeStatus::Failure;
        }
    };
    let success = status == NodeStatus::Success;
    if !success && ep.selections.last().is_some_and(|s| s.strategy_id == NO_STRATEGIES) {
        reasons.push(NO_STRATEGIES.to_string());
    }
    let attempts_consumed = if exhausted {
        cfg.num_attempts
    } else {
        (genuine + 1).min(cfg.num_attempts)
    };
    let result = EpisodeResult {
        trial: spec.trial,
        device_id: spec.device.id.clone(),
        success,
        attempts_consumed,
        sim_time: ep.world.sim_time(),
        strategy_sequence: collapse(&ep.selections),
        failure_reasons: reasons,
        max_torque: ep.store.max_recorded_torque(&ep.device_id),
        selections: ep.selections,
        segments: ep.segments,
        tree_ticks: tree.tick_count(),
        errors,
        progress: tree.blackboard().get_as::<f64>(ScopeId::ROOT, "progress").unwrap_or(0.0),
        rotation: ep.world.rotation_since_start(),
    };
    Ok((result, ep.store))
}

/// Runs every trial of `cfg` on the canonical tree for its behavior.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun, BenchError> {
    let doc = build_canonical_tree(&cfg.registry, cfg.behavior).map_err(BenchError::Tree)?;
    run_experiment_with(cfg, &doc)
}

/// Like [`run_experiment`] with a caller-supplied tree.
pub fn run_experiment_with(cfg: &ExperimentConfig, doc: &TreeDocument) -> Result<ExperimentRun, BenchError> {
    cfg.validate()?;
    let leaves = leaf_registry();
    // build once up front so tree errors abort before trial 1
    build_tree(doc, &leaves, initial_blackboard(cfg))?;
    let mut results = Vec::new();
    let mut archive = DataStore::new();
    for (di, device) in cfg.devices.iter().enumerate() {
        let spec = |trial| EpisodeSpec {
            doc,
            leaves: &leaves,
            config: cfg,
            device,
            trial,
            seed: trial_seed(cfg.seed, di, trial),
        };
        let trials: Vec<u32> = (1..=cfg.trials).collect();
        let outcomes = match cfg.data_policy {
            DataPolicy::ResetPerTrial if cfg.parallel => run_parallel(&trials, &spec)?,
            DataPolicy::ResetPerTrial => trials
                .iter()
                .map(|&t| run_episode(&spec(t), DataStore::new(), None))
                .collect::<Result<Vec<_>, _>>()?,
            DataPolicy::Retain => {
                let mut store = DataStore::new();
                let mut out = Vec::new();
                for &t in &trials {
                    let before = store.len();
                    let (r, s) = run_episode(&spec(t), store, None)?;
                    let fresh = DataStore::from_records(s.records()[before..].to_vec())?;
                    out.push((r, fresh));
                    store = s;
                }
                out
            }
        };
        for (r, s) in outcomes {
            for rec in s.records() {
                archive.append(rec.clone())?;
            }
            results.push(r);
        }
    }
    Ok(ExperimentRun {
        config: cfg.clone(),
        results,
        archive,
    })
}

fn run_parallel<'a, F>(trials: &[u32], spec: &F) -> Result<Vec<(EpisodeResult, DataStore)>, BenchError>
where
    F: Fn(u32) -> EpisodeSpec<'a> + Sync,
{
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(trials.len()).max(1);
    let mut slots: BTreeMap<u32, Result<(EpisodeResult, DataStore), BenchError>> = BTreeMap::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    trials
                        .iter()
                        .skip(w)
                        .step_by(workers)
                        .map(|&t| (t, run_episode(&spec(t), DataStore::new(), None)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            slots.extend(h.join().expect("trial worker panicked"));
        }
    });
    slots.into_values().collect()
}
