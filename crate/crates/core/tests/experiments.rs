use std::f64::consts::PI;

use adaptive_bt::adaptive::{DataStore, StrategyRegistry, StrategySpec, NO_STRATEGIES, REASON_GENUINE, REASON_REGRASP};
use adaptive_bt::bench::{
    build_canonical_tree, run_episode, run_experiment, trial_seed, Behavior, EpisodeResult, EpisodeSpec,
    Experiment, ExperimentConfig, ExperimentRun,
};
use adaptive_bt::bt::NodeStatus;
use adaptive_bt::sim::{leaf_registry, Episode, SegmentKind};

fn run(exp: Experiment, behavior: Behavior) -> ExperimentRun {
    run_experiment(&ExperimentConfig::defaults(exp, behavior)).unwrap()
}

fn with_failure_probability(cfg: &mut ExperimentConfig, p: f64) {
    let specs: Vec<StrategySpec> = cfg
        .registry
        .iter()
        .map(|s| StrategySpec {
            p_segment_failure: p,
            ..s.clone()
        })
        .collect();
    cfg.registry = StrategyRegistry::new(specs).unwrap();
}

fn all_configs() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for exp in [Experiment::A, Experiment::B, Experiment::C] {
        for b in Behavior::ALL {
            out.push(ExperimentConfig::defaults(exp, b));
        }
    }
    out
}

struct Checks {
    max_over_extension: f64,
    max_torque_excess: f64,
    instant_ticks: u64,
}

/// Runs one trial with an observer that tracks the per-tick invariants.
fn observed(cfg: &ExperimentConfig, device_index: usize, trial: u32, store: DataStore) -> (EpisodeResult, DataStore, Checks) {
    let doc = build_canonical_tree(&cfg.registry, cfg.behavior).unwrap();
    let leaves = leaf_registry();
    let device = &cfg.devices[device_index];
    let spec = EpisodeSpec {
        doc: &doc,
        leaves: &leaves,
        config: cfg,
        device,
        trial,
        seed: trial_seed(cfg.seed, device_index, trial),
    };
    let mut checks = Checks {
        max_over_extension: f64::NEG_INFINITY,
        max_torque_excess: f64::NEG_INFINITY,
        instant_ticks: 0,
    };
    let mut seen = store.len();
    let mut obs = |_n: u64, ep: &Episode, _s: NodeStatus, trace: &adaptive_bt::bt::TickTrace| {
        checks.instant_ticks += (trace.ticked("SelectStrategy") + trace.ticked("LookupPose")) as u64;
        let Some(active) = ep.selections.last().and_then(|s| ep.registry.get(&s.strategy_id)) else {
            return;
        };
        let r = active.twist_rate;
        // a finishing twist can hand over to Retract, which lets go, within the same tick
        if let (true, Some(rel)) = (trace.ticked("ManipulateTarget") > 0, ep.world.angle_rel_grasp()) {
            let over = (active.angle_min - rel).max(rel - active.angle_max) - r * cfg.dt;
            checks.max_over_extension = checks.max_over_extension.max(over);
        }
        let d = &ep.world.device;
        let step = d.stiffness * r * cfg.dt + d.damping * r;
        for rec in &ep.store.records()[seen..] {
            checks.max_torque_excess = checks.max_torque_excess.max(rec.torque - active.ft_limit - step);
        }
        seen = ep.store.len();
    };
    let (result, store) = run_episode(&spec, store, Some(&mut obs)).unwrap();
    (result, store, checks)
}

/// Every trial of every default experiment, with the invariant checks.
fn suite() -> Vec<(ExperimentConfig, EpisodeResult, Checks)> {
    let mut out = Vec::new();
    for cfg in all_configs() {
        for di in 0..cfg.devices.len() {
            let mut store = DataStore::new();
            for trial in 1..=cfg.trials {
                if cfg.data_policy == adaptive_bt::bench::DataPolicy::ResetPerTrial {
                    store = DataStore::new();
                }
                let (r, s, c) = observed(&cfg, di, trial, store);
                store = s;
                out.push((cfg.clone(), r, c));
            }
        }
    }
    out
}

#[test]
fn per_tick_invariants_hold_across_the_suite() {
    for (cfg, r, c) in suite() {
        let tag = format!("{} {} {} trial {}", cfg.experiment, cfg.behavior, r.device_id, r.trial);
        assert!(r.errors.is_empty(), "{tag}: {:?}", r.errors);
        assert!(c.max_over_extension <= 1e-9, "{tag}: over-extended by {}", c.max_over_extension);
        assert!(c.max_torque_excess <= 1e-9, "{tag}: torque over ceiling by {}", c.max_torque_excess);
        // conservation of progress
        let r_max = cfg.registry.iter().map(|s| s.twist_rate).fold(0.0, f64::max);
        assert!((r.progress - r.rotation.abs()).abs() <= r_max * cfg.dt + 1e-9, "{tag}: progress {} rotation {}", r.progress, r.rotation);
        // time accounting against an independent tick count
        let segment_ticks: u64 = r.segments.iter().map(|s| s.end_tick - s.start_tick).sum();
        let expected = (segment_ticks + c.instant_ticks) as f64 * cfg.dt;
        assert!((r.sim_time - expected).abs() < 1e-6, "{tag}: sim_time {} vs {}", r.sim_time, expected);
        assert!(r.attempts_consumed <= cfg.num_attempts);
        // exempt-failure accounting
        let genuine = r.failure_reasons.iter().filter(|x| *x == REASON_GENUINE).count() as u32;
        if r.success {
            assert_eq!(r.attempts_consumed, genuine + 1, "{tag}: {:?}", r.failure_reasons);
        } else if genuine >= cfg.num_attempts {
            assert_eq!(r.attempts_consumed, cfg.num_attempts, "{tag}");
        }
        // segment ordering: grasp only after a successful approach, retract after any unfinished manipulation
        for w in r.segments.windows(2) {
            if w[1].kind == SegmentKind::Grasp {
                assert!(w[0].kind == SegmentKind::Approach && w[0].outcome == NodeStatus::Success, "{tag}");
            }
            if w[0].kind == SegmentKind::Manipulate && w[0].outcome != NodeStatus::Success {
                assert_eq!(w[1].kind, SegmentKind::Retract, "{tag}: {:?}", r.segments);
            }
        }
        if let Some(last) = r.segments.last() {
            assert_ne!(last.kind, SegmentKind::Manipulate, "{tag}: episode ended holding the handle");
        }
        assert!(r.strategy_sequence.iter().all(|s| s != NO_STRATEGIES));
    }
}

#[test]
fn seeded_runs_are_deterministic() {
    for cfg in all_configs() {
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.results, b.results);
        assert_eq!(a.archive, b.archive);
        assert_eq!(adaptive_bt::bench::results_csv(&a.results), adaptive_bt::bench::results_csv(&b.results));
    }
}

#[test]
fn parallel_matches_sequential() {
    let mut cfg = ExperimentConfig::defaults(Experiment::A, Behavior::Adaptive);
    let seq = run_experiment(&cfg).unwrap();
    cfg.parallel = true;
    let par = run_experiment(&cfg).unwrap();
    assert_eq!(seq.results, par.results);
    assert_eq!(seq.archive, par.archive);
}

#[test]
fn seven_radians_without_failures_regrasps_twice() {
    let mut cfg = ExperimentConfig::defaults(Experiment::A, Behavior::Low);
    cfg.trials = 1;
    with_failure_probability(&mut cfg, 0.0);
    let run = run_experiment(&cfg).unwrap();
    let r = &run.results[0];
    assert!(r.success);
    assert_eq!(r.attempts_consumed, 1);
    assert_eq!(r.failure_reasons, vec![REASON_REGRASP, REASON_REGRASP]);
    let low = cfg.registry.get("low_torque").unwrap();
    let twists: Vec<f64> = r
        .segments
        .iter()
        .filter(|s| s.kind == SegmentKind::Manipulate)
        .map(|s| (s.end_tick - s.start_tick) as f64 * low.twist_rate * cfg.dt)
        .collect();
    let sym = 2.0 * PI / 3.0;
    let expected = [PI, sym, 7.0 - PI - sym];
    assert_eq!(twists.len(), 3, "{twists:?}");
    for (got, want) in twists.iter().zip(expected) {
        assert!((got - want).abs() <= 2.0 * low.twist_rate * cfg.dt, "{twists:?}");
    }
}

#[test]
fn certain_failure_exhausts_attempts() {
    let mut cfg = ExperimentConfig::defaults(Experiment::A, Behavior::High);
    cfg.trials = 2;
    with_failure_probability(&mut cfg, 1.0);
    for r in run_experiment(&cfg).unwrap().results {
        assert!(!r.success);
        assert_eq!(r.attempts_consumed, cfg.num_attempts);
        let genuine = r.failure_reasons.iter().filter(|x| *x == REASON_GENUINE).count();
        assert_eq!(genuine, cfg.num_attempts as usize);
        assert!(r.segments.iter().all(|s| s.kind == SegmentKind::Approach));
    }
}

#[test]
fn a_genuine_failure_costs_one_attempt() {
    // high_torque fails some first attempts at the default seed
    let run = run(Experiment::A, Behavior::High);
    let retried: Vec<_> = run.results.iter().filter(|r| r.attempts_consumed > 1).collect();
    assert!(!retried.is_empty());
    for r in retried {
        assert!(r.success);
        let genuine = r.failure_reasons.iter().filter(|x| *x == REASON_GENUINE).count() as u32;
        assert_eq!(r.attempts_consumed, genuine + 1);
    }
}

#[test]
fn behaviors_only_use_their_strategy() {
    for exp in [Experiment::A, Experiment::B, Experiment::C] {
        for (b, banned) in [(Behavior::Low, "high_torque"), (Behavior::High, "low_torque")] {
            for r in run(exp, b).results {
                assert!(!r.strategy_sequence.iter().any(|s| s == banned), "{exp} {b}: {:?}", r.strategy_sequence);
            }
        }
    }
}

#[test]
fn low_torque_never_tightens_test_b() {
    let run = run(Experiment::B, Behavior::Low);
    assert_eq!(run.results.iter().filter(|r| r.success).count(), 0);
}

#[test]
fn adaptive_dominates_high_on_test_b() {
    let high = run(Experiment::B, Behavior::High);
    let adaptive = run(Experiment::B, Behavior::Adaptive);
    let median = |run: &ExperimentRun| {
        let mut t: Vec<f64> = run.results.iter().filter(|r| r.success).map(|r| r.sim_time).collect();
        t.sort_by(f64::total_cmp);
        t[t.len() / 2]
    };
    for (h, a) in high.results.iter().zip(&adaptive.results) {
        if h.success {
            assert!(a.success, "trial {}", a.trial);
        }
    }
    assert!(median(&adaptive) < median(&high));
    for r in &adaptive.results {
        assert_eq!(r.strategy_sequence, vec!["low_torque", "high_torque"]);
        let switch = r.selections.iter().find(|s| s.strategy_id == "high_torque").unwrap();
        assert!(switch.max_torque > 0.5);
    }
}

#[test]
fn test_c_strategy_matrix() {
    let low = run(Experiment::C, Behavior::Low);
    let high = run(Experiment::C, Behavior::High);
    let adaptive = run(Experiment::C, Behavior::Adaptive);
    let seqs = |run: &ExperimentRun, d: &str| run.for_device(d).map(|r| r.strategy_sequence.join(">")).collect::<Vec<_>>();
    assert_eq!(seqs(&adaptive, "normal"), ["low_torque", "low_torque"]);
    assert_eq!(seqs(&adaptive, "stiff"), ["low_torque>high_torque", "high_torque"]);
    assert!(adaptive.all_succeeded());
    assert!(high.all_succeeded());
    let stiff_low: Vec<_> = low.for_device("stiff").collect();
    assert!(stiff_low.iter().all(|r| !r.success));
    assert_eq!(stiff_low[1].motion_segments(), 0);
    assert!(stiff_low[1].failure_reasons.iter().any(|x| x == NO_STRATEGIES));
    assert!(low.for_device("normal").all(|r| r.success));
}

#[test]
fn halted_manipulation_resumes_from_recorded_progress() {
    // stiff trial 1: low_torque is interrupted by the torque check, high_torque finishes the remainder
    let cfg = ExperimentConfig::defaults(Experiment::C, Behavior::Adaptive);
    let (r, _, _) = observed(&cfg, 1, 1, DataStore::new());
    let manip: Vec<_> = r.segments.iter().filter(|s| s.kind == SegmentKind::Manipulate).collect();
    assert!(manip.len() >= 2);
    assert_eq!(manip.first().unwrap().strategy, "low_torque");
    assert_eq!(manip.last().unwrap().strategy, "high_torque");
    assert!(manip.iter().filter(|s| s.strategy == "low_torque").any(|s| s.end_tick > s.start_tick));
    let high = cfg.registry.get("high_torque").unwrap();
    assert!(r.progress >= cfg.target - 1e-9, "{} {:?} {:?}", r.progress, r.failure_reasons, r.segments);
    assert!(r.progress <= cfg.target + high.twist_rate * cfg.dt + 1e-9, "{} {:?}", r.progress, r.segments);
}

#[test]
fn first_tick_binds_every_port() {
    for cfg in all_configs() {
        let doc = build_canonical_tree(&cfg.registry, cfg.behavior).unwrap();
        let leaves = leaf_registry();
        let spec = EpisodeSpec {
            doc: &doc,
            leaves: &leaves,
            config: &cfg,
            device: &cfg.devices[0],
            trial: 1,
            seed: 1,
        };
        let mut first_errors = None;
        let mut obs = |n: u64, _: &Episode, _: NodeStatus, trace: &adaptive_bt::bt::TickTrace| {
            if n == 1 {
                first_errors = Some(trace.errors.len());
            }
        };
        run_episode(&spec, DataStore::new(), Some(&mut obs)).unwrap();
        assert_eq!(first_errors, Some(0));
    }
}
