//! Simulator-backed leaves for the valve task.

use crate::adaptive::{
    cond_angle_within_limits, cond_ft_within_limits, cond_is_tightened, remap_handle_angle,
    select::select_strategy, StrategySpec, NO_STRATEGIES, REASON_GENUINE, REASON_REGRASP,
    REASON_STRATEGY_SWITCH,
};
use crate::bt::{
    Action, Condition, LeafContext, NodeStatus, Stateful, StatefulAction, TickError, ValueType,
};
use crate::def::{LeafModel, LeafRegistry};

use super::episode::{Episode, SegmentKind, SegmentRecord, Selection};
use super::world::{Command, PendingFailure};

type Ctx<'a> = LeafContext<'a, Episode>;

/// Reason written when a strategy cannot be applied to the device.
pub const REASON_CONFIG: &str = "config";

fn strategy(ctx: &Ctx<'_>) -> Result<StrategySpec, TickError> {
    let id: String = ctx.input("strategy")?;
    ctx.env
        .registry
        .get(&id)
        .cloned()
        .ok_or_else(|| ctx.error(format!("unknown strategy `{id}`")))
}

fn idle_step(ctx: &mut Ctx<'_>) -> Result<(), TickError> {
    ctx.env.world.step(Command::Idle).map(drop).map_err(|e| ctx.error(e.to_string()))
}

fn genuine_failure(ctx: &mut Ctx<'_>) -> Result<NodeStatus, TickError> {
    ctx.set_failure_reason(REASON_GENUINE);
    Ok(NodeStatus::Failure)
}

fn select(ctx: &mut Ctx<'_>) -> Result<NodeStatus, TickError> {
    idle_step(ctx)?;
    let margin = ctx.input_or("margin", ctx.env.margin)?;
    let allowed: Option<String> = ctx.has_port("strategies").then(|| ctx.input("strategies")).transpose()?;
    let env = &*ctx.env;
    let registry = match &allowed {
        Some(list) => {
            let ids: Vec<&str> = list.split([',', ';']).map(str::trim).filter(|s| !s.is_empty()).collect();
            env.registry.restricted_to(&ids).map_err(|e| ctx.error(e.to_string()))?
        }
        None => env.registry.clone(),
    };
    let result = select_strategy(&env.store, &env.device_id, &registry, margin);
    let sim_time = env.world.sim_time();
    ctx.env.selections.push(Selection {
        strategy_id: result.strategy_id.clone(),
        max_torque: result.max_torque,
        sim_time,
    });
    ctx.output("strategy_id", result.strategy_id)?;
    Ok(NodeStatus::Success)
}

fn lookup_pose(ctx: &mut Ctx<'_>) -> Result<NodeStatus, TickError> {
    idle_step(ctx)?;
    let s = strategy(ctx)?;
    let device = &ctx.env.world.device;
    match remap_handle_angle(device.handle_angle, device.symmetry_order, (s.angle_min, s.angle_max)) {
        Ok(reference) => {
            ctx.output("reference", reference)?;
            Ok(NodeStatus::Success)
        }
        Err(_) => {
            ctx.set_failure_reason(REASON_CONFIG);
            Ok(NodeStatus::Failure)
        }
    }
}

struct Active {
    strategy: StrategySpec,
    start_tick: u64,
    steps: u64,
    done: u64,
    failure: Option<PendingFailure>,
}

/// Approach, grasp or retract: a fixed-duration motion that may fail.
pub struct MotionSegment {
    kind: SegmentKind,
    active: Option<Active>,
}

impl MotionSegment {
    pub fn new(kind: SegmentKind) -> Self {
        Self { kind, active: None }
    }

    fn finish(&mut self, ctx: &mut Ctx<'_>, outcome: NodeStatus) {
        if let Some(a) = self.active.take() {
            ctx.env.segments.push(SegmentRecord {
                kind: self.kind,
                strategy: a.strategy.id,
                start_tick: a.start_tick,
                end_tick: ctx.env.world.ticks(),
                outcome,
            });
        }
    }
}

impl StatefulAction<Episode> for MotionSegment {
    fn on_start(&mut self, ctx: &mut Ctx<'_>) -> Result<NodeStatus, TickError> {
        let s = strategy(ctx)?;
        let duration = match self.kind {
            SegmentKind::Approach => s.t_approach,
            SegmentKind::Grasp => s.t_grasp,
            SegmentKind::Retract => s.t_retract,
            SegmentKind::Manipulate => unreachable!("manipulation has its own leaf"),
        };
        let world = &mut ctx.env.world;
        let steps = world.steps_for(duration);
        let failure = world.draw_segment_failure(s.p_segment_failure, steps);
        let ok = match self.kind {
            SegmentKind::Approach => !world.grasped(),
            SegmentKind::Grasp => world.approached && !world.grasped(),
            _ => true,
        };
        if self.kind == SegmentKind::Retract {
            // the gripper opens before the arm backs away
            world.release();
        }
        self.active = Some(Active {
            strategy: s,
            start_tick: world.ticks(),
            steps,
            done: 0,
            failure,
        });
        if !ok {
            self.finish(ctx, NodeStatus::Failure);
            return genuine_failure(ctx);
        }
        self.on_running(ctx)
    }

    fn on_running(&mut self, ctx: &mut Ctx<'_>) -> Result<NodeStatus, TickError> {
        idle_step(ctx)?;
        let a = self.active.as_mut().expect("segment started");
        a.done += 1;
        if a.failure.is_some_and(|f| a.done >= f.at_step) {
            self.finish(ctx, NodeStatus::Failure);
            return genuine_failure(ctx);
        }
        if a.done < a.steps {
            return Ok(NodeStatus::Running);
        }
        match self.kind {
            SegmentKind::Approach => ctx.env.world.approached = true,
            SegmentKind::Grasp => {
                let reference: f64 = ctx.input("reference")?;
                ctx.env.world.grasp(reference);
            }
            _ => {}
        }
        self.finish(ctx, NodeStatus::Success);
        Ok(NodeStatus::Success)
    }

    fn on_halted(&mut self, ctx: &mut Ctx<'_>) {
        self.finish(ctx, NodeStatus::Idle);
    }
}

/// Twists the grasped handle until the cumulative rotation stored in the
/// `progress` port reaches `target`.
#[derive(Default)]
pub struct ManipulateTarget {
    active: Option<Active>,
}

impl ManipulateTarget {
    fn finish(&mut self, ctx: &mut Ctx<'_>, outcome: NodeStatus) {
        if let Some(a) = self.active.take() {
            ctx.env.segments.push(SegmentRecord {
                kind: SegmentKind::Manipulate,
                strategy: a.strategy.id,
                start_tick: a.start_tick,
                end_tick: ctx.env.world.ticks(),
                outcome,
            });
        }
    }
}

impl StatefulAction<Episode> for ManipulateTarget {
    fn on_start(&mut self, ctx: &mut Ctx<'_>) -> Result<NodeStatus, TickError> {
        let s = strategy(ctx)?;
        let target: f64 = ctx.input("target")?;
        let progress: f64 = ctx.input("progress")?;
        // already there, e.g. an earlier attempt finished the twist but failed to retract
        if progress >= target {
            return Ok(NodeStatus::Success);
        }
        let world = &mut ctx.env.world;
        let rel = world.angle_rel_grasp().unwrap_or(s.angle_min);
        let distance = (s.angle_max - rel).max(0.0).min((target - progress).max(0.0));
        let steps = ((distance / (s.twist_rate * world.dt())).ceil() as u64).max(1);
        let failure = world.draw_segment_failure(s.p_segment_failure, steps);
        let grasped = world.grasped();
        self.active = Some(Active {
            strategy: s,
            start_tick: world.ticks(),
            steps,
            done: 0,
            failure,
        });
        if !grasped {
            self.finish(ctx, NodeStatus::Failure);
            return genuine_failure(ctx);
        }
        self.on_running(ctx)
    }

    fn on_running(&mut self, ctx: &mut Ctx<'_>) -> Result<NodeStatus, TickError> {
        let target: f64 = ctx.input("target")?;
        let attempt = ctx.input_or("attempt", 1i64)?;
        let a = self.active.as_mut().expect("segment started");
        let rate = a.strategy.twist_rate;
        let env = &mut *ctx.env;
        let recorded = env.world.step(Command::Twist(rate)).map_err(|e| e.to_string()).and_then(|out| {
            let sim_time = env.world.sim_time();
            env.store
                .record_ft(&env.device_id, env.trial, attempt.max(0) as u32, sim_time, out.torque)
                .map(|()| out)
                .map_err(|e| e.to_string())
        });
        let out = recorded.map_err(|e| ctx.error(e))?;
        let progress = ctx.input::<f64>("progress")? + out.delta.abs();
        ctx.output("progress", progress)?;
        let a = self.active.as_mut().expect("segment started");
        a.done += 1;
        if progress >= target {
            self.finish(ctx, NodeStatus::Success);
            return Ok(NodeStatus::Success);
        }
        if a.failure.is_some_and(|f| a.done >= f.at_step) {
            self.finish(ctx, NodeStatus::Failure);
            return genuine_failure(ctx);
        }
        Ok(NodeStatus::Running)
    }

    fn on_halted(&mut self, ctx: &mut Ctx<'_>) {
        self.finish(ctx, NodeStatus::Idle);
    }
}

fn is_tightened(ctx: &mut Ctx<'_>) -> Result<bool, TickError> {
    let threshold = ctx.input_or("threshold", ctx.env.world.device.tightened_threshold)?;
    Ok(cond_is_tightened(ctx.env.world.last_torque, threshold) == NodeStatus::Success)
}

fn angle_within_limits(ctx: &mut Ctx<'_>) -> Result<bool, TickError> {
    let s = strategy(ctx)?;
    let Some(angle) = ctx.env.world.angle_rel_grasp() else {
        ctx.set_failure_reason(REASON_GENUINE);
        return Ok(false);
    };
    let ok = cond_angle_within_limits(angle, &s) == NodeStatus::Success;
    if !ok {
        ctx.set_failure_reason(REASON_REGRASP);
    }
    Ok(ok)
}

fn ft_within_limits(ctx: &mut Ctx<'_>) -> Result<bool, TickError> {
    let s = strategy(ctx)?;
    let ok = cond_ft_within_limits(ctx.env.world.last_torque, &s) == NodeStatus::Success;
    if !ok {
        ctx.set_failure_reason(REASON_STRATEGY_SWITCH);
    }
    Ok(ok)
}

fn strategy_viable(ctx: &mut Ctx<'_>) -> Result<bool, TickError> {
    let id: String = ctx.input("strategy_id")?;
    Ok(id != NO_STRATEGIES)
}

/// Port signatures of every sim leaf.
pub fn leaf_models() -> Vec<LeafModel> {
    use ValueType::*;
    vec![
        LeafModel::action("SelectStrategy")
            .input("strategies", Text)
            .input("margin", Real)
            .output("strategy_id", Text),
        LeafModel::condition("CheckStrategyViable").input("strategy_id", Text),
        LeafModel::action("LookupPose").input("strategy", Text).output("reference", Real),
        LeafModel::action("Approach").input("strategy", Text),
        LeafModel::action("Grasp").input("strategy", Text).input("reference", Real),
        LeafModel::action("Retract").input("strategy", Text),
        LeafModel::condition("IsTightened").input("threshold", Real),
        LeafModel::condition("AngleWithinLimits").input("strategy", Text),
        LeafModel::condition("FTWithinLimits").input("strategy", Text),
        LeafModel::action("ManipulateTarget")
            .input("strategy", Text)
            .input("target", Real)
            .output("progress", Real)
            .input("attempt", Int),
    ]
}

pub fn leaf_registry() -> LeafRegistry<Episode> {
    let mut reg = LeafRegistry::new();
    for model in leaf_models() {
        let id = model.id.clone();
        match id.as_str() {
            "SelectStrategy" => reg.register(model, |_| Box::new(Action::new(select))),
            "LookupPose" => reg.register(model, |_| Box::new(Action::new(lookup_pose))),
            "CheckStrategyViable" => reg.register(model, |_| Box::new(Condition::new(strategy_viable))),
            "IsTightened" => reg.register(model, |_| Box::new(Condition::new(is_tightened))),
            "AngleWithinLimits" => reg.register(model, |_| Box::new(Condition::new(angle_within_limits))),
            "FTWithinLimits" => reg.register(model, |_| Box::new(Condition::new(ft_within_limits))),
            "Approach" => reg.register(model, |_| Box::new(Stateful::new(MotionSegment::new(SegmentKind::Approach)))),
            "Grasp" => reg.register(model, |_| Box::new(Stateful::new(MotionSegment::new(SegmentKind::Grasp)))),
            "Retract" => reg.register(model, |_| Box::new(Stateful::new(MotionSegment::new(SegmentKind::Retract)))),
            "ManipulateTarget" => reg.register(model, |_| Box::new(Stateful::new(ManipulateTarget::default()))),
            other => unreachable!("no factory for `{other}`"),
        };
    }
    reg
}
