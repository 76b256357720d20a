//! Feasibility and termination checks used inside strategy subtrees.

use crate::bt::NodeStatus;

use super::strategy::StrategySpec;

/// Reason written when the handle leaves the safe twisting window.
pub const REASON_REGRASP: &str = "regrasp";
/// Reason written when the measured torque exceeds the strategy limit.
pub const REASON_STRATEGY_SWITCH: &str = "strategy_switch";
/// Reason written by simulated motion failures.
pub const REASON_GENUINE: &str = "genuine";

/// Reasons that do not consume a retry attempt.
pub const EXEMPT_REASONS: [&str; 2] = [REASON_REGRASP, REASON_STRATEGY_SWITCH];

fn status(ok: bool) -> NodeStatus {
    if ok {
        NodeStatus::Success
    } else {
        NodeStatus::Failure
    }
}

pub fn cond_is_tightened(current_torque: f64, threshold: f64) -> NodeStatus {
    status(current_torque >= threshold)
}

/// Success iff the angle lies in the strategy's window, both ends included.
/// The calling leaf records [`REASON_REGRASP`] on Failure.
pub fn cond_angle_within_limits(angle: f64, strategy: &StrategySpec) -> NodeStatus {
    status(angle >= strategy.angle_min && angle <= strategy.angle_max)
}

/// The calling leaf records [`REASON_STRATEGY_SWITCH`] on Failure.
pub fn cond_ft_within_limits(current_torque: f64, strategy: &StrategySpec) -> NodeStatus {
    status(current_torque <= strategy.ft_limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use NodeStatus::*;

    #[test]
    fn tightened_is_inclusive() {
        assert_eq!(cond_is_tightened(1.6, 1.5), Success);
        assert_eq!(cond_is_tightened(1.5, 1.5), Success);
        assert_eq!(cond_is_tightened(0.4, 1.5), Failure);
    }

    #[test]
    fn angle_window_is_inclusive() {
        let s = StrategySpec::low_torque();
        assert_eq!(cond_angle_within_limits(s.angle_max, &s), Success);
        assert_eq!(cond_angle_within_limits(s.angle_min, &s), Success);
        assert_eq!(cond_angle_within_limits(s.angle_max + 1e-9, &s), Failure);
        assert_eq!(cond_angle_within_limits((s.angle_min + s.angle_max) / 2.0, &s), Success);
    }

    #[test]
    fn ft_limit_check() {
        let low = StrategySpec::low_torque();
        let high = StrategySpec::high_torque();
        assert_eq!(cond_ft_within_limits(0.49, &low), Success);
        assert_eq!(cond_ft_within_limits(0.51, &low), Failure);
        assert_eq!(cond_ft_within_limits(4.0, &high), Success);
    }
}
