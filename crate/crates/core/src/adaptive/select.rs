//! Strategy selection from the recorded F/T history of a device.

use super::store::DataStore;
use super::strategy::{StrategyRegistry, StrategySpec, NO_STRATEGIES};

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub strategy_id: String,
    /// The max recorded torque the decision was based on.
    pub max_torque: f64,
}

impl SelectionResult {
    pub fn is_none(&self) -> bool {
        self.strategy_id == NO_STRATEGIES
    }
}

/// Picks the strategy with the lowest `ft_limit` that still admits the
/// largest torque seen on this device, scaled by `1 + margin`. Ties go to
/// the earlier registry entry.
pub fn select_strategy(
    store: &DataStore,
    device_id: &str,
    registry: &StrategyRegistry,
    margin: f64,
) -> SelectionResult {
    let m = store.max_recorded_torque(device_id);
    let chosen = select_for_torque(m, registry, margin);
    SelectionResult {
        strategy_id: chosen.map_or(NO_STRATEGIES, |s| s.id.as_str()).to_string(),
        max_torque: m,
    }
}

pub fn select_for_torque(m: f64, registry: &StrategyRegistry, margin: f64) -> Option<&StrategySpec> {
    let required = m * (1.0 + margin);
    let mut best: Option<&StrategySpec> = None;
    for s in registry.iter().filter(|s| s.ft_limit >= required) {
        if best.is_none_or(|b| s.ft_limit < b.ft_limit) {
            best = Some(s);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(device: &str, torques: &[f64]) -> DataStore {
        let mut s = DataStore::new();
        for (i, t) in torques.iter().enumerate() {
            s.record_ft(device, 1, 1, i as f64 * 0.1, *t).unwrap();
        }
        s
    }

    #[test]
    fn fresh_device_gets_low_torque() {
        let r = select_strategy(&DataStore::new(), "A", &StrategyRegistry::defaults(), 0.0);
        assert_eq!(r.strategy_id, "low_torque");
    }

    #[test]
    fn exceeding_low_limit_selects_high() {
        let r = select_strategy(&store_with("A", &[0.7]), "A", &StrategyRegistry::defaults(), 0.0);
        assert_eq!(r.strategy_id, "high_torque");
        assert_eq!(r.max_torque, 0.7);
    }

    #[test]
    fn exceeding_every_limit_yields_sentinel() {
        let r = select_strategy(&store_with("A", &[6.0]), "A", &StrategyRegistry::defaults(), 0.0);
        assert!(r.is_none());
    }

    #[test]
    fn limit_equal_to_requirement_qualifies() {
        let r = select_strategy(&store_with("A", &[0.5]), "A", &StrategyRegistry::defaults(), 0.0);
        assert_eq!(r.strategy_id, "low_torque");
        let r = select_strategy(&store_with("A", &[0.5]), "A", &StrategyRegistry::defaults(), 0.1);
        assert_eq!(r.strategy_id, "high_torque");
    }

    #[test]
    fn ties_break_by_registry_order() {
        let mut a = StrategySpec::low_torque();
        a.id = "a".into();
        let mut b = StrategySpec::low_torque();
        b.id = "b".into();
        let reg = StrategyRegistry::new(vec![b, a]).unwrap();
        let r = select_strategy(&DataStore::new(), "X", &reg, 0.0);
        assert_eq!(r.strategy_id, "b");
    }
}
