//! Adaptive manipulation layer: strategies, the per-device F/T store,
//! strategy selection, handle-angle remapping and the limit checks.

pub mod conditions;
pub mod remap;
pub mod select;
pub mod store;
pub mod strategy;

pub use conditions::{
    cond_angle_within_limits, cond_ft_within_limits, cond_is_tightened, EXEMPT_REASONS,
    REASON_GENUINE, REASON_REGRASP, REASON_STRATEGY_SWITCH,
};
pub use remap::{remap_handle_angle, remap_handle_angle_deg, RemapError};
pub use select::{select_strategy, SelectionResult};
pub use store::{DataStore, FTRecord, StoreError};
pub use strategy::{StrategyError, StrategyRegistry, StrategySpec, NO_STRATEGIES};
