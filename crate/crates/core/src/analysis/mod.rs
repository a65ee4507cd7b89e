//! Schedules, exact event and local-limit ratios, projected TV and
//! condensate profiles.

pub mod events;
pub mod llt;
pub mod order;
pub mod profile;
pub mod schedule;
pub mod tv;

pub use events::{event_decomposition, event_decomposition_with, single_large_mass, DecompositionReport};
pub use llt::{llt_ratio, llt_ratio_with, LltReport};
pub use order::{doubling_grid, order_check, OrderRow};
pub use profile::{condensate_profile, CondensateProfile};
pub use schedule::{
    background_index, build_schedule, build_schedule_with, harmonic_log_size, Budget, Schedule, ROUNDING_RULE,
};
pub use tv::{background_tv_at, background_tv_estimate, product_law_tv, TvReport};
