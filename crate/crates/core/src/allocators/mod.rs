//! Allocation algorithms and their building blocks.

pub mod bag_filling;
pub mod envy_cycle;
pub mod lone_divider;
pub mod matching;
pub mod pipeline;
pub mod trace;

pub use bag_filling::{alloc_ordered_ef1_4n3, alloc_ordered_efx_3n2};
pub use envy_cycle::{envy_cycle_elimination, CompletionMode};
pub use lone_divider::{
    alloc_topn_lone_divider, lone_divider_partition, most_envious_shrink, shrink_minimal,
};
pub use matching::{envy_free_matching, is_envy_free_matching, ThresholdGraph};
pub use pipeline::{solve_complete, solve_partial, Algorithm, Solution};
pub use trace::{AllocatorTrace, Event, TraceEntry};
