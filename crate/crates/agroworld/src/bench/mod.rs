//! Synthetic benchmark: world generation, task generation with sealed
//! references, parallel benchmark runs, and the ablation harness.

pub mod ablate;
pub mod rng;
pub mod runner;
pub mod taskgen;
pub mod worldgen;

pub use ablate::{ablate, AblationTable, Variant, VariantRow, ALL_VARIANTS};
pub use rng::SplitMix64;
pub use runner::{check_answers, run_bench, Aggregates, PolicySpec, RunOptions, RunReport, TaskRow};
pub use taskgen::gen_tasks;
pub use worldgen::{gen_world, GenConfig};
