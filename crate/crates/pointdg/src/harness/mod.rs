//! CLI orchestration: training, leave-one-out evaluation, ablation matrices,
//! and complexity benchmarks.

pub mod ablate;
pub mod bench;
pub mod config;
pub mod evaluate;
pub mod train;

pub use ablate::{run_suite, AblationTable, Suite};
pub use config::{manifest_from_file, manifest_to_text, RunConfig};
pub use evaluate::{evaluate, EvalReport};
pub use train::{train, RunReport, TrainResult};
