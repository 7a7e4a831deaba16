//! Generation runs: mutation, assembly, quality gates, resume, validation.

mod gates;
mod generate;
mod stats;
mod validate;

pub use gates::{check_category_invariants, gate_binary_category, gate_executability, gate_mention};
pub use generate::{
    generate, generate_to_file, read_partial, run_generation, sort_conversations, GenConfig, PipelineError,
    PIPELINE_VERSION,
};
pub use stats::{CategoryStats, GateStats, GenStats, SkipReason};
pub use validate::{validate, Violation};
