//! Classification and SQL-prediction benchmarks, the failure taxonomy and
//! inter-rater agreement.

mod alpha;
mod classify;
mod context;
mod failure;
mod report;
mod schema_md;
mod sql;

pub use alpha::{krippendorff_alpha, read_ratings_csv, AlphaError, Level};
pub use classify::{
    build_classification_prompt, bundled_shots, category_definition, definitions_block, run_classification,
    BenchError, ClassifyConfig, Shot, ValueMode,
};
pub use context::{default_jobs, default_workdir, DbContext};
pub use failure::{classify_failure, FailureKind};
pub use report::{Confusion, EvalReport};
pub use schema_md::{render_relevant_values, render_schema_markdown, sample_values};
pub use sql::{
    execution_accuracy, execution_accuracy_with, extract_sql, prediction_context, results_match, run_sql_prediction,
    SqlConfig, Strategy,
};
