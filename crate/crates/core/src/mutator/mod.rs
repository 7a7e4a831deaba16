//! Per-category operators that turn an answerable example into an ambiguous
//! or unanswerable one.

mod ops;
mod record;

pub use ops::{
    empty_answer, mutate, mutate_ambiguous_filter_criteria, mutate_ambiguous_select, mutate_ambiguous_values, mutate_ambiguous_where,
    mutate_nonexistent_filter_value, mutate_nonexistent_select, mutate_nonexistent_where, mutate_unsupported_join,
    MutateError, MutationInput,
};
pub(crate) use ops::count_matching;
pub use record::{CategoryLabel, ClarifiedCandidate, Introduced, MutationRecord, Target, UnknownCategory};
