use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dialogue::DialogueError;
use crate::mutator::{CategoryLabel, MutateError};

/// Why an (example, category) pair produced no conversation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    Precondition,
    NoCandidate,
    ProviderFailure,
    ProviderOutput,
    SqlUnsupported,
    ExecFailure,
    DatabaseError,
    Postcondition,
    /// Mutation worked but the example went to another category.
    Reassigned,
    QuotaReached,
    ExecutabilityGate,
    MentionGate,
    BinaryGate,
}

impl From<&MutateError> for SkipReason {
    fn from(e: &MutateError) -> Self {
        match e {
            MutateError::Precondition(_) => SkipReason::Precondition,
            MutateError::Parse(_) | MutateError::Refs(_) | MutateError::Rewrite(_) => SkipReason::SqlUnsupported,
            MutateError::Provider(_) => SkipReason::ProviderFailure,
            MutateError::BadProviderOutput(_) | MutateError::TrivialRewrite => SkipReason::ProviderOutput,
            MutateError::NoSubstituteColumn
            | MutateError::NoMatchingSql
            | MutateError::NoAlternateValue
            | MutateError::InsufficientRows(_) => SkipReason::NoCandidate,
            MutateError::Corpus(_) => SkipReason::DatabaseError,
            MutateError::Exec(_) => SkipReason::ExecFailure,
            MutateError::Postcondition(_) => SkipReason::Postcondition,
        }
    }
}

impl From<&DialogueError> for SkipReason {
    fn from(e: &DialogueError) -> Self {
        match e {
            DialogueError::NoExecutableCandidate | DialogueError::Exec(_) => SkipReason::ExecFailure,
            DialogueError::FilterReject(_) => SkipReason::MentionGate,
            DialogueError::Provider(_) => SkipReason::ProviderFailure,
            DialogueError::Parse(_) | DialogueError::Rewrite(_) => SkipReason::SqlUnsupported,
            DialogueError::Corpus(_) => SkipReason::DatabaseError,
            DialogueError::Precondition(_) => SkipReason::Precondition,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    /// Examples the operator was tried on.
    pub attempted: usize,
    pub mutated: usize,
    pub assigned: usize,
    pub emitted: usize,
    pub skipped: BTreeMap<SkipReason, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GateStats {
    pub attempted: usize,
    pub rejected: usize,
    pub reject_rate: f64,
}

impl GateStats {
    pub(crate) fn record(&mut self, passed: bool) {
        self.attempted += 1;
        self.rejected += usize::from(!passed);
        self.reject_rate = self.rejected as f64 / self.attempted as f64;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenStats {
    pub seed: u64,
    pub examples: usize,
    /// Examples whose database is missing from the catalog or database directory.
    pub unknown_database: usize,
    pub per_category: BTreeMap<CategoryLabel, CategoryStats>,
    pub executability_gate: GateStats,
    pub mention_gate: GateStats,
    pub binary_gate: GateStats,
    /// Conversations already present in the output before this run.
    pub resumed: usize,
    pub emitted: usize,
}

impl GenStats {
    pub(crate) fn skip(&mut self, cat: CategoryLabel, reason: SkipReason) {
        *self.per_category.entry(cat).or_default().skipped.entry(reason).or_default() += 1;
    }

    pub(crate) fn cat(&mut self, cat: CategoryLabel) -> &mut CategoryStats {
        self.per_category.entry(cat).or_default()
    }

    /// Emitted counts per category in label order, zero rows included.
    pub fn table(&self) -> Vec<(CategoryLabel, usize)> {
        CategoryLabel::ALL
            .into_iter()
            .map(|c| (c, self.per_category.get(&c).map_or(0, |s| s.emitted)))
            .collect()
    }
}
