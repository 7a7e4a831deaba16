mod build;
mod types;

pub use build::{
    assemble_answerable, assemble_conversation, build_clarification_request, build_helpful_sql, chosen_candidate,
    conversation_id, explain_results, humanize, mention_rule, passes_mention_rule, refine_conversation,
    rejected_targets, reverse_generate_clarification, schema_block, select_clarified_sql, AssembleOptions,
    DialogueError,
};
pub use types::{Conversation, Provenance, Role, Turn, TurnKind};
