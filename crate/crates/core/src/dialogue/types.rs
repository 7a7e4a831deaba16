use serde::{Deserialize, Serialize};

use crate::corpus::FORMAT_VERSION;
use crate::mutator::{CategoryLabel, MutationRecord};
use crate::sqlkit::ResultTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnKind {
    InitialQuestion,
    ClarificationRequest,
    ClarificationResponse,
    FinalSql,
    ResultExplanation,
}

impl TurnKind {
    pub fn role(self) -> Role {
        match self {
            TurnKind::InitialQuestion | TurnKind::ClarificationResponse => Role::User,
            _ => Role::Assistant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub kind: TurnKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sql: Option<String>,
}

impl Turn {
    pub fn new(kind: TurnKind, text: impl Into<String>) -> Turn {
        Turn {
            role: kind.role(),
            kind,
            text: text.into(),
            sql: None,
        }
    }

    pub fn final_sql(text: impl Into<String>, sql: impl Into<String>) -> Turn {
        Turn {
            sql: Some(sql.into()),
            ..Turn::new(TurnKind::FinalSql, text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed_example_id: String,
    pub pipeline_version: String,
    pub provider_id: String,
    pub seed: u64,
    pub refined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    pub format_version: u32,
    pub id: String,
    pub db_id: String,
    pub category: CategoryLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<MutationRecord>,
    pub turns: Vec<Turn>,
    pub gold_sql: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub helpful_sql: Option<String>,
    pub execution: ResultTable,
    pub provenance: Provenance,
}

const CLARIFICATION_FLOW: [TurnKind; 5] = [
    TurnKind::InitialQuestion,
    TurnKind::ClarificationRequest,
    TurnKind::ClarificationResponse,
    TurnKind::FinalSql,
    TurnKind::ResultExplanation,
];

const DIRECT_FLOW: [TurnKind; 3] = [TurnKind::InitialQuestion, TurnKind::FinalSql, TurnKind::ResultExplanation];

impl Conversation {
    pub fn new(id: String, db_id: String, category: CategoryLabel, provenance: Provenance) -> Conversation {
        Conversation {
            format_version: FORMAT_VERSION,
            id,
            db_id,
            category,
            mutation: None,
            turns: Vec::new(),
            gold_sql: String::new(),
            helpful_sql: None,
            execution: ResultTable::default(),
            provenance,
        }
    }

    pub fn turn(&self, kind: TurnKind) -> Option<&Turn> {
        self.turns.iter().find(|t| t.kind == kind)
    }

    pub fn turn_mut(&mut self, kind: TurnKind) -> Option<&mut Turn> {
        self.turns.iter_mut().find(|t| t.kind == kind)
    }

    /// SQL of the final_sql turn.
    pub fn final_sql(&self) -> Option<&str> {
        self.turn(TurnKind::FinalSql).and_then(|t| t.sql.as_deref())
    }

    pub fn initial_question(&self) -> &str {
        self.turn(TurnKind::InitialQuestion).map(|t| t.text.as_str()).unwrap_or("")
    }

    /// Checks turn order, role pairing and where SQL may appear.
    pub fn check_turns(&self) -> Result<(), String> {
        let kinds: Vec<TurnKind> = self.turns.iter().map(|t| t.kind).collect();
        let direct = self.helpful_sql.is_some() || self.category == CategoryLabel::Answerable;
        let expected: &[TurnKind] = if direct { &DIRECT_FLOW } else { &CLARIFICATION_FLOW };
        if kinds != expected {
            return Err(format!("turn order {kinds:?} does not match {expected:?}"));
        }
        for t in &self.turns {
            if t.role != t.kind.role() {
                return Err(format!("{:?} turn has role {:?}", t.kind, t.role));
            }
            if t.sql.is_some() != (t.kind == TurnKind::FinalSql) {
                return Err(format!("{:?} turn has misplaced sql", t.kind));
            }
        }
        if self.helpful_sql.is_some()
            && !matches!(
                self.category,
                CategoryLabel::AmbiguousSelectColumn | CategoryLabel::AmbiguousWhereColumn
            )
        {
            return Err("helpful SQL outside the two ambiguous-column categories".into());
        }
        if self.final_sql() != Some(self.gold_sql.as_str()) {
            return Err("gold_sql differs from the final_sql turn".into());
        }
        Ok(())
    }
}
