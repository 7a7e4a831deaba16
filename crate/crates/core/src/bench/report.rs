use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FailureKind;
use crate::mutator::CategoryLabel;

/// Gold label by predicted label; predictions that matched no label land in `unparsed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub labels: Vec<CategoryLabel>,
    pub counts: Vec<Vec<usize>>,
    pub unparsed: Vec<usize>,
}

impl Confusion {
    fn new() -> Confusion {
        let k = CategoryLabel::ALL.len();
        Confusion {
            labels: CategoryLabel::ALL.to_vec(),
            counts: vec![vec![0; k]; k],
            unparsed: vec![0; k],
        }
    }

    fn index(label: CategoryLabel) -> usize {
        CategoryLabel::ALL.iter().position(|l| *l == label).expect("label in ALL")
    }

    pub fn row_total(&self, gold: CategoryLabel) -> usize {
        let i = Self::index(gold);
        self.counts[i].iter().sum::<usize>() + self.unparsed[i]
    }

    pub fn get(&self, gold: CategoryLabel, predicted: CategoryLabel) -> usize {
        self.counts[Self::index(gold)][Self::index(predicted)]
    }

    /// Comma-separated matrix with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold");
        for l in &self.labels {
            out.push(',');
            out.push_str(l.token());
        }
        out.push_str(",unparsed\n");
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(l.token());
            for c in &self.counts[i] {
                out.push_str(&format!(",{c}"));
            }
            out.push_str(&format!(",{}\n", self.unparsed[i]));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: BTreeMap<CategoryLabel, usize>,
    pub correct: BTreeMap<CategoryLabel, usize>,
    pub per_category_accuracy: BTreeMap<CategoryLabel, f64>,
    /// Weighted by n.
    pub overall: f64,
    pub overall_excluding_answerable: f64,
    /// Unweighted mean over categories present.
    pub macro_overall: f64,
    pub macro_excluding_answerable: f64,
    /// Items whose provider call failed; they count as wrong.
    pub provider_failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<Confusion>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub failure_kinds: BTreeMap<CategoryLabel, BTreeMap<FailureKind, usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

impl EvalReport {
    /// Report from (gold, correct) pairs.
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = (CategoryLabel, bool)>) -> EvalReport {
        let mut n: BTreeMap<CategoryLabel, usize> = BTreeMap::new();
        let mut correct: BTreeMap<CategoryLabel, usize> = BTreeMap::new();
        for (gold, ok) in outcomes {
            *n.entry(gold).or_default() += 1;
            *correct.entry(gold).or_default() += usize::from(ok);
        }
        let per_category_accuracy: BTreeMap<CategoryLabel, f64> =
            n.iter().map(|(l, &k)| (*l, ratio(correct[l], k))).collect();
        let sum = |f: &dyn Fn(&CategoryLabel) -> bool, m: &BTreeMap<CategoryLabel, usize>| {
            m.iter().filter(|(l, _)| f(l)).map(|(_, v)| *v).sum::<usize>()
        };
        let all = |_: &CategoryLabel| true;
        let mutated = |l: &CategoryLabel| *l != CategoryLabel::Answerable;
        let macro_of = |f: &dyn Fn(&CategoryLabel) -> bool| {
            mean(&per_category_accuracy.iter().filter(|(l, _)| f(l)).map(|(_, a)| *a).collect::<Vec<_>>())
        };
        EvalReport {
            overall: ratio(sum(&all, &correct), sum(&all, &n)),
            overall_excluding_answerable: ratio(sum(&mutated, &correct), sum(&mutated, &n)),
            macro_overall: macro_of(&all),
            macro_excluding_answerable: macro_of(&mutated),
            n,
            correct,
            per_category_accuracy,
            provider_failures: 0,
            confusion: None,
            failure_kinds: BTreeMap::new(),
        }
    }

    /// Classification report; `None` predictions are unparseable answers.
    pub fn from_predictions(pairs: impl IntoIterator<Item = (CategoryLabel, Option<CategoryLabel>)>) -> EvalReport {
        let mut confusion = Confusion::new();
        let mut outcomes = Vec::new();
        for (gold, pred) in pairs {
            let row = Confusion::index(gold);
            match pred {
                Some(p) => confusion.counts[row][Confusion::index(p)] += 1,
                None => confusion.unparsed[row] += 1,
            }
            outcomes.push((gold, pred == Some(gold)));
        }
        let mut report = EvalReport::from_outcomes(outcomes);
        report.confusion = Some(confusion);
        report
    }
}
