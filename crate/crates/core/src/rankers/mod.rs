//! Black-box rankers: the models being explained.

pub mod bm25;
pub mod external;
pub mod tabular;

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use bm25::{bm25_score, Bm25Ranker, CorpusStats};
pub use external::ExternalRanker;
pub use tabular::{
    train_linear_ranker, train_stump_ensemble, LinearTabularModel, QueryGroup, Stump, StumpEnsemble,
};

use crate::error::Result;
use crate::instance::Instance;

/// What a ranker consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Text,
    Tabular,
}

/// A ranker input: either raw text or one feature row per document.
#[derive(Debug, Clone, Copy)]
pub enum RankerInput<'a> {
    Text(&'a Instance),
    Tabular { query: &'a str, rows: &'a [Vec<f64>] },
}

/// A scoring function `f(q, D)` returning one score per document.
pub trait Ranker: Send + Sync {
    fn input_kind(&self) -> InputKind;

    fn score(&self, input: RankerInput<'_>) -> Result<Vec<f64>>;

    fn name(&self) -> String;
}

/// The rankers shipped with the toolkit, plus external processes.
#[derive(Debug)]
pub enum RankerHandle {
    Bm25(Bm25Ranker),
    Linear(LinearTabularModel),
    Stumps(StumpEnsemble),
    External(ExternalRanker),
}

fn wrong_input(expected: InputKind) -> crate::error::Error {
    crate::error::Error::InvalidInput(format!("ranker expects {expected:?} input"))
}

impl Ranker for RankerHandle {
    fn input_kind(&self) -> InputKind {
        match self {
            RankerHandle::Bm25(_) => InputKind::Text,
            RankerHandle::Linear(_) | RankerHandle::Stumps(_) => InputKind::Tabular,
            RankerHandle::External(e) => e.kind(),
        }
    }

    fn score(&self, input: RankerInput<'_>) -> Result<Vec<f64>> {
        match (self, input) {
            (RankerHandle::Bm25(r), RankerInput::Text(inst)) => r.score_instance(inst),
            (RankerHandle::Linear(m), RankerInput::Tabular { rows, .. }) => m.score(rows),
            (RankerHandle::Stumps(m), RankerInput::Tabular { rows, .. }) => m.score(rows),
            (RankerHandle::External(e), RankerInput::Text(inst)) if e.kind() == InputKind::Text => {
                e.score_instance(inst)
            }
            (RankerHandle::External(e), RankerInput::Tabular { query, rows })
                if e.kind() == InputKind::Tabular =>
            {
                e.score_rows(query, rows)
            }
            (r, _) => Err(wrong_input(r.input_kind())),
        }
    }

    fn name(&self) -> String {
        match self {
            RankerHandle::Bm25(_) => "bm25".into(),
            RankerHandle::Linear(_) => "linear".into(),
            RankerHandle::Stumps(_) => "stumps".into(),
            RankerHandle::External(_) => "external".into(),
        }
    }
}

/// Serializes every call to the wrapped ranker.
pub struct Serialized<R> {
    inner: Mutex<R>,
    kind: InputKind,
    name: String,
}

impl<R: Ranker> Serialized<R> {
    pub fn new(inner: R) -> Self {
        let kind = inner.input_kind();
        let name = inner.name();
        Self { inner: Mutex::new(inner), kind, name }
    }
}

impl<R: Ranker> Ranker for Serialized<R> {
    fn input_kind(&self) -> InputKind {
        self.kind
    }

    fn score(&self, input: RankerInput<'_>) -> Result<Vec<f64>> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).score(input)
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

impl<R: Ranker + ?Sized> Ranker for &R {
    fn input_kind(&self) -> InputKind {
        (**self).input_kind()
    }

    fn score(&self, input: RankerInput<'_>) -> Result<Vec<f64>> {
        (**self).score(input)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}
