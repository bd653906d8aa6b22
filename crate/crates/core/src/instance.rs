//! Instances, rankings and the bag-of-words text representation.
//!
//! An [`Instance`] is one query together with its candidate documents. Every
//! other module works on instances and on the [`Ranking`] a ranker induces
//! over their documents.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse term-index to count map. Stored entries are always `>= 1`.
pub type Bow = BTreeMap<usize, u32>;

/// Lowercases `text` and splits it on every non-alphanumeric codepoint.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Counts in-vocabulary tokens; out-of-vocabulary tokens are dropped.
pub fn to_bow<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> Bow {
    let mut bow = Bow::new();
    for tok in tokens {
        if let Some(idx) = vocab.index(tok.as_ref()) {
            *bow.entry(idx).or_insert(0) += 1;
        }
    }
    bow
}

/// Bijective term/index map with dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    terms: Vec<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vocabulary over every token of `texts`, in first-seen order.
    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Self::new();
        for text in texts {
            for tok in tokenize(text.as_ref()) {
                vocab.insert(&tok);
            }
        }
        vocab
    }

    /// Returns the index of `term`, inserting it if absent.
    pub fn insert(&mut self, term: &str) -> usize {
        if let Some(&idx) = self.index.get(term) {
            return idx;
        }
        let idx = self.terms.len();
        self.index.insert(term.to_owned(), idx);
        self.terms.push(term.to_owned());
        idx
    }

    pub fn index(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, idx: usize) -> Option<&str> {
        self.terms.get(idx).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(skip)]
    pub bow: Bow,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, vocab: &Vocabulary) -> Self {
        let text = text.into();
        let bow = to_bow(&tokenize(&text), vocab);
        Self { id: id.into(), text, bow }
    }

    /// Number of in-vocabulary tokens.
    pub fn len(&self) -> u32 {
        self.bow.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bow.is_empty()
    }

    pub fn count(&self, term: usize) -> u32 {
        self.bow.get(&term).copied().unwrap_or(0)
    }
}

/// Queries share the document representation.
pub type Query = Document;

/// One query and its candidate documents: the unit of explanation.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub query: Query,
    pub documents: Vec<Document>,
}

impl Instance {
    pub fn new(query: Query, documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::InvalidInput("instance has no documents".into()));
        }
        let mut seen = HashSet::new();
        for d in &documents {
            if !seen.insert(d.id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate document id {:?}", d.id)));
            }
        }
        Ok(Self { query, documents })
    }

    pub fn id(&self) -> &str {
        &self.query.id
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Sorted set of term indices used by the query or any document.
    pub fn terms(&self) -> Vec<usize> {
        let mut terms: Vec<usize> = self
            .documents
            .iter()
            .chain(std::iter::once(&self.query))
            .flat_map(|d| d.bow.keys().copied())
            .collect();
        terms.sort_unstable();
        terms.dedup();
        terms
    }
}

/// A ranker's ordering of an instance's documents, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub ordering: Vec<usize>,
    pub scores: Vec<f64>,
}

impl Ranking {
    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }

    /// `positions()[d]` is the 0-based rank of document `d`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.ordering.len()];
        for (rank, &doc) in self.ordering.iter().enumerate() {
            pos[doc] = rank;
        }
        pos
    }
}

/// Sorts documents by descending score; ties go to the lower index.
pub fn rank_from_scores(scores: &[f64]) -> Result<Ranking> {
    if scores.is_empty() {
        return Err(Error::InvalidRankerOutput("no scores".into()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidRankerOutput(format!(
            "score {} of document {i} is not finite",
            scores[i]
        )));
    }
    let mut ordering: Vec<usize> = (0..scores.len()).collect();
    // sort_by is stable, so equal scores keep ascending index order.
    ordering.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(Ranking { ordering, scores: scores.to_vec() })
}

/// Maps values affinely onto `[0, 1]`. Constant input maps to all ones.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(max > min) {
        return vec![1.0; values.len()];
    }
    let span = max - min;
    values.iter().map(|&v| ((v - min) / span).clamp(0.0, 1.0)).collect()
}
