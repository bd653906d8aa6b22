//! Okapi BM25 over bag-of-words documents.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Document, Instance, Query};

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

/// Collection statistics used by BM25 and the idf-based engineered features.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub doc_count: usize,
    pub avg_doc_len: f64,
    pub df: HashMap<usize, usize>,
}

impl CorpusStats {
    pub fn from_documents<'a, I>(docs: I) -> Self
    where
        I: IntoIterator<Item = &'a Document>,
    {
        let mut df: HashMap<usize, usize> = HashMap::new();
        let mut doc_count = 0usize;
        let mut total_len = 0u64;
        for doc in docs {
            doc_count += 1;
            total_len += u64::from(doc.len());
            for &term in doc.bow.keys() {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let avg_doc_len = if doc_count == 0 { 0.0 } else { total_len as f64 / doc_count as f64 };
        Self { doc_count, avg_doc_len, df }
    }

    /// Statistics over the distinct documents (by id) of a set of instances.
    pub fn from_instances(instances: &[Instance]) -> Self {
        let mut seen = std::collections::HashSet::new();
        let docs = instances
            .iter()
            .flat_map(|i| i.documents.iter())
            .filter(|d| seen.insert(d.id.clone()));
        Self::from_documents(docs.collect::<Vec<_>>())
    }

    pub fn df(&self, term: usize) -> usize {
        self.df.get(&term).copied().unwrap_or(0)
    }

    /// `ln((N - df + 0.5) / (df + 0.5) + 1)`, never negative.
    pub fn idf(&self, term: usize) -> f64 {
        let n = self.doc_count as f64;
        let df = self.df(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }
}

/// Okapi BM25 with the non-negative idf. Query terms are weighted by their
/// count in the query.
pub fn bm25_score(query: &Query, doc: &Document, stats: &CorpusStats, k1: f64, b: f64) -> Result<f64> {
    if stats.doc_count == 0 {
        return Err(Error::EmptyCorpus);
    }
    let len = f64::from(doc.len());
    let norm = if stats.avg_doc_len > 0.0 {
        1.0 - b + b * len / stats.avg_doc_len
    } else {
        1.0 - b
    };
    let mut score = 0.0;
    for (&term, &qtf) in &query.bow {
        let tf = f64::from(doc.count(term));
        if tf == 0.0 {
            continue;
        }
        score += f64::from(qtf) * stats.idf(term) * tf * (k1 + 1.0) / (tf + k1 * norm);
    }
    Ok(score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Ranker {
    pub stats: CorpusStats,
    pub k1: f64,
    pub b: f64,
}

impl Bm25Ranker {
    pub fn new(stats: CorpusStats) -> Self {
        Self { stats, k1: DEFAULT_K1, b: DEFAULT_B }
    }

    pub fn score_instance(&self, instance: &Instance) -> Result<Vec<f64>> {
        instance
            .documents
            .iter()
            .map(|d| bm25_score(&instance.query, d, &self.stats, self.k1, self.b))
            .collect()
    }
}
