//! Explanation feature spaces and the conversion from instances to feature
//! matrices.
//!
//! Two kinds of space are supported. A word space has one feature per
//! distinct term of the instance (query and documents), valued by the term's
//! count in each document. An engineered space has one feature per column of
//! a fixed catalog of query-document statistics, or per column of a tabular
//! dataset.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Document, Instance, Query, Vocabulary};
use crate::rankers::bm25::{bm25_score, CorpusStats, DEFAULT_B, DEFAULT_K1};

/// Row `d` holds the explanation-feature values of document `d`.
pub type FeatureMatrix = Vec<Vec<f64>>;

/// Size of the text-computable engineered catalog.
pub const ENGINEERED_COUNT: usize = 18;

/// Names of the engineered catalog, in column order.
pub const ENGINEERED_NAMES: [&str; ENGINEERED_COUNT] = [
    "covered_query_term_number",
    "covered_query_term_ratio",
    "stream_length",
    "idf_sum",
    "tf_sum",
    "tf_min",
    "tf_max",
    "tf_mean",
    "tf_median",
    "normalized_tf_sum",
    "normalized_tf_min",
    "normalized_tf_max",
    "normalized_tf_mean",
    "tfidf_sum",
    "tfidf_min",
    "tfidf_max",
    "tfidf_mean",
    "bm25",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Words,
    Engineered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    kind: SpaceKind,
    names: Vec<String>,
    /// Vocabulary index (word space) or source column (engineered space) of
    /// each feature, aligned with `names`.
    source: Vec<usize>,
    /// True when the engineered columns are computed from text.
    from_text: bool,
}

impl FeatureSpace {
    /// Word space over the instance's terms, sorted lexicographically.
    pub fn words(instance: &Instance, vocab: &Vocabulary) -> Self {
        let mut named: Vec<(String, usize)> = instance
            .terms()
            .into_iter()
            .map(|t| (vocab.term(t).unwrap_or_default().to_owned(), t))
            .collect();
        named.sort();
        let (names, source) = named.into_iter().unzip();
        Self { kind: SpaceKind::Words, names, source, from_text: true }
    }

    /// The fixed engineered catalog computed from text.
    pub fn engineered() -> Self {
        Self {
            kind: SpaceKind::Engineered,
            names: ENGINEERED_NAMES.iter().map(|s| s.to_string()).collect(),
            source: (0..ENGINEERED_COUNT).collect(),
            from_text: true,
        }
    }

    /// Engineered space whose columns are supplied directly (tabular data).
    pub fn tabular(names: Vec<String>) -> Self {
        let source = (0..names.len()).collect();
        Self { kind: SpaceKind::Engineered, names, source, from_text: false }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    /// Vocabulary index or source column of every feature.
    pub fn source(&self) -> &[usize] {
        &self.source
    }

    /// Picks this space's columns out of a full source row.
    pub fn select(&self, full_row: &[f64]) -> Vec<f64> {
        self.source.iter().map(|&c| full_row[c]).collect()
    }

    pub fn is_text_catalog(&self) -> bool {
        self.kind == SpaceKind::Engineered && self.from_text
    }

    /// Restricts the space to the given feature ids, in that order.
    pub fn restrict(&self, ids: &[usize]) -> Self {
        Self {
            kind: self.kind,
            names: ids.iter().map(|&i| self.names[i].clone()).collect(),
            source: ids.iter().map(|&i| self.source[i]).collect(),
            from_text: self.from_text,
        }
    }
}

/// Builds the explanation space of `kind` for an instance.
pub fn build_feature_space(instance: &Instance, kind: SpaceKind, vocab: &Vocabulary) -> FeatureSpace {
    match kind {
        SpaceKind::Words => FeatureSpace::words(instance, vocab),
        SpaceKind::Engineered => FeatureSpace::engineered(),
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn sum_min_max_mean(values: &[f64]) -> [f64; 4] {
    let sum: f64 = values.iter().sum();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    [sum, min, max, sum / values.len() as f64]
}

/// The engineered catalog for one query-document pair, in
/// [`ENGINEERED_NAMES`] order. Statistics range over the distinct query terms.
pub fn compute_engineered(query: &Query, doc: &Document, stats: &CorpusStats) -> Result<[f64; ENGINEERED_COUNT]> {
    if query.bow.is_empty() {
        return Err(Error::InvalidInput(format!("query {:?} has no terms", query.id)));
    }
    let terms: Vec<usize> = query.bow.keys().copied().collect();
    let len = f64::from(doc.len());
    let tf: Vec<f64> = terms.iter().map(|&t| f64::from(doc.count(t))).collect();
    let idf: Vec<f64> = terms.iter().map(|&t| stats.idf(t)).collect();
    let norm_tf: Vec<f64> = tf.iter().map(|&x| if len > 0.0 { x / len } else { 0.0 }).collect();
    let tfidf: Vec<f64> = tf.iter().zip(&idf).map(|(a, b)| a * b).collect();
    let covered = tf.iter().filter(|&&x| x > 0.0).count() as f64;
    let mut sorted_tf = tf.clone();
    sorted_tf.sort_by(f64::total_cmp);

    let mut out = [0.0; ENGINEERED_COUNT];
    out[0] = covered;
    out[1] = covered / terms.len() as f64;
    out[2] = len;
    out[3] = idf.iter().sum();
    out[4..8].copy_from_slice(&sum_min_max_mean(&tf));
    out[8] = median(&sorted_tf);
    out[9..13].copy_from_slice(&sum_min_max_mean(&norm_tf));
    out[13..17].copy_from_slice(&sum_min_max_mean(&tfidf));
    out[17] = bm25_score(query, doc, stats, DEFAULT_K1, DEFAULT_B)?;
    Ok(out)
}

/// Applies the conversion mapping to every document of a text instance.
pub fn feature_matrix(instance: &Instance, space: &FeatureSpace, stats: &CorpusStats) -> Result<FeatureMatrix> {
    match space.kind {
        SpaceKind::Words => Ok(instance
            .documents
            .iter()
            .map(|d| space.source.iter().map(|&t| f64::from(d.count(t))).collect())
            .collect()),
        SpaceKind::Engineered => {
            if !space.from_text {
                return Err(Error::InvalidInput(
                    "tabular spaces have no text conversion; use the instance's rows".into(),
                ));
            }
            instance
                .documents
                .iter()
                .map(|d| compute_engineered(&instance.query, d, stats).map(|r| space.select(&r)))
                .collect()
        }
    }
}

/// Query row of a word space (term counts of the query). Engineered spaces
/// describe query-document pairs and have no separate query row.
pub fn query_row(instance: &Instance, space: &FeatureSpace) -> Vec<f64> {
    match space.kind {
        SpaceKind::Words => space.source.iter().map(|&t| f64::from(instance.query.count(t))).collect(),
        SpaceKind::Engineered => Vec::new(),
    }
}

/// Writes a feature matrix as CSV with the space's feature names as header.
pub fn matrix_to_csv(matrix: &FeatureMatrix, space: &FeatureSpace, doc_ids: &[String]) -> String {
    let mut out = String::from("doc_id");
    for name in space.names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (row, id) in matrix.iter().zip(doc_ids) {
        out.push_str(id);
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// A query whose documents are already feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularInstance {
    pub id: String,
    pub doc_ids: Vec<String>,
    pub rows: FeatureMatrix,
}

impl TabularInstance {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(texts: &[&str]) -> (Vocabulary, Vec<Document>, CorpusStats) {
        let vocab = Vocabulary::from_texts(texts.iter().copied().chain(["cat dog a b c"]));
        let docs: Vec<Document> =
            texts.iter().enumerate().map(|(i, t)| Document::new(format!("d{i}"), *t, &vocab)).collect();
        let stats = CorpusStats::from_documents(&docs);
        (vocab, docs, stats)
    }

    #[test]
    fn word_space_is_union_of_terms() {
        let vocab = Vocabulary::from_texts(["c b a"]);
        let inst = Instance::new(Document::new("q", "a b", &vocab), vec![Document::new("d", "b c", &vocab)]).unwrap();
        let space = build_feature_space(&inst, SpaceKind::Words, &vocab);
        assert_eq!(space.names(), ["a", "b", "c"]);
        assert_eq!(space.len(), 3);
        assert_eq!(build_feature_space(&inst, SpaceKind::Engineered, &vocab).len(), 18);

        let other = Instance::new(Document::new("q2", "b a", &vocab), vec![Document::new("d2", "c b", &vocab)]).unwrap();
        assert_eq!(FeatureSpace::words(&other, &vocab), space);
    }

    #[test]
    fn engineered_hand_example() {
        let (vocab, docs, stats) = corpus(&["cat cat fish", "dog"]);
        let q = Document::new("q", "cat dog", &vocab);
        let f = compute_engineered(&q, &docs[0], &stats).unwrap();
        assert_eq!(f[0], 1.0);
        assert_eq!(f[1], 0.5);
        assert_eq!(f[2], 3.0);
        let idf_cat = stats.idf(vocab.index("cat").unwrap());
        let idf_dog = stats.idf(vocab.index("dog").unwrap());
        assert!((f[3] - (idf_cat + idf_dog)).abs() < 1e-12);
        assert_eq!(&f[4..9], &[2.0, 0.0, 2.0, 1.0, 1.0]);
        let n = [2.0 / 3.0, 0.0, 2.0 / 3.0, 1.0 / 3.0];
        for (a, b) in f[9..13].iter().zip(n) {
            assert!((a - b).abs() < 1e-12);
        }
        let ti = [2.0 * idf_cat, 0.0, 2.0 * idf_cat, idf_cat];
        for (a, b) in f[13..17].iter().zip(ti) {
            assert!((a - b).abs() < 1e-12);
        }
        let bm = bm25_score(&q, &docs[0], &stats, DEFAULT_K1, DEFAULT_B).unwrap();
        assert_eq!(f[17], bm);
    }

    #[test]
    fn engineered_no_overlap() {
        let (vocab, docs, stats) = corpus(&["a b c", "cat"]);
        let q = Document::new("q", "cat dog", &vocab);
        let f = compute_engineered(&q, &docs[0], &stats).unwrap();
        for i in (0..2).chain(4..17) {
            assert_eq!(f[i], 0.0, "feature {i}");
        }
        assert_eq!(f[17], 0.0);
        assert_eq!(f[2], 3.0);
    }

    #[test]
    fn engineered_rejects_empty_query() {
        let (vocab, docs, stats) = corpus(&["cat"]);
        let q = Document::new("q", "", &vocab);
        assert!(compute_engineered(&q, &docs[0], &stats).is_err());
    }

    #[test]
    fn ratio_features_scale_invariant() {
        let (vocab, docs, stats) = corpus(&["cat cat fish dog", "dog a", "b"]);
        let q = Document::new("q", "cat dog b", &vocab);
        let base = compute_engineered(&q, &docs[0], &stats).unwrap();
        let doubled_docs: Vec<Document> = docs
            .iter()
            .map(|d| {
                let mut d = d.clone();
                d.bow.values_mut().for_each(|c| *c *= 2);
                d
            })
            .collect();
        let doubled_stats = CorpusStats::from_documents(&doubled_docs);
        let f = compute_engineered(&q, &doubled_docs[0], &doubled_stats).unwrap();
        for i in [1, 9, 10, 11, 12] {
            assert!((f[i] - base[i]).abs() < 1e-12, "feature {i}");
        }
        // raw tf statistics double
        assert!((f[4] - 2.0 * base[4]).abs() < 1e-12);
    }

    #[test]
    fn word_matrix_counts() {
        let vocab = Vocabulary::from_texts(["a b"]);
        let inst = Instance::new(
            Document::new("q", "a", &vocab),
            vec![Document::new("d", "a a b", &vocab), Document::new("e", "", &vocab)],
        )
        .unwrap();
        let space = FeatureSpace::words(&inst, &vocab);
        let stats = CorpusStats::from_instances(std::slice::from_ref(&inst));
        let m = feature_matrix(&inst, &space, &stats).unwrap();
        assert_eq!(m, vec![vec![2.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(query_row(&inst, &space), vec![1.0, 0.0]);
    }

    #[test]
    fn engineered_matrix_deterministic() {
        let (vocab, docs, stats) = corpus(&["cat cat fish", "dog cat", "a"]);
        let inst = Instance::new(Document::new("q", "cat dog", &vocab), docs).unwrap();
        let space = FeatureSpace::engineered();
        let a = feature_matrix(&inst, &space, &stats).unwrap();
        let b = feature_matrix(&inst.clone(), &space, &stats).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_has_header() {
        let space = FeatureSpace::tabular(vec!["x".into(), "y".into()]);
        let csv = matrix_to_csv(&vec![vec![1.0, 2.5]], &space, &["d1".into()]);
        assert_eq!(csv, "doc_id,x,y\nd1,1,2.5\n");
    }
}
