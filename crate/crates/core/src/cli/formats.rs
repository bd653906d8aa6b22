//! Dataset file formats: LETOR/SVMLight lines and JSONL text instances.

use std::collections::HashMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::features::TabularInstance;
use crate::instance::{Document, Instance, Vocabulary};

/// One query-document line of a LETOR file.
#[derive(Debug, Clone, PartialEq)]
pub struct LetorRecord {
    pub qid: String,
    pub doc_id: String,
    pub relevance: f64,
    pub features: Vec<f64>,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parses `<rel> qid:<q> <i>:<v> ... [# <docid>]` lines. Feature indices are
/// 1-based; vectors are as long as `feature_count`, or the largest index in
/// the file when it is `None`. Missing indices read as 0 and a missing doc
/// id defaults to the line number.
pub fn parse_letor(text: &str, feature_count: Option<usize>) -> Result<Vec<LetorRecord>> {
    let mut sparse = Vec::new();
    let mut width = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let (body, comment) = match raw.split_once('#') {
            Some((b, c)) => (b, Some(c.trim())),
            None => (raw, None),
        };
        let mut tokens = body.split_whitespace();
        let Some(rel) = tokens.next() else {
            continue;
        };
        let relevance: f64 = rel
            .parse()
            .ok()
            .filter(|r: &f64| r.is_finite())
            .ok_or_else(|| parse_error(line_no, format!("relevance {rel:?} is not a number")))?;
        let qid = tokens
            .next()
            .and_then(|t| t.strip_prefix("qid:"))
            .filter(|q| !q.is_empty())
            .ok_or_else(|| parse_error(line_no, "expected qid:<id> after the relevance"))?;
        let mut pairs = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(line_no, format!("expected <index>:<value>, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| parse_error(line_no, format!("feature index {idx:?} is not a positive integer")))?;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_error(line_no, format!("feature value {val:?} is not a number")))?;
            if let Some(limit) = feature_count {
                if idx > limit {
                    return Err(parse_error(line_no, format!("feature index {idx} exceeds {limit}")));
                }
            }
            width = width.max(idx);
            pairs.push((idx - 1, val));
        }
        let doc_id = match comment {
            Some(c) if !c.is_empty() => c.split_whitespace().next().unwrap_or(c).to_owned(),
            _ => line_no.to_string(),
        };
        sparse.push((LetorRecord { qid: qid.to_owned(), doc_id, relevance, features: Vec::new() }, pairs));
    }
    let width = feature_count.unwrap_or(width);
    Ok(sparse
        .into_iter()
        .map(|(mut r, pairs)| {
            r.features = vec![0.0; width];
            for (i, v) in pairs {
                r.features[i] = v;
            }
            r
        })
        .collect())
}

/// Writes records back as LETOR lines, listing every feature index.
pub fn serialize_letor(records: &[LetorRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!("{} qid:{}", r.relevance, r.qid));
        for (i, v) in r.features.iter().enumerate() {
            out.push_str(&format!(" {}:{}", i + 1, v));
        }
        out.push_str(&format!(" # {}\n", r.doc_id));
    }
    out
}

/// Groups records by query id, in order of first appearance.
pub fn group_letor(records: &[LetorRecord]) -> Result<Vec<TabularInstance>> {
    let mut order: Vec<TabularInstance> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for r in records {
        let slot = *index.entry(r.qid.as_str()).or_insert_with(|| {
            order.push(TabularInstance { id: r.qid.clone(), doc_ids: Vec::new(), rows: Vec::new() });
            order.len() - 1
        });
        let inst = &mut order[slot];
        if inst.doc_ids.contains(&r.doc_id) {
            return Err(Error::InvalidInput(format!("duplicate document {:?} in query {:?}", r.doc_id, r.qid)));
        }
        inst.doc_ids.push(r.doc_id.clone());
        inst.rows.push(r.features.clone());
    }
    Ok(order)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDocument {
    id: String,
    text: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonInstance {
    qid: String,
    query: String,
    documents: Vec<JsonDocument>,
}

/// Parses one JSON instance per non-blank line. The vocabulary covers every
/// query and document in the file.
pub fn parse_instances(text: &str) -> Result<(Vocabulary, Vec<Instance>)> {
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: JsonInstance =
            serde_json::from_str(line).map_err(|e| parse_error(i + 1, e.to_string()))?;
        if parsed.documents.is_empty() {
            return Err(parse_error(i + 1, "instance has no documents"));
        }
        raw.push((i + 1, parsed));
    }
    let vocab = Vocabulary::from_texts(
        raw.iter().flat_map(|(_, r)| std::iter::once(r.query.as_str()).chain(r.documents.iter().map(|d| d.text.as_str()))),
    );
    let instances = raw
        .into_iter()
        .map(|(line, r)| {
            let query = Document::new(r.qid, r.query, &vocab);
            let docs = r.documents.into_iter().map(|d| Document::new(d.id, d.text, &vocab)).collect();
            Instance::new(query, docs).map_err(|e| parse_error(line, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((vocab, instances))
}
