//! Edits that map a simplified input back onto a concrete instance.

use crate::error::Result;
use crate::features::{compute_engineered, FeatureMatrix, FeatureSpace, SpaceKind, ENGINEERED_COUNT};
use crate::instance::{tokenize, Bow, Document, Instance, Vocabulary};
use crate::rankers::CorpusStats;

/// Default cap on word edits per document for circuitous perturbations.
pub const DEFAULT_EDIT_BUDGET: usize = 16;

/// Rewrites `doc` so its bag of words equals `target`.
///
/// Surviving tokens keep their original order; extra copies of a term are
/// placed right after its last original occurrence. Out-of-vocabulary tokens
/// are left where they were.
pub(crate) fn rebuild_document(doc: &Document, target: &Bow, vocab: &Vocabulary) -> Document {
    if &doc.bow == target {
        return doc.clone();
    }
    let tokens = tokenize(&doc.text);
    let ids: Vec<Option<usize>> = tokens.iter().map(|t| vocab.index(t)).collect();
    let mut last = std::collections::HashMap::new();
    for (pos, id) in ids.iter().enumerate() {
        if let Some(id) = id {
            last.insert(*id, pos);
        }
    }
    let mut emitted: std::collections::HashMap<usize, u32> = std::collections::HashMap::new();
    let mut out: Vec<&str> = Vec::with_capacity(tokens.len());
    for (pos, (tok, id)) in tokens.iter().zip(&ids).enumerate() {
        let Some(id) = *id else {
            out.push(tok);
            continue;
        };
        let want = target.get(&id).copied().unwrap_or(0);
        let done = emitted.entry(id).or_insert(0);
        if *done < want {
            out.push(tok);
            *done += 1;
        }
        if last[&id] == pos {
            while *done < want {
                out.push(tok);
                *done += 1;
            }
        }
    }
    let text = out.join(" ");
    let rebuilt = Document::new(doc.id.clone(), text, vocab);
    debug_assert_eq!(&rebuilt.bow, target, "text rebuild must reproduce the bag of words");
    rebuilt
}

fn scale_bow(bow: &Bow, factors: &std::collections::HashMap<usize, f64>) -> Bow {
    bow.iter()
        .filter_map(|(&t, &c)| {
            let scaled = match factors.get(&t) {
                Some(&z) => (f64::from(c) * z).round_ties_even().max(0.0) as u32,
                None => c,
            };
            (scaled > 0).then_some((t, scaled))
        })
        .collect()
}

/// Scales every occurrence count of each space term by its retained fraction.
///
/// The new count is `round(count * z[t])` with ties to even, applied to the
/// query and every document, so `z[t] = 0` deletes the term everywhere and
/// `z[t] = 1` leaves it untouched.
pub fn apply_direct(instance: &Instance, space: &FeatureSpace, z: &[f64], vocab: &Vocabulary) -> Instance {
    debug_assert_eq!(space.kind(), SpaceKind::Words);
    let factors: std::collections::HashMap<usize, f64> = space
        .source()
        .iter()
        .zip(z)
        .filter(|(_, &f)| f != 1.0)
        .map(|(&t, &f)| (t, f.max(0.0)))
        .collect();
    if factors.is_empty() {
        return instance.clone();
    }
    let edit = |d: &Document| rebuild_document(d, &scale_bow(&d.bow, &factors), vocab);
    Instance { query: edit(&instance.query), documents: instance.documents.iter().map(edit).collect() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WordEdit {
    DeleteQueryTerm(usize),
    DuplicateQueryTerm(usize),
    DeleteOtherWord(usize),
}

fn apply_edit(bow: &mut Bow, edit: WordEdit) {
    match edit {
        WordEdit::DeleteQueryTerm(t) | WordEdit::DeleteOtherWord(t) => {
            if let Some(c) = bow.get_mut(&t) {
                *c -= 1;
                if *c == 0 {
                    bow.remove(&t);
                }
            }
        }
        WordEdit::DuplicateQueryTerm(t) => *bow.entry(t).or_insert(0) += 1,
    }
}

/// Distance to the target over constrained features; `None` entries are free.
fn distance(achieved: &[f64; ENGINEERED_COUNT], base: &[f64; ENGINEERED_COUNT], target: &[Option<f64>]) -> f64 {
    achieved
        .iter()
        .zip(base)
        .zip(target)
        .filter_map(|((a, b), t)| t.map(|t| (a - b - t).powi(2)))
        .sum::<f64>()
        .sqrt()
}

/// Greedy word edits on one document toward `target` engineered deltas.
fn edit_document(
    query: &Document,
    doc: &Document,
    stats: &CorpusStats,
    target: &[Option<f64>],
    budget: usize,
) -> Result<Bow> {
    let base = compute_engineered(query, doc, stats)?;
    let mut current = doc.clone();
    let mut best = distance(&base, &base, target);
    for _ in 0..budget {
        if best == 0.0 {
            break;
        }
        let mut candidates = Vec::new();
        for &t in query.bow.keys() {
            if current.count(t) > 0 {
                candidates.push(WordEdit::DeleteQueryTerm(t));
                candidates.push(WordEdit::DuplicateQueryTerm(t));
            }
        }
        // all non-query words move the catalog identically; delete the most frequent
        if let Some((&t, _)) = current
            .bow
            .iter()
            .filter(|(t, _)| !query.bow.contains_key(t))
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        {
            candidates.push(WordEdit::DeleteOtherWord(t));
        }
        let mut chosen: Option<(f64, Bow)> = None;
        for edit in candidates {
            let mut trial = current.clone();
            apply_edit(&mut trial.bow, edit);
            let d = distance(&compute_engineered(query, &trial, stats)?, &base, target);
            if d < best - 1e-12 && chosen.as_ref().map_or(true, |(cd, _)| d < *cd) {
                chosen = Some((d, trial.bow));
            }
        }
        match chosen {
            Some((d, bow)) => {
                best = d;
                current.bow = bow;
            }
            None => break,
        }
    }
    Ok(current.bow)
}

/// Moves each document's engineered features toward `targets[d]` (deltas in
/// full catalog order, `None` for unconstrained features) by editing its
/// words, and returns the edited instance with its recomputed feature matrix
/// in `space`.
pub fn apply_circuitous_per_doc(
    instance: &Instance,
    space: &FeatureSpace,
    targets: &[Vec<Option<f64>>],
    stats: &CorpusStats,
    budget: usize,
    vocab: &Vocabulary,
) -> Result<(Instance, FeatureMatrix)> {
    let documents = instance
        .documents
        .iter()
        .zip(targets)
        .map(|(doc, target)| {
            let bow = edit_document(&instance.query, doc, stats, target, budget)?;
            Ok(rebuild_document(doc, &bow, vocab))
        })
        .collect::<Result<Vec<_>>>()?;
    let edited = Instance { query: instance.query.clone(), documents };
    let achieved = crate::features::feature_matrix(&edited, space, stats)?;
    Ok((edited, achieved))
}

/// [`apply_circuitous_per_doc`] with the same target delta for every document.
/// `target_delta` is indexed by space feature id; features outside the space
/// are left unconstrained.
pub fn apply_circuitous(
    instance: &Instance,
    space: &FeatureSpace,
    target_delta: &[f64],
    stats: &CorpusStats,
    budget: usize,
    vocab: &Vocabulary,
) -> Result<(Instance, FeatureMatrix)> {
    let mut target = vec![None; ENGINEERED_COUNT];
    for (&src, &t) in space.source().iter().zip(target_delta) {
        target[src] = Some(t);
    }
    let targets = vec![target; instance.len()];
    apply_circuitous_per_doc(instance, space, &targets, stats, budget, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::feature_matrix;

    fn toy() -> (Vocabulary, Instance, CorpusStats) {
        let texts = ["cat sat on the mat", "the cat and the dog", "dog dog cat", "fish swim"];
        let vocab = Vocabulary::from_texts(texts.iter().copied().chain(["cat dog"]));
        let docs: Vec<Document> =
            texts.iter().enumerate().map(|(i, t)| Document::new(format!("d{i}"), *t, &vocab)).collect();
        let stats = CorpusStats::from_documents(&docs);
        let inst = Instance::new(Document::new("q", "cat dog", &vocab), docs).unwrap();
        (vocab, inst, stats)
    }

    #[test]
    fn identity_leaves_instance_unchanged() {
        let (vocab, inst, _) = toy();
        let space = FeatureSpace::words(&inst, &vocab);
        let out = apply_direct(&inst, &space, &vec![1.0; space.len()], &vocab);
        assert_eq!(out, inst);
    }

    #[test]
    fn zero_fraction_masks_everywhere() {
        let (vocab, inst, _) = toy();
        let space = FeatureSpace::words(&inst, &vocab);
        let cat = space.names().iter().position(|n| n == "cat").unwrap();
        let mut z = vec![1.0; space.len()];
        z[cat] = 0.0;
        let out = apply_direct(&inst, &space, &z, &vocab);
        let cat_id = vocab.index("cat").unwrap();
        assert_eq!(out.query.count(cat_id), 0);
        assert!(out.documents.iter().all(|d| d.count(cat_id) == 0));
        assert_eq!(out.documents[1].text, "the and the dog");
        // bow stays derivable from the rewritten text
        for d in &out.documents {
            assert_eq!(Document::new(d.id.clone(), d.text.clone(), &vocab).bow, d.bow);
        }
    }

    #[test]
    fn half_fraction_rounds_to_even() {
        let vocab = Vocabulary::from_texts(["x y"]);
        let doc = Document::new("d", "x x x y", &vocab);
        let inst = Instance::new(Document::new("q", "y", &vocab), vec![doc]).unwrap();
        let space = FeatureSpace::words(&inst, &vocab);
        let out = apply_direct(&inst, &space, &[0.5, 1.0], &vocab);
        // 3 * 0.5 = 1.5 rounds to 2
        assert_eq!(out.documents[0].count(vocab.index("x").unwrap()), 2);
        let out = apply_direct(&inst, &space, &[1.0, 0.5], &vocab);
        // 1 * 0.5 = 0.5 rounds to 0
        assert_eq!(out.documents[0].count(vocab.index("y").unwrap()), 0);
    }

    #[test]
    fn fractions_above_one_duplicate() {
        let vocab = Vocabulary::from_texts(["x y"]);
        let doc = Document::new("d", "x y x", &vocab);
        let inst = Instance::new(Document::new("q", "y", &vocab), vec![doc]).unwrap();
        let space = FeatureSpace::words(&inst, &vocab);
        let out = apply_direct(&inst, &space, &[2.0, 1.0], &vocab);
        assert_eq!(out.documents[0].text, "x y x x x");
    }

    #[test]
    fn zero_target_makes_no_edits() {
        let (vocab, inst, stats) = toy();
        let space = FeatureSpace::engineered();
        let (out, achieved) =
            apply_circuitous(&inst, &space, &[0.0; ENGINEERED_COUNT], &stats, DEFAULT_EDIT_BUDGET, &vocab).unwrap();
        assert_eq!(out, inst);
        assert_eq!(achieved, feature_matrix(&inst, &space, &stats).unwrap());
    }

    #[test]
    fn single_deletion_hits_tf_sum_target() {
        let (vocab, inst, stats) = toy();
        let space = FeatureSpace::engineered().restrict(&[4]);
        let base = feature_matrix(&inst, &space, &stats).unwrap();
        let (_, achieved) = apply_circuitous(&inst, &space, &[-1.0], &stats, DEFAULT_EDIT_BUDGET, &vocab).unwrap();
        // doc 2 ("dog dog cat") has query terms; exhaustive single edits include one
        // that lowers tf_sum by exactly one
        let oracle = {
            let q = &inst.query;
            let d = &inst.documents[2];
            q.bow.keys().any(|&t| {
                let mut trial = d.clone();
                apply_edit(&mut trial.bow, WordEdit::DeleteQueryTerm(t));
                compute_engineered(q, &trial, &stats).unwrap()[4] == base[2][0] - 1.0
            })
        };
        assert!(oracle);
        assert_eq!(achieved[2][0], base[2][0] - 1.0);
        // doc 3 has no query term and cannot lower tf_sum
        assert_eq!(achieved[3][0], base[3][0]);
    }

    #[test]
    fn achieved_matches_recomputation() {
        let (vocab, inst, stats) = toy();
        let space = FeatureSpace::engineered();
        let mut target = [0.0; ENGINEERED_COUNT];
        target[2] = -2.0;
        target[17] = 0.5;
        let (out, achieved) = apply_circuitous(&inst, &space, &target, &stats, DEFAULT_EDIT_BUDGET, &vocab).unwrap();
        assert_eq!(achieved, feature_matrix(&out, &space, &stats).unwrap());
    }
}
