//! Deterministic synthetic benchmarks: a pseudo-word text corpus for
//! word-space studies and random tabular query groups.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, Zipf};

use crate::features::TabularInstance;
use crate::instance::{Document, Instance, Vocabulary};
use crate::rankers::CorpusStats;

const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// A text corpus with its vocabulary and collection statistics.
#[derive(Debug, Clone)]
pub struct TextCorpus {
    pub vocab: Vocabulary,
    pub instances: Vec<Instance>,
    pub stats: CorpusStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextCorpusConfig {
    pub instances: usize,
    pub docs_per_instance: usize,
    pub lexicon: usize,
    pub doc_len: (usize, usize),
    pub seed: u64,
}

impl Default for TextCorpusConfig {
    fn default() -> Self {
        Self { instances: 20, docs_per_instance: 10, lexicon: 400, doc_len: (12, 40), seed: 7 }
    }
}

/// Pronounceable pseudo-word for index `i`, built from two or three
/// consonant-vowel syllables. Distinct indices give distinct words.
pub fn pseudo_word(i: usize) -> String {
    let syl = ONSETS.len() * VOWELS.len();
    let mut n = i;
    let mut out = String::new();
    for _ in 0..2 {
        out.push_str(ONSETS[(n % syl) / VOWELS.len()]);
        out.push_str(VOWELS[n % VOWELS.len()]);
        n /= syl;
    }
    if n > 0 || i >= syl * syl {
        out.push_str(ONSETS[n % ONSETS.len()]);
        out.push_str(VOWELS[(n / ONSETS.len()) % VOWELS.len()]);
    }
    out
}

/// Queries of two or three mid-frequency terms over Zipf-distributed
/// background text. Each document mixes background words with a random
/// number of query-term occurrences, so documents differ both in topical
/// match and in length. Document order within an instance is shuffled.
pub fn text_corpus(config: &TextCorpusConfig) -> TextCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lexicon: Vec<String> = (0..config.lexicon).map(pseudo_word).collect();
    let zipf = Zipf::new(config.lexicon as u64, 1.05).expect("valid zipf parameters");
    let mid = (config.lexicon / 10)..(config.lexicon / 2);
    let mut raw: Vec<(String, Vec<(String, String)>)> = Vec::new();
    for q in 0..config.instances {
        let terms = rng.gen_range(2..=3);
        let mut pool: Vec<usize> = mid.clone().collect();
        pool.shuffle(&mut rng);
        let query: Vec<&str> = pool[..terms].iter().map(|&i| lexicon[i].as_str()).collect();
        let mut docs = Vec::new();
        for d in 0..config.docs_per_instance {
            let len = rng.gen_range(config.doc_len.0..=config.doc_len.1);
            let topical: f64 = rng.gen_range(0.0..2.5);
            let mut tokens: Vec<&str> = (0..len).map(|_| lexicon[zipf.sample(&mut rng) as usize - 1].as_str()).collect();
            for &t in &query {
                if rng.gen_bool(0.75) {
                    let extra = Poisson::new(topical + 0.05).expect("positive rate").sample(&mut rng) as usize;
                    tokens.extend(std::iter::repeat(t).take(extra));
                }
            }
            tokens.shuffle(&mut rng);
            docs.push((format!("q{q}-d{d}"), tokens.join(" ")));
        }
        docs.shuffle(&mut rng);
        raw.push((query.join(" "), docs));
    }
    let vocab = Vocabulary::from_texts(
        raw.iter().flat_map(|(q, docs)| std::iter::once(q.as_str()).chain(docs.iter().map(|d| d.1.as_str()))),
    );
    let instances: Vec<Instance> = raw
        .iter()
        .enumerate()
        .map(|(q, (query, docs))| {
            let documents = docs.iter().map(|(id, text)| Document::new(id.clone(), text.clone(), &vocab)).collect();
            Instance::new(Document::new(format!("q{q}"), query.clone(), &vocab), documents).expect("unique ids")
        })
        .collect();
    let stats = CorpusStats::from_instances(&instances);
    TextCorpus { vocab, instances, stats }
}

/// Query groups of i.i.d. uniform feature rows.
pub fn uniform_tabular(instances: usize, docs: usize, features: usize, seed: u64) -> Vec<TabularInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..instances)
        .map(|q| TabularInstance {
            id: format!("q{q}"),
            doc_ids: (0..docs).map(|d| format!("q{q}-d{d}")).collect(),
            rows: (0..docs).map(|_| (0..features).map(|_| rng.gen_range(0.0..1.0)).collect()).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn pseudo_words_distinct() {
        let words: HashSet<String> = (0..5000).map(pseudo_word).collect();
        assert_eq!(words.len(), 5000);
        assert!(words.iter().all(|w| w.chars().all(|c| c.is_ascii_lowercase())));
    }

    #[test]
    fn corpus_shape_and_determinism() {
        let config = TextCorpusConfig::default();
        let a = text_corpus(&config);
        let b = text_corpus(&config);
        assert_eq!(a.instances, b.instances);
        assert_eq!(a.instances.len(), 20);
        for inst in &a.instances {
            assert_eq!(inst.len(), 10);
            let terms = inst.query.bow.len();
            assert!((2..=3).contains(&terms));
        }
        assert_eq!(a.stats.doc_count, 200);
    }
}
