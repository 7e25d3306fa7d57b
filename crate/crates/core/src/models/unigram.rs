use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{graphemes, Corpus, SegmentedWord};
use crate::error::{Error, Result};

/// Morpheme unigram model with additive smoothing and a single
/// out-of-vocabulary class shared by every unseen string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnigramModel {
    counts: BTreeMap<String, usize>,
    total: usize,
    smoothing: f64,
}

impl UnigramModel {
    /// `log p(m) = log((count + s) / (total + s * (V + 1)))`, with count 0 for OOV.
    pub fn log_prob(&self, morpheme: &str) -> f64 {
        let count = self.counts.get(morpheme).copied().unwrap_or(0) as f64;
        let denom = self.total as f64 + self.smoothing * (self.counts.len() as f64 + 1.0);
        ((count + self.smoothing) / denom).ln()
    }

    /// Maximizes the summed log-probability over all segmentations; equal
    /// scores prefer fewer morphemes.
    pub fn segment(&self, surface: &str) -> SegmentedWord {
        let g = graphemes(surface);
        let n = g.len();
        // (score, pieces, back pointer)
        let mut best: Vec<(f64, usize, usize)> = vec![(f64::NEG_INFINITY, usize::MAX, 0); n + 1];
        best[0] = (0.0, 0, 0);
        for j in 1..=n {
            for i in 0..j {
                let (s, k, _) = best[i];
                let cand = s + self.log_prob(&g[i..j].concat());
                let pieces = k + 1;
                let cur = best[j];
                if cand > cur.0 || (cand == cur.0 && pieces < cur.1) {
                    best[j] = (cand, pieces, i);
                }
            }
        }
        let mut cuts = Vec::new();
        let mut j = n;
        while j > 0 {
            let i = best[j].2;
            if i > 0 {
                cuts.push(i);
            }
            j = i;
        }
        cuts.reverse();
        SegmentedWord::from_boundaries(surface, &cuts).expect("cuts are increasing and interior")
    }
}

pub fn train_unigram_viterbi(corpus: &Corpus, smoothing: f64) -> Result<UnigramModel> {
    if corpus.is_empty() {
        return Err(Error::Domain("cannot train on an empty corpus".into()));
    }
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(Error::Config(format!("smoothing must be positive, got {smoothing}")));
    }
    let mut counts = BTreeMap::new();
    let mut total = 0;
    for w in corpus.words() {
        for m in w.morphemes() {
            *counts.entry(m.clone()).or_insert(0) += 1;
            total += 1;
        }
    }
    Ok(UnigramModel {
        counts,
        total,
        smoothing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(words: &[&[&str]]) -> Corpus {
        Corpus::from_words("t", words.iter().map(|p| SegmentedWord::from_parts(p).unwrap()))
    }

    #[test]
    fn single_known_morpheme_stays_whole() {
        let m = train_unigram_viterbi(&corpus(&[&["a", "b"], &["ab", "c"]]), 0.1).unwrap();
        assert_eq!(m.segment("ab").morphemes(), ["ab"]);
    }

    #[test]
    fn unseen_characters_give_one_morpheme() {
        let m = train_unigram_viterbi(&corpus(&[&["walk", "ed"]]), 0.1).unwrap();
        assert_eq!(m.segment("xyz").morphemes(), ["xyz"]);
    }

    #[test]
    fn rejects_bad_smoothing() {
        assert!(train_unigram_viterbi(&corpus(&[&["a"]]), 0.0).is_err());
    }
}
