use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{morpheme_counts, Corpus};
use crate::error::{Error, Result};

/// Relative frequencies of morpheme tokens; support sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphemeDistribution {
    pub support: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl MorphemeDistribution {
    pub fn get(&self, morpheme: &str) -> f64 {
        self.support
            .binary_search_by(|m| m.as_str().cmp(morpheme))
            .map(|i| self.probabilities[i])
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// Token-frequency distribution of morphemes over the words at `indices`.
pub fn morpheme_distribution(corpus: &Corpus, indices: &[usize]) -> Result<MorphemeDistribution> {
    if indices.is_empty() {
        return Err(Error::Domain("morpheme distribution of an empty slice".into()));
    }
    let counts: BTreeMap<&str, usize> = morpheme_counts(indices.iter().map(|&i| &corpus.words()[i]))
        .into_iter()
        .collect();
    let total: usize = counts.values().sum();
    let (support, probabilities) = counts
        .into_iter()
        .map(|(m, c)| (m.to_string(), c as f64 / total as f64))
        .unzip();
    Ok(MorphemeDistribution { support, probabilities })
}

/// 1-Wasserstein distance under the 0/1 ground metric, i.e. total variation:
/// half the L1 distance over the union of supports.
pub fn distribution_distance(p: &MorphemeDistribution, q: &MorphemeDistribution) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut sum = 0.0;
    while i < p.support.len() || j < q.support.len() {
        let ord = match (p.support.get(i), q.support.get(j)) {
            (Some(a), Some(b)) => a.cmp(b),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        match ord {
            std::cmp::Ordering::Less => {
                sum += p.probabilities[i];
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                sum += q.probabilities[j];
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                sum += (p.probabilities[i] - q.probabilities[j]).abs();
                i += 1;
                j += 1;
            }
        }
    }
    (0.5 * sum).clamp(0.0, 1.0)
}
