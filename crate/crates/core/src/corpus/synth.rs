use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, SegmentedWord};
use crate::error::{Error, Result};

const CONSONANTS: &[&str] = &["p", "t", "k", "m", "n", "s", "l", "r", "d", "g", "b", "h"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

/// Above this many candidate words the generator samples instead of enumerating.
const ENUMERATION_LIMIT: u128 = 500_000;

/// Recipe for an agglutinative toy language: each word is a stem followed by
/// `min_suffixes..=max_suffixes` distinct suffixes in inventory (slot) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub language_tag: String,
    pub stems: Vec<String>,
    pub suffixes: Vec<String>,
    pub words: usize,
    pub min_suffixes: usize,
    pub max_suffixes: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(stems: &[&str], suffixes: &[&str], words: usize, seed: u64) -> Self {
        Self {
            language_tag: "synthetic".into(),
            stems: stems.iter().map(|s| s.to_string()).collect(),
            suffixes: suffixes.iter().map(|s| s.to_string()).collect(),
            words,
            min_suffixes: 1,
            max_suffixes: 3,
            seed,
        }
    }

    /// Draws `stem_count` stems and `suffix_count` suffixes from a shared
    /// CV alphabet. Inventories are deterministic in `seed`.
    pub fn generated(stem_count: usize, suffix_count: usize, words: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_1a9e);
        let stems = draw_unique(&mut rng, stem_count, &["CVCV", "CVCCV", "CVC", "CVCVC", "VCV"]);
        let taken: HashSet<String> = stems.iter().cloned().collect();
        let mut suffixes = Vec::new();
        let mut seen = taken;
        while suffixes.len() < suffix_count {
            let pattern = ["CV", "VC", "CVC", "V", "CVCV"][rng.gen_range(0..5)];
            let s = fill_pattern(&mut rng, pattern);
            if seen.insert(s.clone()) {
                suffixes.push(s);
            }
        }
        Self {
            language_tag: "synthetic".into(),
            stems,
            suffixes,
            words,
            min_suffixes: 1,
            max_suffixes: 3,
            seed,
        }
    }

    /// Number of (stem, suffix sequence) combinations this recipe can produce.
    pub fn combinations(&self) -> u128 {
        let n = self.suffixes.len() as u128;
        let per_stem: u128 = (self.min_suffixes..=self.max_suffixes.min(self.suffixes.len()))
            .map(|k| binomial(n, k as u128))
            .sum();
        per_stem * self.stems.len() as u128
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn fill_pattern(rng: &mut ChaCha8Rng, pattern: &str) -> String {
    pattern
        .chars()
        .map(|c| match c {
            'C' => *CONSONANTS.choose(rng).unwrap(),
            _ => *VOWELS.choose(rng).unwrap(),
        })
        .collect()
}

fn draw_unique(rng: &mut ChaCha8Rng, count: usize, patterns: &[&str]) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let pattern = patterns[rng.gen_range(0..patterns.len())];
        let s = fill_pattern(rng, pattern);
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

/// Strictly increasing index sequences of length `k` over `0..n`.
fn ordered_subsets(n: usize, k: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), out);
}

fn build_word(spec: &SynthSpec, stem: usize, suffixes: &[usize]) -> Result<SegmentedWord> {
    let mut parts = vec![spec.stems[stem].clone()];
    parts.extend(suffixes.iter().map(|&i| spec.suffixes[i].clone()));
    SegmentedWord::new(parts.concat(), parts)
}

/// Generates a deduplicated synthetic corpus of exactly `spec.words` types.
pub fn generate_synthetic_corpus(spec: &SynthSpec) -> Result<Corpus> {
    if spec.stems.is_empty() || spec.suffixes.is_empty() && spec.min_suffixes > 0 {
        return Err(Error::Domain("stem and suffix inventories must be non-empty".into()));
    }
    if spec.min_suffixes > spec.max_suffixes {
        return Err(Error::Domain("min_suffixes exceeds max_suffixes".into()));
    }
    let available = spec.combinations();
    if (spec.words as u128) > available {
        return Err(Error::Capacity(format!(
            "{} words requested but only {available} combinations exist",
            spec.words
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut seen = HashSet::new();
    let mut words = Vec::with_capacity(spec.words);

    if available <= ENUMERATION_LIMIT {
        let mut seqs = Vec::new();
        for k in spec.min_suffixes..=spec.max_suffixes.min(spec.suffixes.len()) {
            ordered_subsets(spec.suffixes.len(), k, &mut seqs);
        }
        let mut combos: Vec<(usize, usize)> = (0..spec.stems.len())
            .flat_map(|s| (0..seqs.len()).map(move |q| (s, q)))
            .collect();
        combos.shuffle(&mut rng);
        for (stem, q) in combos {
            if words.len() == spec.words {
                break;
            }
            let w = build_word(spec, stem, &seqs[q])?;
            if seen.insert(w.surface().to_string()) {
                words.push(w);
            }
        }
    } else {
        let max_k = spec.max_suffixes.min(spec.suffixes.len());
        let mut attempts = 0usize;
        while words.len() < spec.words && attempts < spec.words.saturating_mul(50) {
            attempts += 1;
            let stem = rng.gen_range(0..spec.stems.len());
            let k = rng.gen_range(spec.min_suffixes..=max_k);
            let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, spec.suffixes.len(), k).into_vec();
            idx.sort_unstable();
            let w = build_word(spec, stem, &idx)?;
            if seen.insert(w.surface().to_string()) {
                words.push(w);
            }
        }
    }

    if words.len() < spec.words {
        return Err(Error::Capacity(format!(
            "only {} distinct surfaces could be formed, {} requested",
            words.len(),
            spec.words
        )));
    }
    Ok(Corpus::from_words(spec.language_tag.clone(), words))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_stem_single_affix() {
        let spec = SynthSpec::new(&["walk"], &["ed"], 1, 7);
        let c = generate_synthetic_corpus(&spec).unwrap();
        assert_eq!(c.words(), [SegmentedWord::from_parts(&["walk", "ed"]).unwrap()]);
    }

    #[test]
    fn deterministic_for_seed() {
        let spec = SynthSpec::generated(20, 5, 100, 3);
        let a = generate_synthetic_corpus(&spec).unwrap();
        let b = generate_synthetic_corpus(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        let other = generate_synthetic_corpus(&SynthSpec { seed: 4, ..spec }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn round_trips_through_the_file_format() {
        let c = generate_synthetic_corpus(&SynthSpec::generated(20, 5, 100, 3)).unwrap();
        let parsed = Corpus::parse_str(&c.to_text(), c.language_tag()).unwrap();
        assert_eq!(parsed.dropped_duplicates, 0);
        assert_eq!(parsed.corpus, c);
    }

    #[test]
    fn capacity_error() {
        let spec = SynthSpec::new(&["walk"], &["ed"], 2, 7);
        assert!(matches!(generate_synthetic_corpus(&spec), Err(Error::Capacity(_))));
    }

    #[test]
    fn sampling_path_for_large_inventories() {
        let mut spec = SynthSpec::generated(200, 40, 300, 11);
        spec.max_suffixes = 4;
        assert!(spec.combinations() > ENUMERATION_LIMIT);
        let c = generate_synthetic_corpus(&spec).unwrap();
        assert_eq!(c.len(), 300);
    }
}
