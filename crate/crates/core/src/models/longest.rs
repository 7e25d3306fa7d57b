use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{graphemes, Corpus, SegmentedWord};
use crate::error::{Error, Result};

/// Greedy left-to-right longest match against the training morpheme lexicon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongestMatchModel {
    lexicon: BTreeSet<String>,
    max_len: usize,
}

impl LongestMatchModel {
    pub fn from_lexicon(lexicon: impl IntoIterator<Item = String>) -> Self {
        let lexicon: BTreeSet<String> = lexicon.into_iter().collect();
        let max_len = lexicon.iter().map(|m| graphemes(m).len()).max().unwrap_or(0);
        Self { lexicon, max_len }
    }

    /// Unknown material is emitted one grapheme at a time.
    pub fn segment(&self, surface: &str) -> SegmentedWord {
        let g = graphemes(surface);
        let mut morphemes = Vec::new();
        let mut i = 0;
        while i < g.len() {
            let longest = (1..=self.max_len.min(g.len() - i))
                .rev()
                .find(|&len| self.lexicon.contains(&g[i..i + len].concat()))
                .unwrap_or(1);
            morphemes.push(g[i..i + longest].concat());
            i += longest;
        }
        SegmentedWord::new(surface, morphemes).expect("pieces cover the surface")
    }
}

pub fn train_longest_match(corpus: &Corpus) -> Result<LongestMatchModel> {
    if corpus.is_empty() {
        return Err(Error::Domain("cannot train on an empty corpus".into()));
    }
    Ok(LongestMatchModel::from_lexicon(
        corpus.words().iter().flat_map(|w| w.morphemes().iter().cloned()),
    ))
}
