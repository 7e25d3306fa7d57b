//! Segmented word types, corpus I/O and descriptive statistics.
//!
//! Every position-based quantity in this crate (label positions, boundary
//! offsets, morpheme lengths) counts extended grapheme clusters, not bytes or
//! code points. No case folding is performed anywhere.

mod labels;
mod synth;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};

pub use labels::{decode_labels, encode_labels, Label, LabelSequence};
pub use synth::{generate_synthetic_corpus, SynthSpec};

/// Splits a string into extended grapheme clusters.
pub fn graphemes(s: &str) -> Vec<&str> {
    s.graphemes(true).collect()
}

/// A surface word together with its ordered surface-level morphemes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentedWord {
    surface: String,
    morphemes: Vec<String>,
}

impl SegmentedWord {
    /// Validates that the morphemes are non-empty and concatenate to `surface`.
    pub fn new(surface: impl Into<String>, morphemes: Vec<String>) -> Result<Self> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(Error::Validation {
                word: surface,
                message: "empty surface".into(),
            });
        }
        if morphemes.is_empty() || morphemes.iter().any(|m| m.is_empty()) {
            return Err(Error::Validation {
                word: surface,
                message: "empty morpheme".into(),
            });
        }
        let joined: String = morphemes.concat();
        if joined != surface {
            return Err(Error::Validation {
                message: format!("morphemes concatenate to `{joined}`"),
                word: surface,
            });
        }
        Ok(Self { surface, morphemes })
    }

    /// Convenience constructor from string slices.
    pub fn from_parts(parts: &[&str]) -> Result<Self> {
        let morphemes: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
        Self::new(morphemes.concat(), morphemes)
    }

    /// A word that is its own single morpheme.
    pub fn unsegmented(surface: impl Into<String>) -> Result<Self> {
        let surface = surface.into();
        Self::new(surface.clone(), vec![surface])
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn morphemes(&self) -> &[String] {
        &self.morphemes
    }

    pub fn graphemes(&self) -> Vec<&str> {
        graphemes(&self.surface)
    }

    /// Number of grapheme clusters in the surface.
    pub fn len(&self) -> usize {
        self.surface.graphemes(true).count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Internal split positions, as grapheme offsets in `1..len`.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.morphemes.len().saturating_sub(1));
        let mut offset = 0;
        for m in &self.morphemes[..self.morphemes.len() - 1] {
            offset += m.graphemes(true).count();
            out.push(offset);
        }
        out
    }

    /// Morphemes as half-open grapheme spans `(start, end)`.
    pub fn spans(&self) -> Vec<(usize, usize)> {
        let mut start = 0;
        self.morphemes
            .iter()
            .map(|m| {
                let end = start + m.graphemes(true).count();
                let span = (start, end);
                start = end;
                span
            })
            .collect()
    }

    /// Rebuilds a word from a surface and a set of internal boundary offsets.
    pub fn from_boundaries(surface: &str, boundaries: &[usize]) -> Result<Self> {
        let g = graphemes(surface);
        let mut morphemes = Vec::with_capacity(boundaries.len() + 1);
        let mut start = 0;
        for &b in boundaries.iter().chain(std::iter::once(&g.len())) {
            if b <= start || b > g.len() {
                return Err(Error::Contract(format!(
                    "boundary {b} out of order or range for `{surface}`"
                )));
            }
            morphemes.push(g[start..b].concat());
            start = b;
        }
        Self::new(surface, morphemes)
    }
}

impl fmt::Display for SegmentedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.morphemes.join("+"))
    }
}

/// A deduplicated collection of word types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    language_tag: String,
    words: Vec<SegmentedWord>,
}

impl Corpus {
    /// Builds a corpus, keeping the first occurrence of every surface.
    /// Returns the corpus and the number of dropped duplicates.
    pub fn dedup(language_tag: impl Into<String>, words: impl IntoIterator<Item = SegmentedWord>) -> (Self, usize) {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        let mut dropped = 0;
        for w in words {
            if seen.insert(w.surface.clone()) {
                kept.push(w);
            } else {
                dropped += 1;
            }
        }
        (
            Self {
                language_tag: language_tag.into(),
                words: kept,
            },
            dropped,
        )
    }

    pub fn from_words(language_tag: impl Into<String>, words: impl IntoIterator<Item = SegmentedWord>) -> Self {
        Self::dedup(language_tag, words).0
    }

    pub fn language_tag(&self) -> &str {
        &self.language_tag
    }

    pub fn words(&self) -> &[SegmentedWord] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&SegmentedWord> {
        self.words.get(index)
    }

    /// Copies the words at `indices` (in the given order) into a new corpus.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            language_tag: self.language_tag.clone(),
            words: indices.iter().map(|&i| self.words[i].clone()).collect(),
        }
    }

    /// Parses the tab-separated corpus format from a reader.
    pub fn read(reader: impl BufRead, language_tag: impl Into<String>) -> Result<ParsedCorpus> {
        let mut words = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if let Some(word) = parse_line(&line, lineno + 1)? {
                words.push(word);
            }
        }
        let (corpus, dropped) = Corpus::dedup(language_tag, words);
        Ok(ParsedCorpus {
            corpus,
            dropped_duplicates: dropped,
        })
    }

    pub fn parse_str(text: &str, language_tag: impl Into<String>) -> Result<ParsedCorpus> {
        Self::read(text.as_bytes(), language_tag)
    }

    /// Writes the corpus in the format accepted by [`Corpus::read`].
    pub fn write(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "# language: {}", self.language_tag)?;
        for w in &self.words {
            writeln!(out, "{}\t{}", w.surface, w.morphemes.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("corpus text is UTF-8")
    }
}

/// Outcome of parsing a corpus file.
#[derive(Debug, Clone)]
pub struct ParsedCorpus {
    pub corpus: Corpus,
    pub dropped_duplicates: usize,
}

fn parse_line(raw: &str, lineno: usize) -> Result<Option<SegmentedWord>> {
    let line = raw.trim_end();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let (surface, rest) = line.split_once('\t').ok_or_else(|| Error::Parse {
        line: lineno,
        message: "missing tab between surface and morphemes".into(),
    })?;
    if surface.is_empty() {
        return Err(Error::Parse {
            line: lineno,
            message: "empty surface".into(),
        });
    }
    let morphemes: Vec<String> = rest.split(' ').map(str::to_string).collect();
    if morphemes.iter().any(|m| m.is_empty()) {
        return Err(Error::Parse {
            line: lineno,
            message: "empty morpheme".into(),
        });
    }
    SegmentedWord::new(surface, morphemes).map(Some)
}

/// Tag from a leading `# language: <tag>` comment, if any.
pub fn language_header(text: &str) -> Option<&str> {
    text.lines()
        .map(str::trim)
        .take_while(|l| l.is_empty() || l.starts_with('#'))
        .find_map(|l| l.strip_prefix('#')?.trim().strip_prefix("language:"))
        .map(str::trim)
        .filter(|t| !t.is_empty())
}

/// Reads and validates a corpus file.
pub fn parse_corpus(path: impl AsRef<Path>, language_tag: &str) -> Result<ParsedCorpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    Corpus::read(std::io::BufReader::new(file), language_tag)
}

/// Descriptive statistics over word types, each type weighted equally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub word_type_count: usize,
    pub avg_morphemes_per_word: f64,
    /// Mean over words of the word's mean morpheme length in grapheme clusters.
    pub avg_morpheme_length: f64,
    pub avg_morpheme_types_per_word: f64,
}

pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats> {
    stats_of(corpus.words.iter())
}

pub(crate) fn stats_of<'a>(words: impl Iterator<Item = &'a SegmentedWord>) -> Result<CorpusStats> {
    let mut n = 0usize;
    let (mut morphs, mut lens, mut types) = (0.0, 0.0, 0.0);
    for w in words {
        n += 1;
        let k = w.morphemes.len() as f64;
        morphs += k;
        let chars: usize = w.morphemes.iter().map(|m| m.graphemes(true).count()).sum();
        lens += chars as f64 / k;
        types += w.morphemes.iter().collect::<HashSet<_>>().len() as f64;
    }
    if n == 0 {
        return Err(Error::Domain("statistics of an empty corpus".into()));
    }
    let n_f = n as f64;
    Ok(CorpusStats {
        word_type_count: n,
        avg_morphemes_per_word: morphs / n_f,
        avg_morpheme_length: lens / n_f,
        avg_morpheme_types_per_word: types / n_f,
    })
}

/// Morpheme token counts over a selection of words.
pub(crate) fn morpheme_counts<'a>(words: impl Iterator<Item = &'a SegmentedWord>) -> HashMap<&'a str, usize> {
    let mut counts = HashMap::new();
    for w in words {
        for m in &w.morphemes {
            *counts.entry(m.as_str()).or_insert(0) += 1;
        }
    }
    counts
}
