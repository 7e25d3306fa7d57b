use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::SegmentedWord;
use crate::error::{Error, Result};

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreTriple {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }
}

/// Set-overlap counts. When both the gold and the predicted sets are empty
/// precision and recall are both 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    fn of<T: Ord>(gold: &BTreeSet<T>, pred: &BTreeSet<T>) -> Self {
        let tp = gold.intersection(pred).count();
        Self {
            tp,
            fp: pred.len() - tp,
            fn_: gold.len() - tp,
        }
    }

    pub fn score(&self) -> ScoreTriple {
        let predicted = self.tp + self.fp;
        let gold = self.tp + self.fn_;
        let ratio = |num: usize, den: usize, other: usize| match (den, other) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            _ => num as f64 / den as f64,
        };
        ScoreTriple::new(ratio(self.tp, predicted, gold), ratio(self.tp, gold, predicted))
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

fn same_surface(gold: &SegmentedWord, pred: &SegmentedWord) -> Result<()> {
    if gold.surface() != pred.surface() {
        return Err(Error::Contract(format!(
            "gold `{}` and prediction `{}` differ in surface",
            gold.surface(),
            pred.surface()
        )));
    }
    Ok(())
}

pub(crate) fn boundary_counts(gold: &SegmentedWord, pred: &SegmentedWord) -> Result<Counts> {
    same_surface(gold, pred)?;
    let g: BTreeSet<usize> = gold.boundaries().into_iter().collect();
    let p: BTreeSet<usize> = pred.boundaries().into_iter().collect();
    Ok(Counts::of(&g, &p))
}

pub(crate) fn morpheme_counts(gold: &SegmentedWord, pred: &SegmentedWord) -> Result<Counts> {
    same_surface(gold, pred)?;
    // a span already determines its string once the surfaces agree
    let g: BTreeSet<(usize, usize)> = gold.spans().into_iter().collect();
    let p: BTreeSet<(usize, usize)> = pred.spans().into_iter().collect();
    Ok(Counts::of(&g, &p))
}

/// Scores internal split positions.
pub fn boundary_f1(gold: &SegmentedWord, pred: &SegmentedWord) -> Result<ScoreTriple> {
    Ok(boundary_counts(gold, pred)?.score())
}

/// Scores morpheme spans.
pub fn morpheme_f1(gold: &SegmentedWord, pred: &SegmentedWord) -> Result<ScoreTriple> {
    Ok(morpheme_counts(gold, pred)?.score())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Variant {
    Boundary,
    Morpheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Sum counts over words, then score.
    Micro,
    /// Score each word, then average.
    Macro,
}

impl fmt::Display for F1Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            F1Variant::Boundary => "boundary",
            F1Variant::Morpheme => "morpheme",
        })
    }
}

impl FromStr for F1Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "boundary" => Ok(F1Variant::Boundary),
            "morpheme" => Ok(F1Variant::Morpheme),
            other => Err(Error::Config(format!("unknown F1 variant `{other}`"))),
        }
    }
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Averaging::Micro => "micro",
            Averaging::Macro => "macro",
        })
    }
}

impl FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "micro" => Ok(Averaging::Micro),
            "macro" => Ok(Averaging::Macro),
            other => Err(Error::Config(format!("unknown averaging `{other}`"))),
        }
    }
}

/// Corpus-level score of aligned gold and predicted segmentations.
pub fn corpus_score(
    gold: &[SegmentedWord],
    pred: &[SegmentedWord],
    variant: F1Variant,
    averaging: Averaging,
) -> Result<ScoreTriple> {
    if gold.len() != pred.len() {
        return Err(Error::Contract(format!(
            "{} gold words but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Domain("scoring an empty word list".into()));
    }
    let counts = gold.iter().zip(pred).map(|(g, p)| match variant {
        F1Variant::Boundary => boundary_counts(g, p),
        F1Variant::Morpheme => morpheme_counts(g, p),
    });
    match averaging {
        Averaging::Micro => {
            let mut total = Counts::default();
            for c in counts {
                total += c?;
            }
            Ok(total.score())
        }
        Averaging::Macro => {
            let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
            for c in counts {
                let s = c?.score();
                p += s.precision;
                r += s.recall;
                f += s.f1;
            }
            let n = gold.len() as f64;
            Ok(ScoreTriple {
                precision: p / n,
                recall: r / n,
                f1: f / n,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(parts: &[&str]) -> SegmentedWord {
        SegmentedWord::from_parts(parts).unwrap()
    }

    #[test]
    fn boundary_examples() {
        let s = boundary_f1(&w(&["avocado", "s"]), &w(&["avocado", "s"])).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));

        // boundaries {3, 5} vs {3}
        let s = boundary_f1(&w(&["abc", "de", "f"]), &w(&["abc", "def"])).unwrap();
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 0.5);
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-15);

        let s = boundary_f1(&w(&["abc"]), &w(&["abc"])).unwrap();
        assert_eq!(s.f1, 1.0);
        let s = boundary_f1(&w(&["abc"]), &w(&["a", "bc"])).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        let s = boundary_f1(&w(&["a", "bc"]), &w(&["abc"])).unwrap();
        assert_eq!((s.precision, s.recall), (0.0, 0.0));
    }

    #[test]
    fn morpheme_examples() {
        assert_eq!(morpheme_f1(&w(&["ab", "c"]), &w(&["ab", "c"])).unwrap().f1, 1.0);
        let s = morpheme_f1(&w(&["ab", "c"]), &w(&["a", "bc"])).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        let s = morpheme_f1(&w(&["a", "b", "c"]), &w(&["a", "bc"])).unwrap();
        assert_eq!(s.precision, 0.5);
        assert!((s.recall - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn surface_mismatch() {
        assert!(matches!(boundary_f1(&w(&["ab"]), &w(&["ac"])), Err(Error::Contract(_))));
        assert!(matches!(morpheme_f1(&w(&["ab"]), &w(&["a"])), Err(Error::Contract(_))));
    }

    #[test]
    fn micro_and_macro() {
        let gold = [w(&["ab", "c"]), w(&["d"])];
        let pred = [w(&["a", "bc"]), w(&["d"])];
        let micro = corpus_score(&gold, &pred, F1Variant::Boundary, Averaging::Micro).unwrap();
        // one fp, one fn, no tp
        assert_eq!(micro.f1, 0.0);
        let macro_ = corpus_score(&gold, &pred, F1Variant::Boundary, Averaging::Macro).unwrap();
        assert_eq!(macro_.f1, 0.5);
    }
}
