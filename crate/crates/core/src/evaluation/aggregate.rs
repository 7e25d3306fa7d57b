use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ranking::ModelRanking;
use super::scores::{F1Variant, ScoreTriple};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::splitter::{Ratio, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Eval,
    New,
}

/// Seed-averaged scores of one model in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScores {
    pub model: String,
    pub eval_boundary: ScoreTriple,
    pub new_boundary: ScoreTriple,
    pub eval_morpheme: ScoreTriple,
    pub new_morpheme: ScoreTriple,
}

impl ModelScores {
    pub fn score(&self, side: Side, variant: F1Variant) -> &ScoreTriple {
        match (side, variant) {
            (Side::Eval, F1Variant::Boundary) => &self.eval_boundary,
            (Side::New, F1Variant::Boundary) => &self.new_boundary,
            (Side::Eval, F1Variant::Morpheme) => &self.eval_morpheme,
            (Side::New, F1Variant::Morpheme) => &self.new_morpheme,
        }
    }

    pub fn f1(&self, side: Side, variant: F1Variant) -> f64 {
        self.score(side, variant).f1
    }
}

/// Everything measured on one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell_id: String,
    pub language_tag: String,
    pub fraction: Ratio,
    pub new_test_strategy: Strategy,
    pub residual_strategy: Strategy,
    pub train_size: usize,
    pub eval_size: usize,
    pub new_test_size: usize,
    pub morpheme_overlap: f64,
    pub word_count_ratio: f64,
    pub morph_per_word_ratio: f64,
    pub morph_type_per_word_ratio: f64,
    /// Number of seeds averaged into each model's scores.
    pub seed_group: usize,
    /// Sorted by model name.
    pub scores: Vec<ModelScores>,
    pub ranking_variant: F1Variant,
    /// Absent when fewer than two models were run.
    pub ranking_eval: Option<ModelRanking>,
    pub ranking_new: Option<ModelRanking>,
}

impl CellResult {
    pub fn stratum(&self) -> Stratum {
        Stratum {
            fraction: self.fraction,
            new_test_strategy: self.new_test_strategy,
            residual_strategy: self.residual_strategy,
        }
    }

    pub fn model(&self, name: &str) -> Option<&ModelScores> {
        self.scores.iter().find(|s| s.model == name)
    }

    pub fn rankings_agree(&self) -> Option<bool> {
        match (&self.ranking_eval, &self.ranking_new) {
            (Some(e), Some(n)) => Some(e.same_order(n)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Stratum {
    pub fraction: Ratio,
    pub new_test_strategy: Strategy,
    pub residual_strategy: Strategy,
}

/// Share of eval morpheme types that also occur in training.
pub fn morpheme_overlap(corpus: &Corpus, train: &[usize], eval: &[usize]) -> Result<f64> {
    let types = |idx: &[usize]| -> Result<BTreeSet<&str>> {
        let mut set = BTreeSet::new();
        for &i in idx {
            let w = corpus
                .get(i)
                .ok_or_else(|| Error::Contract(format!("index {i} out of range")))?;
            set.extend(w.morphemes().iter().map(String::as_str));
        }
        Ok(set)
    };
    if eval.is_empty() {
        return Err(Error::Domain("morpheme overlap of an empty eval set".into()));
    }
    let eval_types = types(eval)?;
    let train_types = types(train)?;
    let shared = eval_types.intersection(&train_types).count();
    Ok(shared as f64 / eval_types.len() as f64)
}

/// Share of ranked cells whose eval and new-test rankings agree.
pub fn ranking_consistency(results: &[CellResult]) -> Result<f64> {
    let flags: Vec<bool> = results.iter().filter_map(CellResult::rankings_agree).collect();
    if flags.is_empty() {
        return Err(Error::Domain("no ranked cells".into()));
    }
    Ok(flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    /// Mean of eval F1 minus new-test F1.
    pub signed: f64,
    pub absolute: f64,
}

fn per_model(results: &[CellResult]) -> BTreeMap<&str, Vec<&ModelScores>> {
    let mut map: BTreeMap<&str, Vec<&ModelScores>> = BTreeMap::new();
    for r in results {
        for s in &r.scores {
            map.entry(s.model.as_str()).or_default().push(s);
        }
    }
    map
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

fn population_sd(xs: &[f64]) -> f64 {
    let m = mean(xs.iter().copied());
    mean(xs.iter().map(|x| (x - m) * (x - m))).sqrt()
}

/// Per-model mean generalization gap across cells.
pub fn generalization_gap(results: &[CellResult], variant: F1Variant) -> Result<BTreeMap<String, GapSummary>> {
    if results.is_empty() {
        return Err(Error::Domain("no cells".into()));
    }
    Ok(per_model(results)
        .into_iter()
        .map(|(model, scores)| {
            let gaps: Vec<f64> = scores
                .iter()
                .map(|s| s.f1(Side::Eval, variant) - s.f1(Side::New, variant))
                .collect();
            let summary = GapSummary {
                signed: mean(gaps.iter().copied()),
                absolute: mean(gaps.iter().map(|g| g.abs())),
            };
            (model.to_string(), summary)
        })
        .collect())
}

/// Population standard deviation of new-test F1 per model over one stratum.
pub fn score_variability(
    results: &[CellResult],
    stratum: &Stratum,
    variant: F1Variant,
) -> Result<BTreeMap<String, f64>> {
    let cells: Vec<CellResult> = results.iter().filter(|r| r.stratum() == *stratum).cloned().collect();
    if cells.len() < 2 {
        return Err(Error::Domain(format!(
            "stratum has {} cells, variability needs at least 2",
            cells.len()
        )));
    }
    Ok(per_model(&cells)
        .into_iter()
        .map(|(model, scores)| {
            let xs: Vec<f64> = scores.iter().map(|s| s.f1(Side::New, variant)).collect();
            (model.to_string(), population_sd(&xs))
        })
        .collect())
}

/// One model within one stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub stratum: Stratum,
    pub model: String,
    pub cells: usize,
    pub mean_eval_f1: f64,
    pub mean_new_f1: f64,
    pub mean_signed_gap: f64,
    pub mean_abs_gap: f64,
    /// Shared by all models of the stratum; absent without rankings.
    pub consistency: Option<f64>,
    /// Absent for single-cell strata.
    pub sigma: Option<f64>,
}

/// Stratum-by-model summary, ordered by stratum then model.
pub fn aggregate(results: &[CellResult], variant: F1Variant) -> Result<Vec<AggregateRow>> {
    if results.is_empty() {
        return Err(Error::Domain("no cells".into()));
    }
    let mut strata: BTreeMap<Stratum, Vec<CellResult>> = BTreeMap::new();
    for r in results {
        strata.entry(r.stratum()).or_default().push(r.clone());
    }
    let mut rows = Vec::new();
    for (stratum, cells) in strata {
        let consistency = ranking_consistency(&cells).ok();
        let gaps = generalization_gap(&cells, variant)?;
        let sigmas = score_variability(&cells, &stratum, variant).ok();
        for (model, scores) in per_model(&cells) {
            let gap = gaps[model];
            rows.push(AggregateRow {
                stratum,
                model: model.to_string(),
                cells: scores.len(),
                mean_eval_f1: mean(scores.iter().map(|s| s.f1(Side::Eval, variant))),
                mean_new_f1: mean(scores.iter().map(|s| s.f1(Side::New, variant))),
                mean_signed_gap: gap.signed,
                mean_abs_gap: gap.absolute,
                consistency,
                sigma: sigmas.as_ref().map(|m| m[model]),
            });
        }
    }
    Ok(rows)
}
