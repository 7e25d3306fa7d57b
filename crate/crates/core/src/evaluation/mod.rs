//! Scoring, model rankings and cross-split aggregates.

mod aggregate;
mod ranking;
mod scores;

pub use aggregate::{
    aggregate, generalization_gap, morpheme_overlap, ranking_consistency, score_variability, AggregateRow, CellResult,
    GapSummary, ModelScores, Side, Stratum,
};
pub use ranking::{rank_models, ModelRanking, DEFAULT_COLLAPSE_EPSILON};
pub use scores::{boundary_f1, corpus_score, morpheme_f1, Averaging, Counts, F1Variant, ScoreTriple};
