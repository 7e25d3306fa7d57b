//! Random, adversarial and heuristic partitioning, plus the experiment grid.
//!
//! Splits operate on a *parent* index set into a corpus and produce two
//! sides, `a` and `b`, where `b` receives `round(share_b * N)` words. In the
//! grid, side `b` is the new test sample at the carving stage and the eval
//! set at the residual stage.

mod distribution;
mod grid;
mod ratio;
mod seed;
mod strategies;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use distribution::{distribution_distance, morpheme_distribution, MorphemeDistribution};
pub use grid::{build_grid, build_grids, ExperimentPlan, GridCell};
pub use ratio::Ratio;
pub use seed::derive_seed;
pub use strategies::{
    adversarial_split, heuristic_split, random_split, HeuristicOutcome, DEFAULT_HEURISTIC_TOLERANCE,
    DEFAULT_SWAP_BUDGET,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Random,
    Adversarial,
    Heuristic,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Adversarial => "adversarial",
            Strategy::Heuristic => "heuristic",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Strategy {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim() {
            "random" => Ok(Strategy::Random),
            "adversarial" => Ok(Strategy::Adversarial),
            "heuristic" => Ok(Strategy::Heuristic),
            other => Err(crate::Error::Config(format!("unknown split strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    NewTestCarving,
    ResidualSplit,
}

/// Reproducible record of a two-way split of a parent index set.
///
/// Index lists are sorted ascending so the JSON form is canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub strategy: Strategy,
    pub stage: Stage,
    pub seed: u64,
    pub indices_a: Vec<usize>,
    pub indices_b: Vec<usize>,
    pub target_ratio: Ratio,
    /// Total-variation distance between the morpheme distributions of the two sides.
    pub achieved_distance: f64,
    pub budget_used: u64,
    /// Morpheme-count threshold, for heuristic splits only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<usize>,
}

impl SplitManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Sorted union of both sides.
    pub fn parent(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.indices_a.iter().chain(&self.indices_b).copied().collect();
        all.sort_unstable();
        all
    }
}
