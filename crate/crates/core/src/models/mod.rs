//! Segmentation models behind a common train/segment interface.

mod crf;
mod external;
mod features;
mod logistic;
mod longest;
pub mod optim;
mod unigram;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, SegmentedWord};
use crate::error::{Error, Result};

pub use crf::{train_crf, train_crf_with_history, CrfModel};
pub use external::{external_segment, parse_wire, wire_chars, wire_segmented, ExternalModel};
pub use features::{extract_features, FeatureTemplate};
pub use logistic::{train_boundary_logistic, LogisticModel};
pub use longest::{train_longest_match, LongestMatchModel};
pub use optim::Optimizer;
pub use unigram::{train_unigram_viterbi, UnigramModel};

/// Which segmenter to train.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SegmenterId {
    Crf,
    UnigramViterbi,
    BoundaryLogistic,
    LongestMatch,
    /// Shell command implementing the external wire protocol.
    External(String),
}

impl SegmenterId {
    pub const BUILT_IN: [SegmenterId; 4] = [
        SegmenterId::Crf,
        SegmenterId::UnigramViterbi,
        SegmenterId::BoundaryLogistic,
        SegmenterId::LongestMatch,
    ];

    /// Whether repeated training with different seeds can change the model.
    /// All built-in trainers are deterministic.
    pub fn is_seed_dependent(&self) -> bool {
        matches!(self, SegmenterId::External(_))
    }
}

impl fmt::Display for SegmenterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmenterId::Crf => f.write_str("crf"),
            SegmenterId::UnigramViterbi => f.write_str("unigram_viterbi"),
            SegmenterId::BoundaryLogistic => f.write_str("boundary_logistic"),
            SegmenterId::LongestMatch => f.write_str("longest_match"),
            SegmenterId::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

impl FromStr for SegmenterId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "crf" => SegmenterId::Crf,
            "unigram_viterbi" => SegmenterId::UnigramViterbi,
            "boundary_logistic" => SegmenterId::BoundaryLogistic,
            "longest_match" => SegmenterId::LongestMatch,
            _ => match s.strip_prefix("external:") {
                Some(cmd) if !cmd.trim().is_empty() => SegmenterId::External(cmd.trim().to_string()),
                _ => return Err(Error::Config(format!("unknown model `{s}`"))),
            },
        })
    }
}

impl From<SegmenterId> for String {
    fn from(id: SegmenterId) -> String {
        id.to_string()
    }
}

impl TryFrom<String> for SegmenterId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Optimization settings shared by the CRF and logistic trainers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub max_iterations: usize,
    /// Stop when the relative change of the objective drops below this.
    pub convergence_tol: f64,
    pub l2_lambda: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Lbfgs,
            max_iterations: 200,
            convergence_tol: 1e-6,
            l2_lambda: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::Config("l2_lambda must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Everything needed to train any segmenter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub template: FeatureTemplate,
    pub train: TrainConfig,
    /// Additive smoothing for the unigram model.
    pub smoothing: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            template: FeatureTemplate::default(),
            train: TrainConfig::default(),
            smoothing: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Crf(CrfModel),
    UnigramViterbi(UnigramModel),
    BoundaryLogistic(LogisticModel),
    LongestMatch(LongestMatchModel),
    External(ExternalModel),
}

impl TrainedModel {
    pub fn id(&self) -> SegmenterId {
        match self {
            TrainedModel::Crf(_) => SegmenterId::Crf,
            TrainedModel::UnigramViterbi(_) => SegmenterId::UnigramViterbi,
            TrainedModel::BoundaryLogistic(_) => SegmenterId::BoundaryLogistic,
            TrainedModel::LongestMatch(_) => SegmenterId::LongestMatch,
            TrainedModel::External(m) => SegmenterId::External(m.command.clone()),
        }
    }

    /// Segments one word with a built-in model; `None` for external models,
    /// which segment in batches.
    pub fn segment(&self, surface: &str) -> Option<SegmentedWord> {
        Some(match self {
            TrainedModel::Crf(m) => m.segment(surface),
            TrainedModel::UnigramViterbi(m) => m.segment(surface),
            TrainedModel::BoundaryLogistic(m) => m.segment(surface),
            TrainedModel::LongestMatch(m) => m.segment(surface),
            TrainedModel::External(_) => return None,
        })
    }

    pub fn segment_all(&self, surfaces: &[&str]) -> Result<Vec<SegmentedWord>> {
        if surfaces.iter().any(|s| s.is_empty()) {
            return Err(Error::Contract("cannot segment an empty surface".into()));
        }
        match self {
            TrainedModel::External(m) => m.segment_all(surfaces),
            _ => Ok(surfaces
                .iter()
                .map(|s| self.segment(s).expect("built-in model"))
                .collect()),
        }
    }
}

/// Trains `id` on `corpus`. `seed` only reaches seed-dependent models.
pub fn train_model(id: &SegmenterId, corpus: &Corpus, settings: &ModelSettings, seed: u64) -> Result<TrainedModel> {
    let config = TrainConfig { seed, ..settings.train };
    Ok(match id {
        SegmenterId::Crf => TrainedModel::Crf(train_crf(corpus, &settings.template, &config)?),
        SegmenterId::UnigramViterbi => TrainedModel::UnigramViterbi(train_unigram_viterbi(corpus, settings.smoothing)?),
        SegmenterId::BoundaryLogistic => {
            TrainedModel::BoundaryLogistic(train_boundary_logistic(corpus, &settings.template, &config)?)
        }
        SegmenterId::LongestMatch => TrainedModel::LongestMatch(train_longest_match(corpus)?),
        SegmenterId::External(command) => {
            if corpus.is_empty() {
                return Err(Error::Domain("cannot train on an empty corpus".into()));
            }
            TrainedModel::External(ExternalModel {
                command: command.clone(),
                train: corpus.words().to_vec(),
                seed,
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip_through_strings() {
        for id in SegmenterId::BUILT_IN {
            assert_eq!(id.to_string().parse::<SegmenterId>().unwrap(), id);
        }
        let ext: SegmenterId = "external:python3 seg.py".parse().unwrap();
        assert_eq!(ext, SegmenterId::External("python3 seg.py".into()));
        assert!("external:".parse::<SegmenterId>().is_err());
        assert!("lstm".parse::<SegmenterId>().is_err());
    }
}
