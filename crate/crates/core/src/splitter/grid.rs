use serde::{Deserialize, Serialize};

use super::{adversarial_split, derive_seed, random_split, Ratio, SplitManifest, Stage, Strategy, DEFAULT_SWAP_BUDGET};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Shape of the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// New-test shares of the whole corpus, as `residual:new_test` ratios.
    pub new_test_fractions: Vec<Ratio>,
    pub samples_per_fraction: usize,
    pub residual_splits_per_strategy: usize,
    /// `train:eval` ratio for splitting the residual data.
    pub residual_ratio: Ratio,
    pub new_test_generation: Strategy,
    pub master_seed: u64,
    /// Swap-evaluation cap for every adversarial split in the grid.
    pub adversarial_budget: Option<u64>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            new_test_fractions: [0.1, 0.2, 0.3, 0.4, 0.5]
                .iter()
                .map(|&f| Ratio::from_fraction(f).expect("valid fraction"))
                .collect(),
            samples_per_fraction: 10,
            residual_splits_per_strategy: 3,
            residual_ratio: Ratio { a: 9, b: 1 },
            new_test_generation: Strategy::Random,
            master_seed: 0,
            adversarial_budget: Some(DEFAULT_SWAP_BUDGET),
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.new_test_fractions.is_empty() {
            return Err(Error::Config("at least one new-test fraction is required".into()));
        }
        if self.samples_per_fraction == 0 || self.residual_splits_per_strategy == 0 {
            return Err(Error::Config("sample and split counts must be at least 1".into()));
        }
        if self.new_test_generation == Strategy::Heuristic {
            return Err(Error::Config(
                "new test samples are generated randomly or adversarially".into(),
            ));
        }
        Ok(())
    }

    pub fn cells_per_stratum(&self) -> usize {
        self.samples_per_fraction * self.residual_splits_per_strategy
    }
}

/// One (train, eval, new test) combination and the splits that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub cell_id: String,
    pub fraction_index: usize,
    pub sample_index: usize,
    pub split_index: usize,
    /// Share of the whole corpus held out as new test sample.
    pub fraction: Ratio,
    pub new_test_strategy: Strategy,
    pub residual_strategy: Strategy,
    pub train: Vec<usize>,
    pub eval: Vec<usize>,
    pub new_test: Vec<usize>,
    /// The carving split followed by the residual split.
    pub provenance: Vec<SplitManifest>,
}

impl GridCell {
    pub fn fraction_value(&self) -> f64 {
        self.fraction.share_b()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid cell serializes")
    }
}

pub fn cell_id(
    new_test: Strategy,
    fraction_index: usize,
    sample_index: usize,
    residual: Strategy,
    split_index: usize,
) -> String {
    format!("nt-{new_test}.f{fraction_index}.s{sample_index:02}.{residual}.k{split_index}")
}

fn split_with(
    strategy: Strategy,
    corpus: &Corpus,
    parent: &[usize],
    ratio: Ratio,
    seed: u64,
    budget: Option<u64>,
) -> Result<SplitManifest> {
    let out = match strategy {
        Strategy::Random => random_split(corpus, parent, ratio, seed),
        Strategy::Adversarial => adversarial_split(corpus, parent, ratio, seed, budget),
        Strategy::Heuristic => Err(Error::Config("heuristic splits are not part of the grid".into())),
    };
    out.map_err(|e| match e {
        Error::Split(msg) => Error::Capacity(msg),
        other => other,
    })
}

/// Builds the grid for a single residual strategy.
pub fn build_grid(corpus: &Corpus, plan: &ExperimentPlan, residual_strategy: Strategy) -> Result<Vec<GridCell>> {
    build_grids(corpus, plan, &[residual_strategy])
}

/// Builds grids for several residual strategies over the *same* new test
/// samples, so strategies are compared on identical held-out data. Cells are
/// ordered by (fraction, sample, strategy, split).
pub fn build_grids(corpus: &Corpus, plan: &ExperimentPlan, residual_strategies: &[Strategy]) -> Result<Vec<GridCell>> {
    plan.validate()?;
    let all: Vec<usize> = (0..corpus.len()).collect();
    let mut cells = Vec::new();
    for (fi, &fraction) in plan.new_test_fractions.iter().enumerate() {
        for si in 0..plan.samples_per_fraction {
            let carve_tag = format!("carve:{}", plan.new_test_generation);
            let carve_seed = derive_seed(plan.master_seed, &[fi as u64, si as u64], &carve_tag);
            let mut carving = split_with(
                plan.new_test_generation,
                corpus,
                &all,
                fraction,
                carve_seed,
                plan.adversarial_budget,
            )?;
            carving.stage = Stage::NewTestCarving;
            let residual = carving.indices_a.clone();

            for &strategy in residual_strategies {
                for ki in 0..plan.residual_splits_per_strategy {
                    let tag = format!("residual:{strategy}");
                    let seed = derive_seed(plan.master_seed, &[fi as u64, si as u64, ki as u64], &tag);
                    let split = split_with(
                        strategy,
                        corpus,
                        &residual,
                        plan.residual_ratio,
                        seed,
                        plan.adversarial_budget,
                    )?;
                    cells.push(GridCell {
                        cell_id: cell_id(plan.new_test_generation, fi, si, strategy, ki),
                        fraction_index: fi,
                        sample_index: si,
                        split_index: ki,
                        fraction,
                        new_test_strategy: plan.new_test_generation,
                        residual_strategy: strategy,
                        train: split.indices_a.clone(),
                        eval: split.indices_b.clone(),
                        new_test: carving.indices_b.clone(),
                        provenance: vec![carving.clone(), split],
                    });
                }
            }
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_corpus, SynthSpec};

    #[test]
    fn single_cell_partitions_the_corpus() {
        let c = generate_synthetic_corpus(&SynthSpec::generated(10, 4, 60, 1)).unwrap();
        let plan = ExperimentPlan {
            new_test_fractions: vec![Ratio::from_fraction(0.2).unwrap()],
            samples_per_fraction: 1,
            residual_splits_per_strategy: 1,
            ..Default::default()
        };
        let cells = build_grid(&c, &plan, Strategy::Random).unwrap();
        assert_eq!(cells.len(), 1);
        let cell = &cells[0];
        let mut all: Vec<usize> = cell
            .train
            .iter()
            .chain(&cell.eval)
            .chain(&cell.new_test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..60).collect::<Vec<_>>());
        assert_eq!(cell.new_test.len(), 12);
        assert_eq!(cell.provenance[0].stage, Stage::NewTestCarving);
        assert_eq!(cell.provenance[1].stage, Stage::ResidualSplit);
    }

    #[test]
    fn strategies_share_new_test_samples() {
        let c = generate_synthetic_corpus(&SynthSpec::generated(10, 4, 80, 2)).unwrap();
        let plan = ExperimentPlan {
            new_test_fractions: vec![Ratio::from_fraction(0.3).unwrap()],
            samples_per_fraction: 2,
            residual_splits_per_strategy: 2,
            ..Default::default()
        };
        let cells = build_grids(&c, &plan, &[Strategy::Random, Strategy::Adversarial]).unwrap();
        assert_eq!(cells.len(), 8);
        for pair in cells.chunks(4) {
            assert!(pair.iter().all(|cell| cell.new_test == pair[0].new_test));
        }
        assert_ne!(cells[0].new_test, cells[4].new_test);
    }

    #[test]
    fn too_small_corpus_is_capacity_error() {
        let c = generate_synthetic_corpus(&SynthSpec::generated(2, 2, 4, 2)).unwrap();
        let err = build_grid(&c, &ExperimentPlan::default(), Strategy::Random).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)), "{err:?}");
    }
}
