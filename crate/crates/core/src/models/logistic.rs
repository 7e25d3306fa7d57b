use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::optim::minimize;
use super::{FeatureTemplate, TrainConfig};
use crate::corpus::{graphemes, Corpus, SegmentedWord};
use crate::error::{Error, Result};

const BIAS: &str = "bias";

/// Per-gap binary logistic regression: does a morpheme boundary sit between
/// graphemes `i` and `i + 1`? Features are the CRF features of the two
/// adjacent positions, prefixed `L:` and `R:`, plus a bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub template: FeatureTemplate,
    pub l2_lambda: f64,
    feature_index: BTreeMap<String, u32>,
    weights: Vec<f64>,
}

/// One gap: active feature ids and whether it is a gold boundary.
#[derive(Debug, Clone)]
pub(crate) struct Gap {
    feats: Vec<u32>,
    boundary: bool,
}

fn gap_features(template: &FeatureTemplate, chars: &[&str], gap: usize) -> Vec<String> {
    let mut out = vec![BIAS.to_string()];
    out.extend(template.features_at(chars, gap).into_iter().map(|f| format!("L:{f}")));
    out.extend(
        template
            .features_at(chars, gap + 1)
            .into_iter()
            .map(|f| format!("R:{f}")),
    );
    out
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticModel {
    pub fn zeroed(template: FeatureTemplate, features: impl IntoIterator<Item = String>, l2_lambda: f64) -> Self {
        let mut set: BTreeSet<String> = features.into_iter().collect();
        set.insert(BIAS.to_string());
        let feature_index: BTreeMap<String, u32> = set.into_iter().enumerate().map(|(i, f)| (f, i as u32)).collect();
        let weights = vec![0.0; feature_index.len()];
        Self {
            template,
            l2_lambda,
            feature_index,
            weights,
        }
    }

    pub fn feature_inventory(template: &FeatureTemplate, corpus: &Corpus) -> BTreeSet<String> {
        let mut set = BTreeSet::new();
        for w in corpus.words() {
            let chars = w.graphemes();
            for gap in 0..chars.len().saturating_sub(1) {
                set.extend(gap_features(template, &chars, gap));
            }
        }
        set
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.weights.len() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Contract(
                "weight vector has wrong length or non-finite entries".into(),
            ));
        }
        self.weights = weights;
        Ok(())
    }

    fn ids(&self, chars: &[&str], gap: usize) -> Vec<u32> {
        gap_features(&self.template, chars, gap)
            .iter()
            .filter_map(|f| self.feature_index.get(f).copied())
            .collect()
    }

    pub(crate) fn gaps(&self, word: &SegmentedWord) -> Vec<Gap> {
        let chars = word.graphemes();
        let boundaries: BTreeSet<usize> = word.boundaries().into_iter().collect();
        (0..chars.len().saturating_sub(1))
            .map(|gap| Gap {
                feats: self.ids(&chars, gap),
                boundary: boundaries.contains(&(gap + 1)),
            })
            .collect()
    }

    /// Probability of a boundary after grapheme `gap` of `surface`.
    pub fn boundary_probability(&self, surface: &str, gap: usize) -> f64 {
        let chars = graphemes(surface);
        let z: f64 = self.ids(&chars, gap).iter().map(|&f| self.weights[f as usize]).sum();
        sigmoid(z)
    }

    /// Places a boundary wherever the probability strictly exceeds 0.5.
    pub fn segment(&self, surface: &str) -> SegmentedWord {
        let n = graphemes(surface).len();
        let cuts: Vec<usize> = (0..n.saturating_sub(1))
            .filter(|&gap| self.boundary_probability(surface, gap) > 0.5)
            .map(|gap| gap + 1)
            .collect();
        SegmentedWord::from_boundaries(surface, &cuts).expect("cuts are increasing and interior")
    }

    /// Mean log-loss over gaps plus `l2/2 * |w|^2`, and its gradient.
    pub(crate) fn objective(&self, w: &[f64], gaps: &[Gap]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; w.len()];
        let mut loss = 0.0;
        for gap in gaps {
            let z: f64 = gap.feats.iter().map(|&f| w[f as usize]).sum();
            let y = if gap.boundary { 1.0 } else { 0.0 };
            loss += softplus(z) - y * z;
            let r = sigmoid(z) - y;
            for &f in &gap.feats {
                grad[f as usize] += r;
            }
        }
        let m = gaps.len().max(1) as f64;
        let lambda = self.l2_lambda;
        for (g, wi) in grad.iter_mut().zip(w) {
            *g = *g / m + lambda * wi;
        }
        let obj = loss / m + 0.5 * lambda * w.iter().map(|x| x * x).sum::<f64>();
        (obj, grad)
    }

    pub fn objective_and_gradient(&self, batch: &[SegmentedWord]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Domain("gradient of an empty batch".into()));
        }
        let gaps: Vec<Gap> = batch.iter().flat_map(|w| self.gaps(w)).collect();
        Ok(self.objective(&self.weights, &gaps))
    }
}

pub fn train_boundary_logistic(
    corpus: &Corpus,
    template: &FeatureTemplate,
    config: &TrainConfig,
) -> Result<LogisticModel> {
    config.validate()?;
    template.validate()?;
    if corpus.is_empty() {
        return Err(Error::Domain("cannot train on an empty corpus".into()));
    }
    let mut model = LogisticModel::zeroed(
        *template,
        LogisticModel::feature_inventory(template, corpus),
        config.l2_lambda,
    );
    let gaps: Vec<Gap> = corpus.words().iter().flat_map(|w| model.gaps(w)).collect();
    let result = minimize(
        |w| model.objective(w, &gaps),
        model.weights.clone(),
        config.optimizer,
        config.max_iterations,
        config.convergence_tol,
    )?;
    model.weights = result.x;
    Ok(model)
}
