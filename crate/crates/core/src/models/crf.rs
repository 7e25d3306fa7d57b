//! First-order linear-chain CRF over the six segmentation labels.
//!
//! A word of `L` graphemes has `L` interior positions, each taking any of the
//! six labels; the framing START and END states contribute only through the
//! transition weights `START -> y_1` and `y_L -> END`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::optim::minimize;
use super::{FeatureTemplate, TrainConfig};
use crate::corpus::{decode_labels, encode_labels, graphemes, Corpus, Label, LabelSequence, SegmentedWord};
use crate::error::{Error, Result};

const K: usize = Label::COUNT;
const START: usize = Label::Start as usize;
const END: usize = Label::End as usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrfModel {
    pub template: FeatureTemplate,
    pub l2_lambda: f64,
    feature_index: BTreeMap<String, u32>,
    /// Emission weights `[feature * 6 + label]`, then 6x6 transitions `[from * 6 + to]`.
    weights: Vec<f64>,
}

/// A word reduced to feature ids per position, plus gold interior labels.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    feats: Vec<Vec<u32>>,
    gold: Option<Vec<usize>>,
}

fn log_sum_exp(xs: &[f64; K]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl CrfModel {
    /// A model with the given feature inventory and all weights zero.
    pub fn zeroed(template: FeatureTemplate, features: impl IntoIterator<Item = String>, l2_lambda: f64) -> Self {
        let set: BTreeSet<String> = features.into_iter().collect();
        let feature_index: BTreeMap<String, u32> = set.into_iter().enumerate().map(|(i, f)| (f, i as u32)).collect();
        let weights = vec![0.0; feature_index.len() * K + K * K];
        Self {
            template,
            l2_lambda,
            feature_index,
            weights,
        }
    }

    /// Feature inventory observed anywhere in `corpus`.
    pub fn feature_inventory(template: &FeatureTemplate, corpus: &Corpus) -> BTreeSet<String> {
        let mut set = BTreeSet::new();
        for w in corpus.words() {
            let chars = w.graphemes();
            for p in 0..chars.len() {
                set.extend(template.features_at(&chars, p));
            }
        }
        set
    }

    pub fn num_features(&self) -> usize {
        self.feature_index.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.weights.len() {
            return Err(Error::Contract(format!(
                "expected {} weights, got {}",
                self.weights.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Contract("weights must be finite".into()));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn feature_id(&self, feature: &str) -> Option<u32> {
        self.feature_index.get(feature).copied()
    }

    pub fn emission_index(&self, feature: u32, label: Label) -> usize {
        feature as usize * K + label.index()
    }

    pub fn transition_index(&self, from: Label, to: Label) -> usize {
        self.feature_index.len() * K + from.index() * K + to.index()
    }

    fn trans_offset(&self) -> usize {
        self.feature_index.len() * K
    }

    pub(crate) fn prepare_surface(&self, surface: &str) -> Prepared {
        let chars = graphemes(surface);
        let feats = (0..chars.len())
            .map(|p| {
                self.template
                    .features_at(&chars, p)
                    .iter()
                    .filter_map(|f| self.feature_id(f))
                    .collect()
            })
            .collect();
        Prepared { feats, gold: None }
    }

    pub(crate) fn prepare(&self, word: &SegmentedWord) -> Prepared {
        let mut p = self.prepare_surface(word.surface());
        let labels = encode_labels(word);
        let l = labels.labels();
        p.gold = Some(l[1..l.len() - 1].iter().map(|x| x.index()).collect());
        p
    }

    fn emissions(&self, w: &[f64], p: &Prepared) -> Vec<[f64; K]> {
        p.feats
            .iter()
            .map(|fs| {
                let mut e = [0.0; K];
                for &f in fs {
                    let base = f as usize * K;
                    for (y, ey) in e.iter_mut().enumerate() {
                        *ey += w[base + y];
                    }
                }
                e
            })
            .collect()
    }

    /// Unnormalized score of an interior label sequence.
    pub fn sequence_score(&self, surface: &str, interior: &[Label]) -> Result<f64> {
        let p = self.prepare_surface(surface);
        if interior.len() != p.feats.len() {
            return Err(Error::Contract("label count differs from word length".into()));
        }
        let ys: Vec<usize> = interior.iter().map(|l| l.index()).collect();
        Ok(self.score_of(&self.weights, &self.emissions(&self.weights, &p), &ys))
    }

    fn score_of(&self, w: &[f64], emit: &[[f64; K]], ys: &[usize]) -> f64 {
        let t = &w[self.trans_offset()..];
        let mut s = t[START * K + ys[0]];
        for i in 0..ys.len() {
            s += emit[i][ys[i]];
            if i + 1 < ys.len() {
                s += t[ys[i] * K + ys[i + 1]];
            }
        }
        s + t[ys[ys.len() - 1] * K + END]
    }

    fn forward(&self, w: &[f64], emit: &[[f64; K]]) -> (Vec<[f64; K]>, f64) {
        let t = &w[self.trans_offset()..];
        let n = emit.len();
        let mut alpha = vec![[0.0; K]; n];
        for y in 0..K {
            alpha[0][y] = t[START * K + y] + emit[0][y];
        }
        for i in 1..n {
            for y in 0..K {
                let mut terms = [0.0; K];
                for (yp, term) in terms.iter_mut().enumerate() {
                    *term = alpha[i - 1][yp] + t[yp * K + y];
                }
                alpha[i][y] = log_sum_exp(&terms) + emit[i][y];
            }
        }
        let mut last = [0.0; K];
        for y in 0..K {
            last[y] = alpha[n - 1][y] + t[y * K + END];
        }
        (alpha, log_sum_exp(&last))
    }

    fn backward(&self, w: &[f64], emit: &[[f64; K]]) -> Vec<[f64; K]> {
        let t = &w[self.trans_offset()..];
        let n = emit.len();
        let mut beta = vec![[0.0; K]; n];
        for y in 0..K {
            beta[n - 1][y] = t[y * K + END];
        }
        for i in (0..n - 1).rev() {
            for y in 0..K {
                let mut terms = [0.0; K];
                for (yn, term) in terms.iter_mut().enumerate() {
                    *term = t[y * K + yn] + emit[i + 1][yn] + beta[i + 1][yn];
                }
                beta[i][y] = log_sum_exp(&terms);
            }
        }
        beta
    }

    /// Log of the partition function over all `6^L` interior sequences.
    pub fn log_partition(&self, surface: &str) -> Result<f64> {
        let p = self.prepare_surface(surface);
        if p.feats.is_empty() {
            return Err(Error::Contract("empty surface".into()));
        }
        Ok(self.forward(&self.weights, &self.emissions(&self.weights, &p)).1)
    }

    /// Highest-scoring interior sequence and its score. Among equal scores the
    /// lexicographically smallest sequence (by label index) is returned:
    /// suffix maxima are computed right to left, then labels are fixed left
    /// to right taking the lowest index that attains the maximum.
    pub fn viterbi_raw(&self, surface: &str) -> Result<(Vec<Label>, f64)> {
        let p = self.prepare_surface(surface);
        if p.feats.is_empty() {
            return Err(Error::Contract("empty surface".into()));
        }
        let w = &self.weights;
        let t = &w[self.trans_offset()..];
        let emit = self.emissions(w, &p);
        let n = emit.len();
        // best[i][y]: max score of positions i..n given y_i = y, including END
        let mut best = vec![[0.0; K]; n];
        for y in 0..K {
            best[n - 1][y] = emit[n - 1][y] + t[y * K + END];
        }
        for i in (0..n - 1).rev() {
            for y in 0..K {
                let m = (0..K)
                    .map(|yn| t[y * K + yn] + best[i + 1][yn])
                    .fold(f64::NEG_INFINITY, f64::max);
                best[i][y] = emit[i][y] + m;
            }
        }
        let mut labels = Vec::with_capacity(n);
        let mut prev = START;
        for row in &best {
            let mut arg = 0;
            let mut top = f64::NEG_INFINITY;
            for y in 0..K {
                let v = t[prev * K + y] + row[y];
                if v > top {
                    top = v;
                    arg = y;
                }
            }
            labels.push(Label::from_index(arg).expect("label index"));
            prev = arg;
        }
        let ys: Vec<usize> = labels.iter().map(|l| l.index()).collect();
        let score = self.score_of(w, &emit, &ys);
        Ok((labels, score))
    }

    /// Best label sequence, repaired into a well-formed one.
    pub fn viterbi_decode(&self, surface: &str) -> Result<LabelSequence> {
        Ok(encode_labels(&self.segment_checked(surface)?))
    }

    fn segment_checked(&self, surface: &str) -> Result<SegmentedWord> {
        let (interior, _) = self.viterbi_raw(surface)?;
        let mut full = Vec::with_capacity(interior.len() + 2);
        full.push(Label::Start);
        full.extend(interior);
        full.push(Label::End);
        decode_labels(surface, &full)
    }

    pub fn segment(&self, surface: &str) -> SegmentedWord {
        self.segment_checked(surface)
            .expect("decoding a non-empty surface cannot fail")
    }

    /// Mean negative log-likelihood plus `l2/2 * |w|^2`, and its gradient.
    pub(crate) fn objective(&self, w: &[f64], batch: &[Prepared]) -> (f64, Vec<f64>) {
        let off = self.trans_offset();
        let mut grad = vec![0.0; w.len()];
        let mut nll = 0.0;
        for p in batch {
            let gold = p.gold.as_ref().expect("prepared with gold labels");
            let emit = self.emissions(w, p);
            let (alpha, log_z) = self.forward(w, &emit);
            let beta = self.backward(w, &emit);
            nll += log_z - self.score_of(w, &emit, gold);
            let t = &w[off..];
            let n = emit.len();

            for i in 0..n {
                let mut marg = [0.0; K];
                for y in 0..K {
                    marg[y] = (alpha[i][y] + beta[i][y] - log_z).exp();
                }
                for &f in &p.feats[i] {
                    let base = f as usize * K;
                    for y in 0..K {
                        grad[base + y] += marg[y];
                    }
                    grad[base + gold[i]] -= 1.0;
                }
                if i == 0 {
                    for y in 0..K {
                        grad[off + START * K + y] += marg[y];
                    }
                }
                if i == n - 1 {
                    for y in 0..K {
                        grad[off + y * K + END] += marg[y];
                    }
                }
                if i + 1 < n {
                    for y in 0..K {
                        for yn in 0..K {
                            let pm = (alpha[i][y] + t[y * K + yn] + emit[i + 1][yn] + beta[i + 1][yn] - log_z).exp();
                            grad[off + y * K + yn] += pm;
                        }
                    }
                    grad[off + gold[i] * K + gold[i + 1]] -= 1.0;
                }
            }
            grad[off + START * K + gold[0]] -= 1.0;
            grad[off + gold[n - 1] * K + END] -= 1.0;
        }
        let m = batch.len() as f64;
        let mut obj = nll / m;
        let lambda = self.l2_lambda;
        for (g, wi) in grad.iter_mut().zip(w) {
            *g = *g / m + lambda * wi;
        }
        obj += 0.5 * lambda * w.iter().map(|x| x * x).sum::<f64>();
        (obj, grad)
    }

    /// Objective and gradient at the model's current weights for `batch`.
    /// Features of `batch` outside the model's inventory are ignored.
    pub fn objective_and_gradient(&self, batch: &[SegmentedWord]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Domain("gradient of an empty batch".into()));
        }
        let prepared: Vec<Prepared> = batch.iter().map(|w| self.prepare(w)).collect();
        Ok(self.objective(&self.weights, &prepared))
    }
}

/// Maximum-likelihood training with the configured optimizer, starting from
/// zero weights.
pub fn train_crf(corpus: &Corpus, template: &FeatureTemplate, config: &TrainConfig) -> Result<CrfModel> {
    Ok(train_crf_with_history(corpus, template, config)?.0)
}

/// Like [`train_crf`], also returning the accepted objective values.
pub fn train_crf_with_history(
    corpus: &Corpus,
    template: &FeatureTemplate,
    config: &TrainConfig,
) -> Result<(CrfModel, Vec<f64>)> {
    config.validate()?;
    template.validate()?;
    if corpus.is_empty() {
        return Err(Error::Domain("cannot train on an empty corpus".into()));
    }
    let mut model = CrfModel::zeroed(
        *template,
        CrfModel::feature_inventory(template, corpus),
        config.l2_lambda,
    );
    let prepared: Vec<Prepared> = corpus.words().iter().map(|w| model.prepare(w)).collect();
    let result = minimize(
        |w| model.objective(w, &prepared),
        model.weights.clone(),
        config.optimizer,
        config.max_iterations,
        config.convergence_tol,
    )
    .map_err(|e| match e {
        Error::Training(msg) => Error::Training(format!(
            "{msg}; {} features, {} words",
            model.num_features(),
            corpus.len()
        )),
        other => other,
    })?;
    model.weights = result.x;
    Ok((model, result.history))
}
