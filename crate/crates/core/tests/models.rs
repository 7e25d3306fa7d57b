mod common;

use common::*;
use morphsplit_core::corpus::Corpus;
use morphsplit_core::evaluation::{corpus_score, Averaging, F1Variant};
use morphsplit_core::models::{
    train_boundary_logistic, train_crf, train_longest_match, train_model, train_unigram_viterbi, ModelSettings,
    SegmenterId, TrainConfig,
};
use morphsplit_core::splitter::{random_split, Ratio};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toy(words: &[&str]) -> Corpus {
    Corpus::from_words("toy", words.iter().map(|w| word(w)))
}

fn train_f1(model: &morphsplit_core::models::TrainedModel, corpus: &Corpus) -> f64 {
    let surfaces: Vec<&str> = corpus.words().iter().map(|w| w.surface()).collect();
    let pred = model.segment_all(&surfaces).unwrap();
    corpus_score(corpus.words(), &pred, F1Variant::Boundary, Averaging::Micro)
        .unwrap()
        .f1
}

#[test]
fn unregularized_crf_fits_toy_corpus() {
    let corpus = toy(&["walk+ed", "talk+s", "jump+ing", "re+do", "un+tie+d"]);
    let settings = ModelSettings {
        train: TrainConfig {
            l2_lambda: 0.0,
            max_iterations: 500,
            ..TrainConfig::default()
        },
        ..ModelSettings::default()
    };
    let model = train_model(&SegmenterId::Crf, &corpus, &settings, 0).unwrap();
    assert_eq!(train_f1(&model, &corpus), 1.0);
}

#[test]
fn heavy_regularization_shrinks_crf_weights() {
    let corpus = toy(&["walk+ed", "talk+s", "jump+ing"]);
    let config = TrainConfig {
        l2_lambda: 1e6,
        ..TrainConfig::default()
    };
    let model = train_crf(&corpus, &small_template(), &config).unwrap();
    let max = model.weights().iter().fold(0.0f64, |m, w| m.max(w.abs()));
    assert!(max < 1e-5, "largest weight {max}");
}

#[test]
fn crf_generalizes_on_synthetic_language() {
    let corpus = synthetic(20, 8, 200, 42);
    let parent: Vec<usize> = (0..corpus.len()).collect();
    let split = random_split(&corpus, &parent, Ratio::new(9, 1).unwrap(), 1).unwrap();
    let train = corpus.subset(&split.indices_a);
    let eval = corpus.subset(&split.indices_b);
    let model = train_model(&SegmenterId::Crf, &train, &ModelSettings::default(), 0).unwrap();
    let f1 = train_f1(&model, &eval);
    assert!(f1 >= 0.95, "eval F1 {f1}");
}

#[test]
fn viterbi_ignores_uniform_weight_shift() {
    let corpus = toy(&["walk+ed", "re+play", "cat+s"]);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut model = random_crf(&mut rng, &corpus, small_template(), 1.0);
    let before: Vec<_> = ["walked", "cats", "replay", "xyz"]
        .iter()
        .map(|w| model.viterbi_raw(w).unwrap().0)
        .collect();
    let shifted: Vec<f64> = model.weights().iter().map(|w| w + 3.25).collect();
    model.set_weights(shifted).unwrap();
    let after: Vec<_> = ["walked", "cats", "replay", "xyz"]
        .iter()
        .map(|w| model.viterbi_raw(w).unwrap().0)
        .collect();
    assert_eq!(before, after);
}

#[test]
fn unigram_prefers_frequent_morphemes() {
    let model = train_unigram_viterbi(&toy(&["walk+ed", "walk+ing", "talk+ed"]), 0.1).unwrap();
    assert_eq!(model.segment("talked"), word("talk+ed"));
    assert_eq!(model.segment("walk"), word("walk"));
    assert_eq!(model.segment("qqq"), word("qqq"));
}

#[test]
fn logistic_learns_boundary_after_x() {
    let corpus = toy(&[
        "ax+b", "bx+a", "cx+d", "dx+c", "abx+cd", "x+ab", "cdx+a", "ba", "cd", "ab",
    ]);
    let config = TrainConfig {
        l2_lambda: 0.0,
        max_iterations: 500,
        ..TrainConfig::default()
    };
    let model = train_boundary_logistic(&corpus, &small_template(), &config).unwrap();
    assert_eq!(model.segment("axb"), word("ax+b"));
    assert_eq!(model.segment("ab"), word("ab"));
}

#[test]
fn longest_match_examples() {
    assert_eq!(
        train_longest_match(&toy(&["walk", "ed"])).unwrap().segment("walked"),
        word("walk+ed")
    );
    assert_eq!(
        train_longest_match(&toy(&["a", "ab"])).unwrap().segment("ab"),
        word("ab")
    );
    assert_eq!(train_longest_match(&toy(&["q"])).unwrap().segment("ab"), word("a+b"));
}

#[test]
fn training_is_deterministic() {
    let corpus = synthetic(8, 5, 60, 3);
    for id in SegmenterId::BUILT_IN {
        let a = train_model(&id, &corpus, &ModelSettings::default(), 1).unwrap();
        let b = train_model(&id, &corpus, &ModelSettings::default(), 2).unwrap();
        assert_eq!(a, b, "{id}");
    }
}
