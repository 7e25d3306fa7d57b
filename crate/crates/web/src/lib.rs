//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string; errors surface as thrown JS strings.

use std::cell::OnceCell;

use morphsplit_core::corpus::{encode_labels, generate_synthetic_corpus, Corpus, SegmentedWord, SynthSpec};
use morphsplit_core::models::{train_model, ModelSettings, SegmenterId, TrainedModel};
use morphsplit_core::splitter::{adversarial_split, morpheme_distribution, random_split, Ratio, SplitManifest};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const DEMO_SEED: u64 = 7;

thread_local! {
    static DEMO: OnceCell<(Corpus, Vec<TrainedModel>)> = const { OnceCell::new() };
}

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json(value: &impl Serialize) -> Result<String, JsValue> {
    serde_json::to_string(value).map_err(js_err)
}

fn demo_corpus() -> Result<Corpus, String> {
    let mut spec = SynthSpec::generated(12, 6, 240, DEMO_SEED);
    spec.language_tag = "demo".into();
    generate_synthetic_corpus(&spec).map_err(|e| e.to_string())
}

fn with_demo<T>(f: impl FnOnce(&Corpus, &[TrainedModel]) -> T) -> Result<T, JsValue> {
    DEMO.with(|cell| {
        if cell.get().is_none() {
            let corpus = demo_corpus().map_err(js_err)?;
            let mut settings = ModelSettings::default();
            settings.train.max_iterations = 60;
            let models = SegmenterId::BUILT_IN
                .iter()
                .map(|id| train_model(id, &corpus, &settings, DEMO_SEED))
                .collect::<Result<Vec<_>, _>>()
                .map_err(js_err)?;
            let _ = cell.set((corpus, models));
        }
        let (corpus, models) = cell.get().expect("initialized above");
        Ok(f(corpus, models))
    })
}

/// The first `count` training words, written as `m1+m2+...`.
#[wasm_bindgen]
pub fn demo_words(count: usize) -> Result<String, JsValue> {
    let words = with_demo(|corpus, _| {
        corpus
            .words()
            .iter()
            .take(count)
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
    })?;
    to_json(&words)
}

#[derive(Serialize)]
struct Segmentation {
    model: String,
    morphemes: Vec<String>,
    labels: Vec<String>,
}

/// Segments `word` with each built-in model trained on the demo corpus.
#[wasm_bindgen]
pub fn segment_word(word: &str) -> Result<String, JsValue> {
    let word = word.trim();
    if word.is_empty() {
        return Err(JsValue::from_str("enter a word"));
    }
    let rows = with_demo(|_, models| {
        models
            .iter()
            .map(|m| {
                let seg = m.segment(word).expect("built-in models segment in process");
                Segmentation {
                    model: m.id().to_string(),
                    labels: encode_labels(&seg).labels().iter().map(|l| l.to_string()).collect(),
                    morphemes: seg.morphemes().to_vec(),
                }
            })
            .collect::<Vec<_>>()
    })?;
    to_json(&rows)
}

/// Label sequence of a `+`-separated segmentation such as `walk+ed`.
#[wasm_bindgen]
pub fn encode_segmentation(segmented: &str) -> Result<String, JsValue> {
    let parts: Vec<&str> = segmented.trim().split('+').collect();
    let word = SegmentedWord::from_parts(&parts).map_err(js_err)?;
    let labels: Vec<String> = encode_labels(&word).labels().iter().map(|l| l.to_string()).collect();
    to_json(&labels)
}

#[derive(Serialize)]
struct Side {
    words: usize,
    top: Vec<(String, f64)>,
}

#[derive(Serialize)]
struct SplitView {
    strategy: String,
    distance: f64,
    swaps: u64,
    train: Side,
    eval: Side,
}

fn side(corpus: &Corpus, indices: &[usize]) -> Result<Side, JsValue> {
    let dist = morpheme_distribution(corpus, indices).map_err(js_err)?;
    let mut top: Vec<(String, f64)> = dist.support.into_iter().zip(dist.probabilities).collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    top.truncate(8);
    Ok(Side {
        words: indices.len(),
        top,
    })
}

fn view(corpus: &Corpus, m: &SplitManifest) -> Result<SplitView, JsValue> {
    Ok(SplitView {
        strategy: m.strategy.to_string(),
        distance: m.achieved_distance,
        swaps: m.budget_used,
        train: side(corpus, &m.indices_a)?,
        eval: side(corpus, &m.indices_b)?,
    })
}

/// Random and adversarial splits of a fresh synthetic corpus, with the
/// morpheme-distribution distance each achieves.
#[wasm_bindgen]
pub fn compare_splits(
    stems: usize,
    suffixes: usize,
    words: usize,
    eval_share: f64,
    seed: u64,
) -> Result<String, JsValue> {
    let corpus = generate_synthetic_corpus(&SynthSpec::generated(stems, suffixes, words, seed)).map_err(js_err)?;
    let ratio = Ratio::from_fraction(eval_share).map_err(js_err)?;
    let parent: Vec<usize> = (0..corpus.len()).collect();
    let random = random_split(&corpus, &parent, ratio, seed).map_err(js_err)?;
    let adversarial = adversarial_split(&corpus, &parent, ratio, seed, Some(20_000)).map_err(js_err)?;
    to_json(&[view(&corpus, &random)?, view(&corpus, &adversarial)?])
}
