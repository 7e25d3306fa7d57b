#![allow(dead_code, clippy::needless_range_loop, clippy::excessive_precision)]

use std::collections::BTreeMap;

use morphsplit_core::corpus::{generate_synthetic_corpus, graphemes, Corpus, Label, SegmentedWord, SynthSpec};
use morphsplit_core::models::{extract_features, CrfModel, FeatureTemplate};
use rand::Rng;

pub fn synthetic(stems: usize, suffixes: usize, words: usize, seed: u64) -> Corpus {
    generate_synthetic_corpus(&SynthSpec::generated(stems, suffixes, words, seed)).unwrap()
}

pub fn word(spec: &str) -> SegmentedWord {
    SegmentedWord::from_parts(&spec.split('+').collect::<Vec<_>>()).unwrap()
}

pub fn small_template() -> FeatureTemplate {
    FeatureTemplate {
        max_ngram: 2,
        window: 1,
        include_position_flags: true,
    }
}

/// A CRF over the corpus' feature inventory with weights drawn from
/// `[-scale, scale]`.
pub fn random_crf(rng: &mut impl Rng, corpus: &Corpus, template: FeatureTemplate, scale: f64) -> CrfModel {
    let inventory = CrfModel::feature_inventory(&template, corpus);
    let mut model = CrfModel::zeroed(template, inventory, 0.1);
    let w: Vec<f64> = (0..model.weights().len())
        .map(|_| rng.gen_range(-scale..scale))
        .collect();
    model.set_weights(w).unwrap();
    model
}

/// Per-position emission scores, computed from the feature strings and the
/// weight layout rather than from the model's own scoring code.
pub fn oracle_emissions(model: &CrfModel, surface: &str) -> Vec<[f64; 6]> {
    let n = graphemes(surface).len();
    (0..n)
        .map(|i| {
            let mut e = [0.0; 6];
            for f in extract_features(surface, i, &model.template).unwrap() {
                if let Some(id) = model.feature_id(&f) {
                    for label in Label::ALL {
                        e[label.index()] += model.weights()[model.emission_index(id, label)];
                    }
                }
            }
            e
        })
        .collect()
}

pub fn oracle_score(model: &CrfModel, emit: &[[f64; 6]], ys: &[usize]) -> f64 {
    let w = model.weights();
    let t = |a: Label, b: Label| w[model.transition_index(a, b)];
    let lab = |i: usize| Label::from_index(i).unwrap();
    let mut s = t(Label::Start, lab(ys[0]));
    for i in 0..ys.len() {
        s += emit[i][ys[i]];
        if i + 1 < ys.len() {
            s += t(lab(ys[i]), lab(ys[i + 1]));
        }
    }
    s + t(lab(ys[ys.len() - 1]), Label::End)
}

/// Every sequence over `0..6` of length `n`, in lexicographic order.
pub fn all_sequences(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..6usize.pow(n as u32)).map(move |mut code| {
        let mut ys = vec![0; n];
        for slot in ys.iter_mut().rev() {
            *slot = code % 6;
            code /= 6;
        }
        ys
    })
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Total variation between the morpheme token distributions of two index sets.
pub fn tv_distance(corpus: &Corpus, a: &[usize], b: &[usize]) -> f64 {
    let dist = |idx: &[usize]| {
        let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
        let mut total = 0.0;
        for &i in idx {
            for m in corpus.words()[i].morphemes() {
                *counts.entry(m.as_str()).or_default() += 1.0;
                total += 1.0;
            }
        }
        counts
            .into_iter()
            .map(|(k, v)| (k, v / total))
            .collect::<BTreeMap<_, _>>()
    };
    let (p, q) = (dist(a), dist(b));
    let mut keys: Vec<&str> = p.keys().chain(q.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|k| (p.get(k).unwrap_or(&0.0) - q.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

/// All `k`-subsets of `0..n` as sorted index vectors.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Solves `XᵀX β = Xᵀy` by Gaussian elimination with partial pivoting.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = x[0].len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
            a[i][k] += row[i] * yi;
        }
    }
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..k).map(|i| a[i][k] / a[i][i]).collect()
}

/// Inverse of `XᵀX` by Gauss-Jordan elimination.
pub fn gram_inverse(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = x[0].len();
    let mut a = vec![vec![0.0; 2 * k]; k];
    for row in x {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    for (i, r) in a.iter_mut().enumerate() {
        r[k + i] = 1.0;
    }
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        for c in 0..2 * k {
            a[col][c] /= p;
        }
        for r in 0..k {
            if r != col {
                let f = a[r][col];
                for c in 0..2 * k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    a.into_iter().map(|r| r[k..].to_vec()).collect()
}

/// The `i`-th corpus of the small-corpus family: 6 to 12 words over a few
/// stems and suffixes, with a share of side `b` cycling through 1:1, 2:1, 3:1.
pub fn small_case(i: u64) -> (Corpus, morphsplit_core::splitter::Ratio) {
    use morphsplit_core::splitter::Ratio;
    let words = 6 + (i % 7) as usize;
    let corpus = synthetic(3 + (i % 3) as usize, 4 + (i % 4) as usize, words, 1000 + i);
    let ratio = Ratio::new(1 + (i % 3) as u32, 1).unwrap();
    (corpus, ratio)
}

/// Maximum TV distance over every split with the ratio's side-b size.
pub fn exhaustive_max(corpus: &Corpus, ratio: morphsplit_core::splitter::Ratio) -> f64 {
    let n = corpus.len();
    let nb = ratio.size_b(n);
    combinations(n, nb)
        .into_iter()
        .map(|b| {
            let a: Vec<usize> = (0..n).filter(|i| !b.contains(i)).collect();
            tv_distance(corpus, &a, &b)
        })
        .fold(0.0, f64::max)
}

pub const STUDENT_T_REFERENCE: [(f64, f64, f64); 12] = [
    (1.0, 0.0, 0.5),
    (1.0, 1.0, 0.75),
    (1.0, 2.0, 0.852_416_382_349_566_725_82),
    (1.0, 4.0, 0.922_020_869_622_630_674_54),
    (10.0, 0.0, 0.5),
    (10.0, 1.0, 0.829_553_433_848_970_063_66),
    (10.0, 2.0, 0.963_305_982_614_629_817_19),
    (10.0, 4.0, 0.998_740_833_687_631_653_87),
    (100.0, 0.0, 0.5),
    (100.0, 1.0, 0.840_137_922_107_938_319_8),
    (100.0, 2.0, 0.975_893_910_634_433_160_2),
    (100.0, 4.0, 0.999_939_238_177_849_619_16),
];

/// Generating coefficients for [`regression_records`], in design-matrix order
/// with architectures `crf` (reference), `lstm`, `trm`.
pub const TRUE_BETA: [f64; 14] = [
    0.7, -0.08, 0.03, 0.2, -0.05, 0.04, 0.01, -0.06, -0.12, 0.02, 0.05, -0.03, 0.015, -0.02,
];

/// `n` records whose F1 follows [`TRUE_BETA`] plus Gaussian-ish noise of scale `noise`.
pub fn regression_records(n: usize, noise: f64, seed: u64) -> Vec<morphsplit_core::stats::RegressionRecord> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let arch = ["crf", "lstm", "trm"][i % 3];
            let strategy = ((i / 3) % 2) as u8;
            let new_test_gen = rng.gen_range(0..2u8);
            let overlap = rng.gen_range(0.3..1.0);
            let wcr = rng.gen_range(0.05..0.5);
            let mpw = rng.gen_range(0.8..1.3);
            let mtpw = rng.gen_range(0.5..1.5);
            let controls = [new_test_gen as f64, overlap, wcr, mpw, mtpw];
            let s = strategy as f64;
            let b = &TRUE_BETA;
            let mut f1 = b[0] + b[1] * s;
            for (k, c) in controls.iter().enumerate() {
                f1 += b[2 + k] * c + b[9 + k] * s * c;
            }
            f1 += match arch {
                "lstm" => b[7],
                "trm" => b[8],
                _ => 0.0,
            };
            // sum of uniforms approximates a normal
            let e: f64 = (0..6).map(|_| rng.gen_range(-1.0..1.0)).sum::<f64>() / 6f64.sqrt();
            morphsplit_core::stats::RegressionRecord {
                language_tag: "syn".into(),
                cell_id: format!("c{i}"),
                model_arch: arch.into(),
                f1: f1 + noise * e,
                strategy,
                new_test_gen,
                morpheme_overlap: overlap,
                word_count_ratio: wcr,
                morph_per_word_ratio: mpw,
                morph_type_per_word_ratio: mtpw,
            }
        })
        .collect()
}

pub fn rows(x: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.nrows()).map(|r| x.row(r).iter().copied().collect()).collect()
}

/// Handcrafted p values with their expected star strings.
pub const STAR_CASES: [(f64, &str); 20] = [
    (0.0, "***"),
    (1e-12, "***"),
    (0.0005, "***"),
    (0.000_999_9, "***"),
    (0.001, "**"),
    (0.0010001, "**"),
    (0.005, "**"),
    (0.009_999, "**"),
    (0.01, "*"),
    (0.010_001, "*"),
    (0.03, "*"),
    (0.049_999, "*"),
    (0.05, ""),
    (0.050_001, ""),
    (0.07, ""),
    (0.1, ""),
    (0.25, ""),
    (0.5, ""),
    (0.99, ""),
    (1.0, ""),
];

/// A small but complete experiment over a synthetic corpus written into `dir`.
pub fn smoke_config(dir: &std::path::Path, out: &str, parallelism: usize) -> morphsplit_core::runner::RunConfig {
    let corpus_path = dir.join("syn.tsv");
    if !corpus_path.exists() {
        std::fs::write(&corpus_path, synthetic(12, 6, 120, 5).to_text()).unwrap();
    }
    let mut config = morphsplit_core::runner::RunConfig::parse(
        "new_test_fractions = 0.2\n\
         samples_per_fraction = 2\n\
         residual_splits_per_strategy = 2\n\
         seeds_per_model = 2\n\
         max_iterations = 40\n",
    )
    .unwrap();
    config.corpora = vec![corpus_path];
    config.output_dir = dir.join(out);
    config.parallelism = parallelism;
    config
}

/// Every report CSV under `root`, keyed by relative path.
pub fn report_files(root: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}
