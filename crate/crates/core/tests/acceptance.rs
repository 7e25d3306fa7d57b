//! One PASS/FAIL line per acceptance criterion; exits non-zero on any failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use morphsplit_core::corpus::{decode_labels, encode_labels, graphemes, Corpus, Label, SegmentedWord};
use morphsplit_core::evaluation::{generalization_gap, ranking_consistency, CellResult, F1Variant, Side};
use morphsplit_core::models::{CrfModel, LogisticModel};
use morphsplit_core::runner::{run_cell, run_experiment, RunConfig};
use morphsplit_core::splitter::{adversarial_split, build_grid, random_split, ExperimentPlan, Ratio, Strategy};
use morphsplit_core::stats::{build_design_matrix, ols_fit, significance_stars, student_t_cdf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.1?}, limit {limit:?}"))?;
    Ok(took)
}

fn random_word(rng: &mut ChaCha8Rng, max_len: usize) -> SegmentedWord {
    const ALPHABET: [&str; 8] = ["a", "b", "k", "t", "o", "ü", "e\u{301}", "n"];
    let len = rng.gen_range(1..=max_len);
    let chars: Vec<&str> = (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect();
    let surface = chars.concat();
    let cuts: Vec<usize> = (1..len).filter(|_| rng.gen_bool(0.35)).collect();
    SegmentedWord::from_boundaries(&surface, &cuts).unwrap()
}

fn crf_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for pair in 0..100 {
        let target = random_word(&mut rng, 6);
        let others: Vec<SegmentedWord> = (0..3).map(|_| random_word(&mut rng, 6)).collect();
        let corpus = Corpus::from_words("c1", std::iter::once(target.clone()).chain(others));
        let model = random_crf(&mut rng, &corpus, small_template(), 2.0);
        let surface = target.surface();
        let emit = oracle_emissions(&model, surface);
        let mut scores = Vec::new();
        let mut best: Option<(f64, Vec<usize>)> = None;
        for ys in all_sequences(graphemes(surface).len()) {
            let s = oracle_score(&model, &emit, &ys);
            scores.push(s);
            if best.as_ref().is_none_or(|(b, _)| s > *b) {
                best = Some((s, ys));
            }
        }
        let z = log_sum_exp(&scores);
        let got = model.log_partition(surface).map_err(|e| e.to_string())?;
        let rel = (got - z).abs() / z.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        ensure(rel <= 1e-9, || format!("pair {pair}: log Z {got} vs {z}"))?;
        let (best_score, best_ys) = best.unwrap();
        let (labels, score) = model.viterbi_raw(surface).map_err(|e| e.to_string())?;
        let ys: Vec<usize> = labels.iter().map(|l| l.index()).collect();
        ensure(ys == best_ys, || {
            format!("pair {pair}: viterbi path differs from enumerated argmax")
        })?;
        ensure(score == oracle_score(&model, &emit, &ys), || {
            format!("pair {pair}: viterbi score {score} differs from its path's score")
        })?;
        ensure(score == best_score, || {
            format!("pair {pair}: viterbi score {score} vs max {best_score}")
        })?;
    }
    let took = within(Duration::from_secs(10), start)?;
    Ok(format!(
        "100 pairs, worst log Z rel err {worst:.1e}, Viterbi exact on all, {took:.1?}"
    ))
}

fn gradient_checks() -> Outcome {
    let start = Instant::now();
    let pool = synthetic(10, 6, 80, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for batch_no in 0..10 {
        let size = rng.gen_range(2..=5);
        let idx: Vec<usize> = (0..size).map(|_| rng.gen_range(0..pool.len())).collect();
        let batch = pool.subset(&idx);
        let template = small_template();
        let crf = random_crf(&mut rng, &batch, template, 0.5);
        let mut logistic = LogisticModel::zeroed(template, LogisticModel::feature_inventory(&template, &batch), 0.1);
        let lw: Vec<f64> = (0..logistic.weights().len())
            .map(|_| rng.gen_range(-0.5..0.5))
            .collect();
        logistic.set_weights(lw).unwrap();

        let mut crf_m: CrfModel = crf.clone();
        let w0 = crf.weights().to_vec();
        let e = gradient_error(&w0, |w| {
            crf_m.set_weights(w.to_vec()).unwrap();
            crf_m.objective_and_gradient(batch.words()).unwrap()
        });
        ensure(e <= 1e-4, || format!("batch {batch_no}: CRF relative error {e:.2e}"))?;
        worst = worst.max(e);

        let w0 = logistic.weights().to_vec();
        let e = gradient_error(&w0, |w| {
            logistic.set_weights(w.to_vec()).unwrap();
            logistic.objective_and_gradient(batch.words()).unwrap()
        });
        ensure(e <= 1e-4, || {
            format!("batch {batch_no}: logistic relative error {e:.2e}")
        })?;
        worst = worst.max(e);
    }
    let took = within(Duration::from_secs(30), start)?;
    Ok(format!(
        "10 batches x 2 models, worst relative error {worst:.1e}, {took:.1?}"
    ))
}

fn gradient_error(w0: &[f64], mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>)) -> f64 {
    const H: f64 = 1e-5;
    let (_, analytic) = f(w0);
    let mut w = w0.to_vec();
    let (mut diff, mut norm) = (0.0, 0.0);
    for i in 0..w.len() {
        let orig = w[i];
        w[i] = orig + H;
        let fp = f(&w).0;
        w[i] = orig - H;
        let fm = f(&w).0;
        w[i] = orig;
        let numeric = (fp - fm) / (2.0 * H);
        diff += (analytic[i] - numeric).powi(2);
        norm += numeric * numeric;
    }
    diff.sqrt() / f64::sqrt(norm).max(1e-12)
}

fn adversarial_optimality() -> Outcome {
    let start = Instant::now();
    let mut hits = 0;
    for i in 0..100 {
        let (corpus, ratio) = small_case(i);
        let parent: Vec<usize> = (0..corpus.len()).collect();
        let adv = adversarial_split(&corpus, &parent, ratio, i, None).map_err(|e| e.to_string())?;
        let rnd = random_split(&corpus, &parent, ratio, i).map_err(|e| e.to_string())?;
        ensure(adv.achieved_distance >= rnd.achieved_distance, || {
            format!(
                "corpus {i}: {} below random {}",
                adv.achieved_distance, rnd.achieved_distance
            )
        })?;
        if (adv.achieved_distance - exhaustive_max(&corpus, ratio)).abs() <= 1e-9 {
            hits += 1;
        }
    }
    ensure(hits >= 90, || format!("optimum reached on {hits}/100"))?;
    let took = within(Duration::from_secs(60), start)?;
    Ok(format!("optimum reached on {hits}/100, never below random, {took:.1?}"))
}

fn grid_cardinality() -> Outcome {
    let corpus = synthetic(25, 8, 400, 4);
    let plan = ExperimentPlan::default();
    let all: BTreeSet<usize> = (0..corpus.len()).collect();
    let mut counts = Vec::new();
    for strategy in [Strategy::Random, Strategy::Adversarial] {
        let cells = build_grid(&corpus, &plan, strategy).map_err(|e| e.to_string())?;
        ensure(cells.len() == 150, || format!("{strategy}: {} cells", cells.len()))?;
        let mut per_fraction: BTreeMap<Ratio, usize> = BTreeMap::new();
        let mut ids = BTreeSet::new();
        for c in &cells {
            *per_fraction.entry(c.fraction).or_default() += 1;
            ids.insert(c.cell_id.clone());
            let parts = [&c.train, &c.eval, &c.new_test];
            let total: usize = parts.iter().map(|p| p.len()).sum();
            let union: BTreeSet<usize> = parts.iter().flat_map(|p| p.iter().copied()).collect();
            ensure(total == corpus.len() && union == all, || {
                format!("{}: not a 3-way partition", c.cell_id)
            })?;
            ensure(parts.iter().all(|p| !p.is_empty()), || {
                format!("{}: empty part", c.cell_id)
            })?;
        }
        ensure(ids.len() == 150, || format!("{strategy}: duplicate cell ids"))?;
        ensure(
            per_fraction.len() == 5 && per_fraction.values().all(|&n| n == 30),
            || format!("{strategy}: per-fraction counts {per_fraction:?}"),
        )?;
        counts.push(cells.len());
    }
    Ok(format!(
        "{counts:?} cells, 30 per fraction, all disjoint and exhaustive"
    ))
}

fn qualitative_replication() -> Outcome {
    let start = Instant::now();
    let corpus_seed = std::env::var("MORPHSPLIT_ACCEPTANCE_CORPUS_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(5);
    let corpus = synthetic(30, 8, 600, corpus_seed);
    let stems = corpus
        .words()
        .iter()
        .map(|w| w.morphemes()[0].clone())
        .collect::<BTreeSet<_>>()
        .len();
    ensure(corpus.len() >= 500 && stems >= 30, || {
        format!("{} types over {stems} stems", corpus.len())
    })?;
    let mut by_strategy: BTreeMap<Strategy, Vec<CellResult>> = BTreeMap::new();
    let seeds = 10;
    for master_seed in 0..seeds {
        let mut config = RunConfig::default();
        config.plan.new_test_fractions = vec![Ratio::from_fraction(0.2).unwrap()];
        config.plan.samples_per_fraction = 3;
        config.plan.residual_splits_per_strategy = 3;
        config.plan.master_seed = master_seed;
        config.new_test_generations = vec![Strategy::Random];
        for strategy in [Strategy::Random, Strategy::Adversarial] {
            for cell in build_grid(&corpus, &config.plan, strategy).map_err(|e| e.to_string())? {
                let result = run_cell(&corpus, &cell, &config).map_err(|e| e.to_string())?;
                by_strategy.entry(strategy).or_default().push(result);
            }
        }
    }
    let rnd = &by_strategy[&Strategy::Random];
    let adv = &by_strategy[&Strategy::Adversarial];
    let gap_r = generalization_gap(rnd, F1Variant::Boundary).map_err(|e| e.to_string())?;
    let gap_a = generalization_gap(adv, F1Variant::Boundary).map_err(|e| e.to_string())?;
    let (crf_r, crf_a) = (gap_r["crf"].absolute, gap_a["crf"].absolute);

    let mean_new = |cells: &[CellResult], model: &str| {
        let v: Vec<f64> = cells
            .iter()
            .map(|c| c.model(model).unwrap().f1(Side::New, F1Variant::Boundary))
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let models: Vec<String> = rnd[0].scores.iter().map(|s| s.model.clone()).collect();
    let better: Vec<&String> = models.iter().filter(|m| mean_new(rnd, m) >= mean_new(adv, m)).collect();
    let cons_r = ranking_consistency(rnd).map_err(|e| e.to_string())?;
    let cons_a = ranking_consistency(adv).map_err(|e| e.to_string())?;

    let detail = format!(
        "CRF |gap| adversarial {crf_a:.4} vs random {crf_r:.4}; new F1 random >= adversarial for {}/{}; consistency random {cons_r:.3} vs adversarial {cons_a:.3}; {seeds} seeds",
        better.len(),
        models.len()
    );
    ensure(crf_a > crf_r, || format!("(a) failed: {detail}"))?;
    ensure(better.len() >= 3, || format!("(b) failed: {detail}"))?;
    ensure(cons_r >= cons_a, || format!("(c) failed: {detail}"))?;
    let took = within(Duration::from_secs(15 * 60), start)?;
    Ok(format!("{detail}, {took:.1?}"))
}

fn regression_engine() -> Outcome {
    let records = regression_records(200, 0.01, 6);
    let design = build_design_matrix(&records).map_err(|e| e.to_string())?;
    let fit = ols_fit(&design.x, &design.y, &design.terms).map_err(|e| e.to_string())?;
    let oracle = normal_equations(&rows(&design.x), design.y.as_slice());
    let worst = fit
        .beta
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 1e-6, || format!("max |beta - oracle| = {worst:.2e}"))?;
    for (p, stars) in STAR_CASES {
        ensure(significance_stars(p) == stars, || {
            format!("p = {p}: `{}`", significance_stars(p))
        })?;
    }
    let mut t_err = 0.0f64;
    for (dof, t, expected) in STUDENT_T_REFERENCE {
        t_err = t_err.max((student_t_cdf(t, dof) - expected).abs());
    }
    ensure(t_err <= 1e-8, || format!("Student-t max error {t_err:.2e}"))?;
    Ok(format!(
        "{} coefficients within {worst:.1e} of normal equations, 20 star cases, t CDF error {t_err:.1e}",
        oracle.len()
    ))
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (out, parallelism) in [("first", 1), ("second", 1), ("parallel", 8)] {
        run_experiment(&smoke_config(dir.path(), out, parallelism)).map_err(|e| e.to_string())?;
    }
    let first = report_files(&dir.path().join("first"));
    ensure(first.len() >= 8, || format!("only {} report files", first.len()))?;
    ensure(first == report_files(&dir.path().join("second")), || {
        "reruns differ".into()
    })?;
    ensure(first == report_files(&dir.path().join("parallel")), || {
        "parallelism 1 vs 8 differ".into()
    })?;
    let took = within(Duration::from_secs(3 * 60), start)?;
    Ok(format!(
        "{} report CSVs identical across 2 reruns and parallelism 8, 3 runs in {took:.1?}",
        first.len()
    ))
}

fn smoke_speed() -> Result<Duration, String> {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_experiment(&smoke_config(dir.path(), "out", 1)).map_err(|e| e.to_string())?;
    within(Duration::from_secs(60), start)
}

fn round_trip_and_repair() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..10_000 {
        let w = random_word(&mut rng, 12);
        let labels = encode_labels(&w);
        let back = decode_labels(w.surface(), labels.labels()).map_err(|e| e.to_string())?;
        ensure(back == w, || format!("word {i} `{}` does not round-trip", w.surface()))?;
    }
    for i in 0..10_000 {
        let w = random_word(&mut rng, 12);
        let n = graphemes(w.surface()).len() + 2;
        let labels: Vec<Label> = (0..n)
            .map(|_| Label::from_index(rng.gen_range(0..6)).unwrap())
            .collect();
        let decoded = decode_labels(w.surface(), &labels).map_err(|e| format!("sequence {i}: {e}"))?;
        ensure(decoded.surface() == w.surface(), || {
            format!("sequence {i} changed the surface")
        })?;
    }
    Ok("10000 words round-trip, 10000 random sequences repaired".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 CRF oracle", crf_oracle),
        ("2 gradient checks", gradient_checks),
        ("3 adversarial optimality", adversarial_optimality),
        ("4 grid cardinality", grid_cardinality),
        ("5 qualitative replication", qualitative_replication),
        ("6 regression engine", regression_engine),
        ("7 determinism and parallelism", || {
            let smoke = smoke_speed()?;
            determinism().map(|d| format!("{d}; smoke run {smoke:.1?}"))
        }),
        ("8 round-trip and repair", round_trip_and_repair),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
