use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use super::config::{config_hash, load_corpus, LoadedCorpus, RunConfig};
use super::ledger::{CellEntry, CellStatus, RunLedger, CONFIG_FILE, LEDGER_FILE};
use super::report::{report, ReportKind};
use crate::corpus::{corpus_stats, Corpus, SegmentedWord};
use crate::error::{Error, Result};
use crate::evaluation::{
    corpus_score, morpheme_overlap, rank_models, CellResult, F1Variant, ModelScores, ScoreTriple, Side,
};
use crate::models::train_model;
use crate::splitter::{build_grids, derive_seed, GridCell};

struct Job<'a> {
    corpus: &'a Corpus,
    cell: GridCell,
}

fn manifest_path(tag: &str, cell_id: &str) -> String {
    format!("{tag}/manifests/{cell_id}.json")
}

fn result_path(tag: &str, cell_id: &str) -> String {
    format!("{tag}/cells/{cell_id}.json")
}

fn write_file(out: &Path, rel: &str, contents: &str) -> Result<()> {
    let path = out.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    }
    fs::write(&path, contents).map_err(|e| Error::file(&path, e))
}

fn load_all(config: &RunConfig) -> Result<Vec<LoadedCorpus>> {
    let corpora = config.corpora.iter().map(load_corpus).collect::<Result<Vec<_>>>()?;
    let mut tags: Vec<&str> = corpora.iter().map(|c| c.corpus.language_tag()).collect();
    tags.sort_unstable();
    if let Some(w) = tags.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("language tag `{}` appears twice", w[0])));
    }
    Ok(corpora)
}

fn all_cells(config: &RunConfig, corpora: &[LoadedCorpus]) -> Result<Vec<(String, GridCell)>> {
    let mut cells = Vec::new();
    for c in corpora {
        for &generation in &config.new_test_generations {
            let plan = config.plan_for(generation);
            for cell in build_grids(&c.corpus, &plan, &config.residual_strategies)? {
                cells.push((c.corpus.language_tag().to_string(), cell));
            }
        }
    }
    cells.sort_by(|a, b| (&a.0, &a.1.cell_id).cmp(&(&b.0, &b.1.cell_id)));
    Ok(cells)
}

/// Builds every grid, trains and scores every model on every cell, then
/// writes the ledger and all reports under `config.output_dir`. Corpus
/// paths are made absolute so the run can be resumed from anywhere.
pub fn run_experiment(config: &RunConfig) -> Result<RunLedger> {
    config.validate()?;
    let mut config = config.clone();
    for p in &mut config.corpora {
        *p = std::path::absolute(&*p).map_err(|e| Error::file(&*p, e))?;
    }
    let config = &config;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::file(out, e))?;
    let corpora = load_all(config)?;
    let cells = all_cells(config, &corpora)?;

    fs::write(out.join(CONFIG_FILE), config.to_text()).map_err(|e| Error::file(out.join(CONFIG_FILE), e))?;
    let ledger = RunLedger {
        config_hash: config_hash(config, &corpora),
        cells: cells
            .iter()
            .map(|(tag, cell)| CellEntry {
                language_tag: tag.clone(),
                cell_id: cell.cell_id.clone(),
                status: CellStatus::Pending,
                seconds: None,
                error: None,
                artifacts: Vec::new(),
            })
            .collect(),
        output_dir: out.clone(),
    };
    ledger.write()?;
    execute(config, &corpora, cells, ledger)
}

/// Reruns the pending, failed and incomplete cells of an earlier run. The
/// config is read back from the run directory and must hash to the value
/// recorded in the ledger, or the run is refused. A run with nothing left
/// to do is left untouched.
pub fn resume(ledger_path: impl AsRef<Path>) -> Result<RunLedger> {
    let ledger = RunLedger::read(ledger_path)?;
    let mut config = RunConfig::from_file(ledger.output_dir.join(CONFIG_FILE))?;
    config.output_dir = ledger.output_dir.clone();
    resume_with(ledger, config)
}

/// Like [`resume`] but with an explicitly supplied config, e.g. to change
/// parallelism.
pub fn resume_with(ledger: RunLedger, mut config: RunConfig) -> Result<RunLedger> {
    config.output_dir = ledger.output_dir.clone();
    config.validate()?;
    let corpora = load_all(&config)?;
    let found = config_hash(&config, &corpora);
    if found != ledger.config_hash {
        return Err(Error::ConfigHashMismatch {
            expected: ledger.config_hash,
            found,
        });
    }
    let todo: Vec<(String, GridCell)> = all_cells(&config, &corpora)?
        .into_iter()
        .filter(|(tag, cell)| {
            !ledger
                .cells
                .iter()
                .any(|e| e.language_tag == *tag && e.cell_id == cell.cell_id && ledger.is_intact(e))
        })
        .collect();
    if todo.is_empty() {
        return Ok(ledger);
    }
    execute(&config, &corpora, todo, ledger)
}

fn execute(
    config: &RunConfig,
    corpora: &[LoadedCorpus],
    cells: Vec<(String, GridCell)>,
    ledger: RunLedger,
) -> Result<RunLedger> {
    let by_tag: BTreeMap<&str, &Corpus> = corpora.iter().map(|c| (c.corpus.language_tag(), &c.corpus)).collect();
    let jobs: Vec<Job> = cells
        .into_iter()
        .map(|(tag, cell)| Job {
            corpus: by_tag[tag.as_str()],
            cell,
        })
        .collect();

    let out = config.output_dir.as_path();
    let ledger = Mutex::new(ledger);
    let next = AtomicUsize::new(0);
    let io_error: Mutex<Option<Error>> = Mutex::new(None);
    let workers = config.parallelism.min(jobs.len()).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                let started = Instant::now();
                let tag = job.corpus.language_tag();
                let id = &job.cell.cell_id;
                let outcome = catch_unwind(AssertUnwindSafe(|| run_cell(job.corpus, &job.cell, config)))
                    .unwrap_or_else(|panic| {
                        let msg = panic
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_else(|| "panic".into());
                        Err(Error::Training(format!("panicked: {msg}")))
                    });

                let mut artifacts = vec![manifest_path(tag, id)];
                let written = write_file(out, &artifacts[0], &job.cell.to_json()).and_then(|()| match &outcome {
                    Ok(result) => {
                        artifacts.push(result_path(tag, id));
                        let json = serde_json::to_string_pretty(result)?;
                        write_file(out, &artifacts[1], &json)
                    }
                    Err(_) => Ok(()),
                });

                let mut ledger = ledger.lock().expect("ledger lock");
                let entry = ledger.entry_mut(tag, id).expect("cell listed in ledger");
                entry.seconds = Some(started.elapsed().as_secs_f64());
                match (outcome, written) {
                    (Ok(_), Ok(())) => {
                        entry.status = CellStatus::Done;
                        entry.error = None;
                        entry.artifacts = artifacts;
                    }
                    (Err(e), _) | (Ok(_), Err(e)) => {
                        entry.status = CellStatus::Failed;
                        entry.error = Some(e.to_string());
                        entry.artifacts = Vec::new();
                    }
                }
                if let Err(e) = ledger.write() {
                    io_error.lock().expect("error lock").get_or_insert(e);
                }
            });
        }
    });

    if let Some(e) = io_error.into_inner().expect("error lock") {
        return Err(e);
    }
    let ledger = ledger.into_inner().expect("ledger lock");
    if ledger.count(CellStatus::Done) > 0 {
        let path = ledger.output_dir.join(LEDGER_FILE);
        for kind in ReportKind::ALL {
            report(&path, kind)?;
        }
    }
    Ok(ledger)
}

fn mean_triple(xs: &[ScoreTriple]) -> ScoreTriple {
    let n = xs.len() as f64;
    ScoreTriple {
        precision: xs.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: xs.iter().map(|s| s.recall).sum::<f64>() / n,
        f1: xs.iter().map(|s| s.f1).sum::<f64>() / n,
    }
}

fn surfaces(words: &[SegmentedWord]) -> Vec<&str> {
    words.iter().map(SegmentedWord::surface).collect()
}

/// Trains and scores every configured model on one cell.
pub fn run_cell(corpus: &Corpus, cell: &GridCell, config: &RunConfig) -> Result<CellResult> {
    let train = corpus.subset(&cell.train);
    let eval = corpus.subset(&cell.eval);
    let new_test = corpus.subset(&cell.new_test);
    let eval_in = surfaces(eval.words());
    let new_in = surfaces(new_test.words());

    let mut scores = Vec::with_capacity(config.models.len());
    for model in &config.models {
        let name = model.to_string();
        let runs = if model.is_seed_dependent() {
            config.seeds_per_model
        } else {
            1
        };
        let mut per_seed: [Vec<ScoreTriple>; 4] = Default::default();
        for k in 0..runs {
            let tag = format!("model:{}/{}/{}", corpus.language_tag(), cell.cell_id, name);
            let seed = derive_seed(config.plan.master_seed, &[k as u64], &tag);
            let trained = train_model(model, &train, &config.settings, seed)?;
            let pred_eval = trained.segment_all(&eval_in)?;
            let pred_new = trained.segment_all(&new_in)?;
            let combos = [
                (eval.words(), &pred_eval, F1Variant::Boundary),
                (new_test.words(), &pred_new, F1Variant::Boundary),
                (eval.words(), &pred_eval, F1Variant::Morpheme),
                (new_test.words(), &pred_new, F1Variant::Morpheme),
            ];
            for (slot, (gold, pred, variant)) in per_seed.iter_mut().zip(combos) {
                slot.push(corpus_score(gold, pred, variant, config.averaging)?);
            }
        }
        scores.push(ModelScores {
            model: name,
            eval_boundary: mean_triple(&per_seed[0]),
            new_boundary: mean_triple(&per_seed[1]),
            eval_morpheme: mean_triple(&per_seed[2]),
            new_morpheme: mean_triple(&per_seed[3]),
        });
    }
    scores.sort_by(|a, b| a.model.cmp(&b.model));

    let rank = |side| -> Result<_> {
        if scores.len() < 2 {
            return Ok(None);
        }
        let map = scores
            .iter()
            .map(|s| (s.model.clone(), s.f1(side, config.f1_variant)))
            .collect();
        rank_models(&map, config.collapse_epsilon).map(Some)
    };
    let ranking_eval = rank(Side::Eval)?;
    let ranking_new = rank(Side::New)?;

    let train_stats = corpus_stats(&train)?;
    let eval_stats = corpus_stats(&eval)?;
    Ok(CellResult {
        cell_id: cell.cell_id.clone(),
        language_tag: corpus.language_tag().to_string(),
        fraction: cell.fraction,
        new_test_strategy: cell.new_test_strategy,
        residual_strategy: cell.residual_strategy,
        train_size: train.len(),
        eval_size: eval.len(),
        new_test_size: new_test.len(),
        morpheme_overlap: morpheme_overlap(corpus, &cell.train, &cell.eval)?,
        word_count_ratio: train.len() as f64 / eval.len() as f64,
        morph_per_word_ratio: train_stats.avg_morphemes_per_word / eval_stats.avg_morphemes_per_word,
        morph_type_per_word_ratio: train_stats.avg_morpheme_types_per_word / eval_stats.avg_morpheme_types_per_word,
        seed_group: config.seeds_per_model,
        scores,
        ranking_variant: config.f1_variant,
        ranking_eval,
        ranking_new,
    })
}
