use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use morphsplit_core::corpus::{generate_synthetic_corpus, SegmentedWord, SynthSpec};
use morphsplit_core::evaluation::{corpus_score, Averaging, F1Variant};
use morphsplit_core::models::{train_model, ModelSettings, Optimizer, SegmenterId, TrainedModel};
use morphsplit_core::runner::{
    fit_design, load_corpus, report, resume, run_experiment, CellStatus, ReportKind, RunConfig, RunLedger, LEDGER_FILE,
};
use morphsplit_core::splitter::{
    adversarial_split, heuristic_split, random_split, HeuristicOutcome, Ratio, Strategy, DEFAULT_HEURISTIC_TOLERANCE,
};
use morphsplit_core::stats::{build_design_matrix, RegressionRecord};

#[derive(Parser)]
#[command(
    name = "morphsplit",
    version,
    about = "Split-strategy experiments for morphological segmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic agglutinative corpus.
    Synth(SynthArgs),
    /// Split a corpus and write the split manifest.
    Split(SplitArgs),
    /// Train a segmenter and save it as JSON.
    Train(TrainArgs),
    /// Segment words with a saved model.
    Segment(SegmentArgs),
    /// Score predicted segmentations against gold ones.
    Evaluate(EvaluateArgs),
    /// Run the full experiment grid.
    Experiment(ExperimentArgs),
    /// Finish an interrupted or partially failed run.
    Resume(ResumeArgs),
    /// Regenerate reports from a run directory.
    Report(ReportArgs),
    /// Fit the regression on a records CSV.
    Regress(RegressArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 30)]
    stems: usize,
    #[arg(long, default_value_t = 8)]
    suffixes: usize,
    #[arg(long, default_value_t = 500)]
    words: usize,
    #[arg(long, default_value_t = 1)]
    min_suffixes: usize,
    #[arg(long, default_value_t = 3)]
    max_suffixes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "synthetic")]
    language: String,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "random")]
    strategy: Strategy,
    /// `a:b` or the share of side b, e.g. 0.1.
    #[arg(long, default_value = "9:1")]
    ratio: Ratio,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Swap evaluations for adversarial splits, or `unlimited`.
    #[arg(long, default_value = "50000")]
    budget: String,
    #[arg(long, default_value_t = DEFAULT_HEURISTIC_TOLERANCE)]
    tolerance: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ModelOptions {
    #[arg(long, default_value = "lbfgs")]
    optimizer: Optimizer,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    #[arg(long, default_value_t = 0.1)]
    l2_lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    smoothing: f64,
}

impl ModelOptions {
    fn settings(&self) -> ModelSettings {
        let mut s = ModelSettings::default();
        s.train.optimizer = self.optimizer;
        s.train.max_iterations = self.max_iterations;
        s.train.l2_lambda = self.l2_lambda;
        s.smoothing = self.smoothing;
        s
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "crf")]
    model: SegmenterId,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    options: ModelOptions,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    model: PathBuf,
    /// One word per line; stdin when omitted and no words are given.
    #[arg(long)]
    input: Option<PathBuf>,
    words: Vec<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, default_value = "boundary")]
    variant: F1Variant,
    #[arg(long, default_value = "micro")]
    averaging: Averaging,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus files; replaces the config's list.
    #[arg(long)]
    corpus: Vec<PathBuf>,
    /// Overrides any config key, e.g. `--set seeds_per_model=1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
}

#[derive(Args)]
struct ResumeArgs {
    /// The run's ledger file or its directory.
    ledger: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    ledger: PathBuf,
    #[arg(long, default_value = "tables")]
    kind: ReportKind,
}

#[derive(Args)]
struct RegressArgs {
    records: PathBuf,
    /// Fail on constant or collinear columns instead of dropping them.
    #[arg(long)]
    keep_degenerate_columns: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn write_out(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn ledger_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(LEDGER_FILE)
    } else {
        p.to_path_buf()
    }
}

fn synth(args: SynthArgs) -> Result<()> {
    let mut spec = SynthSpec::generated(args.stems, args.suffixes, args.words, args.seed);
    spec.language_tag = args.language;
    spec.min_suffixes = args.min_suffixes;
    spec.max_suffixes = args.max_suffixes;
    let corpus = generate_synthetic_corpus(&spec)?;
    write_out(args.output.as_deref(), &corpus.to_text())
}

fn split(args: SplitArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?.corpus;
    let parent: Vec<usize> = (0..corpus.len()).collect();
    let manifest = match args.strategy {
        Strategy::Random => random_split(&corpus, &parent, args.ratio, args.seed)?,
        Strategy::Adversarial => {
            let budget = match args.budget.as_str() {
                "unlimited" => None,
                b => Some(b.parse().context("--budget takes a number or `unlimited`")?),
            };
            adversarial_split(&corpus, &parent, args.ratio, args.seed, budget)?
        }
        Strategy::Heuristic => match heuristic_split(&corpus, &parent, args.ratio, args.tolerance)? {
            HeuristicOutcome::Found(m) => m,
            HeuristicOutcome::ThresholdNotFound { closest_share } => match closest_share {
                Some(share) => {
                    bail!("no morpheme-count threshold reaches the target ratio; closest share of side b is {share:.4}")
                }
                None => bail!("no morpheme-count threshold leaves both sides non-empty"),
            },
        },
    };
    eprintln!(
        "{}: {} / {} words, distance {:.6}",
        manifest.strategy,
        manifest.indices_a.len(),
        manifest.indices_b.len(),
        manifest.achieved_distance
    );
    write_out(args.output.as_deref(), &(manifest.to_json() + "\n"))
}

fn train(args: TrainArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?.corpus;
    let model = train_model(&args.model, &corpus, &args.options.settings(), args.seed)?;
    fs::write(&args.output, serde_json::to_string(&model)?)
        .with_context(|| format!("writing {}", args.output.display()))
}

fn segment(args: SegmentArgs) -> Result<()> {
    let text = fs::read_to_string(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let model: TrainedModel = serde_json::from_str(&text).context("parsing model JSON")?;
    let words: Vec<String> = if !args.words.is_empty() {
        args.words
    } else {
        let lines: Vec<String> = match &args.input {
            Some(p) => fs::read_to_string(p)?.lines().map(str::to_string).collect(),
            None => io::stdin().lock().lines().collect::<io::Result<_>>()?,
        };
        lines
            .into_iter()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect()
    };
    let refs: Vec<&str> = words.iter().map(String::as_str).collect();
    let mut out = io::stdout().lock();
    for w in model.segment_all(&refs)? {
        writeln!(out, "{}\t{}", w.surface(), w.morphemes().join(" "))?;
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let gold = load_corpus(&args.gold)?.corpus;
    let pred = load_corpus(&args.pred)?.corpus;
    let by_surface: HashMap<&str, &SegmentedWord> = pred.words().iter().map(|w| (w.surface(), w)).collect();
    let mut aligned = Vec::with_capacity(gold.len());
    for g in gold.words() {
        match by_surface.get(g.surface()) {
            Some(p) => aligned.push((*p).clone()),
            None => bail!("no prediction for `{}`", g.surface()),
        }
    }
    let s = corpus_score(gold.words(), &aligned, args.variant, args.averaging)?;
    println!("# f1_variant={} averaging={}", args.variant, args.averaging);
    println!(
        "precision\t{:.6}\nrecall\t{:.6}\nf1\t{:.6}",
        s.precision, s.recall, s.f1
    );
    Ok(())
}

fn summarize(ledger: &RunLedger) -> ExitCode {
    let done = ledger.count(CellStatus::Done);
    let failed = ledger.count(CellStatus::Failed);
    eprintln!(
        "{done} cells done, {failed} failed; results in {}",
        ledger.output_dir.display()
    );
    for c in ledger.cells.iter().filter(|c| c.status == CellStatus::Failed) {
        eprintln!(
            "  {}/{}: {}",
            c.language_tag,
            c.cell_id,
            c.error.as_deref().unwrap_or("unknown error")
        );
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let mut config = match &args.config {
        Some(p) => {
            let mut c = RunConfig::from_file(p)?;
            let base = p.parent().unwrap_or(Path::new(""));
            c.corpora = c.corpora.iter().map(|c| base.join(c)).collect();
            c
        }
        None => RunConfig::default(),
    };
    config.apply_env();
    for kv in &args.overrides {
        let (k, v) = kv.split_once('=').with_context(|| format!("`{kv}` is not KEY=VALUE"))?;
        config.set(k.trim(), v.trim())?;
    }
    if !args.corpus.is_empty() {
        config.corpora = args.corpus;
    }
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    if let Some(p) = args.parallelism {
        config.parallelism = p;
    }
    if let Some(s) = args.master_seed {
        config.plan.master_seed = s;
    }
    let ledger = run_experiment(&config)?;
    Ok(summarize(&ledger))
}

fn regress(args: RegressArgs) -> Result<()> {
    let mut reader =
        csv::Reader::from_path(&args.records).with_context(|| format!("reading {}", args.records.display()))?;
    let records: Vec<RegressionRecord> = reader.deserialize().collect::<Result<_, _>>()?;
    let design = build_design_matrix(&records)?;
    let (fit, notes) = fit_design(design, !args.keep_degenerate_columns)?;
    for n in &notes {
        eprintln!("note: {n}");
    }
    eprintln!("n = {}, dof = {}, R² = {:.4}", fit.n, fit.dof, fit.r_squared);
    let mut buf = Vec::new();
    fit.write_csv(&mut buf)?;
    write_out(args.output.as_deref(), &String::from_utf8(buf)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a).map(|()| ExitCode::SUCCESS),
        Command::Split(a) => split(a).map(|()| ExitCode::SUCCESS),
        Command::Train(a) => train(a).map(|()| ExitCode::SUCCESS),
        Command::Segment(a) => segment(a).map(|()| ExitCode::SUCCESS),
        Command::Evaluate(a) => evaluate(a).map(|()| ExitCode::SUCCESS),
        Command::Experiment(a) => experiment(a),
        Command::Resume(a) => resume(ledger_path(&a.ledger))
            .map(|l| summarize(&l))
            .map_err(Into::into),
        Command::Report(a) => report(ledger_path(&a.ledger), a.kind)
            .map(|paths| {
                for p in paths {
                    println!("{}", p.display());
                }
                ExitCode::SUCCESS
            })
            .map_err(Into::into),
        Command::Regress(a) => regress(a).map(|()| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
