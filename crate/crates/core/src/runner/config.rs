use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::corpus::{language_header, Corpus};
use crate::error::{Error, Result};
use crate::evaluation::{Averaging, F1Variant, DEFAULT_COLLAPSE_EPSILON};
use crate::models::{ModelSettings, SegmenterId};
use crate::splitter::{ExperimentPlan, Strategy};

/// Environment variable overriding the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "MORPHSPLIT_OUTPUT_DIR";

/// Everything an experiment run depends on.
///
/// The text form is flat `key = value` lines; `#` starts a comment and list
/// values are comma separated. Keys:
///
/// | key | default |
/// |-----|---------|
/// | `corpus` | required; corpus file paths |
/// | `new_test_fractions` | `0.1,0.2,0.3,0.4,0.5` |
/// | `samples_per_fraction` | `10` |
/// | `residual_splits_per_strategy` | `3` |
/// | `residual_ratio` | `9:1` |
/// | `new_test_generation` | `random,adversarial` |
/// | `residual_strategies` | `random,adversarial` |
/// | `master_seed` | `0` |
/// | `adversarial_budget` | `50000`, or `unlimited` |
/// | `models` | the four built-in models |
/// | `seeds_per_model` | `3` |
/// | `f1_variant` | `boundary` |
/// | `averaging` | `micro` |
/// | `collapse_epsilon` | `0.02` |
/// | `optimizer` | `lbfgs` |
/// | `max_iterations` | `200` |
/// | `convergence_tol` | `1e-6` |
/// | `l2_lambda` | `0.1` |
/// | `smoothing` | `0.1` |
/// | `max_ngram` | `3` |
/// | `window` | `2` |
/// | `position_flags` | `true` |
/// | `drop_degenerate_columns` | `true` |
/// | `output_dir` | `morphsplit-out` |
/// | `parallelism` | `1` |
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpora: Vec<PathBuf>,
    /// `new_test_generation` inside is ignored in favour of `new_test_generations`.
    pub plan: ExperimentPlan,
    pub new_test_generations: Vec<Strategy>,
    pub residual_strategies: Vec<Strategy>,
    pub models: Vec<SegmenterId>,
    pub seeds_per_model: usize,
    pub f1_variant: F1Variant,
    pub averaging: Averaging,
    pub collapse_epsilon: f64,
    pub settings: ModelSettings,
    pub drop_degenerate_columns: bool,
    pub output_dir: PathBuf,
    pub parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpora: Vec::new(),
            plan: ExperimentPlan::default(),
            new_test_generations: vec![Strategy::Random, Strategy::Adversarial],
            residual_strategies: vec![Strategy::Random, Strategy::Adversarial],
            models: SegmenterId::BUILT_IN.to_vec(),
            seeds_per_model: 3,
            f1_variant: F1Variant::Boundary,
            averaging: Averaging::Micro,
            collapse_epsilon: DEFAULT_COLLAPSE_EPSILON,
            settings: ModelSettings::default(),
            drop_degenerate_columns: true,
            output_dir: PathBuf::from("morphsplit-out"),
            parallelism: 1,
        }
    }
}

fn list<T>(value: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect()
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Keys excluded from the config hash.
const UNHASHED: [&str; 2] = ["output_dir", "parallelism"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse(&text)
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "corpus" => self.corpora = list(value, |s| Ok(PathBuf::from(s)))?,
            "new_test_fractions" => self.plan.new_test_fractions = list(value, str::parse)?,
            "samples_per_fraction" => self.plan.samples_per_fraction = number(key, value)?,
            "residual_splits_per_strategy" => self.plan.residual_splits_per_strategy = number(key, value)?,
            "residual_ratio" => self.plan.residual_ratio = value.parse()?,
            "new_test_generation" => self.new_test_generations = list(value, str::parse)?,
            "residual_strategies" => self.residual_strategies = list(value, str::parse)?,
            "master_seed" => self.plan.master_seed = number(key, value)?,
            "adversarial_budget" => {
                self.plan.adversarial_budget = match value {
                    "unlimited" => None,
                    v => Some(number(key, v)?),
                }
            }
            "models" => self.models = list(value, str::parse)?,
            "seeds_per_model" => self.seeds_per_model = number(key, value)?,
            "f1_variant" => self.f1_variant = value.parse()?,
            "averaging" => self.averaging = value.parse()?,
            "collapse_epsilon" => self.collapse_epsilon = number(key, value)?,
            "optimizer" => self.settings.train.optimizer = value.parse()?,
            "max_iterations" => self.settings.train.max_iterations = number(key, value)?,
            "convergence_tol" => self.settings.train.convergence_tol = number(key, value)?,
            "l2_lambda" => self.settings.train.l2_lambda = number(key, value)?,
            "smoothing" => self.settings.smoothing = number(key, value)?,
            "max_ngram" => self.settings.template.max_ngram = number(key, value)?,
            "window" => self.settings.template.window = number(key, value)?,
            "position_flags" => self.settings.template.include_position_flags = number(key, value)?,
            "drop_degenerate_columns" => self.drop_degenerate_columns = number(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "parallelism" => self.parallelism = number(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies the output-directory environment override, if set.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.output_dir = PathBuf::from(dir);
        }
    }

    /// All keys in canonical order with their text values.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let train = &self.settings.train;
        let template = &self.settings.template;
        vec![
            (
                "corpus",
                join(&self.corpora.iter().map(|p| p.display()).collect::<Vec<_>>()),
            ),
            ("new_test_fractions", join(&self.plan.new_test_fractions)),
            ("samples_per_fraction", self.plan.samples_per_fraction.to_string()),
            (
                "residual_splits_per_strategy",
                self.plan.residual_splits_per_strategy.to_string(),
            ),
            ("residual_ratio", self.plan.residual_ratio.to_string()),
            ("new_test_generation", join(&self.new_test_generations)),
            ("residual_strategies", join(&self.residual_strategies)),
            ("master_seed", self.plan.master_seed.to_string()),
            (
                "adversarial_budget",
                self.plan
                    .adversarial_budget
                    .map_or_else(|| "unlimited".to_string(), |b| b.to_string()),
            ),
            ("models", join(&self.models)),
            ("seeds_per_model", self.seeds_per_model.to_string()),
            ("f1_variant", self.f1_variant.to_string()),
            ("averaging", self.averaging.to_string()),
            ("collapse_epsilon", self.collapse_epsilon.to_string()),
            ("optimizer", train.optimizer.to_string()),
            ("max_iterations", train.max_iterations.to_string()),
            ("convergence_tol", train.convergence_tol.to_string()),
            ("l2_lambda", train.l2_lambda.to_string()),
            ("smoothing", self.settings.smoothing.to_string()),
            ("max_ngram", template.max_ngram.to_string()),
            ("window", template.window.to_string()),
            ("position_flags", template.include_position_flags.to_string()),
            ("drop_degenerate_columns", self.drop_degenerate_columns.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("parallelism", self.parallelism.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpora.is_empty() {
            return Err(Error::Config("no corpus given".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        if self.seeds_per_model == 0 || self.parallelism == 0 {
            return Err(Error::Config(
                "seeds_per_model and parallelism must be at least 1".into(),
            ));
        }
        if self.new_test_generations.is_empty() || self.residual_strategies.is_empty() {
            return Err(Error::Config("no split strategies selected".into()));
        }
        if self
            .new_test_generations
            .iter()
            .chain(&self.residual_strategies)
            .any(|s| *s == Strategy::Heuristic)
        {
            return Err(Error::Config("the grid runs random and adversarial splits only".into()));
        }
        if !(self.collapse_epsilon >= 0.0 && self.collapse_epsilon.is_finite()) {
            return Err(Error::Config("collapse_epsilon must be finite and non-negative".into()));
        }
        self.plan.validate()?;
        self.settings.train.validate()?;
        self.settings.template.validate()?;
        Ok(())
    }

    /// Plan for one new-test generation mode.
    pub fn plan_for(&self, new_test_generation: Strategy) -> ExperimentPlan {
        ExperimentPlan {
            new_test_generation,
            ..self.plan.clone()
        }
    }
}

/// A loaded corpus with its raw text.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub path: PathBuf,
    pub corpus: Corpus,
    pub text: String,
    pub dropped_duplicates: usize,
}

/// Reads a corpus file; the language tag comes from a `# language:` header
/// or else the file stem.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<LoadedCorpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let tag = match language_header(&text) {
        Some(t) => t.to_string(),
        None => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "corpus".into()),
    };
    if tag.contains(['/', '\\']) || tag == "." || tag == ".." {
        return Err(Error::Config(format!("language tag `{tag}` cannot name a directory")));
    }
    let parsed = Corpus::parse_str(&text, tag)?;
    Ok(LoadedCorpus {
        path: path.to_path_buf(),
        corpus: parsed.corpus,
        text,
        dropped_duplicates: parsed.dropped_duplicates,
    })
}

/// SHA-256 over the canonical config (minus output location and
/// parallelism) and the text of every corpus.
pub fn config_hash(config: &RunConfig, corpora: &[LoadedCorpus]) -> String {
    let mut h = Sha256::new();
    for (k, v) in config.entries() {
        if !UNHASHED.contains(&k) {
            h.update(format!("{k}={v}\n").as_bytes());
        }
    }
    for c in corpora {
        h.update(b"\0corpus\0");
        h.update(c.text.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig {
            corpora: vec!["a.tsv".into(), "b.tsv".into()],
            models: vec![SegmenterId::Crf, SegmenterId::External("sh seg.sh".into())],
            parallelism: 4,
            ..RunConfig::default()
        };
        c.plan.adversarial_budget = None;
        let back = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn later_lines_override() {
        let c = RunConfig::parse("corpus = x.tsv\nseeds_per_model = 2 # comment\nseeds_per_model=5\n").unwrap();
        assert_eq!(c.seeds_per_model, 5);
        assert_eq!(c.corpora, [PathBuf::from("x.tsv")]);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(matches!(RunConfig::parse("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::parse("no equals sign"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(RunConfig::parse("seeds_per_model = many").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_err());
        c.corpora.push("x".into());
        c.validate().unwrap();
        c.residual_strategies = vec![Strategy::Heuristic];
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_location_and_parallelism() {
        let mut a = RunConfig::default();
        a.corpora.push("x".into());
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        b.parallelism = 8;
        assert_eq!(config_hash(&a, &[]), config_hash(&b, &[]));
        b.seeds_per_model = 1;
        assert_ne!(config_hash(&a, &[]), config_hash(&b, &[]));
    }
}
