use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::config::RunConfig;
use super::ledger::{CellStatus, RunLedger, CONFIG_FILE};
use crate::error::{Error, Result};
use crate::evaluation::{
    aggregate, generalization_gap, ranking_consistency, score_variability, CellResult, F1Variant, Side,
};
use crate::splitter::{Ratio, Strategy};
use crate::stats::{
    build_design_matrix, ols_fit, significance_stars, DesignMatrix, RegressionRecord, RegressionResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    /// Per-cell scores, per-stratum aggregates, cross-language summaries and
    /// ranking frequencies.
    Tables,
    /// Per-language OLS fits and their summary.
    Regression,
    /// Per-fraction score variability.
    PlotsData,
}

impl ReportKind {
    pub const ALL: [ReportKind; 3] = [ReportKind::Tables, ReportKind::Regression, ReportKind::PlotsData];
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportKind::Tables => "tables",
            ReportKind::Regression => "regression",
            ReportKind::PlotsData => "plots-data",
        })
    }
}

impl FromStr for ReportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "tables" => Ok(ReportKind::Tables),
            "regression" => Ok(ReportKind::Regression),
            "plots-data" => Ok(ReportKind::PlotsData),
            other => Err(Error::Config(format!("unknown report kind `{other}`"))),
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn fraction(r: Ratio) -> String {
    r.share_b().to_string()
}

struct Csv {
    path: PathBuf,
    buf: Vec<u8>,
}

impl Csv {
    fn new(path: PathBuf, comment: Option<&str>, header: &[&str]) -> Result<Self> {
        let mut buf = Vec::new();
        if let Some(c) = comment {
            buf.extend_from_slice(format!("# {c}\n").as_bytes());
        }
        let mut csv = Csv { path, buf };
        csv.row(header.iter().map(|s| s.to_string()))?;
        Ok(csv)
    }

    fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<()> {
        let mut w = csv::Writer::from_writer(&mut self.buf);
        w.write_record(fields.into_iter().collect::<Vec<_>>())?;
        w.flush()?;
        Ok(())
    }

    fn finish(self) -> Result<PathBuf> {
        if let Some(dir) = self.path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        }
        fs::write(&self.path, &self.buf).map_err(|e| Error::file(&self.path, e))?;
        Ok(self.path)
    }
}

/// Loads the persisted results of all done cells, ordered by language,
/// fraction, strategies and cell id.
pub fn load_results(ledger: &RunLedger) -> Result<Vec<CellResult>> {
    let mut results = Vec::new();
    for entry in ledger.cells.iter().filter(|c| c.status == CellStatus::Done) {
        let rel = entry
            .artifacts
            .iter()
            .find(|a| a.contains("/cells/"))
            .ok_or_else(|| Error::Contract(format!("done cell {} lists no result file", entry.cell_id)))?;
        let path = ledger.output_dir.join(rel);
        let text = fs::read_to_string(&path).map_err(|e| Error::file(&path, e))?;
        results.push(serde_json::from_str::<CellResult>(&text)?);
    }
    results.sort_by(|a, b| (&a.language_tag, a.stratum(), &a.cell_id).cmp(&(&b.language_tag, b.stratum(), &b.cell_id)));
    Ok(results)
}

/// Regenerates one kind of report from a run directory and returns the
/// paths written.
pub fn report(ledger_path: impl AsRef<Path>, kind: ReportKind) -> Result<Vec<PathBuf>> {
    let ledger = RunLedger::read(ledger_path)?;
    let config = RunConfig::from_file(ledger.output_dir.join(CONFIG_FILE))?;
    let results = load_results(&ledger)?;
    if results.is_empty() {
        return Err(Error::Domain("the ledger has no completed cells".into()));
    }
    let out = ledger.output_dir.as_path();
    match kind {
        ReportKind::Tables => tables(out, &config, &results),
        ReportKind::Regression => regression(out, &config, &results),
        ReportKind::PlotsData => plots_data(out, &config, &results),
    }
}

fn by_language(results: &[CellResult]) -> BTreeMap<&str, Vec<CellResult>> {
    let mut map: BTreeMap<&str, Vec<CellResult>> = BTreeMap::new();
    for r in results {
        map.entry(r.language_tag.as_str()).or_default().push(r.clone());
    }
    map
}

fn flags(config: &RunConfig) -> String {
    format!(
        "f1_variant={} averaging={} collapse_epsilon={}",
        config.f1_variant, config.averaging, config.collapse_epsilon
    )
}

/// Means over one language's cells for a (new-test mode, residual
/// strategy) pair, keyed by model.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModelSummary {
    pub mean_eval_f1: f64,
    pub mean_new_f1: f64,
    pub mean_abs_gap: f64,
    pub consistency: Option<f64>,
    /// Mean over fractions of the per-fraction standard deviation.
    pub sigma: Option<f64>,
}

pub fn summarize(cells: &[CellResult], variant: F1Variant) -> Result<BTreeMap<String, ModelSummary>> {
    let gaps = generalization_gap(cells, variant)?;
    let consistency = ranking_consistency(cells).ok();
    let mut strata: Vec<_> = cells.iter().map(CellResult::stratum).collect();
    strata.sort();
    strata.dedup();
    let sigmas: Vec<BTreeMap<String, f64>> = strata
        .iter()
        .filter_map(|s| score_variability(cells, s, variant).ok())
        .collect();
    let mut out = BTreeMap::new();
    for (model, gap) in gaps {
        let scores: Vec<_> = cells.iter().filter_map(|c| c.model(&model)).collect();
        let n = scores.len() as f64;
        let model_sigmas: Vec<f64> = sigmas.iter().filter_map(|m| m.get(&model).copied()).collect();
        out.insert(
            model,
            ModelSummary {
                mean_eval_f1: scores.iter().map(|s| s.f1(Side::Eval, variant)).sum::<f64>() / n,
                mean_new_f1: scores.iter().map(|s| s.f1(Side::New, variant)).sum::<f64>() / n,
                mean_abs_gap: gap.absolute,
                consistency,
                sigma: (!model_sigmas.is_empty()).then(|| model_sigmas.iter().sum::<f64>() / model_sigmas.len() as f64),
            },
        );
    }
    Ok(out)
}

fn mean_opt(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let vals: Vec<f64> = xs.flatten().collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

fn tables(out: &Path, config: &RunConfig, results: &[CellResult]) -> Result<Vec<PathBuf>> {
    let variant = config.f1_variant;
    let flags = flags(config);
    let mut written = Vec::new();
    let languages = by_language(results);

    for (tag, cells) in &languages {
        let mut csv = Csv::new(
            out.join(tag).join("report.csv"),
            Some(&flags),
            &[
                "cell_id",
                "language_tag",
                "fraction",
                "new_test_strategy",
                "residual_strategy",
                "model",
                "seed_group",
                "f1_boundary_eval",
                "f1_boundary_new",
                "f1_morpheme_eval",
                "f1_morpheme_new",
                "morpheme_overlap",
                "train_size",
                "eval_size",
                "new_test_size",
            ],
        )?;
        for c in cells {
            for s in &c.scores {
                csv.row([
                    c.cell_id.clone(),
                    c.language_tag.clone(),
                    fraction(c.fraction),
                    c.new_test_strategy.to_string(),
                    c.residual_strategy.to_string(),
                    s.model.clone(),
                    c.seed_group.to_string(),
                    num(s.eval_boundary.f1),
                    num(s.new_boundary.f1),
                    num(s.eval_morpheme.f1),
                    num(s.new_morpheme.f1),
                    num(c.morpheme_overlap),
                    c.train_size.to_string(),
                    c.eval_size.to_string(),
                    c.new_test_size.to_string(),
                ])?;
            }
        }
        written.push(csv.finish()?);
    }

    let mut strata = Csv::new(
        out.join("strata.csv"),
        Some(&flags),
        &[
            "language_tag",
            "fraction",
            "new_test_strategy",
            "residual_strategy",
            "model",
            "cells",
            "mean_eval_f1",
            "mean_new_f1",
            "mean_signed_gap",
            "mean_abs_gap",
            "consistency",
            "sigma",
        ],
    )?;
    for (tag, cells) in &languages {
        for row in aggregate(cells, variant)? {
            strata.row([
                tag.to_string(),
                fraction(row.stratum.fraction),
                row.stratum.new_test_strategy.to_string(),
                row.stratum.residual_strategy.to_string(),
                row.model,
                row.cells.to_string(),
                num(row.mean_eval_f1),
                num(row.mean_new_f1),
                num(row.mean_signed_gap),
                num(row.mean_abs_gap),
                opt(row.consistency),
                opt(row.sigma),
            ])?;
        }
    }
    written.push(strata.finish()?);

    let generations: Vec<Strategy> = {
        let mut g: Vec<_> = results.iter().map(|r| r.new_test_strategy).collect();
        g.sort();
        g.dedup();
        g
    };
    for generation in generations {
        let mut per_key: BTreeMap<(String, Strategy), Vec<ModelSummary>> = BTreeMap::new();
        for cells in languages.values() {
            let mut residuals: Vec<Strategy> = cells.iter().map(|c| c.residual_strategy).collect();
            residuals.sort();
            residuals.dedup();
            for residual in residuals {
                let subset: Vec<CellResult> = cells
                    .iter()
                    .filter(|c| c.new_test_strategy == generation && c.residual_strategy == residual)
                    .cloned()
                    .collect();
                if subset.is_empty() {
                    continue;
                }
                for (model, s) in summarize(&subset, variant)? {
                    per_key.entry((model, residual)).or_default().push(s);
                }
            }
        }
        let mut csv = Csv::new(
            out.join(format!("aggregate_nt-{generation}.csv")),
            Some(&format!(
                "{flags} new_test_generation={generation} languages=equal_weight ({})",
                languages.len()
            )),
            &[
                "model",
                "residual_strategy",
                "mean_eval_f1",
                "mean_new_f1",
                "mean_abs_gap",
                "consistency",
                "sigma",
            ],
        )?;
        for ((model, residual), summaries) in per_key {
            let n = summaries.len() as f64;
            csv.row([
                model,
                residual.to_string(),
                num(summaries.iter().map(|s| s.mean_eval_f1).sum::<f64>() / n),
                num(summaries.iter().map(|s| s.mean_new_f1).sum::<f64>() / n),
                num(summaries.iter().map(|s| s.mean_abs_gap).sum::<f64>() / n),
                opt(mean_opt(summaries.iter().map(|s| s.consistency))),
                opt(mean_opt(summaries.iter().map(|s| s.sigma))),
            ])?;
        }
        written.push(csv.finish()?);
    }

    let mut rankings = Csv::new(
        out.join("rankings.csv"),
        Some(&flags),
        &[
            "language_tag",
            "new_test_strategy",
            "residual_strategy",
            "side",
            "ranking",
            "cells",
            "share",
        ],
    )?;
    let mut counts: BTreeMap<(&str, Strategy, Strategy, &str), BTreeMap<String, usize>> = BTreeMap::new();
    for r in results {
        for (side, ranking) in [("eval", &r.ranking_eval), ("new", &r.ranking_new)] {
            if let Some(ranking) = ranking {
                *counts
                    .entry((r.language_tag.as_str(), r.new_test_strategy, r.residual_strategy, side))
                    .or_default()
                    .entry(ranking.to_string())
                    .or_default() += 1;
            }
        }
    }
    for ((tag, generation, residual, side), freq) in counts {
        let total: usize = freq.values().sum();
        let mut freq: Vec<(String, usize)> = freq.into_iter().collect();
        freq.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        for (ranking, n) in freq {
            rankings.row([
                tag.to_string(),
                generation.to_string(),
                residual.to_string(),
                side.to_string(),
                ranking,
                n.to_string(),
                num(n as f64 / total as f64),
            ])?;
        }
    }
    written.push(rankings.finish()?);
    Ok(written)
}

/// One record per (cell, model) with new-test F1 as the response.
pub fn regression_records(cells: &[CellResult], variant: F1Variant) -> Vec<RegressionRecord> {
    cells
        .iter()
        .flat_map(|c| {
            c.scores.iter().map(move |s| RegressionRecord {
                language_tag: c.language_tag.clone(),
                cell_id: c.cell_id.clone(),
                model_arch: s.model.clone(),
                f1: s.f1(Side::New, variant),
                strategy: (c.residual_strategy == Strategy::Random) as u8,
                new_test_gen: (c.new_test_strategy == Strategy::Random) as u8,
                morpheme_overlap: c.morpheme_overlap,
                word_count_ratio: c.word_count_ratio,
                morph_per_word_ratio: c.morph_per_word_ratio,
                morph_type_per_word_ratio: c.morph_type_per_word_ratio,
            })
        })
        .collect()
}

/// Fits the design. With `drop_degenerate`, constant columns are removed
/// first and columns reported as linearly dependent are then dropped and
/// the fit retried; the strategy column is never dropped.
pub fn fit_design(design: DesignMatrix, drop_degenerate: bool) -> Result<(RegressionResult, Vec<String>)> {
    if !drop_degenerate {
        let fit = ols_fit(&design.x, &design.y, &design.terms)?;
        return Ok((fit, design.warnings));
    }
    let mut design = design.without_constant_columns();
    let mut notes = design.warnings.clone();
    loop {
        match ols_fit(&design.x, &design.y, &design.terms) {
            Err(Error::Singular { columns }) if !columns.iter().any(|c| c == "intercept" || c == "strategy") => {
                notes.push(format!("dropped collinear columns {}", columns.join(", ")));
                design = design.without_terms(&columns);
            }
            other => return other.map(|fit| (fit, notes)),
        }
    }
}

fn regression(out: &Path, config: &RunConfig, results: &[CellResult]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut summary = Csv::new(
        out.join("regression_summary.csv"),
        Some(&format!("{} response=new_test_f1", flags(config))),
        &[
            "language_tag",
            "n",
            "dof",
            "r_squared",
            "strategy_beta",
            "strategy_p",
            "stars",
            "note",
        ],
    )?;
    for (tag, cells) in by_language(results) {
        let records = regression_records(&cells, config.f1_variant);
        let path = out.join(tag).join("regression_records.csv");
        let mut w = csv::Writer::from_path(&path)?;
        for r in &records {
            w.serialize(r)?;
        }
        w.flush()?;
        written.push(path);

        let result_path = out.join(tag).join("regression.csv");
        let fit = build_design_matrix(&records).and_then(|d| fit_design(d, config.drop_degenerate_columns));
        match fit {
            Ok((fit, warnings)) => {
                let mut buf = Vec::new();
                fit.write_csv(&mut buf)?;
                fs::write(&result_path, buf).map_err(|e| Error::file(&result_path, e))?;
                written.push(result_path);
                let j = fit.coefficient("strategy").expect("strategy column is always kept");
                summary.row([
                    tag.to_string(),
                    fit.n.to_string(),
                    fit.dof.to_string(),
                    num(fit.r_squared),
                    num(fit.beta[j]),
                    format!("{:.4e}", fit.p[j]),
                    significance_stars(fit.p[j]).to_string(),
                    warnings.join("; "),
                ])?;
            }
            Err(e) => {
                if result_path.exists() {
                    fs::remove_file(&result_path).map_err(|e| Error::file(&result_path, e))?;
                }
                summary.row([
                    tag.to_string(),
                    records.len().to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.to_string(),
                ])?;
            }
        }
    }
    written.push(summary.finish()?);
    Ok(written)
}

fn plots_data(out: &Path, config: &RunConfig, results: &[CellResult]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (tag, cells) in by_language(results) {
        let mut generations: Vec<Strategy> = cells.iter().map(|c| c.new_test_strategy).collect();
        generations.sort();
        generations.dedup();
        for generation in generations {
            let mut csv = Csv::new(
                out.join(tag).join(format!("plots_data_nt-{generation}.csv")),
                None,
                &["fraction", "strategy", "model", "sigma"],
            )?;
            let mut strata: Vec<_> = cells
                .iter()
                .filter(|c| c.new_test_strategy == generation)
                .map(CellResult::stratum)
                .collect();
            strata.sort();
            strata.dedup();
            for stratum in strata {
                let Ok(sigmas) = score_variability(&cells, &stratum, config.f1_variant) else {
                    continue;
                };
                for (model, sigma) in sigmas {
                    csv.row([
                        fraction(stratum.fraction),
                        stratum.residual_strategy.to_string(),
                        model,
                        num(sigma),
                    ])?;
                }
            }
            written.push(csv.finish()?);
        }
    }
    Ok(written)
}
