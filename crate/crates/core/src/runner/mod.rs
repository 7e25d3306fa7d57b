//! End-to-end experiment runs: configuration, execution, resumption and
//! reports.

mod config;
mod execute;
mod ledger;
mod report;

pub use config::{config_hash, load_corpus, LoadedCorpus, RunConfig, OUTPUT_DIR_ENV};
pub use execute::{resume, resume_with, run_cell, run_experiment};
pub use ledger::{CellEntry, CellStatus, RunLedger, CONFIG_FILE, LEDGER_FILE};
pub use report::{fit_design, load_results, regression_records, report, summarize, ModelSummary, ReportKind};
