use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LEDGER_FILE: &str = "ledger.json";
pub const CONFIG_FILE: &str = "config.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub language_tag: String,
    pub cell_id: String,
    pub status: CellStatus,
    /// Wall-clock time of the last attempt.
    pub seconds: Option<f64>,
    pub error: Option<String>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
}

/// Progress record of one run, kept at `<output_dir>/ledger.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub config_hash: String,
    /// Sorted by language tag, then cell id.
    pub cells: Vec<CellEntry>,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl RunLedger {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut ledger: RunLedger = serde_json::from_str(&text)?;
        ledger.output_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(ledger)
    }

    pub fn path(&self) -> PathBuf {
        self.output_dir.join(LEDGER_FILE)
    }

    /// Replaces the ledger file atomically.
    pub fn write(&self) -> Result<()> {
        let path = self.path();
        let tmp = self.output_dir.join(format!("{LEDGER_FILE}.tmp"));
        let json = serde_json::to_string_pretty(self)?;
        fs::write(&tmp, json + "\n").map_err(|e| Error::file(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::file(&path, e))
    }

    pub fn count(&self, status: CellStatus) -> usize {
        self.cells.iter().filter(|c| c.status == status).count()
    }

    pub fn entry_mut(&mut self, language_tag: &str, cell_id: &str) -> Option<&mut CellEntry> {
        self.cells
            .iter_mut()
            .find(|c| c.language_tag == language_tag && c.cell_id == cell_id)
    }

    /// Whether a done cell still has all of its artifacts on disk.
    pub fn is_intact(&self, entry: &CellEntry) -> bool {
        entry.status == CellStatus::Done
            && !entry.artifacts.is_empty()
            && entry.artifacts.iter().all(|a| self.output_dir.join(a).is_file())
    }
}
