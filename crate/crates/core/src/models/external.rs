//! Adapter for segmenters that run as external processes.
//!
//! The command is run through `sh -c` with three positional arguments
//! (training file, input file, output file), also exported as
//! `MORPHSPLIT_TRAIN`, `MORPHSPLIT_INPUT` and `MORPHSPLIT_OUTPUT`, plus
//! `MORPHSPLIT_SEED`. Files use space-separated graphemes with `!` marking
//! morpheme boundaries:
//!
//! ```text
//! train:  a v o c a d o s<TAB>a v o c a d o ! s
//! input:  a v o c a d o s
//! output: a v o c a d o ! s
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::corpus::{graphemes, SegmentedWord};
use crate::error::{Error, Result};

pub const BOUNDARY: &str = "!";

/// Training data and command for a process-backed segmenter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalModel {
    pub command: String,
    pub train: Vec<SegmentedWord>,
    pub seed: u64,
}

impl ExternalModel {
    pub fn segment_all(&self, surfaces: &[&str]) -> Result<Vec<SegmentedWord>> {
        external_segment(&self.command, &self.train, surfaces, self.seed)
    }
}

/// Surface as space-separated graphemes.
pub fn wire_chars(surface: &str) -> String {
    graphemes(surface).join(" ")
}

/// Segmented word with ` ! ` between morphemes.
pub fn wire_segmented(word: &SegmentedWord) -> String {
    word.morphemes()
        .iter()
        .map(|m| wire_chars(m))
        .collect::<Vec<_>>()
        .join(&format!(" {BOUNDARY} "))
}

/// Reads one output line for `surface`, checking that it spells the surface.
pub fn parse_wire(line: &str, surface: &str) -> Result<SegmentedWord> {
    let adapter = |message: String| Error::Adapter {
        message,
        stderr: String::new(),
    };
    let mut morphemes = vec![String::new()];
    for token in line.split_whitespace() {
        if token == BOUNDARY {
            morphemes.push(String::new());
        } else {
            morphemes.last_mut().expect("non-empty").push_str(token);
        }
    }
    if morphemes.iter().any(|m| m.is_empty()) {
        return Err(adapter(format!("malformed output `{line}` for `{surface}`")));
    }
    SegmentedWord::new(surface, morphemes).map_err(|_| adapter(format!("output `{line}` does not spell `{surface}`")))
}

static SCRATCH_COUNTER: AtomicU64 = AtomicU64::new(0);

struct ScratchDir(PathBuf);

impl ScratchDir {
    fn new() -> Result<Self> {
        let base = std::env::temp_dir();
        loop {
            let n = SCRATCH_COUNTER.fetch_add(1, Ordering::Relaxed);
            let dir = base.join(format!("morphsplit-ext-{}-{n}", std::process::id()));
            match fs::create_dir(&dir) {
                Ok(()) => return Ok(Self(dir)),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(Error::file(dir, e)),
            }
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for ScratchDir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<()> {
    let mut text = String::new();
    for l in lines {
        text.push_str(&l);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::file(path, e))
}

/// Trains and runs an external segmenter in one process invocation.
pub fn external_segment(
    command: &str,
    train: &[SegmentedWord],
    inputs: &[&str],
    seed: u64,
) -> Result<Vec<SegmentedWord>> {
    if command.trim().is_empty() {
        return Err(Error::Config("external command is empty".into()));
    }
    for s in inputs.iter().copied().chain(train.iter().map(|w| w.surface())) {
        if graphemes(s).iter().any(|g| *g == BOUNDARY || g.trim().is_empty()) {
            return Err(Error::Adapter {
                message: format!("`{s}` contains a character the wire format cannot carry"),
                stderr: String::new(),
            });
        }
    }
    let dir = ScratchDir::new()?;
    let (train_path, input_path, output_path) = (dir.path("train.txt"), dir.path("input.txt"), dir.path("output.txt"));
    write_lines(
        &train_path,
        train
            .iter()
            .map(|w| format!("{}\t{}", wire_chars(w.surface()), wire_segmented(w))),
    )?;
    write_lines(&input_path, inputs.iter().map(|s| wire_chars(s)))?;

    let out = Command::new("sh")
        .arg("-c")
        .arg(command)
        .arg("sh")
        .arg(&train_path)
        .arg(&input_path)
        .arg(&output_path)
        .env("MORPHSPLIT_TRAIN", &train_path)
        .env("MORPHSPLIT_INPUT", &input_path)
        .env("MORPHSPLIT_OUTPUT", &output_path)
        .env("MORPHSPLIT_SEED", seed.to_string())
        .output()
        .map_err(|e| Error::Adapter {
            message: format!("could not start `{command}`: {e}"),
            stderr: String::new(),
        })?;
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    if !out.status.success() {
        return Err(Error::Adapter {
            message: format!("`{command}` exited with {}", out.status),
            stderr,
        });
    }
    let text = fs::read_to_string(&output_path).map_err(|e| Error::Adapter {
        message: format!("no readable output file: {e}"),
        stderr: stderr.clone(),
    })?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != inputs.len() {
        return Err(Error::Adapter {
            message: format!("expected {} output lines, got {}", inputs.len(), lines.len()),
            stderr,
        });
    }
    lines
        .iter()
        .zip(inputs)
        .map(|(line, surface)| {
            parse_wire(line, surface).map_err(|e| match e {
                Error::Adapter { message, .. } => Error::Adapter {
                    message,
                    stderr: stderr.clone(),
                },
                other => other,
            })
        })
        .collect()
}
