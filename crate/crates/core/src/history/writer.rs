use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::features::FeatureFile;
use super::layout::{features_path, revision_dir, DEBUG_FILE, FEATURES_DIR, LEDGER_FILE, REVISIONS_DIR, RUN_FILE, TRACES_FILE};
use super::ledger::{trace_line, TruncationMarker};
use super::snapshot::Snapshot;
use crate::error::{Error, Result};
use crate::model::AssetTree;
use crate::ops::{OperationRecord, SCHEMA_VERSION};
use crate::runner::{AttemptLog, HistorySink, RunConfig, RunSummary};

/// Contents of `run.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub schema: u32,
    pub config: RunConfig,
    pub summary: RunSummary,
}

#[derive(Serialize)]
struct DebugLine<'a> {
    schema: u32,
    #[serde(flatten)]
    entry: &'a AttemptLog,
}

/// Writes a run's history directory.
pub struct HistoryWriter {
    out: PathBuf,
    traces_written: usize,
}

fn append(path: &Path, line: &str) -> Result<()> {
    let mut f = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(|e| Error::ledger_io(path, e))?;
    let mut buf = String::with_capacity(line.len() + 1);
    buf.push_str(line);
    buf.push('\n');
    f.write_all(buf.as_bytes()).map_err(|e| Error::ledger_io(path, e))
}

pub fn write_revision(out: &Path, tree: &AssetTree, snapshot: &Snapshot) -> Result<()> {
    snapshot.write(&revision_dir(out, tree.revision))?;
    let p = features_path(out, tree.revision);
    fs::write(&p, FeatureFile::of(tree).to_text()).map_err(|e| Error::snapshot_io(&p, e))
}

impl HistoryWriter {
    /// Prepares `out`, which must be absent or empty.
    pub fn create(out: &Path) -> Result<HistoryWriter> {
        if out.exists() {
            let mut entries = fs::read_dir(out).map_err(|e| Error::snapshot_io(out, e))?;
            if entries.next().is_some() {
                return Err(Error::Config(format!("output directory {} is not empty", out.display())));
            }
        }
        for d in [REVISIONS_DIR, FEATURES_DIR] {
            let p = out.join(d);
            fs::create_dir_all(&p).map_err(|e| Error::snapshot_io(&p, e))?;
        }
        for f in [LEDGER_FILE, TRACES_FILE, DEBUG_FILE] {
            let p = out.join(f);
            File::create(&p).map_err(|e| Error::ledger_io(&p, e))?;
        }
        Ok(HistoryWriter {
            out: out.to_path_buf(),
            traces_written: 0,
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    fn commit_inner(&mut self, record: &OperationRecord, tree: &AssetTree, snapshot: &Snapshot) -> Result<()> {
        write_revision(&self.out, tree, snapshot)?;
        append(&self.out.join(LEDGER_FILE), &record.to_line())?;
        let fresh = &tree.traces.all()[self.traces_written..];
        if !fresh.is_empty() {
            let lines: Vec<String> = fresh.iter().map(trace_line).collect();
            append(&self.out.join(TRACES_FILE), &lines.join("\n"))?;
        }
        self.traces_written = tree.traces.len();
        Ok(())
    }

    /// Best effort: the run is already failing.
    fn mark_truncated(&self, err: &Error) {
        let marker = serde_json::to_string(&TruncationMarker::new(err.to_string())).expect("serializable");
        let _ = append(&self.out.join(LEDGER_FILE), &marker);
    }

    fn guarded(&self, r: Result<()>) -> Result<()> {
        if let Err(e) = &r {
            self.mark_truncated(e);
        }
        r
    }
}

impl HistorySink for HistoryWriter {
    fn initial(&mut self, tree: &AssetTree, snapshot: &Snapshot) -> Result<()> {
        let r = write_revision(&self.out, tree, snapshot);
        self.traces_written = tree.traces.len();
        self.guarded(r)
    }

    fn commit(&mut self, record: &OperationRecord, tree: &AssetTree, snapshot: &Snapshot) -> Result<()> {
        let r = self.commit_inner(record, tree, snapshot);
        self.guarded(r)
    }

    fn attempt(&mut self, entry: &AttemptLog) -> Result<()> {
        let line = serde_json::to_string(&DebugLine {
            schema: SCHEMA_VERSION,
            entry,
        })?;
        let r = append(&self.out.join(DEBUG_FILE), &line);
        self.guarded(r)
    }

    fn finish(&mut self, config: &RunConfig, summary: &RunSummary) -> Result<()> {
        let run = RunFile {
            schema: SCHEMA_VERSION,
            config: config.clone(),
            summary: summary.clone(),
        };
        let mut text = serde_json::to_string_pretty(&run)?;
        text.push('\n');
        let p = self.out.join(RUN_FILE);
        let r = fs::write(&p, text).map_err(|e| Error::ledger_io(&p, e));
        self.guarded(r)
    }
}

pub fn read_run_file(out: &Path) -> Result<RunFile> {
    let p = out.join(RUN_FILE);
    let text = fs::read_to_string(&p).map_err(|e| Error::ledger_io(&p, e))?;
    Ok(serde_json::from_str(&text)?)
}

