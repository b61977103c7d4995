//! Post-hoc audit of a history directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::FeatureFile;
use super::layout::{features_path, list_revisions, revision_dir, revision_name, LEDGER_FILE, TRACES_FILE};
use super::ledger::{parse_ledger_line, parse_trace_line, read_lines, trace_line, LedgerLine};
use super::replay::{initial_tree, replay_step};
use super::snapshot::Snapshot;
use super::writer::read_run_file;
use crate::addressing::Revision;
use crate::error::Error;
use crate::model::AssetTree;
use crate::runner::{CheckerSpec, CompilabilityCheck};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Check {
    Layout,
    Ledger,
    RefResolution,
    ReplayFidelity,
    GroundTruth,
    Compilability,
    TraceConsistency,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub check: Check,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<Revision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<String>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationReport {
    pub revisions_checked: usize,
    pub records_replayed: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    fn flag(&mut self, check: Check, revision: Option<Revision>, record: Option<&str>, detail: impl Into<String>) {
        self.violations.push(Violation {
            check,
            revision,
            record: record.map(str::to_string),
            detail: detail.into(),
        });
    }
}

fn snapshot_diff(expected: &Snapshot, found: &Snapshot) -> Vec<String> {
    let mut diff = Vec::new();
    for (p, lines) in &expected.files {
        match found.files.get(p) {
            None => diff.push(format!("missing {p}")),
            Some(l) if l != lines => diff.push(format!("content of {p}")),
            _ => {}
        }
    }
    diff.extend(found.files.keys().filter(|p| !expected.files.contains_key(*p)).map(|p| format!("unexpected {p}")));
    diff.extend(expected.dirs.symmetric_difference(&found.dirs).map(|d| format!("directory {d}")));
    diff
}

struct Auditor<'a> {
    out: &'a Path,
    checker: Box<dyn CompilabilityCheck>,
    report: ValidationReport,
}

impl Auditor<'_> {
    /// Compares a replayed tree with the stored snapshot and feature file.
    fn compare(&mut self, tree: &AssetTree, record: Option<&str>) {
        let rev = tree.revision;
        let dir = revision_dir(self.out, rev);
        match Snapshot::read(&dir, None) {
            Ok(found) => {
                let diff = snapshot_diff(&Snapshot::of(tree), &found);
                if !diff.is_empty() {
                    let shown: Vec<_> = diff.iter().take(5).cloned().collect();
                    self.report.flag(
                        Check::ReplayFidelity,
                        Some(rev),
                        record,
                        format!("replay differs from revisions/{}: {}", revision_name(rev), shown.join(", ")),
                    );
                }
            }
            Err(e) => self.report.flag(Check::Layout, Some(rev), record, e.to_string()),
        }
        let path = features_path(self.out, rev);
        let stored = fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|t| FeatureFile::parse(&t).map_err(|e| e.to_string()));
        match stored {
            Ok(ff) if ff == FeatureFile::of(tree) => {}
            Ok(_) => self.report.flag(
                Check::GroundTruth,
                Some(rev),
                record,
                format!("features/{}.json does not match the replayed mappings", revision_name(rev)),
            ),
            Err(e) => self.report.flag(Check::Layout, Some(rev), record, format!("{}: {e}", path.display())),
        }
    }

    fn check_compilability(&mut self, revisions: &[Revision]) {
        for &rev in revisions {
            let dir = revision_dir(self.out, rev);
            let Ok(snap) = Snapshot::read(&dir, None) else {
                continue;
            };
            if let Err(reason) = self.checker.check(&snap) {
                self.report.flag(Check::Compilability, Some(rev), None, reason);
            }
        }
    }

    fn check_traces(&mut self, replayed: &AssetTree) {
        let mut expected: BTreeMap<String, i64> = BTreeMap::new();
        for t in replayed.traces.all() {
            *expected.entry(trace_line(t)).or_default() += 1;
        }
        let lines = match read_lines(&self.out.join(TRACES_FILE)) {
            Ok(l) => l,
            Err(e) => {
                self.report.flag(Check::Layout, None, None, e.to_string());
                return;
            }
        };
        for line in lines {
            match parse_trace_line(&line) {
                Ok(t) => *expected.entry(trace_line(&t)).or_default() -= 1,
                Err(e) => self.report.flag(Check::TraceConsistency, None, None, format!("malformed trace line: {e}")),
            }
        }
        for (line, n) in expected {
            let origin = parse_trace_line(&line).map(|t| t.origin_op).ok();
            for _ in 0..n.abs() {
                let detail = if n > 0 {
                    format!("trace missing from {TRACES_FILE}: {line}")
                } else {
                    format!("trace not produced by replay: {line}")
                };
                self.report.flag(Check::TraceConsistency, None, origin.as_deref(), detail);
            }
        }
    }
}

/// Audits `out`: layout density, ledger consistency, replay fidelity with
/// reference checks, feature files, compilability and traces.
pub fn validate_history(out: &Path) -> ValidationReport {
    let mut report = ValidationReport::default();
    let run = match read_run_file(out) {
        Ok(r) => Some(r),
        Err(e) => {
            report.flag(Check::Layout, None, None, format!("run.json: {e}"));
            None
        }
    };
    let checker = run.as_ref().map(|r| r.config.checker.clone()).unwrap_or(CheckerSpec::Bundled).build();
    let mut a = Auditor { out, checker, report };

    let mut revisions = Vec::new();
    match list_revisions(out) {
        Ok(list) => {
            for entry in list {
                match entry {
                    Ok(r) => revisions.push(r),
                    Err(name) => a.report.flag(Check::Layout, None, None, format!("stray entry revisions/{name}")),
                }
            }
        }
        Err(e) => a.report.flag(Check::Layout, None, None, format!("revisions: {e}")),
    }
    for (i, r) in revisions.iter().enumerate() {
        if *r as usize != i {
            a.report.flag(Check::Layout, Some(*r), None, format!("revision ids are not dense at {}", revision_name(*r)));
            break;
        }
    }
    a.report.revisions_checked = revisions.len();

    let lines = match read_lines(&out.join(LEDGER_FILE)) {
        Ok(l) => l,
        Err(e) => {
            a.report.flag(Check::Layout, None, None, e.to_string());
            Vec::new()
        }
    };
    let mut records = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        match parse_ledger_line(line) {
            Ok(LedgerLine::Record(r)) => records.push(*r),
            Ok(LedgerLine::Truncated(reason)) => {
                a.report.flag(Check::Ledger, None, None, format!("ledger truncated: {reason}"));
                break;
            }
            Err(e) => {
                a.report.flag(Check::Ledger, Some(i as Revision + 1), None, format!("malformed ledger line {}: {e}", i + 1));
                break;
            }
        }
    }
    if let Some(run) = &run {
        if run.summary.committed != records.len() as u64 {
            a.report.flag(
                Check::Ledger,
                None,
                None,
                format!("run.json reports {} commits, ledger holds {}", run.summary.committed, records.len()),
            );
        }
    }
    if revisions.len() != records.len() + 1 {
        a.report.flag(
            Check::Layout,
            None,
            None,
            format!("{} revision directories for {} ledger records", revisions.len(), records.len()),
        );
    }

    match initial_tree(&revision_dir(out, 0)) {
        Ok(mut tree) => {
            a.compare(&tree, None);
            for (i, rec) in records.iter().enumerate() {
                if rec.revision_after as usize != i + 1 {
                    a.report.flag(
                        Check::Ledger,
                        Some(rec.revision_after),
                        Some(&rec.op_id),
                        format!("record {} cites revision {}", i + 1, rec.revision_after),
                    );
                }
                match replay_step(&tree, rec, i + 1) {
                    Ok(next) => {
                        tree = next;
                        a.report.records_replayed += 1;
                        a.compare(&tree, Some(&rec.op_id));
                    }
                    Err(Error::ReplayDivergence { reason, .. }) => {
                        a.report.flag(Check::RefResolution, Some(rec.revision_after), Some(&rec.op_id), reason);
                        break;
                    }
                    Err(e) => {
                        a.report.flag(Check::RefResolution, Some(rec.revision_after), Some(&rec.op_id), e.to_string());
                        break;
                    }
                }
            }
            a.check_traces(&tree);
        }
        Err(e) => a.report.flag(Check::Layout, Some(0), None, format!("revision 0: {e}")),
    }
    a.check_compilability(&revisions);
    a.report
}
