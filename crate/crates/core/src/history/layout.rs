use std::path::{Path, PathBuf};

use crate::addressing::Revision;

pub const REVISIONS_DIR: &str = "revisions";
pub const FEATURES_DIR: &str = "features";
pub const LEDGER_FILE: &str = "ledger.ndjson";
pub const TRACES_FILE: &str = "traces.ndjson";
pub const DEBUG_FILE: &str = "debug.ndjson";
pub const RUN_FILE: &str = "run.json";

/// Zero-padded revision directory name.
pub fn revision_name(rev: Revision) -> String {
    format!("{rev:04}")
}

pub fn revision_dir(out: &Path, rev: Revision) -> PathBuf {
    out.join(REVISIONS_DIR).join(revision_name(rev))
}

pub fn features_path(out: &Path, rev: Revision) -> PathBuf {
    out.join(FEATURES_DIR).join(format!("{}.json", revision_name(rev)))
}

/// Revision numbers present under `revisions/`, ascending. Entries that are
/// not zero-padded numbers are returned as `Err(name)`.
pub fn list_revisions(out: &Path) -> std::io::Result<Vec<Result<Revision, String>>> {
    let mut names: Vec<String> = std::fs::read_dir(out.join(REVISIONS_DIR))?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<std::io::Result<_>>()?;
    names.retain(|n| !n.starts_with('.'));
    names.sort();
    let mut out: Vec<Result<Revision, String>> = names
        .into_iter()
        .map(|n| match n.parse::<Revision>() {
            Ok(r) if revision_name(r) == n => Ok(r),
            _ => Err(n),
        })
        .collect();
    out.sort_by_key(|r| match r {
        Ok(n) => (0, *n, String::new()),
        Err(s) => (1, 0, s.clone()),
    });
    Ok(out)
}
