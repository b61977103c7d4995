//! The on-disk history: snapshots, ledger, traces, feature files, replay
//! and validation.

mod features;
mod layout;
mod ledger;
mod replay;
mod snapshot;
mod validate;
mod writer;

pub use features::{FeatureFile, Mapping, RepoFeatures};
pub use layout::{
    features_path, list_revisions, revision_dir, revision_name, DEBUG_FILE, FEATURES_DIR, LEDGER_FILE, REVISIONS_DIR,
    RUN_FILE, TRACES_FILE,
};
pub use ledger::{parse_ledger_line, parse_trace_line, read_ledger, read_lines, trace_line, LedgerLine, TruncationMarker};
pub use replay::{initial_tree, replay, replay_step, replay_with};
pub use snapshot::{file_text, Snapshot};
pub use validate::{validate_history, Check, ValidationReport, Violation};
pub use writer::{read_run_file, write_revision, HistoryWriter, RunFile};
