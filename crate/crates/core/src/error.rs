use std::path::PathBuf;

use thiserror::Error;

use crate::addressing::Revision;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("ambiguous feature reference `{0}`")]
    AmbiguousFeature(String),
    #[error("a clone trace cannot point from an asset to itself ({0})")]
    SelfTrace(String),
    #[error("repositories `{0}` and `{1}` are not related by clone traces")]
    UnrelatedRepositories(String, String),
    #[error("node is not part of the asset tree")]
    NotInTree,
    #[error("reference `{reference}` was minted at revision {cited}, tree is at revision {current}")]
    StaleRef {
        reference: String,
        cited: Revision,
        current: Revision,
    },
    #[error("reference `{0}` does not resolve")]
    DanglingRef(String),
    #[error("the root feature cannot be removed")]
    CannotRemoveRoot,
    #[error("line index {index} out of range for `{target}` ({len} lines)")]
    BadIndex {
        target: String,
        index: usize,
        len: usize,
    },
    #[error("asset `{0}` has no mutable content")]
    NotMutable(String),
    #[error("repository `{0}` already exists")]
    DuplicateRepository(String),
    #[error("feature `{0}` is already present in the target")]
    AlreadyPresent(String),
    #[error("asset `{0}` already exists")]
    DuplicateAsset(String),
    #[error("test `{0}` is not modular")]
    NotModular(String),
    #[error("unknown test candidate `{0}`")]
    UnknownTest(String),
    #[error("missing dependency `{import}` required by `{file}`")]
    MissingDependency { file: String, import: String },
    #[error("insertion point `{0}` is not a method-level position in the initial system")]
    ForbiddenInsertionPoint(String),
    #[error("slice file `{0}` conflicts with an existing asset")]
    SliceConflict(String),
    #[error("manifest parse error at line {line}: {message}")]
    ManifestParse { line: usize, message: String },
    #[error("cannot read donor project at {path}: {source}")]
    DonorIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed generator distribution: {0}")]
    BadDistribution(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("initial system does not pass the compilability check: {0}")]
    InvalidInitialSystem(String),
    #[error("snapshot I/O error at {path}: {source}")]
    SnapshotIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("ledger I/O error at {path}: {source}")]
    LedgerIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("replay diverged at record {record}: {reason}")]
    ReplayDivergence { record: usize, reason: String },
    #[error("invalid history: {0}")]
    InvalidHistory(String),
    #[error("operation cannot be applied: {0}")]
    Inapplicable(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn snapshot_io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::SnapshotIo {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn ledger_io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::LedgerIo {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the file system rather than by the content.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::SnapshotIo { .. } | Error::LedgerIo { .. } | Error::DonorIo { .. }
        )
    }
}
