use std::path::Path;

use super::ledger::read_ledger;
use super::snapshot::Snapshot;
use crate::error::{Error, Result};
use crate::model::AssetTree;
use crate::ops::{execute, verify_resolution, OperationRecord};

/// Parses a revision-0 snapshot into the tree the ledger starts from.
pub fn initial_tree(rev0: &Path) -> Result<AssetTree> {
    Ok(Snapshot::read(rev0, None)?.to_tree())
}

/// Applies record number `k` (1-based) to a copy of `tree`, checking that
/// every reference cites the node it names.
pub fn replay_step(tree: &AssetTree, rec: &OperationRecord, k: usize) -> Result<AssetTree> {
    let diverged = |reason: String| Error::ReplayDivergence { record: k, reason };
    let mut next = tree.clone();
    let log = execute(&mut next, rec).map_err(|e| diverged(format!("{}: {e}", rec.op_id)))?;
    verify_resolution(tree, &next, &log).map_err(|e| diverged(format!("{}: {e}", rec.op_id)))?;
    Ok(next)
}

/// Replays a ledger on top of a revision-0 snapshot; `each` sees the tree
/// after every record.
pub fn replay_with(
    rev0: &Path,
    ledger: &Path,
    mut each: impl FnMut(&OperationRecord, &AssetTree) -> Result<()>,
) -> Result<AssetTree> {
    let mut tree = initial_tree(rev0)?;
    for (i, rec) in read_ledger(ledger)?.iter().enumerate() {
        tree = replay_step(&tree, rec, i + 1)?;
        each(rec, &tree)?;
    }
    Ok(tree)
}

pub fn replay(rev0: &Path, ledger: &Path) -> Result<AssetTree> {
    replay_with(rev0, ledger, |_, _| Ok(()))
}
