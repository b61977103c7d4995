use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::AssetId;
use crate::addressing::{AssetRef, Revision};
use crate::error::{Error, Result};

/// Directed provenance link from an original asset to its clone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloneTrace {
    pub source: AssetRef,
    pub target: AssetRef,
    pub source_id: AssetId,
    pub target_id: AssetId,
    pub origin_op: String,
}

/// Append-only trace store. Removed assets are tombstoned with the revision
/// at which they vanished; their traces stay queryable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDb {
    traces: Vec<CloneTrace>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    tombstones: BTreeMap<AssetId, Revision>,
}

impl TraceDb {
    pub fn push(&mut self, trace: CloneTrace) -> Result<()> {
        if trace.source_id == trace.target_id || trace.source == trace.target {
            return Err(Error::SelfTrace(trace.source.to_string()));
        }
        self.traces.push(trace);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn all(&self) -> &[CloneTrace] {
        &self.traces
    }

    pub fn by_source(&self, r: &AssetRef) -> Vec<&CloneTrace> {
        self.traces.iter().filter(|t| &t.source == r).collect()
    }

    pub fn by_target(&self, r: &AssetRef) -> Vec<&CloneTrace> {
        self.traces.iter().filter(|t| &t.target == r).collect()
    }

    pub fn by_op(&self, op: &str) -> Vec<&CloneTrace> {
        self.traces.iter().filter(|t| t.origin_op == op).collect()
    }

    pub fn tombstone(&mut self, id: AssetId, revision: Revision) {
        self.tombstones.entry(id).or_insert(revision);
    }

    /// Revision at which the asset disappeared, if it did.
    pub fn removed_at(&self, id: AssetId) -> Option<Revision> {
        self.tombstones.get(&id).copied()
    }

    /// Ids reachable from `id` by following traces forward, nearest first.
    pub fn forward_reachable(&self, id: AssetId) -> Vec<AssetId> {
        self.bfs(id, |t| (t.source_id, t.target_id))
    }

    /// Ids reachable from `id` by following traces backward, nearest first.
    pub fn backward_reachable(&self, id: AssetId) -> Vec<AssetId> {
        self.bfs(id, |t| (t.target_id, t.source_id))
    }

    fn bfs(&self, start: AssetId, edge: impl Fn(&CloneTrace) -> (AssetId, AssetId)) -> Vec<AssetId> {
        let mut adj: BTreeMap<AssetId, Vec<AssetId>> = BTreeMap::new();
        for t in &self.traces {
            let (a, b) = edge(t);
            adj.entry(a).or_default().push(b);
        }
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        let mut out = Vec::new();
        while let Some(n) = queue.pop_front() {
            for &m in adj.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(m) {
                    out.push(m);
                    queue.push_back(m);
                }
            }
        }
        out
    }
}
