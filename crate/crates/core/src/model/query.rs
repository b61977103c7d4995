use super::{key_within, AssetId, AssetTree, CloneTrace};
use crate::addressing::{make_asset_ref, ref_for_location, resolve_asset_ref, resolve_feature_ref, AssetRef, FeatureRef};
use crate::error::{Error, Result};

/// Locations (document order) of assets in repository `repo_idx` whose
/// mappings are non-empty and all fall within the subtree of `key`.
pub fn feature_exclusive_ids(tree: &AssetTree, repo_idx: usize, key: &str) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let Some(repo) = tree.root.children.get(repo_idx) else {
        return out;
    };
    let mut loc = vec![repo_idx];
    collect_exclusive(repo, key, &mut loc, &mut out);
    out
}

fn collect_exclusive(node: &super::AssetNode, key: &str, loc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if !node.features.is_empty() && node.features.iter().all(|f| key_within(f, key)) {
        out.push(loc.clone());
    }
    for (i, c) in node.children.iter().enumerate() {
        loc.push(i);
        collect_exclusive(c, key, loc, out);
        loc.pop();
    }
}

/// Assets mapped only to `feature` or its descendants.
pub fn feature_exclusive_assets(tree: &AssetTree, feature: &FeatureRef) -> Result<Vec<AssetRef>> {
    let (repo_idx, key) = resolve_feature_ref(tree, feature)?;
    Ok(feature_exclusive_ids(tree, repo_idx, &key)
        .iter()
        .map(|l| ref_for_location(tree, l))
        .collect())
}

/// Appends a trace between two assets of the current revision.
pub fn record_clone_trace(
    tree: &mut AssetTree,
    source: &AssetRef,
    target: &AssetRef,
    op_id: &str,
) -> Result<CloneTrace> {
    let source_id = resolve_asset_ref(tree, source)?;
    let target_id = resolve_asset_ref(tree, target)?;
    if source_id == target_id {
        return Err(Error::SelfTrace(source.to_string()));
    }
    let trace = CloneTrace {
        source: make_asset_ref(tree, source_id)?,
        target: make_asset_ref(tree, target_id)?,
        source_id,
        target_id,
        origin_op: op_id.to_string(),
    };
    tree.traces.push(trace.clone())?;
    Ok(trace)
}

fn repo_id(tree: &AssetTree, name: &str) -> Option<AssetId> {
    tree.repository(name).map(|(_, r)| r.id)
}

/// True if `descendant` was cloned, directly or transitively, from `ancestor`.
pub fn repo_descends_from(tree: &AssetTree, ancestor: &str, descendant: &str) -> bool {
    match (repo_id(tree, ancestor), repo_id(tree, descendant)) {
        (Some(a), Some(d)) if a != d => tree.traces.forward_reachable(a).contains(&d),
        _ => false,
    }
}

/// True if either repository originated from the other.
pub fn repos_related(tree: &AssetTree, a: &str, b: &str) -> bool {
    a == b || repo_descends_from(tree, a, b) || repo_descends_from(tree, b, a)
}

/// The live asset in repository `target_repo` connected to `id` by a chain
/// of traces, following clones forward first and originals second.
pub fn corresponding_id(tree: &AssetTree, id: AssetId, target_repo: usize) -> Option<AssetId> {
    let in_target = |cand: &AssetId| {
        tree.locate(*cand)
            .is_some_and(|l| l.first() == Some(&target_repo))
    };
    if let Some(loc) = tree.locate(id) {
        if loc.first() == Some(&target_repo) {
            return Some(id);
        }
    }
    tree.traces
        .forward_reachable(id)
        .into_iter()
        .find(in_target)
        .or_else(|| tree.traces.backward_reachable(id).into_iter().find(in_target))
}

/// Resolves the counterpart of `asset` in `target_repo`, or `None` if the
/// asset has no traced copy there (e.g. it was created after the clone).
pub fn corresponding_asset(tree: &AssetTree, asset: &AssetRef, target_repo: &str) -> Result<Option<AssetRef>> {
    let id = resolve_asset_ref(tree, asset)?;
    let source_repo = asset
        .repository()
        .ok_or_else(|| Error::DanglingRef(asset.to_string()))?
        .to_string();
    let (target_idx, _) = tree
        .repository(target_repo)
        .ok_or_else(|| Error::UnrelatedRepositories(source_repo.clone(), target_repo.to_string()))?;
    if !repos_related(tree, &source_repo, target_repo) {
        return Err(Error::UnrelatedRepositories(source_repo, target_repo.to_string()));
    }
    corresponding_id(tree, id, target_idx)
        .map(|cid| make_asset_ref(tree, cid))
        .transpose()
}
