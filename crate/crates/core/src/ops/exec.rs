//! Interpreter for operation records. Live runs and replay share it, so a
//! committed record re-executes exactly as it did when it was generated.

use super::record::{FeatureCopy, Mutation, Op, OperationRecord};
use crate::addressing::{locate_ref, ref_for_location, resolve_feature_ref, AssetRef, Revision};
use crate::error::{Error, Result};
use crate::model::{key_within, AssetId, AssetNode, AssetTree, CloneTrace, NodeKind};

/// Every reference resolved while executing, with the node it hit.
pub type ResolutionLog = Vec<(AssetRef, AssetId)>;

struct PendingTrace {
    source: AssetRef,
    source_id: AssetId,
    target_id: AssetId,
}

struct Executor<'t> {
    tree: &'t mut AssetTree,
    root_op: String,
    before: Revision,
    after: Revision,
    log: ResolutionLog,
    pending: Vec<PendingTrace>,
}

/// Applies `rec` to `tree`, advancing it to `rec.revision_after`.
///
/// On error the tree may be partially modified; callers run this on a copy.
pub fn execute(tree: &mut AssetTree, rec: &OperationRecord) -> Result<ResolutionLog> {
    if tree.revision != rec.revision_before {
        return Err(Error::Inapplicable(format!(
            "{} expects revision {}, tree is at {}",
            rec.op_id, rec.revision_before, tree.revision
        )));
    }
    let mut ex = Executor {
        tree,
        root_op: rec.op_id.clone(),
        before: rec.revision_before,
        after: rec.revision_after,
        log: Vec::new(),
        pending: Vec::new(),
    };
    ex.apply(rec)?;
    ex.tree.revision = rec.revision_after;
    for p in std::mem::take(&mut ex.pending) {
        let loc = ex.tree.locate(p.target_id).ok_or(Error::NotInTree)?;
        let target = ref_for_location(ex.tree, &loc);
        ex.tree.traces.push(CloneTrace {
            source: p.source,
            target,
            source_id: p.source_id,
            target_id: p.target_id,
            origin_op: ex.root_op.clone(),
        })?;
    }
    Ok(ex.log)
}

/// Checks that each logged reference resolves to the node it hit when the
/// record ran, in the snapshot of the revision it cites.
pub fn verify_resolution(pre: &AssetTree, post: &AssetTree, log: &ResolutionLog) -> Result<()> {
    for (r, id) in log {
        let tree = if r.revision == pre.revision { pre } else { post };
        let loc = locate_ref(tree, r)?;
        let hit = tree.node(&loc).expect("located").id;
        if hit != *id {
            return Err(Error::Inapplicable(format!(
                "reference `{r}` does not denote the asset it addressed during execution"
            )));
        }
    }
    Ok(())
}

fn strip_mappings(node: &mut AssetNode, key: &str) {
    node.features.retain(|f| !key_within(f, key));
    for c in &mut node.children {
        strip_mappings(c, key);
    }
}

/// Relative locations of `node`'s subtree in preorder.
fn relative_locations(node: &AssetNode, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    out.push(prefix.clone());
    for (i, c) in node.children.iter().enumerate() {
        prefix.push(i);
        relative_locations(c, prefix, out);
        prefix.pop();
    }
}

/// Finds the leaf holding materialized line `line` below `node`.
fn leaf_for_line(node: &AssetNode, mut line: usize) -> Option<(Vec<usize>, usize)> {
    if node.children.is_empty() {
        return (line < node.content.len()).then(|| (Vec::new(), line));
    }
    for (i, c) in node.children.iter().enumerate() {
        let n = c.line_count();
        if line < n {
            let (mut rel, off) = leaf_for_line(c, line)?;
            rel.insert(0, i);
            return Some((rel, off));
        }
        line -= n;
    }
    None
}

impl Executor<'_> {
    fn resolve(&mut self, r: &AssetRef) -> Result<Vec<usize>> {
        if r.revision != self.before && r.revision != self.after {
            return Err(Error::StaleRef {
                reference: r.to_string(),
                cited: r.revision,
                current: self.before,
            });
        }
        let loc = locate_ref(self.tree, r)?;
        let id = self.tree.node(&loc).expect("located").id;
        self.log.push((r.clone(), id));
        Ok(loc)
    }

    fn apply(&mut self, rec: &OperationRecord) -> Result<()> {
        if rec.revision_before != self.before || rec.revision_after != self.after {
            return Err(Error::Inapplicable(format!(
                "sub-operation {} cites revisions outside its parent",
                rec.op_id
            )));
        }
        if rec.op.is_composite() {
            for sub in &rec.sub_ops {
                self.apply(sub)?;
            }
            return Ok(());
        }
        match &rec.op {
            Op::InsertAsset {
                parent,
                index,
                element,
            } => {
                let ploc = self.resolve(parent)?;
                let node = self.tree.instantiate(element);
                self.tree.insert_child(&ploc, *index, node)?;
            }
            Op::CloneAsset {
                source,
                parent,
                index,
                name,
                features,
            } => {
                let sloc = self.resolve(source)?;
                let original = self.tree.node(&sloc).expect("located").clone();
                let mut rel = Vec::new();
                relative_locations(&original, &mut Vec::new(), &mut rel);
                let source_refs: Vec<AssetRef> = rel
                    .iter()
                    .map(|r| {
                        let mut loc = sloc.clone();
                        loc.extend_from_slice(r);
                        let mut sref = ref_for_location(self.tree, &loc);
                        sref.revision = self.before;
                        sref
                    })
                    .collect();
                let (mut copy, pairs) = self
                    .tree
                    .copy_with_new_ids(&original, *features == FeatureCopy::All);
                if let Some(n) = name {
                    copy.name = n.clone();
                }
                let ploc = self.resolve(parent)?;
                self.tree.insert_child(&ploc, *index, copy)?;
                for ((source_id, target_id), sref) in pairs.into_iter().zip(source_refs) {
                    self.pending.push(PendingTrace {
                        source: sref,
                        source_id,
                        target_id,
                    });
                }
            }
            Op::RemoveAsset { target } => {
                let loc = self.resolve(target)?;
                let removed = self.tree.remove_at(&loc)?;
                for id in removed.ids() {
                    self.tree.traces.tombstone(id, self.after);
                }
            }
            Op::SetContent { target, lines } => {
                let loc = self.resolve(target)?;
                let node = self.tree.node_mut(&loc).expect("located");
                if !node.kind.carries_lines() || !node.children.is_empty() {
                    return Err(Error::NotMutable(target.to_string()));
                }
                node.content = lines.clone();
            }
            Op::MutateAsset { target, mutation } => {
                let loc = self.resolve(target)?;
                self.mutate(&loc, target, mutation)?;
            }
            Op::InsertFeatureTree { parent, feature } => {
                let (repo, key) = resolve_feature_ref(self.tree, parent)?;
                let model = self.tree.feature_model_mut(repo).expect("resolved");
                model.add_child(&key, feature.clone())?;
            }
            Op::RemoveFeatureTree { feature } => {
                let (repo, key) = resolve_feature_ref(self.tree, feature)?;
                let model = self.tree.feature_model_mut(repo).expect("resolved");
                model.remove(&key)?;
                strip_mappings(&mut self.tree.root.children[repo], &key);
            }
            Op::MapFeature { asset, feature } | Op::UnmapFeature { asset, feature } => {
                let loc = self.resolve(asset)?;
                let (repo, key) = resolve_feature_ref(self.tree, feature)?;
                if loc.first() != Some(&repo) {
                    return Err(Error::Inapplicable(format!(
                        "asset `{asset}` lies outside the repository of `{feature}`"
                    )));
                }
                let node = self.tree.node_mut(&loc).expect("located");
                if matches!(rec.op, Op::MapFeature { .. }) {
                    node.features.insert(key);
                } else {
                    node.features.remove(&key);
                }
            }
            Op::RegisterInclusion { donor, repo, files } => {
                if let Some(d) = self.tree.donors.get_mut(donor) {
                    d.include(repo, files.iter().cloned());
                }
            }
            Op::UnregisterInclusion {
                donor,
                repo,
                files,
                drop_slice,
            } => {
                if let Some(d) = self.tree.donors.get_mut(donor) {
                    if *drop_slice {
                        d.drop_slice(repo);
                    } else {
                        d.exclude(repo, files);
                    }
                }
            }
            other => unreachable!("{} is composite", other.kind()),
        }
        Ok(())
    }

    fn mutate(&mut self, loc: &[usize], target: &AssetRef, m: &Mutation) -> Result<()> {
        let node = self.tree.node(loc).expect("located");
        if node.kind != NodeKind::File {
            return Err(Error::NotMutable(target.to_string()));
        }
        let len = node.line_count();
        let (rel, off) = leaf_for_line(node, m.line()).ok_or_else(|| Error::BadIndex {
            target: target.to_string(),
            index: m.line(),
            len,
        })?;
        let mut leaf_loc = loc.to_vec();
        leaf_loc.extend_from_slice(&rel);
        let leaf_kind = self.tree.node(&leaf_loc).expect("located").kind;
        match (m, leaf_kind) {
            (Mutation::DeleteLine { .. }, NodeKind::Line) => {
                let removed = self.tree.remove_at(&leaf_loc)?;
                self.tree.traces.tombstone(removed.id, self.after);
            }
            (Mutation::AddLine { text, .. }, NodeKind::Line) => {
                let (idx, parent) = leaf_loc.split_last().expect("below the file");
                let line = AssetNode::new(self.tree.alloc_id(), NodeKind::Line, "")
                    .with_content(vec![text.clone()]);
                self.tree.insert_child(parent, *idx, line)?;
            }
            (m, _) => {
                let leaf = self.tree.node_mut(&leaf_loc).expect("located");
                match m {
                    Mutation::AddLine { text, .. } => leaf.content.insert(off, text.clone()),
                    Mutation::ReplaceLine { text, .. } => leaf.content[off] = text.clone(),
                    Mutation::DeleteLine { .. } => {
                        leaf.content.remove(off);
                    }
                }
            }
        }
        Ok(())
    }
}
