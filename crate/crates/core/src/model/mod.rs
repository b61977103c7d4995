//! The asset tree: the single mutable world state of a generation run.

mod donor;
mod feature;
mod query;
mod trace;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use donor::{DepTarget, DonorProject, DonorSource, ModuleGraph, TestCandidate};
pub use feature::{key_within, sanitize_feature_name, Feature, FeatureModel};
pub use query::{
    corresponding_asset, corresponding_id, feature_exclusive_assets, feature_exclusive_ids,
    record_clone_trace, repos_related, repo_descends_from,
};
pub use trace::{CloneTrace, TraceDb};

use crate::addressing::Revision;
use crate::error::{Error, Result};

/// Stable identity of a node for the lifetime of a run. Ids are allocated
/// from a counter in a deterministic order, so replaying a ledger reproduces
/// them exactly. They never appear in published references.
pub type AssetId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Root,
    Repository,
    Folder,
    File,
    Block,
    Line,
}

impl NodeKind {
    pub fn is_filesystem(self) -> bool {
        matches!(
            self,
            NodeKind::Root | NodeKind::Repository | NodeKind::Folder | NodeKind::File
        )
    }

    /// Kinds whose text is materialized into a file.
    pub fn carries_lines(self) -> bool {
        matches!(self, NodeKind::File | NodeKind::Block | NodeKind::Line)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetNode {
    pub id: AssetId,
    pub kind: NodeKind,
    pub name: String,
    /// Text lines of a leaf; structured nodes keep their text in children.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub content: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<AssetNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_model: Option<FeatureModel>,
    /// Keys (in the enclosing repository's model) of the features this asset maps to.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub features: BTreeSet<String>,
}

impl AssetNode {
    pub fn new(id: AssetId, kind: NodeKind, name: impl Into<String>) -> Self {
        AssetNode {
            id,
            kind,
            name: name.into(),
            content: Vec::new(),
            children: Vec::new(),
            feature_model: None,
            features: BTreeSet::new(),
        }
    }

    pub fn with_content(mut self, content: Vec<String>) -> Self {
        self.content = content;
        self
    }

    /// Materialized text of a line-bearing node, in child order.
    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut Vec<String>) {
        if self.children.is_empty() {
            out.extend(self.content.iter().cloned());
        } else {
            for c in &self.children {
                c.render_into(out);
            }
        }
    }

    pub fn line_count(&self) -> usize {
        if self.children.is_empty() {
            self.content.len()
        } else {
            self.children.iter().map(AssetNode::line_count).sum()
        }
    }

    pub fn descendant_count(&self) -> usize {
        self.children
            .iter()
            .map(|c| 1 + c.descendant_count())
            .sum()
    }

    /// Equality over kind, name, content and child order, ignoring ids,
    /// feature models and mappings.
    pub fn structurally_eq(&self, other: &AssetNode) -> bool {
        self.kind == other.kind
            && self.name == other.name
            && self.content == other.content
            && self.children.len() == other.children.len()
            && self
                .children
                .iter()
                .zip(&other.children)
                .all(|(a, b)| a.structurally_eq(b))
    }

    pub fn find_child(&self, kind_fs: bool, name: &str) -> Option<usize> {
        self.children
            .iter()
            .position(|c| c.kind.is_filesystem() == kind_fs && c.name == name)
    }

    fn walk<'a, F: FnMut(&[usize], &'a AssetNode)>(&'a self, loc: &mut Vec<usize>, f: &mut F) {
        f(loc, self);
        for (i, c) in self.children.iter().enumerate() {
            loc.push(i);
            c.walk(loc, f);
            loc.pop();
        }
    }

    fn ids_into(&self, out: &mut Vec<AssetId>) {
        out.push(self.id);
        for c in &self.children {
            c.ids_into(out);
        }
    }

    /// Ids of this node and all descendants, preorder.
    pub fn ids(&self) -> Vec<AssetId> {
        let mut out = Vec::new();
        self.ids_into(&mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetTree {
    pub root: AssetNode,
    pub revision: Revision,
    pub traces: TraceDb,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub donors: BTreeMap<String, DonorProject>,
    next_id: AssetId,
}

impl Default for AssetTree {
    fn default() -> Self {
        Self::new()
    }
}

impl AssetTree {
    pub fn new() -> Self {
        AssetTree {
            root: AssetNode::new(0, NodeKind::Root, ""),
            revision: 0,
            traces: TraceDb::default(),
            donors: BTreeMap::new(),
            next_id: 1,
        }
    }

    pub fn alloc_id(&mut self) -> AssetId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn node(&self, loc: &[usize]) -> Option<&AssetNode> {
        let mut n = &self.root;
        for &i in loc {
            n = n.children.get(i)?;
        }
        Some(n)
    }

    pub fn node_mut(&mut self, loc: &[usize]) -> Option<&mut AssetNode> {
        let mut n = &mut self.root;
        for &i in loc {
            n = n.children.get_mut(i)?;
        }
        Some(n)
    }

    /// Location (child indices from the root) of the node with `id`.
    pub fn locate(&self, id: AssetId) -> Option<Vec<usize>> {
        fn go(n: &AssetNode, id: AssetId, loc: &mut Vec<usize>) -> bool {
            if n.id == id {
                return true;
            }
            for (i, c) in n.children.iter().enumerate() {
                loc.push(i);
                if go(c, id, loc) {
                    return true;
                }
                loc.pop();
            }
            false
        }
        let mut loc = Vec::new();
        go(&self.root, id, &mut loc).then_some(loc)
    }

    pub fn get(&self, id: AssetId) -> Option<&AssetNode> {
        self.locate(id).and_then(|l| self.node(&l))
    }

    pub fn contains(&self, id: AssetId) -> bool {
        self.locate(id).is_some()
    }

    pub fn repositories(&self) -> impl Iterator<Item = &AssetNode> {
        self.root.children.iter()
    }

    pub fn repository(&self, name: &str) -> Option<(usize, &AssetNode)> {
        self.root
            .children
            .iter()
            .enumerate()
            .find(|(_, r)| r.name == name)
    }

    pub fn repository_names(&self) -> Vec<String> {
        self.repositories().map(|r| r.name.clone()).collect()
    }

    /// Name of the repository containing the node at `loc`.
    pub fn repo_name_of(&self, loc: &[usize]) -> Option<&str> {
        loc.first()
            .and_then(|&i| self.root.children.get(i))
            .map(|r| r.name.as_str())
    }

    /// Preorder traversal with locations.
    pub fn walk<'a, F: FnMut(&[usize], &'a AssetNode)>(&'a self, mut f: F) {
        let mut loc = Vec::new();
        self.root.walk(&mut loc, &mut f);
    }

    /// Slash-joined path of the filesystem node at `loc`, relative to the root.
    pub fn fs_path(&self, loc: &[usize]) -> String {
        let mut n = &self.root;
        let mut parts = Vec::new();
        for &i in loc {
            n = &n.children[i];
            if !n.kind.is_filesystem() {
                break;
            }
            parts.push(n.name.as_str());
        }
        if parts.is_empty() {
            "/".to_string()
        } else {
            parts.join("/")
        }
    }

    /// Finds a filesystem node by its path (`a/b/c`).
    pub fn locate_path(&self, path: &str) -> Option<Vec<usize>> {
        let mut loc = Vec::new();
        let mut n = &self.root;
        if path == "/" || path.is_empty() {
            return Some(loc);
        }
        for seg in path.split('/') {
            let i = n.find_child(true, seg)?;
            loc.push(i);
            n = &n.children[i];
        }
        Some(loc)
    }

    /// Inserts `node` below `parent`. Filesystem nodes go to their sorted
    /// position by name (the on-disk order), others to `index`. A leaf file
    /// or block receiving its first child has its content split into line
    /// nodes first. Returns the index actually used.
    pub fn insert_child(&mut self, parent: &[usize], index: usize, node: AssetNode) -> Result<usize> {
        let needs_split = {
            let p = self.node(parent).ok_or(Error::NotInTree)?;
            if node.kind.is_filesystem() {
                if !matches!(p.kind, NodeKind::Root | NodeKind::Repository | NodeKind::Folder) {
                    return Err(Error::Inapplicable(format!(
                        "cannot place {:?} below {:?}",
                        node.kind, p.kind
                    )));
                }
                if (node.kind == NodeKind::Repository) != (p.kind == NodeKind::Root) {
                    return Err(Error::Inapplicable(
                        "repositories live directly below the root".into(),
                    ));
                }
                if p.find_child(true, &node.name).is_some() {
                    return Err(Error::DuplicateAsset(node.name.clone()));
                }
                false
            } else {
                if !matches!(p.kind, NodeKind::File | NodeKind::Block) {
                    return Err(Error::Inapplicable(format!(
                        "cannot place {:?} below {:?}",
                        node.kind, p.kind
                    )));
                }
                p.children.is_empty() && !p.content.is_empty()
            }
        };
        if needs_split {
            self.split_into_lines(parent);
        }
        let p = self.node_mut(parent).expect("checked");
        let idx = if node.kind.is_filesystem() {
            p.children
                .iter()
                .position(|c| c.name.as_str() > node.name.as_str())
                .unwrap_or(p.children.len())
        } else {
            if index > p.children.len() {
                return Err(Error::BadIndex {
                    target: p.name.clone(),
                    index,
                    len: p.children.len(),
                });
            }
            index
        };
        p.children.insert(idx, node);
        Ok(idx)
    }

    /// Turns the content of a leaf file or block into one line node per line.
    pub(crate) fn split_into_lines(&mut self, loc: &[usize]) {
        let content = std::mem::take(&mut self.node_mut(loc).expect("located").content);
        let lines: Vec<AssetNode> = content
            .into_iter()
            .map(|l| AssetNode::new(self.alloc_id(), NodeKind::Line, "").with_content(vec![l]))
            .collect();
        self.node_mut(loc).expect("located").children = lines;
    }

    pub fn remove_at(&mut self, loc: &[usize]) -> Result<AssetNode> {
        let (last, parent) = loc.split_last().ok_or(Error::Inapplicable(
            "the synthetic root cannot be removed".into(),
        ))?;
        let p = self.node_mut(parent).ok_or(Error::NotInTree)?;
        if *last >= p.children.len() {
            return Err(Error::NotInTree);
        }
        Ok(p.children.remove(*last))
    }

    /// Deep copy of `node` with freshly allocated ids; returns the copy and
    /// the (original, copy) id pairs in preorder.
    pub fn copy_with_new_ids(
        &mut self,
        node: &AssetNode,
        keep_features: bool,
    ) -> (AssetNode, Vec<(AssetId, AssetId)>) {
        let mut pairs = Vec::new();
        let copy = self.copy_rec(node, keep_features, &mut pairs);
        (copy, pairs)
    }

    fn copy_rec(
        &mut self,
        node: &AssetNode,
        keep_features: bool,
        pairs: &mut Vec<(AssetId, AssetId)>,
    ) -> AssetNode {
        let id = self.alloc_id();
        pairs.push((node.id, id));
        let mut copy = AssetNode::new(id, node.kind, node.name.clone()).with_content(node.content.clone());
        if keep_features {
            copy.features = node.features.clone();
            copy.feature_model = node.feature_model.clone();
        }
        copy.children = node
            .children
            .iter()
            .map(|c| self.copy_rec(c, keep_features, pairs))
            .collect();
        copy
    }

    /// Builds a fresh node (with new ids) from a detached description.
    pub fn instantiate(&mut self, dump: &ElementDump) -> AssetNode {
        let mut node = AssetNode::new(self.alloc_id(), dump.kind, dump.name.clone())
            .with_content(dump.content.clone());
        node.children = dump.children.iter().map(|c| self.instantiate(c)).collect();
        node
    }

    pub fn feature_model(&self, repo_idx: usize) -> Option<&FeatureModel> {
        self.root
            .children
            .get(repo_idx)
            .and_then(|r| r.feature_model.as_ref())
    }

    pub fn feature_model_mut(&mut self, repo_idx: usize) -> Option<&mut FeatureModel> {
        self.root
            .children
            .get_mut(repo_idx)
            .and_then(|r| r.feature_model.as_mut())
    }

    /// Serialized form of the whole state (structure, mappings, traces, donors).
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Distinct feature lineages over all repositories' non-root features.
    pub fn distinct_feature_count(&self) -> usize {
        self.repositories()
            .filter_map(|r| r.feature_model.as_ref())
            .flat_map(|m| m.features().into_iter().skip(1).map(|(_, f)| f.origin.clone()))
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn total_feature_count(&self) -> usize {
        self.repositories()
            .filter_map(|r| r.feature_model.as_ref())
            .map(FeatureModel::non_root_count)
            .sum()
    }

    /// Number of materialized lines per repository.
    pub fn loc_per_repository(&self) -> BTreeMap<String, usize> {
        self.repositories()
            .map(|r| (r.name.clone(), count_file_lines(r)))
            .collect()
    }
}

fn count_file_lines(n: &AssetNode) -> usize {
    if n.kind == NodeKind::File {
        n.line_count()
    } else {
        n.children.iter().map(count_file_lines).sum()
    }
}

/// Hierarchical structure and content of an element introduced from outside
/// the tree. Enough to recreate it byte-identically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementDump {
    pub kind: NodeKind,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub content: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ElementDump>,
    /// Where the element came from outside the tree, if anywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_path: Option<String>,
}

impl ElementDump {
    pub fn leaf(kind: NodeKind, name: impl Into<String>, content: Vec<String>) -> Self {
        ElementDump {
            kind,
            name: name.into(),
            content,
            children: Vec::new(),
            source_path: None,
        }
    }

    pub fn of(node: &AssetNode) -> Self {
        ElementDump {
            kind: node.kind,
            name: node.name.clone(),
            content: node.content.clone(),
            children: node.children.iter().map(ElementDump::of).collect(),
            source_path: None,
        }
    }
}
