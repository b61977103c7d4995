//! Revision-bound references to assets and features.
//!
//! Filesystem assets (repositories, folders, files) are addressed by their
//! `/`-separated path below the synthetic root; sub-file assets additionally
//! carry an index path. Features are addressed by the repository owning the
//! model and their least-partially-qualified name path.
//!
//! Textual forms: `<revision>:<path>#<i0.i1...>` and `<repo>!<lpq>`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{AssetId, AssetTree, FeatureModel};

pub type Revision = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AssetRef {
    pub revision: Revision,
    /// `/` for the root, otherwise a relative path such as `calc/src/ops.ml`.
    pub path: String,
    pub index_path: Vec<usize>,
}

impl AssetRef {
    pub fn new(revision: Revision, path: impl Into<String>, index_path: Vec<usize>) -> Self {
        AssetRef {
            revision,
            path: path.into(),
            index_path,
        }
    }

    pub fn at(&self, revision: Revision) -> AssetRef {
        AssetRef {
            revision,
            ..self.clone()
        }
    }

    /// The repository segment of the path (`None` for the root).
    pub fn repository(&self) -> Option<&str> {
        if self.path == "/" {
            None
        } else {
            self.path.split('/').next()
        }
    }
}

impl fmt::Display for AssetRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}#", self.revision, self.path)?;
        for (i, idx) in self.index_path.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{idx}")?;
        }
        Ok(())
    }
}

impl FromStr for AssetRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::DanglingRef(s.to_string());
        let (rev, rest) = s.split_once(':').ok_or_else(bad)?;
        let revision = rev.parse().map_err(|_| bad())?;
        let (path, idx) = rest.rsplit_once('#').ok_or_else(bad)?;
        if path.is_empty() {
            return Err(bad());
        }
        let index_path = if idx.is_empty() {
            Vec::new()
        } else {
            idx.split('.')
                .map(|p| p.parse::<usize>().map_err(|_| bad()))
                .collect::<Result<_>>()?
        };
        Ok(AssetRef::new(revision, path, index_path))
    }
}

impl Serialize for AssetRef {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AssetRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureRef {
    /// Name of the repository whose feature model holds the feature.
    pub repo: String,
    pub lpq: String,
}

impl FeatureRef {
    pub fn new(repo: impl Into<String>, lpq: impl Into<String>) -> Self {
        FeatureRef {
            repo: repo.into(),
            lpq: lpq.into(),
        }
    }
}

impl fmt::Display for FeatureRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}!{}", self.repo, self.lpq)
    }
}

impl FromStr for FeatureRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('!') {
            Some((repo, lpq)) if !repo.is_empty() && !lpq.is_empty() => {
                Ok(FeatureRef::new(repo, lpq))
            }
            _ => Err(Error::UnknownFeature(s.to_string())),
        }
    }
}

impl Serialize for FeatureRef {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Mints a reference for the node with `id` at the tree's current revision.
pub fn make_asset_ref(tree: &AssetTree, id: AssetId) -> Result<AssetRef> {
    let loc = tree.locate(id).ok_or(Error::NotInTree)?;
    Ok(ref_for_location(tree, &loc))
}

pub(crate) fn ref_for_location(tree: &AssetTree, loc: &[usize]) -> AssetRef {
    let mut node = &tree.root;
    let mut segments: Vec<&str> = Vec::new();
    let mut index_path = Vec::new();
    for &i in loc {
        node = &node.children[i];
        if node.kind.is_filesystem() && index_path.is_empty() {
            segments.push(&node.name);
        } else {
            index_path.push(i);
        }
    }
    let path = if segments.is_empty() {
        "/".to_string()
    } else {
        segments.join("/")
    };
    AssetRef::new(tree.revision, path, index_path)
}

/// Resolves `r` against the tree; the reference must cite the tree's revision.
pub fn resolve_asset_ref(tree: &AssetTree, r: &AssetRef) -> Result<AssetId> {
    if r.revision != tree.revision {
        return Err(Error::StaleRef {
            reference: r.to_string(),
            cited: r.revision,
            current: tree.revision,
        });
    }
    let loc = locate_ref(tree, r)?;
    Ok(tree.node(&loc).expect("located").id)
}

/// Resolves the address part of `r` without checking its revision.
pub(crate) fn locate_ref(tree: &AssetTree, r: &AssetRef) -> Result<Vec<usize>> {
    let dangling = || Error::DanglingRef(r.to_string());
    let mut loc = Vec::new();
    let mut node = &tree.root;
    if r.path != "/" {
        for seg in r.path.split('/') {
            let idx = node
                .children
                .iter()
                .position(|c| c.kind.is_filesystem() && c.name == seg)
                .ok_or_else(dangling)?;
            loc.push(idx);
            node = &node.children[idx];
        }
    }
    for &i in &r.index_path {
        let child = node.children.get(i).ok_or_else(dangling)?;
        if child.kind.is_filesystem() {
            return Err(dangling());
        }
        loc.push(i);
        node = child;
    }
    Ok(loc)
}

/// Builds the external reference for a feature key of `repo`'s model.
pub fn make_feature_ref(repo: &str, model: &FeatureModel, key: &str) -> FeatureRef {
    FeatureRef::new(repo, model.lpq(key))
}

/// Resolves a feature reference to (repository location index, feature key).
pub fn resolve_feature_ref(tree: &AssetTree, f: &FeatureRef) -> Result<(usize, String)> {
    let (idx, repo) = tree
        .repository(&f.repo)
        .ok_or_else(|| Error::UnknownFeature(f.to_string()))?;
    let model = repo
        .feature_model
        .as_ref()
        .ok_or_else(|| Error::UnknownFeature(f.to_string()))?;
    let key = model.resolve_lpq(&f.lpq)?;
    Ok((idx, key))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asset_ref_text_round_trip() {
        for s in ["3:calc/src/ops.ml#", "0:/#", "12:calc/a b.ml#0.1.15"] {
            let r: AssetRef = s.parse().unwrap();
            assert_eq!(r.to_string(), s);
        }
        let r: AssetRef = "4:calc/x.ml#0.1".parse().unwrap();
        assert_eq!(r.index_path, vec![0, 1]);
        assert_eq!(r.repository(), Some("calc"));
    }

    #[test]
    fn malformed_refs_are_rejected() {
        for s in ["calc#", "x:calc#", "1:#", "1:calc#a"] {
            assert!(s.parse::<AssetRef>().is_err(), "{s}");
        }
        assert!("calc".parse::<FeatureRef>().is_err());
        assert_eq!(
            "calc!A/X".parse::<FeatureRef>().unwrap(),
            FeatureRef::new("calc", "A/X")
        );
    }
}
