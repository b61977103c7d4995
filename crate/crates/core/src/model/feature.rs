//! Feature hierarchies attached to repository nodes.
//!
//! Features are addressed internally by their *key*: the `/`-joined name path
//! below the root feature (the root itself has the empty key). Keys are stable
//! for the lifetime of a feature because features are never renamed or moved.
//! The least-partially-qualified path (LPQ) is derived from the full name path
//! and is what appears in external references.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    /// Lineage tag: the id of the operation that introduced the feature into
    /// the system. Copies made by cloning keep the tag of their original.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub origin: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Feature>,
}

impl Feature {
    pub fn new(name: impl Into<String>, origin: impl Into<String>) -> Self {
        Feature {
            name: name.into(),
            origin: origin.into(),
            children: Vec::new(),
        }
    }

    fn visit<'a>(&'a self, key: String, out: &mut Vec<(String, &'a Feature)>) {
        for child in &self.children {
            let child_key = join_key(&key, &child.name);
            out.push((child_key.clone(), child));
            child.visit(child_key, out);
        }
    }

    /// Number of features in this subtree, including `self`.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Feature::size).sum::<usize>()
    }
}

pub(crate) fn join_key(parent: &str, name: &str) -> String {
    if parent.is_empty() {
        name.to_string()
    } else {
        format!("{parent}/{name}")
    }
}

/// True if `key` names `ancestor` or one of its descendants.
pub fn key_within(key: &str, ancestor: &str) -> bool {
    if ancestor.is_empty() {
        return true;
    }
    key == ancestor
        || (key.len() > ancestor.len()
            && key.starts_with(ancestor)
            && key.as_bytes()[ancestor.len()] == b'/')
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureModel {
    pub root: Feature,
}

impl FeatureModel {
    pub fn new(root_name: impl Into<String>) -> Self {
        FeatureModel {
            root: Feature::new(root_name, ""),
        }
    }

    /// Every feature in preorder with its key; the root comes first with key `""`.
    pub fn features(&self) -> Vec<(String, &Feature)> {
        let mut out = vec![(String::new(), &self.root)];
        self.root.visit(String::new(), &mut out);
        out
    }

    pub fn non_root_count(&self) -> usize {
        self.root.size() - 1
    }

    pub fn get(&self, key: &str) -> Option<&Feature> {
        let mut node = &self.root;
        if key.is_empty() {
            return Some(node);
        }
        for seg in key.split('/') {
            node = node.children.iter().find(|c| c.name == seg)?;
        }
        Some(node)
    }

    fn get_mut(&mut self, key: &str) -> Option<&mut Feature> {
        let mut node = &mut self.root;
        if key.is_empty() {
            return Some(node);
        }
        for seg in key.split('/') {
            node = node.children.iter_mut().find(|c| c.name == seg)?;
        }
        Some(node)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    /// Appends `feature` (with its subtree) below `parent` and returns its key.
    pub fn add_child(&mut self, parent: &str, feature: Feature) -> Result<String> {
        validate_name(&feature.name)?;
        let parent_node = self
            .get_mut(parent)
            .ok_or_else(|| Error::UnknownFeature(parent.to_string()))?;
        if parent_node.children.iter().any(|c| c.name == feature.name) {
            return Err(Error::AlreadyPresent(join_key(parent, &feature.name)));
        }
        let key = join_key(parent, &feature.name);
        parent_node.children.push(feature);
        Ok(key)
    }

    /// Removes a non-root feature together with its subfeatures.
    pub fn remove(&mut self, key: &str) -> Result<Feature> {
        if key.is_empty() {
            return Err(Error::CannotRemoveRoot);
        }
        let (parent, name) = match key.rsplit_once('/') {
            Some((p, n)) => (p, n),
            None => ("", key),
        };
        let parent_node = self
            .get_mut(parent)
            .ok_or_else(|| Error::UnknownFeature(key.to_string()))?;
        let idx = parent_node
            .children
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownFeature(key.to_string()))?;
        Ok(parent_node.children.remove(idx))
    }

    /// Keys of `key` and all of its descendants.
    pub fn subtree_keys(&self, key: &str) -> Vec<String> {
        self.features()
            .into_iter()
            .map(|(k, _)| k)
            .filter(|k| key_within(k, key))
            .collect()
    }

    /// Full name path from the root feature, root name included.
    pub fn name_path(&self, key: &str) -> Vec<String> {
        let mut path = vec![self.root.name.clone()];
        if !key.is_empty() {
            path.extend(key.split('/').map(str::to_string));
        }
        path
    }

    /// Shortest suffix of the feature's name path that identifies it uniquely.
    pub fn lpq(&self, key: &str) -> String {
        let full = self.name_path(key);
        let all: Vec<Vec<String>> = self
            .features()
            .into_iter()
            .map(|(k, _)| self.name_path(&k))
            .collect();
        for len in 1..=full.len() {
            let suffix = &full[full.len() - len..];
            let hits = all.iter().filter(|p| p.ends_with(suffix)).count();
            if hits == 1 {
                return suffix.join("/");
            }
        }
        full.join("/")
    }

    /// Resolves an LPQ back to a feature key.
    pub fn resolve_lpq(&self, lpq: &str) -> Result<String> {
        let segments: Vec<String> = lpq.split('/').map(str::to_string).collect();
        let mut hits = self
            .features()
            .into_iter()
            .map(|(k, _)| k)
            .filter(|k| self.name_path(k).ends_with(&segments));
        match (hits.next(), hits.next()) {
            (Some(key), None) => Ok(key),
            (Some(_), Some(_)) => Err(Error::AmbiguousFeature(lpq.to_string())),
            (None, _) => Err(Error::UnknownFeature(lpq.to_string())),
        }
    }

    /// Picks `base`, or `base_2`, `base_3`, ... so the name is free below `parent`.
    pub fn free_child_name(&self, parent: &str, base: &str) -> String {
        let Some(node) = self.get(parent) else {
            return base.to_string();
        };
        let taken = |n: &str| node.children.iter().any(|c| c.name == n);
        if !taken(base) {
            return base.to_string();
        }
        (2..)
            .map(|i| format!("{base}_{i}"))
            .find(|n| !taken(n))
            .expect("unbounded search")
    }
}

fn validate_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains('/') || name.contains('!') {
        return Err(Error::Inapplicable(format!("invalid feature name `{name}`")));
    }
    Ok(())
}

/// Maps arbitrary text to a usable feature name.
pub fn sanitize_feature_name(raw: &str) -> String {
    let s: String = raw
        .chars()
        .map(|c| if c == '/' || c == '!' || c.is_whitespace() { '_' } else { c })
        .collect();
    if s.is_empty() {
        "feature".to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(paths: &[&str]) -> FeatureModel {
        let mut m = FeatureModel::new("Root");
        for p in paths {
            let (parent, name) = p.rsplit_once('/').unwrap_or(("", p));
            m.add_child(parent, Feature::new(name, "t")).unwrap();
        }
        m
    }

    #[test]
    fn lpq_of_unique_leaf_is_its_name() {
        let m = model(&["A", "B", "A/X", "B/Y"]);
        assert_eq!(m.lpq("A/X"), "X");
        assert_eq!(m.lpq(""), "Root");
    }

    #[test]
    fn lpq_disambiguates_with_parent() {
        let m = model(&["A", "B", "A/X", "B/X"]);
        assert_eq!(m.lpq("A/X"), "A/X");
        assert_eq!(m.resolve_lpq("A/X").unwrap(), "A/X");
        assert!(matches!(m.resolve_lpq("X"), Err(Error::AmbiguousFeature(_))));
    }

    #[test]
    fn root_named_like_child_needs_qualification() {
        let m = model(&["Root"]);
        assert_eq!(m.lpq(""), "Root");
        assert_eq!(m.lpq("Root"), "Root/Root");
        assert_eq!(m.resolve_lpq("Root/Root").unwrap(), "Root");
    }

    #[test]
    fn remove_takes_subfeatures_and_guards_root() {
        let mut m = model(&["A", "A/X", "B"]);
        assert!(matches!(m.remove(""), Err(Error::CannotRemoveRoot)));
        m.remove("A").unwrap();
        assert!(!m.contains("A/X"));
        assert_eq!(m.non_root_count(), 1);
    }

    #[test]
    fn sibling_names_stay_unique() {
        let mut m = model(&["A"]);
        assert!(m.add_child("", Feature::new("A", "x")).is_err());
        assert_eq!(m.free_child_name("", "A"), "A_2");
    }

    #[test]
    fn key_within_respects_segment_boundaries() {
        assert!(key_within("A/X", "A"));
        assert!(key_within("A", "A"));
        assert!(!key_within("AB", "A"));
        assert!(key_within("anything", ""));
    }
}
