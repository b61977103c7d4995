//! Per-revision feature models and asset-to-feature mappings.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::addressing::{make_feature_ref, ref_for_location, AssetRef, FeatureRef, Revision};
use crate::error::Result;
use crate::model::{AssetTree, FeatureModel};
use crate::ops::SCHEMA_VERSION;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mapping {
    pub asset: AssetRef,
    pub features: Vec<FeatureRef>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoFeatures {
    pub model: FeatureModel,
    /// Mapped assets in document order.
    pub mappings: Vec<Mapping>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureFile {
    pub schema: u32,
    pub revision: Revision,
    pub repositories: BTreeMap<String, RepoFeatures>,
}

impl FeatureFile {
    pub fn of(tree: &AssetTree) -> FeatureFile {
        let mut repositories = BTreeMap::new();
        for (i, repo) in tree.repositories().enumerate() {
            let model = repo.feature_model.clone().unwrap_or_else(|| FeatureModel::new(repo.name.clone()));
            let mut mappings = Vec::new();
            tree.walk(|loc, node| {
                if loc.first() == Some(&i) && !node.features.is_empty() {
                    mappings.push(Mapping {
                        asset: ref_for_location(tree, loc),
                        features: node
                            .features
                            .iter()
                            .map(|k| make_feature_ref(&repo.name, &model, k))
                            .collect(),
                    });
                }
            });
            repositories.insert(repo.name.clone(), RepoFeatures { model, mappings });
        }
        FeatureFile {
            schema: SCHEMA_VERSION,
            revision: tree.revision,
            repositories,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("feature files always serialize");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<FeatureFile> {
        Ok(serde_json::from_str(text)?)
    }

    /// Distinct feature lineages over all repositories.
    pub fn distinct_features(&self) -> usize {
        self.repositories
            .values()
            .flat_map(|r| r.model.features().into_iter().skip(1).map(|(_, f)| f.origin.clone()))
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn total_features(&self) -> usize {
        self.repositories.values().map(|r| r.model.non_root_count()).sum()
    }
}
