use std::collections::{BTreeMap, BTreeSet};

use super::record::{op_id_for, Op, OperationRecord, SubOps, SCHEMA_VERSION};
use crate::addressing::{ref_for_location, resolve_feature_ref, AssetRef, FeatureRef};
use crate::error::{Error, Result};
use crate::model::{feature_exclusive_ids, key_within, AssetTree};
use crate::transplant::{remove_local, MANIFEST_FILE, SLICES_DIR};

fn is_prefix(a: &[usize], b: &[usize]) -> bool {
    a.len() < b.len() && b[..a.len()] == *a
}

/// Plans the removal of a feature, its subfeatures and their exclusive assets.
pub fn plan_remove_feature(tree: &AssetTree, feature: &FeatureRef) -> Result<OperationRecord> {
    let (repo_idx, key) = resolve_feature_ref(tree, feature)?;
    if key.is_empty() {
        return Err(Error::CannotRemoveRoot);
    }
    let before = tree.revision;
    let after = before + 1;
    let op_id = op_id_for(after);
    let repo = tree.root.children[repo_idx].name.clone();
    let model = tree.feature_model(repo_idx).expect("resolved");

    let exclusive = feature_exclusive_ids(tree, repo_idx, &key);
    let mut shared: Vec<(Vec<usize>, Vec<String>)> = Vec::new();
    tree.walk(|loc, node| {
        if loc.first() != Some(&repo_idx) || node.features.is_empty() {
            return;
        }
        let hit: Vec<String> = node
            .features
            .iter()
            .filter(|f| key_within(f, &key))
            .cloned()
            .collect();
        if !hit.is_empty() && hit.len() < node.features.len() {
            shared.push((loc.to_vec(), hit));
        }
    });

    // Slices whose manifest goes away disappear as a whole.
    let slices_path = format!("{repo}/{SLICES_DIR}");
    let mut dropped = BTreeSet::new();
    let mut removed_files: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for loc in &exclusive {
        let path = tree.fs_path(loc);
        let Some(rest) = path.strip_prefix(&format!("{slices_path}/")) else {
            continue;
        };
        let Some((donor, inner)) = rest.split_once('/') else {
            continue;
        };
        if inner == MANIFEST_FILE {
            dropped.insert(donor.to_string());
        } else if tree.node(loc).is_some_and(|n| n.kind.is_filesystem()) {
            removed_files
                .entry(donor.to_string())
                .or_default()
                .push(inner.to_string());
        }
    }
    let mut targets: Vec<Vec<usize>> = exclusive
        .into_iter()
        .filter(|loc| {
            let path = tree.fs_path(loc);
            !dropped
                .iter()
                .any(|d| path.starts_with(&format!("{slices_path}/{d}/")))
        })
        .collect();
    if !dropped.is_empty() {
        let slices_loc = tree.locate_path(&slices_path).expect("slice directory exists");
        let slices = tree.node(&slices_loc).expect("located");
        if slices.children.iter().all(|c| dropped.contains(&c.name)) {
            targets.push(slices_loc);
        } else {
            for d in &dropped {
                targets.push(tree.locate_path(&format!("{slices_path}/{d}")).expect("slice exists"));
            }
        }
    }
    let all = targets.clone();
    targets.retain(|t| !all.iter().any(|a| is_prefix(a, t)));
    targets.sort();
    targets.dedup();
    targets.reverse();

    let main_manifest = format!("{repo}/{MANIFEST_FILE}");
    let manifest_update = match tree.locate_path(&main_manifest) {
        Some(loc) if !dropped.is_empty() => {
            let lines = tree.node(&loc).expect("located").lines();
            let mut updated = lines.clone();
            for d in &dropped {
                updated = remove_local(&updated, d)?;
            }
            (updated != lines).then_some(updated)
        }
        _ => None,
    };

    let mut subs = SubOps::new(&op_id, before, after);
    for (loc, keys) in &shared {
        for k in keys {
            subs.push(Op::UnmapFeature {
                asset: ref_for_location(tree, loc),
                feature: FeatureRef::new(repo.clone(), model.lpq(k)),
            });
        }
    }
    for loc in &targets {
        subs.push(Op::RemoveAsset {
            target: ref_for_location(tree, loc),
        });
    }
    if let Some(lines) = manifest_update {
        subs.push(Op::SetContent {
            target: AssetRef::new(before, main_manifest, Vec::new()),
            lines,
        });
    }
    subs.push(Op::RemoveFeatureTree {
        feature: feature.clone(),
    });
    for d in &dropped {
        subs.push(Op::UnregisterInclusion {
            donor: d.clone(),
            repo: repo.clone(),
            files: Vec::new(),
            drop_slice: true,
        });
    }
    for (d, files) in removed_files {
        if !dropped.contains(&d) {
            subs.push(Op::UnregisterInclusion {
                donor: d,
                repo: repo.clone(),
                files,
                drop_slice: false,
            });
        }
    }
    Ok(OperationRecord {
        schema: SCHEMA_VERSION,
        op_id,
        op: Op::RemoveFeature {
            feature: feature.clone(),
        },
        revision_before: before,
        revision_after: after,
        iteration: None,
        sub_ops: subs.ops,
    })
}
