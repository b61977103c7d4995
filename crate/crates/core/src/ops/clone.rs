use std::collections::{BTreeMap, BTreeSet};

use super::exec::execute;
use super::record::{op_id_for, FeatureCopy, IntegrationPlan, Op, OperationRecord, Placement, SubOps, SCHEMA_VERSION};
use crate::addressing::{
    locate_ref, make_asset_ref, ref_for_location, resolve_asset_ref, resolve_feature_ref, AssetRef, FeatureRef,
    Revision,
};
use crate::error::{Error, Result};
use crate::model::{corresponding_id, key_within, repos_related, AssetId, AssetTree, NodeKind};
use crate::transplant::{add_local, MANIFEST_FILE, SLICES_DIR};

/// Plans a whole-repository copy named `new_name`.
pub fn plan_clone_variant(tree: &AssetTree, source: &AssetRef, new_name: &str) -> Result<OperationRecord> {
    let id = resolve_asset_ref(tree, source)?;
    let loc = tree.locate(id).expect("resolved");
    let node = tree.node(&loc).expect("located");
    if node.kind != NodeKind::Repository {
        return Err(Error::Inapplicable(format!("`{source}` is not a repository")));
    }
    if tree.repository(new_name).is_some() {
        return Err(Error::DuplicateRepository(new_name.to_string()));
    }
    if new_name.is_empty() || new_name.contains('/') {
        return Err(Error::Inapplicable(format!("invalid repository name `{new_name}`")));
    }
    let before = tree.revision;
    let after = before + 1;
    let op_id = op_id_for(after);
    let mut subs = SubOps::new(&op_id, before, after);
    subs.push(Op::CloneAsset {
        source: source.clone(),
        parent: AssetRef::new(before, "/", Vec::new()),
        index: 0,
        name: Some(new_name.to_string()),
        features: FeatureCopy::All,
    });
    for (donor_id, donor) in &tree.donors {
        if let Some(files) = donor.included(&node.name) {
            subs.push(Op::RegisterInclusion {
                donor: donor_id.clone(),
                repo: new_name.to_string(),
                files: files.iter().cloned().collect(),
            });
        }
    }
    Ok(OperationRecord {
        schema: SCHEMA_VERSION,
        op_id,
        op: Op::CloneVariant {
            source: source.clone(),
            new_name: new_name.to_string(),
        },
        revision_before: before,
        revision_after: after,
        iteration: None,
        sub_ops: subs.ops,
    })
}

/// Smallest free `<source>_vN`.
pub fn fresh_variant_name(tree: &AssetTree, source: &str) -> String {
    (1..)
        .map(|n| format!("{source}_v{n}"))
        .find(|n| tree.repository(n).is_none())
        .expect("unbounded search")
}

/// Path of `loc` with its repository segment replaced by `repo`.
fn path_in(tree: &AssetTree, loc: &[usize], repo: &str) -> String {
    let path = tree.fs_path(loc);
    match path.split_once('/') {
        Some((_, rest)) => format!("{repo}/{rest}"),
        None => repo.to_string(),
    }
}

/// Counterpart in the target repository: traced, or (for filesystem assets)
/// found at the same relative path.
fn counterpart(tree: &AssetTree, id: AssetId, loc: &[usize], target_idx: usize, target: &str) -> Option<AssetId> {
    if let Some(c) = corresponding_id(tree, id, target_idx) {
        return Some(c);
    }
    let node = tree.node(loc)?;
    if !node.kind.is_filesystem() {
        return None;
    }
    let path = path_in(tree, loc, target);
    tree.locate_path(&path).map(|l| tree.node(&l).expect("located").id)
}

struct Mapped {
    loc: Vec<usize>,
    id: AssetId,
    keys: Vec<String>,
}

/// Assets of the source repository mapped into the subtree of `key`, in document order.
fn mapped_assets(tree: &AssetTree, repo_idx: usize, key: &str) -> Vec<Mapped> {
    let mut out = Vec::new();
    tree.walk(|loc, node| {
        if loc.first() != Some(&repo_idx) {
            return;
        }
        let keys: Vec<String> = node
            .features
            .iter()
            .filter(|f| key_within(f, key))
            .cloned()
            .collect();
        if !keys.is_empty() {
            out.push(Mapped {
                loc: loc.to_vec(),
                id: node.id,
                keys,
            });
        }
    });
    out
}

fn is_within(anc: &[usize], loc: &[usize]) -> bool {
    anc.len() <= loc.len() && loc[..anc.len()] == *anc
}

/// Default positions for every asset of `feature` without a counterpart in `target`.
pub fn default_integration_plan(tree: &AssetTree, feature: &FeatureRef, target: &str) -> Result<IntegrationPlan> {
    let (src_idx, key) = resolve_feature_ref(tree, feature)?;
    let (tgt_idx, _) = tree
        .repository(target)
        .ok_or_else(|| Error::UnrelatedRepositories(feature.repo.clone(), target.to_string()))?;
    let after = tree.revision + 1;
    let mut placements = Vec::new();
    let mut novel_roots: Vec<Vec<usize>> = Vec::new();
    for m in mapped_assets(tree, src_idx, &key) {
        if novel_roots.iter().any(|r| is_within(r, &m.loc)) {
            continue;
        }
        if counterpart(tree, m.id, &m.loc, tgt_idx, target).is_some() {
            continue;
        }
        let node = tree.node(&m.loc).expect("located");
        let source = ref_for_location(tree, &m.loc);
        let (_, ploc) = m.loc.split_last().expect("below a repository");
        if node.kind.is_filesystem() {
            let parent_path = path_in(tree, ploc, target);
            let rev = if tree.locate_path(&parent_path).is_some() {
                tree.revision
            } else {
                after
            };
            placements.push(Placement {
                source,
                parent: AssetRef::new(rev, parent_path, Vec::new()),
                index: 0,
            });
        } else {
            let src_parent = tree.node(ploc).expect("located");
            let parent_id = counterpart(tree, src_parent.id, ploc, tgt_idx, target).ok_or_else(|| {
                Error::Inapplicable(format!("no counterpart for the container of `{source}` in `{target}`"))
            })?;
            let tloc = tree.locate(parent_id).expect("live counterpart");
            let tparent = tree.node(&tloc).expect("located");
            let own = *m.loc.last().expect("non-empty");
            let mut index = if tparent.children.is_empty() {
                tparent.content.len()
            } else {
                tparent.children.len()
            };
            for pred in src_parent.children[..own].iter().rev() {
                let hit = corresponding_id(tree, pred.id, tgt_idx)
                    .and_then(|c| tparent.children.iter().position(|ch| ch.id == c));
                if let Some(i) = hit {
                    index = i + 1;
                    break;
                }
            }
            placements.push(Placement {
                source,
                parent: ref_for_location(tree, &tloc),
                index,
            });
        }
        novel_roots.push(m.loc.clone());
    }
    Ok(IntegrationPlan { placements })
}

/// Origins present anywhere in a repository's feature model.
pub fn origins_of(tree: &AssetTree, repo_idx: usize) -> BTreeSet<String> {
    tree.feature_model(repo_idx)
        .map(|m| {
            m.features()
                .into_iter()
                .skip(1)
                .map(|(_, f)| f.origin.clone())
                .collect()
        })
        .unwrap_or_default()
}

fn parent_of(path: &str) -> &str {
    path.rsplit_once('/').map(|(p, _)| p).unwrap_or("/")
}

fn fs_ref(tree: &AssetTree, path: &str, after: Revision) -> AssetRef {
    let rev = if tree.locate_path(path).is_some() {
        tree.revision
    } else {
        after
    };
    AssetRef::new(rev, path, Vec::new())
}

/// Plans copying `feature` (with subfeatures) from its repository into
/// `target_repo` below `target_parent`, cloning assets that have no counterpart.
pub fn plan_clone_feature(
    tree: &AssetTree,
    feature: &FeatureRef,
    target_repo: &str,
    target_parent: &FeatureRef,
    plan: &IntegrationPlan,
) -> Result<OperationRecord> {
    let (src_idx, key) = resolve_feature_ref(tree, feature)?;
    if key.is_empty() {
        return Err(Error::Inapplicable("the root feature cannot be cloned".into()));
    }
    let source_repo = feature.repo.clone();
    if tree.repository(target_repo).is_none() || !repos_related(tree, &source_repo, target_repo) || source_repo == target_repo {
        return Err(Error::UnrelatedRepositories(source_repo, target_repo.to_string()));
    }
    if target_parent.repo != target_repo {
        return Err(Error::Inapplicable(format!("`{target_parent}` is not a feature of `{target_repo}`")));
    }
    let (tgt_idx, parent_key) = resolve_feature_ref(tree, target_parent)?;
    let src_model = tree.feature_model(src_idx).expect("resolved");
    let tgt_model = tree.feature_model(tgt_idx).expect("resolved");
    let subtree = src_model.get(&key).expect("resolved").clone();
    let present = origins_of(tree, tgt_idx);
    let parent_node = tgt_model.get(&parent_key).expect("resolved");
    if parent_node.children.iter().any(|c| c.name == subtree.name)
        || src_model
            .features()
            .iter()
            .any(|(k, f)| key_within(k, &key) && present.contains(&f.origin))
    {
        return Err(Error::AlreadyPresent(feature.to_string()));
    }

    let before = tree.revision;
    let after = before + 1;
    let op_id = op_id_for(after);
    let mapped = mapped_assets(tree, src_idx, &key);
    let mapped_ids: BTreeSet<AssetId> = mapped.iter().map(|m| m.id).collect();

    // Structural part: folders, file clones, block clones, manifest update.
    let mut subs = SubOps::new(&op_id, before, after);
    let mut created = BTreeSet::new();
    let mut block_placements = Vec::new();
    let mut new_slices = BTreeSet::new();
    let mut seen = BTreeSet::new();
    for p in &plan.placements {
        let sloc = locate_ref(tree, &p.source)?;
        let sid = tree.node(&sloc).expect("located").id;
        if !mapped_ids.contains(&sid) || !seen.insert(sid) {
            return Err(Error::Inapplicable(format!("placement for unmapped asset `{}`", p.source)));
        }
        let node = tree.node(&sloc).expect("located");
        if node.kind.is_filesystem() {
            let path = format!("{}/{}", p.parent.path, node.name);
            let mut missing = Vec::new();
            let mut q = parent_of(&path);
            while q != "/" && tree.locate_path(q).is_none() && !created.contains(q) {
                missing.push(q.to_string());
                q = parent_of(q);
            }
            for folder in missing.into_iter().rev() {
                let (parent, name) = folder.rsplit_once('/').expect("below a repository");
                subs.push(Op::InsertAsset {
                    parent: fs_ref(tree, parent, after),
                    index: 0,
                    element: crate::model::ElementDump::leaf(NodeKind::Folder, name, Vec::new()),
                });
                created.insert(folder);
            }
            subs.push(Op::CloneAsset {
                source: p.source.clone(),
                parent: p.parent.clone(),
                index: 0,
                name: None,
                features: FeatureCopy::None,
            });
            let rel = tree.fs_path(&sloc);
            let mut parts = rel.split('/').skip(1);
            if parts.next() == Some(SLICES_DIR) {
                if let Some(donor) = parts.next() {
                    if tree.donors.get(donor).is_some_and(|d| d.included(target_repo).is_none()) {
                        new_slices.insert(donor.to_string());
                    }
                }
            }
        } else {
            block_placements.push(p);
        }
    }
    let missing_cover = mapped.iter().any(|m| {
        !seen.contains(&m.id)
            && !plan.placements.iter().any(|p| {
                locate_ref(tree, &p.source).is_ok_and(|l| is_within(&l, &m.loc))
            })
            && counterpart(tree, m.id, &m.loc, tgt_idx, target_repo).is_none()
    });
    if missing_cover {
        return Err(Error::Inapplicable("integration plan does not place every novel asset".into()));
    }
    // Descending index per parent; equal indices in reverse source order.
    let mut order: Vec<(usize, &Placement)> = block_placements.into_iter().enumerate().collect();
    order.sort_by(|(ia, a), (ib, b)| {
        a.parent
            .cmp(&b.parent)
            .then(b.index.cmp(&a.index))
            .then(ib.cmp(ia))
    });
    for (_, p) in order {
        subs.push(Op::CloneAsset {
            source: p.source.clone(),
            parent: p.parent.clone(),
            index: p.index,
            name: None,
            features: FeatureCopy::None,
        });
    }
    let main_manifest = format!("{target_repo}/{MANIFEST_FILE}");
    if !new_slices.is_empty() {
        if let Some(loc) = tree.locate_path(&main_manifest) {
            let lines = tree.node(&loc).expect("located").lines();
            let mut updated = lines.clone();
            for d in &new_slices {
                updated = add_local(&updated, d)?;
            }
            if updated != lines {
                subs.push(Op::SetContent {
                    target: AssetRef::new(before, main_manifest, Vec::new()),
                    lines: updated,
                });
            }
        }
    }

    // Dry run to learn where every copy ends up.
    let structural = subs.ops.clone();
    let mut scratch = tree.clone();
    execute(
        &mut scratch,
        &OperationRecord {
            schema: SCHEMA_VERSION,
            op_id: op_id.clone(),
            op: Op::Step {
                step: 0,
                label: String::new(),
            },
            revision_before: before,
            revision_after: after,
            iteration: None,
            sub_ops: structural,
        },
    )?;
    let copies: BTreeMap<AssetId, AssetId> = scratch
        .traces
        .by_op(&op_id)
        .into_iter()
        .map(|t| (t.source_id, t.target_id))
        .collect();

    let tail = key.rsplit('/').next().expect("non-empty key");
    let translate = |k: &str| {
        let rel = &k[key.len() - tail.len()..];
        if parent_key.is_empty() {
            rel.to_string()
        } else {
            format!("{parent_key}/{rel}")
        }
    };
    let mut post_model = tgt_model.clone();
    post_model.add_child(&parent_key, subtree.clone())?;
    subs.push(Op::InsertFeatureTree {
        parent: target_parent.clone(),
        feature: subtree,
    });
    let mut registrations: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for m in &mapped {
        let target_id = match copies.get(&m.id) {
            Some(c) => *c,
            None => counterpart(tree, m.id, &m.loc, tgt_idx, target_repo)
                .ok_or_else(|| Error::Inapplicable(format!("asset {} has no place in `{target_repo}`", m.id)))?,
        };
        let asset = make_asset_ref(&scratch, target_id)?;
        for k in &m.keys {
            subs.push(Op::MapFeature {
                asset: asset.clone(),
                feature: FeatureRef::new(target_repo, post_model.lpq(&translate(k))),
            });
        }
        let mut parts = asset.path.splitn(4, '/').skip(1);
        if asset.index_path.is_empty() && parts.next() == Some(SLICES_DIR) {
            if let (Some(donor), Some(inner)) = (parts.next(), parts.next()) {
                if tree.donors.contains_key(donor) {
                    let set = registrations.entry(donor.to_string()).or_default();
                    if inner != MANIFEST_FILE {
                        set.insert(inner.to_string());
                    }
                }
            }
        }
    }
    for (donor, files) in registrations {
        subs.push(Op::RegisterInclusion {
            donor,
            repo: target_repo.to_string(),
            files: files.into_iter().collect(),
        });
    }
    Ok(OperationRecord {
        schema: SCHEMA_VERSION,
        op_id,
        op: Op::CloneFeature {
            feature: feature.clone(),
            source_repo: feature.repo.clone(),
            target_repo: target_repo.to_string(),
            target_parent: target_parent.clone(),
            plan: plan.clone(),
        },
        revision_before: before,
        revision_after: after,
        iteration: None,
        sub_ops: subs.ops,
    })
}
