//! Conversion of an organ into recorded asset-tree changes.

use std::collections::BTreeSet;

use super::adapter::LanguageAdapter;
use super::manifest::{add_local, merge_deps, ManifestModel, MANIFEST_FILE};
use super::organ::Organ;
use crate::addressing::{make_feature_ref, resolve_asset_ref, AssetRef, FeatureRef, Revision};
use crate::error::{Error, Result};
use crate::model::{sanitize_feature_name, AssetNode, AssetTree, ElementDump, Feature, NodeKind};
use crate::ops::record::{op_id_for, InsertionPoint, Op, OperationRecord, OrganDump, SubOps, SCHEMA_VERSION};

/// Directory below a repository that holds donor slices.
pub const SLICES_DIR: &str = "slices";

pub fn slice_base(repo: &str, donor: &str) -> String {
    format!("{repo}/{SLICES_DIR}/{donor}")
}

/// True if `path` (relative to the root) lies in a slice directory.
pub fn in_slice(path: &str) -> bool {
    path.split('/').nth(1) == Some(SLICES_DIR)
}

/// Nesting delta of every child unit of a file: its lines if it is a leaf,
/// otherwise its children.
fn unit_deltas(file: &AssetNode, adapter: &dyn LanguageAdapter) -> Vec<i64> {
    if file.children.is_empty() {
        file.content.iter().map(|l| adapter.nesting_delta(l)).collect()
    } else {
        file.children
            .iter()
            .map(|c| c.lines().iter().map(|l| adapter.nesting_delta(l)).sum())
            .collect()
    }
}

/// Child boundaries at method depth in the host-owned sources of a repository.
pub fn insertion_points(tree: &AssetTree, repo_idx: usize, adapter: &dyn LanguageAdapter) -> Vec<InsertionPoint> {
    let mut out = Vec::new();
    let Some(repo) = tree.root.children.get(repo_idx) else {
        return out;
    };
    let mut stack = vec![(vec![repo_idx], repo)];
    while let Some((loc, node)) = stack.pop() {
        match node.kind {
            NodeKind::Repository | NodeKind::Folder => {
                for (i, c) in node.children.iter().enumerate().rev() {
                    let mut l = loc.clone();
                    l.push(i);
                    stack.push((l, c));
                }
            }
            NodeKind::File => {
                let path = tree.fs_path(&loc);
                if in_slice(&path) || node.name == MANIFEST_FILE || !adapter.is_source(&node.name) {
                    continue;
                }
                let mut depth = 0;
                for (i, d) in unit_deltas(node, adapter).into_iter().enumerate() {
                    if i >= 1 && depth == adapter.method_depth() {
                        out.push(InsertionPoint {
                            file: AssetRef::new(tree.revision, path.clone(), Vec::new()),
                            index: i,
                        });
                    }
                    depth += d;
                }
            }
            _ => {}
        }
    }
    out
}

fn fs_ref(tree: &AssetTree, path: &str, after: Revision) -> AssetRef {
    let rev = if tree.locate_path(path).is_some() {
        tree.revision
    } else {
        after
    };
    AssetRef::new(rev, path, Vec::new())
}

fn parent_path(path: &str) -> &str {
    path.rsplit_once('/').map(|(p, _)| p).unwrap_or("/")
}

/// Emits folder insertions for every missing ancestor of `path`.
fn ensure_folders(tree: &AssetTree, path: &str, created: &mut BTreeSet<String>, subs: &mut SubOps) {
    let mut missing = Vec::new();
    let mut p = parent_path(path);
    while p != "/" && tree.locate_path(p).is_none() && !created.contains(p) {
        missing.push(p.to_string());
        p = parent_path(p);
    }
    for folder in missing.into_iter().rev() {
        let (parent, name) = folder.rsplit_once('/').expect("below a repository");
        subs.push(Op::InsertAsset {
            parent: fs_ref(tree, parent, subs.after()),
            index: 0,
            element: ElementDump::leaf(NodeKind::Folder, name, Vec::new()),
        });
        created.insert(folder);
    }
}

fn feature_name_for(organ: &Organ) -> String {
    let file = organ.test.file.rsplit('/').next().unwrap_or(&organ.test.file);
    let stem = file.split('.').next().unwrap_or(file);
    sanitize_feature_name(&format!("{stem}.{}", organ.test.name))
}

/// Plans the five-step integration of `organ` into `repo` at `point`.
pub fn plan_transplant(
    tree: &AssetTree,
    organ: &Organ,
    repo: &str,
    point: &InsertionPoint,
    adapter: &dyn LanguageAdapter,
) -> Result<OperationRecord> {
    let before = tree.revision;
    let after = before + 1;
    let op_id = op_id_for(after);
    let (repo_idx, repo_node) = tree
        .repository(repo)
        .ok_or_else(|| Error::Inapplicable(format!("no repository `{repo}`")))?;
    resolve_asset_ref(tree, &point.file)?;
    if !insertion_points(tree, repo_idx, adapter).contains(point) {
        return Err(Error::ForbiddenInsertionPoint(format!("{}@{}", point.file, point.index)));
    }
    let donor = tree
        .donors
        .get(&organ.donor)
        .ok_or_else(|| Error::Inapplicable(format!("unknown donor `{}`", organ.donor)))?;
    let base = slice_base(repo, &organ.donor);
    let included = donor.included(repo);
    if included.is_none() && tree.locate_path(&base).is_some() {
        return Err(Error::SliceConflict(base));
    }
    for f in &organ.slice_files {
        let path = format!("{base}/{f}");
        let registered = included.is_some_and(|s| s.contains(f));
        if !registered && tree.locate_path(&path).is_some() {
            return Err(Error::SliceConflict(path));
        }
    }
    let model = repo_node
        .feature_model
        .as_ref()
        .ok_or_else(|| Error::Inapplicable(format!("repository `{repo}` has no feature model")))?;
    let feature = model.free_child_name("", &feature_name_for(organ));

    let mut subs = SubOps::new(&op_id, before, after);
    let mut created = BTreeSet::new();
    let has_imports = !organ.in_file_deps.is_empty();
    let guard = adapter.guard_wrap(&organ.body);

    subs.group(step(1, "insert test and imports"), |s| {
        s.push(Op::InsertAsset {
            parent: point.file.clone(),
            index: point.index,
            element: ElementDump::leaf(NodeKind::Block, "", guard.clone()),
        });
        if has_imports {
            s.push(Op::InsertAsset {
                parent: point.file.clone(),
                index: point.index,
                element: ElementDump::leaf(NodeKind::Block, "", organ.in_file_deps.clone()),
            });
        }
    });

    let mut slice_dumps = Vec::new();
    subs.group(step(2, "add slice files"), |s| {
        for f in &organ.slice_files {
            let content = donor.source.files[f].clone();
            let name = f.rsplit('/').next().expect("non-empty path");
            let mut dump = ElementDump::leaf(NodeKind::File, name, content);
            dump.source_path = Some(format!("{}:{f}", organ.donor));
            slice_dumps.push(dump.clone());
            if included.is_some_and(|set| set.contains(f)) {
                continue;
            }
            let path = format!("{base}/{f}");
            ensure_folders(tree, &path, &mut created, s);
            let parent = fs_ref(tree, parent_path(&path), after);
            let sibling = donor.included_in.iter().find_map(|(r, set)| {
                let p = format!("{}/{f}", slice_base(r, &organ.donor));
                (r != repo && set.contains(f) && tree.locate_path(&p).is_some()).then_some(p)
            });
            match sibling {
                Some(src) => s.push(Op::CloneAsset {
                    source: AssetRef::new(before, src, Vec::new()),
                    parent,
                    index: 0,
                    name: None,
                    features: Default::default(),
                }),
                None => s.push(Op::InsertAsset {
                    parent,
                    index: 0,
                    element: dump,
                }),
            };
        }
    });

    let main_manifest = format!("{repo}/{MANIFEST_FILE}");
    let main_loc = tree.locate_path(&main_manifest);
    let main_lines = main_loc.as_ref().map(|l| tree.node(l).expect("located").lines());
    let main_update = match &main_lines {
        Some(lines) => {
            let updated = add_local(lines, &organ.donor)?;
            (&updated != lines).then(|| Op::SetContent {
                target: AssetRef::new(before, main_manifest.clone(), Vec::new()),
                lines: updated,
            })
        }
        None => {
            let mut m = ManifestModel::named(repo);
            m.locals.push(organ.donor.clone());
            Some(Op::InsertAsset {
                parent: AssetRef::new(before, repo, Vec::new()),
                index: 0,
                element: ElementDump::leaf(NodeKind::File, MANIFEST_FILE, adapter.emit_manifest(&m)),
            })
        }
    };
    subs.group(step(3, "depend on slice"), |s| {
        if let Some(op) = main_update {
            s.push(op);
        }
    });

    let slice_manifest = format!("{base}/{MANIFEST_FILE}");
    let fragment_lines = adapter.emit_manifest(&organ.manifest_fragment);
    let slice_merge = match tree.locate_path(&slice_manifest) {
        Some(l) => {
            let lines = tree.node(&l).expect("located").lines();
            let merged = merge_deps(&lines, &organ.manifest_fragment.deps)?;
            Some((merged != lines).then_some(merged))
        }
        None => None,
    };
    subs.group(step(4, "add slice manifest"), |s| match slice_merge {
        Some(Some(lines)) => {
            s.push(Op::SetContent {
                target: AssetRef::new(before, slice_manifest.clone(), Vec::new()),
                lines,
            });
        }
        Some(None) => {}
        None => {
            ensure_folders(tree, &slice_manifest, &mut created, s);
            s.push(Op::InsertAsset {
                parent: fs_ref(tree, &base, after),
                index: 0,
                element: ElementDump::leaf(NodeKind::File, MANIFEST_FILE, fragment_lines.clone()),
            });
        }
    });

    let mut post_model = model.clone();
    post_model.add_child("", Feature::new(feature.clone(), op_id.clone()))?;
    let feature_ref = make_feature_ref(repo, &post_model, &feature);
    let root_ref = FeatureRef::new(repo, model.lpq(""));
    let file_path = point.file.path.clone();
    let mut mapped = Vec::new();
    if has_imports {
        mapped.push(AssetRef::new(after, file_path.clone(), vec![point.index]));
        mapped.push(AssetRef::new(after, file_path, vec![point.index + 1]));
    } else {
        mapped.push(AssetRef::new(after, file_path, vec![point.index]));
    }
    mapped.extend(
        organ
            .slice_files
            .iter()
            .map(|f| AssetRef::new(after, format!("{base}/{f}"), Vec::new())),
    );
    mapped.push(AssetRef::new(after, slice_manifest, Vec::new()));
    subs.group(step(5, "map feature"), |s| {
        s.push(Op::InsertFeatureTree {
            parent: root_ref,
            feature: Feature::new(feature.clone(), op_id.clone()),
        });
        for asset in mapped {
            s.push(Op::MapFeature {
                asset,
                feature: feature_ref.clone(),
            });
        }
        s.push(Op::RegisterInclusion {
            donor: organ.donor.clone(),
            repo: repo.to_string(),
            files: organ.slice_files.iter().cloned().collect(),
        });
    });

    Ok(OperationRecord {
        schema: SCHEMA_VERSION,
        op_id,
        op: Op::TransplantFeature {
            repo: repo.to_string(),
            insertion_point: point.clone(),
            feature,
            organ: OrganDump {
                donor: organ.donor.clone(),
                test: organ.test.id.clone(),
                imports: organ.in_file_deps.clone(),
                body: organ.body.clone(),
                slice_files: slice_dumps,
                manifest: fragment_lines,
            },
        },
        revision_before: before,
        revision_after: after,
        iteration: None,
        sub_ops: subs.ops,
    })
}

fn step(n: u8, label: &str) -> Op {
    Op::Step {
        step: n,
        label: label.to_string(),
    }
}
