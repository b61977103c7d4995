#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use histgen::addressing::AssetRef;
use histgen::model::{AssetNode, AssetTree, Feature, FeatureModel, NodeKind};
use histgen::ops::{apply_clone_variant, fresh_variant_name};
use histgen::transplant::{donor_from_files, ManifestModel, Minilang};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn system_dir() -> PathBuf {
    fixtures().join("calc")
}

pub fn donor_dirs() -> Vec<PathBuf> {
    let d = fixtures().join("donors");
    vec![d.join("geomlib"), d.join("ringlib")]
}

fn lines(rng: &mut ChaCha8Rng, tag: &str) -> Vec<String> {
    (0..rng.gen_range(1..5))
        .map(|i| match rng.gen_range(0..4) {
            0 => String::new(),
            1 => format!("// {tag} note {i}"),
            _ => format!("let {tag}_{i} = {}", rng.gen_range(0..100)),
        })
        .collect()
}

fn random_file(t: &mut AssetTree, rng: &mut ChaCha8Rng, name: String) -> AssetNode {
    let mut f = AssetNode::new(t.alloc_id(), NodeKind::File, name.clone());
    if rng.gen_bool(0.5) {
        f.content = lines(rng, "x");
        return f;
    }
    for i in 0..rng.gen_range(1..4) {
        let child = if rng.gen_bool(0.5) {
            let mut b = AssetNode::new(t.alloc_id(), NodeKind::Block, "");
            if rng.gen_bool(0.3) {
                for j in 0..rng.gen_range(1..3) {
                    let l = AssetNode::new(t.alloc_id(), NodeKind::Line, "")
                        .with_content(vec![format!("inner {i} {j}")]);
                    b.children.push(l);
                }
            } else {
                b.content = lines(rng, "b");
            }
            b
        } else {
            AssetNode::new(t.alloc_id(), NodeKind::Line, "").with_content(vec![format!("line {i}")])
        };
        f.children.push(child);
    }
    f
}

fn populate(t: &mut AssetTree, rng: &mut ChaCha8Rng, loc: Vec<usize>, depth: usize) {
    for i in 0..rng.gen_range(0..4) {
        if depth < 2 && rng.gen_bool(0.3) {
            let d = AssetNode::new(t.alloc_id(), NodeKind::Folder, format!("d{i}"));
            let idx = t.insert_child(&loc, 0, d).unwrap();
            let mut sub = loc.clone();
            sub.push(idx);
            populate(t, rng, sub, depth + 1);
        } else {
            let f = random_file(t, rng, format!("f{i}.ml"));
            t.insert_child(&loc, 0, f).unwrap();
        }
    }
}

fn random_model(rng: &mut ChaCha8Rng, name: &str, origin_tag: &str) -> FeatureModel {
    let mut m = FeatureModel::new(name);
    for i in 0..rng.gen_range(0..6) {
        let keys: Vec<String> = m.features().into_iter().map(|(k, _)| k).collect();
        let parent = keys[rng.gen_range(0..keys.len())].clone();
        m.add_child(&parent, Feature::new(format!("F{i}"), format!("{origin_tag}{i}")))
            .unwrap();
    }
    m
}

/// Maps roughly a third of a repository's assets to one or two random features.
pub fn scatter_mappings(t: &mut AssetTree, rng: &mut ChaCha8Rng, repo_idx: usize) {
    let keys: Vec<String> = t
        .feature_model(repo_idx)
        .map(|m| m.features().into_iter().map(|(k, _)| k).collect())
        .unwrap_or_default();
    if keys.is_empty() {
        return;
    }
    let mut locs = Vec::new();
    t.walk(|loc, _| {
        if loc.len() > 1 && loc[0] == repo_idx {
            locs.push(loc.to_vec());
        }
    });
    for loc in locs {
        if !rng.gen_bool(0.35) {
            continue;
        }
        let n = t.node_mut(&loc).unwrap();
        for _ in 0..rng.gen_range(1..3) {
            n.features.insert(keys[rng.gen_range(0..keys.len())].clone());
        }
    }
}

/// A small random system: one to three repositories with folders, files,
/// blocks and lines, random feature models and scattered mappings.
pub fn random_tree(seed: u64) -> AssetTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = AssetTree::new();
    for r in 0..rng.gen_range(1..4) {
        let name = format!("r{r}");
        let mut node = AssetNode::new(t.alloc_id(), NodeKind::Repository, name.clone());
        node.feature_model = Some(random_model(&mut rng, &name, &format!("o{r}_")));
        let idx = t.insert_child(&[], 0, node).unwrap();
        populate(&mut t, &mut rng, vec![idx], 0);
    }
    for i in 0..t.root.children.len() {
        scatter_mappings(&mut t, &mut rng, i);
    }
    t
}

/// `random_tree` followed by clone-and-own evolution: variant clones,
/// features added with fresh or borrowed lineage, and removals.
pub fn evolved_tree(seed: u64) -> AssetTree {
    let mut t = random_tree(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for step in 0..rng.gen_range(0..7) {
        let repos = t.repository_names();
        let ri = rng.gen_range(0..repos.len());
        match rng.gen_range(0..4) {
            0 | 1 => {
                let name = fresh_variant_name(&t, &repos[ri]);
                let src = AssetRef::new(t.revision, repos[ri].clone(), Vec::new());
                apply_clone_variant(&mut t, &src, &name).unwrap();
            }
            2 => {
                let borrowed: Vec<String> = t
                    .repositories()
                    .filter_map(|r| r.feature_model.as_ref())
                    .flat_map(|m| m.features().into_iter().skip(1).map(|(_, f)| f.origin.clone()))
                    .collect();
                let origin = if !borrowed.is_empty() && rng.gen_bool(0.5) {
                    borrowed[rng.gen_range(0..borrowed.len())].clone()
                } else {
                    format!("n{step}")
                };
                let names = ["A", "B", "F0", "F1", "F2"];
                let name = names[rng.gen_range(0..names.len())];
                let m = t.feature_model_mut(ri).unwrap();
                let keys: Vec<String> = m.features().into_iter().map(|(k, _)| k).collect();
                let parent = keys[rng.gen_range(0..keys.len())].clone();
                let _ = m.add_child(&parent, Feature::new(name, origin));
            }
            _ => {
                let m = t.feature_model_mut(ri).unwrap();
                let keys: Vec<String> = m.features().into_iter().skip(1).map(|(k, _)| k).collect();
                if !keys.is_empty() {
                    let k = keys[rng.gen_range(0..keys.len())].clone();
                    m.remove(&k).unwrap();
                }
            }
        }
    }
    t
}

/// Every node of the subtree at `loc` with its location, depth first.
pub fn all_nodes<'a>(node: &'a AssetNode, loc: Vec<usize>, out: &mut Vec<(Vec<usize>, &'a AssetNode)>) {
    out.push((loc.clone(), node));
    for (i, c) in node.children.iter().enumerate() {
        let mut l = loc.clone();
        l.push(i);
        all_nodes(c, l, out);
    }
}

/// Brute force: locations of assets whose mappings are non-empty and all
/// name `key` or a feature below it.
pub fn exclusive_oracle(tree: &AssetTree, repo_idx: usize, key: &str) -> BTreeSet<Vec<usize>> {
    let mut nodes = Vec::new();
    all_nodes(&tree.root.children[repo_idx], vec![repo_idx], &mut nodes);
    nodes
        .into_iter()
        .filter(|(_, n)| {
            !n.features.is_empty()
                && n.features.iter().all(|f| {
                    key.is_empty() || f == key || f.starts_with(&format!("{key}/"))
                })
        })
        .map(|(l, _)| l)
        .collect()
}

/// Brute force: transitive closure of the repository-level clone edges.
pub fn repo_relation_oracle(tree: &AssetTree) -> BTreeSet<(String, String)> {
    let names: BTreeMap<u64, String> = tree.repositories().map(|r| (r.id, r.name.clone())).collect();
    let mut reach: BTreeSet<(u64, u64)> = tree
        .traces
        .all()
        .iter()
        .filter(|t| names.contains_key(&t.source_id) && names.contains_key(&t.target_id))
        .map(|t| (t.source_id, t.target_id))
        .collect();
    loop {
        let mut grown = reach.clone();
        for &(a, b) in &reach {
            for &(c, d) in &reach {
                if b == c {
                    grown.insert((a, d));
                }
            }
        }
        if grown.len() == reach.len() {
            break;
        }
        reach = grown;
    }
    let mut out = BTreeSet::new();
    for (a, b) in reach {
        out.insert((names[&a].clone(), names[&b].clone()));
        out.insert((names[&b].clone(), names[&a].clone()));
    }
    out
}

/// Brute force enumeration of clone-feature candidates as
/// (source repo, target repo, feature key).
pub fn clone_feature_oracle(tree: &AssetTree) -> BTreeSet<(String, String, String)> {
    let related = repo_relation_oracle(tree);
    let mut out = BTreeSet::new();
    for s in tree.repositories() {
        for t in tree.repositories() {
            if s.name == t.name || !related.contains(&(s.name.clone(), t.name.clone())) {
                continue;
            }
            let (Some(sm), Some(tm)) = (&s.feature_model, &t.feature_model) else {
                continue;
            };
            let target_origins: BTreeSet<&str> =
                tm.features().into_iter().skip(1).map(|(_, f)| f.origin.as_str()).collect();
            let target_top: BTreeSet<&str> = tm.root.children.iter().map(|c| c.name.as_str()).collect();
            let all = sm.features();
            for (key, f) in all.iter().skip(1) {
                let subtree_origins: Vec<&str> = all
                    .iter()
                    .filter(|(k, _)| k == key || k.starts_with(&format!("{key}/")))
                    .map(|(_, g)| g.origin.as_str())
                    .collect();
                if target_top.contains(f.name.as_str()) || subtree_origins.iter().any(|o| target_origins.contains(o)) {
                    continue;
                }
                out.insert((s.name.clone(), t.name.clone(), key.clone()));
            }
        }
    }
    out
}

/// A random donor with `src/mK.ml` modules importing each other, declared
/// externals and occasionally a module that does not exist.
pub fn random_donor_files(seed: u64) -> (ManifestModel, BTreeMap<String, Vec<String>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut manifest = ManifestModel::named("rnd");
    manifest.deps = vec!["ext0".into(), "ext1".into()];
    let n = rng.gen_range(1..9);
    let mut files = BTreeMap::new();
    for k in 0..n {
        let mut body = vec![format!("// module m{k}")];
        for _ in 0..rng.gen_range(0..4) {
            let line = match rng.gen_range(0..10) {
                0 => "import ghost".to_string(),
                1 | 2 => format!("import ext{}.part", rng.gen_range(0..2)),
                _ => format!("import m{}", rng.gen_range(0..n)),
            };
            body.push(line);
        }
        body.push(format!("fn f{k}() {{"));
        body.push("}".into());
        files.insert(format!("src/m{k}.ml"), body);
    }
    (manifest, files)
}

pub enum ClosureOracle {
    Closed { files: BTreeSet<String>, externals: BTreeSet<String> },
    /// Files in the closure carrying an unresolvable import.
    Missing(BTreeSet<String>),
}

/// Fixpoint over the raw import lines of the donor files.
pub fn closure_oracle(
    manifest: &ManifestModel,
    files: &BTreeMap<String, Vec<String>>,
    seeds: &[String],
) -> ClosureOracle {
    let mut reach: BTreeSet<String> = seeds.iter().cloned().collect();
    let mut externals = BTreeSet::new();
    let mut broken = BTreeSet::new();
    loop {
        let before = reach.len();
        for f in reach.clone() {
            for l in &files[&f] {
                let Some(import) = l.trim().strip_prefix("import ") else {
                    continue;
                };
                let path = format!("src/{}.ml", import.replace('.', "/"));
                if files.contains_key(&path) {
                    reach.insert(path);
                } else if let Some(d) = manifest.deps.iter().find(|d| import == d.as_str() || import.starts_with(&format!("{d}."))) {
                    externals.insert(d.clone());
                } else {
                    broken.insert(f.clone());
                }
            }
        }
        if reach.len() == before {
            break;
        }
    }
    if broken.is_empty() {
        ClosureOracle::Closed { files: reach, externals }
    } else {
        ClosureOracle::Missing(broken)
    }
}

pub fn random_donor(seed: u64) -> (histgen::model::DonorSource, ManifestModel, BTreeMap<String, Vec<String>>) {
    let (m, files) = random_donor_files(seed);
    let donor = donor_from_files(m.clone(), files.clone(), &Minilang);
    (donor, m, files)
}

/// Checks that `copy` mirrors `orig` node for node, mappings and feature
/// models included; returns the first difference.
pub fn mirror_diff(orig: &AssetNode, copy: &AssetNode, top: bool) -> Option<String> {
    if !top && !orig.structurally_eq(copy) {
        return Some(format!("structure differs at {}", orig.name));
    }
    if orig.kind != copy.kind || orig.content != copy.content || orig.children.len() != copy.children.len() {
        return Some(format!("node {} differs", orig.name));
    }
    if orig.features != copy.features {
        return Some(format!("mappings differ at {}", orig.name));
    }
    if !top && orig.feature_model != copy.feature_model {
        return Some(format!("feature model differs at {}", orig.name));
    }
    orig.children
        .iter()
        .zip(&copy.children)
        .find_map(|(a, b)| mirror_diff(a, b, false))
}

/// Relative path -> bytes of every file below `dir`.
pub fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .map(|e| e.unwrap())
        .map(|e| {
            let rel = e.path().strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            let bytes = if e.file_type().is_file() {
                std::fs::read(e.path()).unwrap()
            } else {
                b"<dir>".to_vec()
            };
            (rel, bytes)
        })
        .collect()
}

/// Pearson chi-square statistic of observed counts against probabilities.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(probs)
        .filter(|(_, p)| **p > 0.0)
        .map(|(o, p)| {
            let e = n as f64 * p;
            (*o as f64 - e).powi(2) / e
        })
        .sum()
}

/// Upper 1% critical values of the chi-square distribution, by degrees of freedom.
pub fn chi_square_critical_1pct(df: usize) -> f64 {
    [0.0, 6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090][df]
}
