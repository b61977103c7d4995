//! Stochastic generators that bind concrete parameters to operations.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::addressing::{make_feature_ref, ref_for_location, AssetRef};
use crate::error::Error;
use crate::model::{key_within, repos_related, AssetTree, NodeKind};
use crate::ops::{default_integration_plan, fresh_variant_name, origins_of, CandidateOperation, Mutation};
use crate::transplant::{insertion_points, LanguageAdapter, MANIFEST_FILE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GeneratorId {
    RemoveFeature,
    MutAdd,
    MutReplace,
    MutDelete,
    Transplant,
    CloneVariant,
    CloneFeature,
}

impl GeneratorId {
    pub const ALL: [GeneratorId; 7] = [
        GeneratorId::RemoveFeature,
        GeneratorId::MutAdd,
        GeneratorId::MutReplace,
        GeneratorId::MutDelete,
        GeneratorId::Transplant,
        GeneratorId::CloneVariant,
        GeneratorId::CloneFeature,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorId::RemoveFeature => "removeFeature",
            GeneratorId::MutAdd => "mutAdd",
            GeneratorId::MutReplace => "mutReplace",
            GeneratorId::MutDelete => "mutDelete",
            GeneratorId::Transplant => "transplant",
            GeneratorId::CloneVariant => "cloneVariant",
            GeneratorId::CloneFeature => "cloneFeature",
        }
    }
}

impl fmt::Display for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeneratorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        GeneratorId::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::BadDistribution(format!("unknown generator `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Probability of discarding a mutation that would not change anything.
    pub sensibility_discard_prob: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            sensibility_discard_prob: 0.5,
        }
    }
}

/// Why a generator produced nothing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoCandidate {
    /// The candidate space is empty.
    Empty,
    /// A candidate was drawn and then thrown away.
    Discarded,
}

/// Read-only inputs of one generator call.
pub struct GenContext<'a> {
    pub tree: &'a AssetTree,
    pub adapter: &'a dyn LanguageAdapter,
    /// Test candidate ids already attempted during the run.
    pub consumed: &'a BTreeSet<String>,
    pub config: &'a GeneratorConfig,
}

pub type GenResult = Result<CandidateOperation, NoCandidate>;

pub fn generate<R: Rng + ?Sized>(id: GeneratorId, ctx: &GenContext<'_>, rng: &mut R) -> GenResult {
    match id {
        GeneratorId::RemoveFeature => gen_remove_feature(ctx.tree, rng),
        GeneratorId::MutAdd => gen_mutate(MutationKind::Add, ctx.tree, rng, ctx.config),
        GeneratorId::MutReplace => gen_mutate(MutationKind::Replace, ctx.tree, rng, ctx.config),
        GeneratorId::MutDelete => gen_mutate(MutationKind::Delete, ctx.tree, rng, ctx.config),
        GeneratorId::Transplant => gen_transplant(ctx.tree, ctx.adapter, ctx.consumed, rng),
        GeneratorId::CloneVariant => gen_clone_variant(ctx.tree, rng),
        GeneratorId::CloneFeature => gen_clone_feature(ctx.tree, rng),
    }
}

fn pick<'a, T, R: Rng + ?Sized>(items: &'a [T], rng: &mut R) -> Option<&'a T> {
    if items.is_empty() {
        None
    } else {
        Some(&items[rng.gen_range(0..items.len())])
    }
}

/// Every non-root feature as (repository, key), repositories in tree order.
pub fn all_features(tree: &AssetTree) -> Vec<(String, String)> {
    tree.repositories()
        .filter_map(|r| r.feature_model.as_ref().map(|m| (r, m)))
        .flat_map(|(r, m)| {
            m.features()
                .into_iter()
                .skip(1)
                .map(move |(k, _)| (r.name.clone(), k))
        })
        .collect()
}

pub fn gen_remove_feature<R: Rng + ?Sized>(tree: &AssetTree, rng: &mut R) -> GenResult {
    let features = all_features(tree);
    let (repo, key) = pick(&features, rng).ok_or(NoCandidate::Empty)?;
    let (_, node) = tree.repository(repo).expect("listed");
    let model = node.feature_model.as_ref().expect("listed");
    Ok(CandidateOperation::RemoveFeature {
        feature: make_feature_ref(repo, model, key),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationKind {
    Add,
    Replace,
    Delete,
}

/// Files eligible for mutation: every non-manifest file with at least one line.
pub fn mutable_files(tree: &AssetTree) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    tree.walk(|loc, node| {
        if node.kind == NodeKind::File && node.name != MANIFEST_FILE && node.line_count() > 0 {
            out.push(loc.to_vec());
        }
    });
    out
}

/// Lines of every non-manifest file in the folder holding `file_loc`.
fn folder_lines(tree: &AssetTree, file_loc: &[usize]) -> Vec<String> {
    let (_, parent) = file_loc.split_last().expect("file below a repository");
    let folder = tree.node(parent).expect("parent exists");
    folder
        .children
        .iter()
        .filter(|c| c.kind == NodeKind::File && c.name != MANIFEST_FILE)
        .flat_map(|c| c.lines())
        .collect()
}

/// True for mutations that would leave the code effectively unchanged.
pub fn is_ineffective(current: &[String], m: &Mutation) -> bool {
    match m {
        Mutation::AddLine { text, .. } => text.trim().is_empty(),
        Mutation::ReplaceLine { line, text } => current[*line] == *text,
        Mutation::DeleteLine { line } => current[*line].trim().is_empty(),
    }
}

pub fn gen_mutate<R: Rng + ?Sized>(
    kind: MutationKind,
    tree: &AssetTree,
    rng: &mut R,
    cfg: &GeneratorConfig,
) -> GenResult {
    let files = mutable_files(tree);
    let loc = pick(&files, rng).ok_or(NoCandidate::Empty)?;
    let current = tree.node(loc).expect("walked").lines();
    let line = rng.gen_range(0..current.len());
    let mut donor_line = || {
        let pool = folder_lines(tree, loc);
        pool[rng.gen_range(0..pool.len())].clone()
    };
    let mutation = match kind {
        MutationKind::Add => Mutation::AddLine {
            line,
            text: donor_line(),
        },
        MutationKind::Replace => Mutation::ReplaceLine {
            line,
            text: donor_line(),
        },
        MutationKind::Delete => Mutation::DeleteLine { line },
    };
    if is_ineffective(&current, &mutation) && rng.gen_bool(cfg.sensibility_discard_prob) {
        return Err(NoCandidate::Discarded);
    }
    Ok(CandidateOperation::Mutate {
        target: ref_for_location(tree, loc),
        mutation,
    })
}

/// Unconsumed modular test candidates as (donor, test id), donors in id order.
pub fn open_test_candidates(tree: &AssetTree, consumed: &BTreeSet<String>) -> Vec<(String, String)> {
    tree.donors
        .iter()
        .flat_map(|(d, p)| {
            p.source
                .test_candidates
                .iter()
                .filter(|c| c.modular && !consumed.contains(&c.id))
                .map(move |c| (d.clone(), c.id.clone()))
        })
        .collect()
}

pub fn gen_transplant<R: Rng + ?Sized>(
    tree: &AssetTree,
    adapter: &dyn LanguageAdapter,
    consumed: &BTreeSet<String>,
    rng: &mut R,
) -> GenResult {
    let tests = open_test_candidates(tree, consumed);
    let hosts: Vec<(String, Vec<_>)> = tree
        .repositories()
        .enumerate()
        .map(|(i, r)| (r.name.clone(), insertion_points(tree, i, adapter)))
        .filter(|(_, p)| !p.is_empty())
        .collect();
    if tests.is_empty() || hosts.is_empty() {
        return Err(NoCandidate::Empty);
    }
    let (donor, test) = pick(&tests, rng).expect("non-empty");
    let (repo, points) = pick(&hosts, rng).expect("non-empty");
    let point = pick(points, rng).expect("non-empty");
    Ok(CandidateOperation::Transplant {
        donor: donor.clone(),
        test: test.clone(),
        repo: repo.clone(),
        point: point.clone(),
    })
}

pub fn gen_clone_variant<R: Rng + ?Sized>(tree: &AssetTree, rng: &mut R) -> GenResult {
    let repos = tree.repository_names();
    let source = pick(&repos, rng).ok_or(NoCandidate::Empty)?;
    Ok(CandidateOperation::CloneVariant {
        source: AssetRef::new(tree.revision, source.clone(), Vec::new()),
        new_name: fresh_variant_name(tree, source),
    })
}

/// A feature of `source_repo` that could be copied into `target_repo`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CloneFeatureTriple {
    pub source_repo: String,
    pub target_repo: String,
    pub feature_key: String,
}

/// Ordered pairs of distinct trace-related repositories and every feature of
/// the source whose subtree has no lineage in the target and whose name is
/// free below the target root.
pub fn clone_feature_triples(tree: &AssetTree) -> Vec<CloneFeatureTriple> {
    let repos: Vec<_> = tree.repositories().collect();
    let mut out = Vec::new();
    for (si, s) in repos.iter().enumerate() {
        let Some(smodel) = s.feature_model.as_ref() else {
            continue;
        };
        let features = smodel.features();
        for (ti, t) in repos.iter().enumerate() {
            if si == ti || !repos_related(tree, &s.name, &t.name) {
                continue;
            }
            let Some(tmodel) = t.feature_model.as_ref() else {
                continue;
            };
            let present = origins_of(tree, ti);
            for (key, f) in features.iter().skip(1) {
                let taken = tmodel.root.children.iter().any(|c| c.name == f.name);
                let shared = features
                    .iter()
                    .any(|(k, g)| key_within(k, key) && present.contains(&g.origin));
                if !taken && !shared {
                    out.push(CloneFeatureTriple {
                        source_repo: s.name.clone(),
                        target_repo: t.name.clone(),
                        feature_key: key.clone(),
                    });
                }
            }
        }
    }
    out
}

pub fn gen_clone_feature<R: Rng + ?Sized>(tree: &AssetTree, rng: &mut R) -> GenResult {
    let triples = clone_feature_triples(tree);
    let t = pick(&triples, rng).ok_or(NoCandidate::Empty)?;
    let (_, src) = tree.repository(&t.source_repo).expect("listed");
    let (_, tgt) = tree.repository(&t.target_repo).expect("listed");
    let feature = make_feature_ref(&t.source_repo, src.feature_model.as_ref().expect("listed"), &t.feature_key);
    let target_parent = make_feature_ref(&t.target_repo, tgt.feature_model.as_ref().expect("listed"), "");
    let plan = default_integration_plan(tree, &feature, &t.target_repo).map_err(|_| NoCandidate::Discarded)?;
    Ok(CandidateOperation::CloneFeature {
        feature,
        target_repo: t.target_repo.clone(),
        target_parent,
        plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AssetNode, Feature, FeatureModel};
    use crate::ops::apply_clone_variant;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tree_with(files: &[(&str, &[&str])]) -> AssetTree {
        let mut t = AssetTree::new();
        let mut r = AssetNode::new(t.alloc_id(), NodeKind::Repository, "calc");
        r.feature_model = Some(FeatureModel::new("calc"));
        t.insert_child(&[], 0, r).unwrap();
        for (name, lines) in files {
            let f = AssetNode::new(t.alloc_id(), NodeKind::File, *name)
                .with_content(lines.iter().map(|s| s.to_string()).collect());
            t.insert_child(&[0], 0, f).unwrap();
        }
        t
    }

    fn add_feature(t: &mut AssetTree, repo: usize, name: &str) {
        t.feature_model_mut(repo)
            .unwrap()
            .add_child("", Feature::new(name, format!("op-{name}")))
            .unwrap();
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn generator_ids_round_trip() {
        for g in GeneratorId::ALL {
            assert_eq!(g.as_str().parse::<GeneratorId>().unwrap(), g);
        }
        assert!("mutSwap".parse::<GeneratorId>().is_err());
    }

    #[test]
    fn remove_feature_single_and_empty() {
        let mut t = tree_with(&[]);
        assert_eq!(gen_remove_feature(&t, &mut rng()), Err(NoCandidate::Empty));
        add_feature(&mut t, 0, "A");
        for _ in 0..5 {
            let c = gen_remove_feature(&t, &mut rng()).unwrap();
            assert!(matches!(c, CandidateOperation::RemoveFeature { feature } if feature.lpq == "A"));
        }
    }

    #[test]
    fn forced_identity_replacement_is_discarded() {
        let t = tree_with(&[("a.ml", &["x"])]);
        let cfg = GeneratorConfig {
            sensibility_discard_prob: 1.0,
        };
        let mut r = rng();
        for _ in 0..50 {
            assert_eq!(gen_mutate(MutationKind::Replace, &t, &mut r, &cfg), Err(NoCandidate::Discarded));
        }
        let keep = GeneratorConfig {
            sensibility_discard_prob: 0.0,
        };
        assert!(gen_mutate(MutationKind::Replace, &t, &mut r, &keep).is_ok());
    }

    #[test]
    fn delete_on_empty_tree_has_no_candidate() {
        let t = AssetTree::new();
        let cfg = GeneratorConfig::default();
        assert_eq!(gen_mutate(MutationKind::Delete, &t, &mut rng(), &cfg), Err(NoCandidate::Empty));
    }

    #[test]
    fn manifests_are_never_mutated() {
        let t = tree_with(&[(MANIFEST_FILE, &["name: calc"])]);
        let cfg = GeneratorConfig::default();
        assert_eq!(gen_mutate(MutationKind::Delete, &t, &mut rng(), &cfg), Err(NoCandidate::Empty));
    }

    #[test]
    fn clone_variant_names() {
        let mut t = tree_with(&[]);
        let c = gen_clone_variant(&t, &mut rng()).unwrap();
        let CandidateOperation::CloneVariant { source, new_name } = c else {
            panic!()
        };
        assert_eq!(new_name, "calc_v1");
        apply_clone_variant(&mut t, &source, &new_name).unwrap();
        let again = fresh_variant_name(&t, "calc");
        assert_eq!(again, "calc_v2");
    }

    #[test]
    fn clone_feature_triples_follow_lineage() {
        let mut t = tree_with(&[("a.ml", &["x"])]);
        assert!(clone_feature_triples(&t).is_empty());
        add_feature(&mut t, 0, "A");
        let src = AssetRef::new(t.revision, "calc", Vec::new());
        apply_clone_variant(&mut t, &src, "calc_v1").unwrap();
        assert!(clone_feature_triples(&t).is_empty());
        add_feature(&mut t, 0, "B");
        let triples = clone_feature_triples(&t);
        assert_eq!(
            triples,
            vec![CloneFeatureTriple {
                source_repo: "calc".into(),
                target_repo: "calc_v1".into(),
                feature_key: "B".into(),
            }]
        );
        assert!(gen_clone_feature(&t, &mut rng()).is_ok());
    }

    #[test]
    fn transplant_without_donors_is_empty() {
        let t = tree_with(&[("a.ml", &["fn main() {", "  x", "}"])]);
        let r = gen_transplant(&t, &crate::transplant::Minilang, &BTreeSet::new(), &mut rng());
        assert_eq!(r, Err(NoCandidate::Empty));
    }
}
