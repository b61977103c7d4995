mod common;

use std::collections::BTreeMap;

use common::*;
use histgen::addressing::AssetRef;
use histgen::generators::{gen_clone_variant, gen_mutate, gen_remove_feature, GeneratorConfig, MutationKind, NoCandidate};
use histgen::model::{AssetNode, AssetTree, Feature, FeatureModel, NodeKind};
use histgen::ops::{apply_clone_variant, CandidateOperation};
use histgen::runner::iteration_rng;

const DRAWS: u64 = 10_000;

fn repo_with(t: &mut AssetTree, name: &str, features: &[&str], lines: &[&str]) {
    let mut r = AssetNode::new(t.alloc_id(), NodeKind::Repository, name);
    let mut m = FeatureModel::new(name);
    for f in features {
        m.add_child("", Feature::new(*f, format!("op-{f}"))).unwrap();
    }
    r.feature_model = Some(m);
    let idx = t.insert_child(&[], 0, r).unwrap();
    let f = AssetNode::new(t.alloc_id(), NodeKind::File, "main.ml").with_content(lines.iter().map(|s| s.to_string()).collect());
    t.insert_child(&[idx], 0, f).unwrap();
}

fn assert_uniform(counts: &BTreeMap<String, u64>, k: usize) {
    assert_eq!(counts.len(), k, "{counts:?}");
    let observed: Vec<u64> = counts.values().copied().collect();
    let stat = chi_square(&observed, &vec![1.0 / k as f64; k]);
    assert!(stat < chi_square_critical_1pct(k - 1), "chi2 {stat} for {counts:?}");
}

#[test]
fn feature_removal_is_uniform_over_features() {
    let mut t = AssetTree::new();
    repo_with(&mut t, "a", &["X", "Y"], &["x"]);
    repo_with(&mut t, "b", &["Z", "W"], &["x"]);
    let mut counts = BTreeMap::new();
    for i in 1..=DRAWS {
        let Ok(CandidateOperation::RemoveFeature { feature }) = gen_remove_feature(&t, &mut iteration_rng(7, i)) else {
            panic!("a feature is always available");
        };
        *counts.entry(feature.to_string()).or_insert(0) += 1;
    }
    assert_uniform(&counts, 4);
}

#[test]
fn variant_source_is_uniform_over_repositories() {
    let mut t = AssetTree::new();
    repo_with(&mut t, "a", &[], &["x"]);
    let src = AssetRef::new(0, "a", Vec::new());
    apply_clone_variant(&mut t, &src, "b").unwrap();
    let src = AssetRef::new(t.revision, "a", Vec::new());
    apply_clone_variant(&mut t, &src, "c").unwrap();
    let mut counts = BTreeMap::new();
    for i in 1..=DRAWS {
        let Ok(CandidateOperation::CloneVariant { source, new_name }) = gen_clone_variant(&t, &mut iteration_rng(3, i)) else {
            panic!("repositories exist");
        };
        assert!(t.repository(&new_name).is_none());
        *counts.entry(source.path).or_insert(0) += 1;
    }
    assert_uniform(&counts, 3);
}

#[test]
fn ineffective_mutations_are_discarded_at_the_configured_rate() {
    let mut t = AssetTree::new();
    repo_with(&mut t, "a", &[], &["same", "same"]);
    for p in [0.0, 0.5, 1.0] {
        let cfg = GeneratorConfig {
            sensibility_discard_prob: p,
        };
        let mut discarded = 0u64;
        for i in 1..=DRAWS {
            match gen_mutate(MutationKind::Replace, &t, &mut iteration_rng(5, i), &cfg) {
                Err(NoCandidate::Discarded) => discarded += 1,
                Ok(_) => {}
                Err(NoCandidate::Empty) => panic!("a file exists"),
            }
        }
        let n = DRAWS as f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!((discarded as f64 - n * p).abs() <= 3.0 * sigma + f64::EPSILON, "p={p}: {discarded}");
    }
}

#[test]
fn effective_mutations_are_never_discarded() {
    let mut t = AssetTree::new();
    repo_with(&mut t, "a", &[], &["one", "two", "three"]);
    let cfg = GeneratorConfig {
        sensibility_discard_prob: 1.0,
    };
    for i in 1..=500 {
        assert!(gen_mutate(MutationKind::Delete, &t, &mut iteration_rng(1, i), &cfg).is_ok());
    }
}

#[test]
fn random_trees_always_offer_a_clone_source() {
    for seed in 0..50 {
        let t = random_tree(seed);
        assert!(gen_clone_variant(&t, &mut iteration_rng(seed, 1)).is_ok());
    }
}
