mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::*;
use histgen::addressing::{make_feature_ref, AssetRef};
use histgen::generators::clone_feature_triples;
use histgen::history::{FeatureFile, Snapshot};
use histgen::model::{feature_exclusive_assets, feature_exclusive_ids, AssetTree};
use histgen::ops::{apply_clone_variant, apply_remove_feature, fresh_variant_name};
use histgen::transplant::slice_closure;

fn mapping_keys_exist(t: &AssetTree) -> Result<(), String> {
    for (i, repo) in t.repositories().enumerate() {
        let model = t.feature_model(i).unwrap();
        let mut nodes = Vec::new();
        all_nodes(repo, vec![i], &mut nodes);
        for (loc, n) in nodes {
            if let Some(k) = n.features.iter().find(|k| !model.contains(k)) {
                return Err(format!("{loc:?} maps to missing feature {k}"));
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exclusive_assets_match_brute_force(seed in any::<u64>()) {
        let t = evolved_tree(seed);
        for (i, repo) in t.repositories().enumerate() {
            let model = repo.feature_model.as_ref().unwrap();
            for (key, _) in model.features() {
                let got: BTreeSet<Vec<usize>> = feature_exclusive_ids(&t, i, &key).into_iter().collect();
                prop_assert_eq!(&got, &exclusive_oracle(&t, i, &key));
                let refs = feature_exclusive_assets(&t, &make_feature_ref(&repo.name, model, &key)).unwrap();
                prop_assert_eq!(refs.len(), got.len());
            }
        }
    }

    #[test]
    fn clone_feature_candidates_match_brute_force(seed in any::<u64>()) {
        let t = evolved_tree(seed);
        let got: Vec<_> = clone_feature_triples(&t)
            .into_iter()
            .map(|c| (c.source_repo, c.target_repo, c.feature_key))
            .collect();
        let set: BTreeSet<_> = got.iter().cloned().collect();
        prop_assert_eq!(set.len(), got.len());
        prop_assert_eq!(set, clone_feature_oracle(&t));
    }

    #[test]
    fn slice_closure_matches_fixpoint(seed in any::<u64>(), pick in any::<u8>()) {
        let (donor, manifest, files) = random_donor(seed);
        let paths: Vec<String> = files.keys().cloned().collect();
        let seeds = vec![paths[pick as usize % paths.len()].clone()];
        match (slice_closure(&donor, seeds.clone()), closure_oracle(&manifest, &files, &seeds)) {
            (Ok((f, e)), ClosureOracle::Closed { files, externals }) => {
                prop_assert_eq!(f, files);
                prop_assert_eq!(e, externals);
            }
            (Err(histgen::Error::MissingDependency { file, .. }), ClosureOracle::Missing(broken)) => {
                prop_assert!(broken.contains(&file));
            }
            (got, _) => prop_assert!(false, "closure disagrees with the oracle: {:?}", got),
        }
    }

    #[test]
    fn clone_variant_mirrors_source(seed in any::<u64>(), which in any::<u8>()) {
        let mut t = evolved_tree(seed);
        let repos = t.repository_names();
        let src = repos[which as usize % repos.len()].clone();
        let name = fresh_variant_name(&t, &src);
        let before = t.clone();
        let sref = AssetRef::new(t.revision, src.clone(), Vec::new());
        let rec = apply_clone_variant(&mut t, &sref, &name).unwrap();
        let (_, orig) = before.repository(&src).unwrap();
        let (_, copy) = t.repository(&name).unwrap();
        prop_assert_eq!(mirror_diff(orig, copy, true), None);
        prop_assert_eq!(orig.feature_model.as_ref().map(|m| &m.root.children), copy.feature_model.as_ref().map(|m| &m.root.children));
        let traces = t.traces.by_op(&rec.op_id);
        prop_assert_eq!(traces.len(), orig.descendant_count() + 1);
        let pairs: Vec<_> = orig.ids().into_iter().zip(copy.ids()).collect();
        let traced: Vec<_> = traces.iter().map(|t| (t.source_id, t.target_id)).collect();
        prop_assert_eq!(traced, pairs);
    }

    #[test]
    fn tree_json_round_trips(seed in any::<u64>()) {
        let t = evolved_tree(seed);
        let back = AssetTree::from_json(&t.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn snapshot_round_trips_through_tree(seed in any::<u64>()) {
        let t = random_tree(seed);
        let snap = Snapshot::of(&t);
        prop_assert_eq!(Snapshot::of(&snap.to_tree()), snap);
    }

    #[test]
    fn distinct_never_exceeds_total(seed in any::<u64>()) {
        let t = evolved_tree(seed);
        prop_assert!(t.distinct_feature_count() <= t.total_feature_count());
        let ff = FeatureFile::of(&t);
        prop_assert_eq!(ff.distinct_features(), t.distinct_feature_count());
        prop_assert_eq!(ff.total_features(), t.total_feature_count());
        prop_assert_eq!(FeatureFile::parse(&ff.to_text()).unwrap(), ff);
    }

    #[test]
    fn removal_leaves_no_dangling_mappings(seed in any::<u64>(), which in any::<u16>()) {
        let mut t = random_tree(seed);
        let features = histgen::generators::all_features(&t);
        prop_assume!(!features.is_empty());
        let (repo, key) = features[which as usize % features.len()].clone();
        let (idx, node) = t.repository(&repo).unwrap();
        let fref = make_feature_ref(&repo, node.feature_model.as_ref().unwrap(), &key);
        let before = t.feature_model(idx).unwrap().subtree_keys(&key);
        apply_remove_feature(&mut t, &fref).unwrap();
        let model = t.feature_model(idx).unwrap();
        for k in &before {
            prop_assert!(!model.contains(k));
        }
        prop_assert_eq!(mapping_keys_exist(&t), Ok(()));
    }
}
