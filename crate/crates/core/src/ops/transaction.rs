use serde::{Deserialize, Serialize};

use super::clone::{plan_clone_feature, plan_clone_variant};
use super::exec::{execute, verify_resolution};
use super::record::{InsertionPoint, IntegrationPlan, Mutation, OperationRecord};
use super::remove::plan_remove_feature;
use super::plan_mutate;
use crate::addressing::{AssetRef, FeatureRef};
use crate::error::{Error, Result};
use crate::history::Snapshot;
use crate::model::AssetTree;
use crate::runner::CompilabilityCheck;
use crate::transplant::{extract_organ, plan_transplant, LanguageAdapter};

/// A fully parameterized operation produced by a generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum CandidateOperation {
    RemoveFeature {
        feature: FeatureRef,
    },
    Mutate {
        target: AssetRef,
        mutation: Mutation,
    },
    Transplant {
        donor: String,
        test: String,
        repo: String,
        point: InsertionPoint,
    },
    CloneVariant {
        source: AssetRef,
        new_name: String,
    },
    CloneFeature {
        feature: FeatureRef,
        target_repo: String,
        target_parent: FeatureRef,
        plan: IntegrationPlan,
    },
}

impl CandidateOperation {
    pub fn kind(&self) -> &'static str {
        match self {
            CandidateOperation::RemoveFeature { .. } => "RemoveFeature",
            CandidateOperation::Mutate { .. } => "MutateAsset",
            CandidateOperation::Transplant { .. } => "TransplantFeature",
            CandidateOperation::CloneVariant { .. } => "CloneVariant",
            CandidateOperation::CloneFeature { .. } => "CloneFeature",
        }
    }
}

/// Turns a candidate into the record that would apply it to `tree`.
pub fn plan(tree: &AssetTree, cand: &CandidateOperation, adapter: &dyn LanguageAdapter) -> Result<OperationRecord> {
    match cand {
        CandidateOperation::RemoveFeature { feature } => plan_remove_feature(tree, feature),
        CandidateOperation::Mutate { target, mutation } => plan_mutate(tree, target, mutation),
        CandidateOperation::Transplant {
            donor,
            test,
            repo,
            point,
        } => {
            let d = tree
                .donors
                .get(donor)
                .ok_or_else(|| Error::Inapplicable(format!("unknown donor `{donor}`")))?;
            let organ = extract_organ(&d.source, test, adapter)?;
            plan_transplant(tree, &organ, repo, point, adapter)
        }
        CandidateOperation::CloneVariant { source, new_name } => plan_clone_variant(tree, source, new_name),
        CandidateOperation::CloneFeature {
            feature,
            target_repo,
            target_parent,
            plan,
        } => plan_clone_feature(tree, feature, target_repo, target_parent, plan),
    }
}

#[derive(Debug)]
pub enum TxOutcome {
    Committed {
        record: Box<OperationRecord>,
        snapshot: Snapshot,
        previous: Box<AssetTree>,
    },
    RolledBack(String),
}

/// Applies `cand` to a copy of the tree and commits only if the copy passes
/// the checker. On rollback `tree` is untouched.
pub fn run_in_transaction(
    tree: &mut AssetTree,
    cand: &CandidateOperation,
    adapter: &dyn LanguageAdapter,
    checker: &dyn CompilabilityCheck,
) -> TxOutcome {
    let record = match plan(tree, cand, adapter) {
        Ok(r) => r,
        Err(e) => return TxOutcome::RolledBack(e.to_string()),
    };
    let mut scratch = tree.clone();
    let log = match execute(&mut scratch, &record) {
        Ok(log) => log,
        Err(e) => return TxOutcome::RolledBack(e.to_string()),
    };
    if let Err(e) = verify_resolution(tree, &scratch, &log) {
        return TxOutcome::RolledBack(e.to_string());
    }
    let snapshot = Snapshot::of(&scratch);
    if let Err(reason) = checker.check(&snapshot) {
        return TxOutcome::RolledBack(format!("not compilable: {reason}"));
    }
    let previous = std::mem::replace(tree, scratch);
    TxOutcome::Committed {
        record: Box::new(record),
        snapshot,
        previous: Box::new(previous),
    }
}
