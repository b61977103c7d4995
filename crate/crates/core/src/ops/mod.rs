//! The evolution operators as planned, recorded and transactional changes.

mod clone;
mod exec;
pub mod record;
mod remove;
mod transaction;

pub use clone::{default_integration_plan, fresh_variant_name, origins_of, plan_clone_feature, plan_clone_variant};
pub use exec::{execute, verify_resolution, ResolutionLog};
pub use record::{
    op_id_for, FeatureCopy, InsertionPoint, IntegrationPlan, Mutation, Op, OperationRecord, OrganDump, Placement,
    SCHEMA_VERSION,
};
pub use remove::plan_remove_feature;
pub use transaction::{plan, run_in_transaction, CandidateOperation, TxOutcome};

use crate::addressing::{resolve_asset_ref, AssetRef, FeatureRef};
use crate::error::{Error, Result};
use crate::model::{AssetTree, NodeKind};

/// Plans a single-line mutation of a file.
pub fn plan_mutate(tree: &AssetTree, target: &AssetRef, mutation: &Mutation) -> Result<OperationRecord> {
    let id = resolve_asset_ref(tree, target)?;
    let node = tree.get(id).expect("resolved");
    if node.kind != NodeKind::File {
        return Err(Error::NotMutable(target.to_string()));
    }
    let len = node.line_count();
    if mutation.line() >= len {
        return Err(Error::BadIndex {
            target: target.to_string(),
            index: mutation.line(),
            len,
        });
    }
    let after = tree.revision + 1;
    Ok(OperationRecord {
        schema: SCHEMA_VERSION,
        op_id: op_id_for(after),
        op: Op::MutateAsset {
            target: target.clone(),
            mutation: mutation.clone(),
        },
        revision_before: tree.revision,
        revision_after: after,
        iteration: None,
        sub_ops: Vec::new(),
    })
}

/// Plans and applies a record directly, without a compilability check.
fn apply_planned(tree: &mut AssetTree, rec: OperationRecord) -> Result<OperationRecord> {
    let mut scratch = tree.clone();
    execute(&mut scratch, &rec)?;
    *tree = scratch;
    Ok(rec)
}

pub fn apply_remove_feature(tree: &mut AssetTree, feature: &FeatureRef) -> Result<OperationRecord> {
    let rec = plan_remove_feature(tree, feature)?;
    apply_planned(tree, rec)
}

pub fn apply_mutate_asset(tree: &mut AssetTree, target: &AssetRef, m: &Mutation) -> Result<OperationRecord> {
    let rec = plan_mutate(tree, target, m)?;
    apply_planned(tree, rec)
}

pub fn apply_clone_variant(tree: &mut AssetTree, source: &AssetRef, new_name: &str) -> Result<OperationRecord> {
    let rec = plan_clone_variant(tree, source, new_name)?;
    apply_planned(tree, rec)
}

pub fn apply_clone_feature(
    tree: &mut AssetTree,
    feature: &FeatureRef,
    target_repo: &str,
    target_parent: &FeatureRef,
    plan: Option<&IntegrationPlan>,
) -> Result<OperationRecord> {
    let default;
    let plan = match plan {
        Some(p) => p,
        None => {
            default = default_integration_plan(tree, feature, target_repo)?;
            &default
        }
    };
    let rec = plan_clone_feature(tree, feature, target_repo, target_parent, plan)?;
    apply_planned(tree, rec)
}
