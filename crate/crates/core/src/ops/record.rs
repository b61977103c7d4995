use serde::{Deserialize, Serialize};

use crate::addressing::{AssetRef, FeatureRef, Revision};
use crate::model::{ElementDump, Feature};

/// Version of the ledger line layout.
pub const SCHEMA_VERSION: u32 = 1;

/// One applied change with everything needed to re-execute it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperationRecord {
    pub schema: u32,
    pub op_id: String,
    #[serde(flatten)]
    pub op: Op,
    pub revision_before: Revision,
    pub revision_after: Revision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sub_ops: Vec<OperationRecord>,
}

impl OperationRecord {
    pub fn kind(&self) -> &'static str {
        self.op.kind()
    }

    /// All records of this subtree in execution order, `self` first.
    pub fn flatten(&self) -> Vec<&OperationRecord> {
        let mut out = vec![self];
        for s in &self.sub_ops {
            out.extend(s.flatten());
        }
        out
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Mutation {
    AddLine { line: usize, text: String },
    ReplaceLine { line: usize, text: String },
    DeleteLine { line: usize },
}

impl Mutation {
    pub fn line(&self) -> usize {
        match self {
            Mutation::AddLine { line, .. }
            | Mutation::ReplaceLine { line, .. }
            | Mutation::DeleteLine { line } => *line,
        }
    }
}

/// Where a novel asset lands in the target of a feature clone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub source: AssetRef,
    pub parent: AssetRef,
    pub index: usize,
}

/// Explicit positions for every asset a feature clone has to copy.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrationPlan {
    pub placements: Vec<Placement>,
}

/// Child boundary inside a host file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsertionPoint {
    pub file: AssetRef,
    pub index: usize,
}

/// Self-contained description of an extracted organ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrganDump {
    pub donor: String,
    pub test: String,
    pub imports: Vec<String>,
    pub body: Vec<String>,
    pub slice_files: Vec<ElementDump>,
    pub manifest: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureCopy {
    /// Clone structure only.
    #[default]
    None,
    /// Keep mappings and feature models (whole-variant copies).
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum Op {
    RemoveFeature {
        feature: FeatureRef,
    },
    MutateAsset {
        target: AssetRef,
        mutation: Mutation,
    },
    TransplantFeature {
        repo: String,
        insertion_point: InsertionPoint,
        feature: String,
        organ: OrganDump,
    },
    CloneVariant {
        source: AssetRef,
        new_name: String,
    },
    CloneFeature {
        feature: FeatureRef,
        source_repo: String,
        target_repo: String,
        target_parent: FeatureRef,
        plan: IntegrationPlan,
    },
    /// Groups the sub-operations of one transplantation step.
    Step {
        step: u8,
        label: String,
    },
    InsertAsset {
        parent: AssetRef,
        index: usize,
        element: ElementDump,
    },
    CloneAsset {
        source: AssetRef,
        parent: AssetRef,
        index: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default)]
        features: FeatureCopy,
    },
    RemoveAsset {
        target: AssetRef,
    },
    SetContent {
        target: AssetRef,
        lines: Vec<String>,
    },
    InsertFeatureTree {
        parent: FeatureRef,
        feature: Feature,
    },
    RemoveFeatureTree {
        feature: FeatureRef,
    },
    MapFeature {
        asset: AssetRef,
        feature: FeatureRef,
    },
    UnmapFeature {
        asset: AssetRef,
        feature: FeatureRef,
    },
    RegisterInclusion {
        donor: String,
        repo: String,
        files: Vec<String>,
    },
    UnregisterInclusion {
        donor: String,
        repo: String,
        files: Vec<String>,
        #[serde(default)]
        drop_slice: bool,
    },
}

impl Op {
    pub fn kind(&self) -> &'static str {
        match self {
            Op::RemoveFeature { .. } => "RemoveFeature",
            Op::MutateAsset { .. } => "MutateAsset",
            Op::TransplantFeature { .. } => "TransplantFeature",
            Op::CloneVariant { .. } => "CloneVariant",
            Op::CloneFeature { .. } => "CloneFeature",
            Op::Step { .. } => "Step",
            Op::InsertAsset { .. } => "InsertAsset",
            Op::CloneAsset { .. } => "CloneAsset",
            Op::RemoveAsset { .. } => "RemoveAsset",
            Op::SetContent { .. } => "SetContent",
            Op::InsertFeatureTree { .. } => "InsertFeatureTree",
            Op::RemoveFeatureTree { .. } => "RemoveFeatureTree",
            Op::MapFeature { .. } => "MapFeature",
            Op::UnmapFeature { .. } => "UnmapFeature",
            Op::RegisterInclusion { .. } => "RegisterInclusion",
            Op::UnregisterInclusion { .. } => "UnregisterInclusion",
        }
    }

    /// Kinds that only group sub-operations.
    pub fn is_composite(&self) -> bool {
        matches!(
            self,
            Op::RemoveFeature { .. }
                | Op::TransplantFeature { .. }
                | Op::CloneVariant { .. }
                | Op::CloneFeature { .. }
                | Op::Step { .. }
        )
    }

    /// Asset references carried in the parameters.
    pub fn asset_refs(&self) -> Vec<&AssetRef> {
        match self {
            Op::MutateAsset { target, .. }
            | Op::RemoveAsset { target }
            | Op::SetContent { target, .. } => vec![target],
            Op::TransplantFeature {
                insertion_point, ..
            } => vec![&insertion_point.file],
            Op::CloneVariant { source, .. } => vec![source],
            Op::CloneFeature { plan, .. } => plan
                .placements
                .iter()
                .flat_map(|p| [&p.source, &p.parent])
                .collect(),
            Op::InsertAsset { parent, .. } => vec![parent],
            Op::CloneAsset { source, parent, .. } => vec![source, parent],
            Op::MapFeature { asset, .. } | Op::UnmapFeature { asset, .. } => vec![asset],
            _ => Vec::new(),
        }
    }
}

pub fn op_id_for(revision_after: Revision) -> String {
    format!("op-{revision_after:04}")
}

/// Builds primitive sub-records that share the parent's revisions.
#[derive(Debug)]
pub(crate) struct SubOps {
    parent: String,
    before: Revision,
    after: Revision,
    pub(crate) ops: Vec<OperationRecord>,
}

impl SubOps {
    pub(crate) fn new(parent: &str, before: Revision, after: Revision) -> Self {
        SubOps {
            parent: parent.to_string(),
            before,
            after,
            ops: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, op: Op) -> &mut OperationRecord {
        let id = format!("{}.{}", self.parent, self.ops.len() + 1);
        self.ops.push(OperationRecord {
            schema: SCHEMA_VERSION,
            op_id: id,
            op,
            revision_before: self.before,
            revision_after: self.after,
            iteration: None,
            sub_ops: Vec::new(),
        });
        self.ops.last_mut().expect("just pushed")
    }

    /// Opens a nested group whose children are numbered below it.
    pub(crate) fn group(&mut self, op: Op, build: impl FnOnce(&mut SubOps)) {
        let id = format!("{}.{}", self.parent, self.ops.len() + 1);
        let mut inner = SubOps::new(&id, self.before, self.after);
        build(&mut inner);
        self.ops.push(OperationRecord {
            schema: SCHEMA_VERSION,
            op_id: id,
            op,
            revision_before: self.before,
            revision_after: self.after,
            iteration: None,
            sub_ops: inner.ops,
        });
    }

    pub(crate) fn after(&self) -> Revision {
        self.after
    }
}
