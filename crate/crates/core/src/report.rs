//! Metric series over a history: feature counts and lines of code per variant.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::addressing::Revision;
use crate::error::{Error, Result};
use crate::history::{features_path, list_revisions, read_run_file, revision_dir, FeatureFile, Snapshot};
use crate::model::AssetTree;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricRow {
    pub revision: Revision,
    /// Feature lineages over all repositories; clones of a feature count once.
    pub distinct_features: usize,
    /// Sum of non-root features over all repositories.
    pub total_features: usize,
    pub repository_count: usize,
    pub loc_per_variant: BTreeMap<String, usize>,
}

impl MetricRow {
    pub fn of_tree(tree: &AssetTree) -> MetricRow {
        let loc = tree.loc_per_repository();
        MetricRow {
            revision: tree.revision,
            distinct_features: tree.distinct_feature_count(),
            total_features: tree.total_feature_count(),
            repository_count: loc.len(),
            loc_per_variant: loc,
        }
    }

    pub fn from_files(revision: Revision, features: &FeatureFile, snapshot: &Snapshot) -> MetricRow {
        let loc = snapshot.loc_per_repository();
        MetricRow {
            revision,
            distinct_features: features.distinct_features(),
            total_features: features.total_features(),
            repository_count: loc.len(),
            loc_per_variant: loc,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidHistory(msg.into())
}

/// One row per committed revision, read from a history directory.
pub fn collect_metrics(out: &Path) -> Result<Vec<MetricRow>> {
    let run = read_run_file(out).map_err(|e| invalid(format!("run.json: {e}")))?;
    let revisions = list_revisions(out).map_err(|e| invalid(format!("revisions: {e}")))?;
    if revisions.len() as u64 != run.summary.committed + 1 {
        return Err(invalid(format!(
            "{} revision directories for {} commits",
            revisions.len(),
            run.summary.committed
        )));
    }
    let mut rows = Vec::with_capacity(revisions.len());
    for (i, entry) in revisions.into_iter().enumerate() {
        let rev = entry.map_err(|name| invalid(format!("stray entry revisions/{name}")))?;
        if rev as usize != i {
            return Err(invalid(format!("revision ids are not dense at {rev}")));
        }
        let fpath = features_path(out, rev);
        let text = std::fs::read_to_string(&fpath).map_err(|e| invalid(format!("{}: {e}", fpath.display())))?;
        let features = FeatureFile::parse(&text).map_err(|e| invalid(format!("{}: {e}", fpath.display())))?;
        if features.revision != rev {
            return Err(invalid(format!("{} names revision {}", fpath.display(), features.revision)));
        }
        let snapshot = Snapshot::read(&revision_dir(out, rev), None).map_err(|e| invalid(e.to_string()))?;
        let row = MetricRow::from_files(rev, &features, &snapshot);
        if row.loc_per_variant.keys().ne(features.repositories.keys()) {
            return Err(invalid(format!("repositories of revision {rev} disagree with its feature file")));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn loc_cell(loc: &BTreeMap<String, usize>) -> String {
    loc.iter().map(|(r, n)| format!("{r}={n}")).collect::<Vec<_>>().join(";")
}

/// Comma-separated table with a header row.
pub fn write_csv(rows: &[MetricRow], w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "revision,distinct_features,total_features,repository_count,loc_per_variant")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.revision,
            r.distinct_features,
            r.total_features,
            r.repository_count,
            loc_cell(&r.loc_per_variant)
        )?;
    }
    Ok(())
}

/// Long format: one `revision,metric,key,value` row per measurement.
pub fn write_long(rows: &[MetricRow], w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "revision,metric,key,value")?;
    for r in rows {
        writeln!(w, "{},distinct_features,,{}", r.revision, r.distinct_features)?;
        writeln!(w, "{},total_features,,{}", r.revision, r.total_features)?;
        writeln!(w, "{},repository_count,,{}", r.revision, r.repository_count)?;
        for (repo, n) in &r.loc_per_variant {
            writeln!(w, "{},loc,{repo},{n}", r.revision)?;
        }
    }
    Ok(())
}
