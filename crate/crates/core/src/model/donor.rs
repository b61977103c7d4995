use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::transplant::ManifestModel;

/// An annotated test case found in a donor's test sources.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCandidate {
    /// `<donor>:<file>:<test name>`, unique across donors.
    pub id: String,
    pub name: String,
    /// Donor file holding the test (normalized, e.g. `test/ring/buffer_test.ml`).
    pub file: String,
    pub marker_line: usize,
    /// Inclusive line span of the test definition, header to closing brace.
    pub body_lines: (usize, usize),
    pub imports: Vec<String>,
    pub modular: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "lowercase")]
pub enum DepTarget {
    File(String),
    External(String),
}

/// File-level dependency graph of a donor's production sources.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleGraph {
    pub edges: BTreeMap<String, BTreeSet<DepTarget>>,
    /// Imports that resolve neither to a donor source nor to a declared external.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub unresolved: BTreeMap<String, Vec<String>>,
}

impl ModuleGraph {
    pub fn deps_of(&self, file: &str) -> impl Iterator<Item = &DepTarget> {
        self.edges.get(file).into_iter().flatten()
    }
}

/// Read-only view of a donor project, shared between tree copies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DonorSource {
    pub id: String,
    pub root_path: PathBuf,
    pub manifest: ManifestModel,
    /// File contents keyed by normalized path: production sources under
    /// `src/`, test sources under `test/`.
    pub files: BTreeMap<String, Vec<String>>,
    pub test_candidates: Vec<TestCandidate>,
    pub module_deps: ModuleGraph,
}

impl DonorSource {
    pub fn candidate(&self, test_id: &str) -> Option<&TestCandidate> {
        self.test_candidates.iter().find(|c| c.id == test_id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DonorProject {
    pub source: Arc<DonorSource>,
    /// Repository name -> donor files included in that repository's slice.
    #[serde(default)]
    pub included_in: BTreeMap<String, BTreeSet<String>>,
}

impl DonorProject {
    pub fn new(source: DonorSource) -> Self {
        DonorProject {
            source: Arc::new(source),
            included_in: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.source.id
    }

    /// Files of this donor in `repo`'s slice; `None` if the repository has no slice.
    pub fn included(&self, repo: &str) -> Option<&BTreeSet<String>> {
        self.included_in.get(repo)
    }

    /// Registers a slice in `repo` (possibly without source files) and adds `files` to it.
    pub fn include(&mut self, repo: &str, files: impl IntoIterator<Item = String>) {
        let known = &self.source.files;
        let set = self.included_in.entry(repo.to_string()).or_default();
        set.extend(files.into_iter().filter(|f| known.contains_key(f)));
    }

    pub fn exclude(&mut self, repo: &str, files: &[String]) {
        if let Some(set) = self.included_in.get_mut(repo) {
            for f in files {
                set.remove(f);
            }
        }
    }

    pub fn drop_slice(&mut self, repo: &str) {
        self.included_in.remove(repo);
    }
}
