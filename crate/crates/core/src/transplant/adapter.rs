use std::collections::BTreeMap;

use crate::error::Result;
use crate::model::{DonorSource, TestCandidate};
use crate::transplant::ManifestModel;

/// What an import statement refers to inside a donor project.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ImportTarget {
    /// A production source file (normalized `src/...` path).
    File(String),
    /// A declared external dependency.
    External(String),
    /// A file in the donor's test source set.
    TestSource(String),
    Unresolved,
}

/// Language- and build-tool-specific knowledge needed to scan donors,
/// extract organs and place them into a host.
pub trait LanguageAdapter: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &str;

    fn is_source(&self, path: &str) -> bool;

    /// Module name for a path relative to a source root.
    fn module_name(&self, path_below_root: &str) -> Option<String>;

    fn scan_imports(&self, lines: &[String]) -> Vec<String>;

    /// Annotated test cases of one test file, in line order.
    fn scan_tests(&self, donor_id: &str, file: &str, lines: &[String]) -> Vec<TestCandidate>;

    /// In-file symbols (other than imports) referenced by the test body.
    fn symbol_scan(&self, file_lines: &[String], test: &TestCandidate) -> Vec<String>;

    /// Statements of the test body, without its header and closing line.
    fn test_body(&self, file_lines: &[String], test: &TestCandidate) -> Vec<String>;

    /// Wraps code so a failure inside it cannot escape to the host.
    fn guard_wrap(&self, lines: &[String]) -> Vec<String>;

    /// Change in block nesting caused by one line.
    fn nesting_delta(&self, line: &str) -> i64;

    /// Nesting depth of positions inside a method body.
    fn method_depth(&self) -> i64 {
        1
    }

    fn parse_manifest(&self, text: &str) -> Result<ManifestModel> {
        ManifestModel::parse(text)
    }

    fn emit_manifest(&self, manifest: &ManifestModel) -> Vec<String> {
        manifest.emit()
    }

    /// Maps an import to the donor element defining it.
    fn resolve_import(&self, import: &str, donor: &DonorSource) -> ImportTarget {
        let modules = module_index(self, donor);
        if let Some(path) = modules.get(import) {
            if path.starts_with("src/") {
                return ImportTarget::File(path.clone());
            }
            return ImportTarget::TestSource(path.clone());
        }
        match donor.manifest.provides_external(import) {
            Some(dep) => ImportTarget::External(dep.to_string()),
            None => ImportTarget::Unresolved,
        }
    }
}

/// Module name -> normalized donor path, for both source sets.
pub fn module_index<A: LanguageAdapter + ?Sized>(adapter: &A, donor: &DonorSource) -> BTreeMap<String, String> {
    let mut index = BTreeMap::new();
    // `src/` sorts before `test/`, so production modules win name clashes.
    for path in donor.files.keys() {
        let Some(below) = path
            .strip_prefix("src/")
            .or_else(|| path.strip_prefix("test/"))
        else {
            continue;
        };
        if let Some(m) = adapter.module_name(below) {
            index.entry(m).or_insert_with(|| path.clone());
        }
    }
    index
}
