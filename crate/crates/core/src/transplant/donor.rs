use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use walkdir::WalkDir;

use super::adapter::{ImportTarget, LanguageAdapter};
use super::manifest::{ManifestModel, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::model::{sanitize_feature_name, DepTarget, DonorSource, ModuleGraph, TestCandidate};

fn is_hidden(name: &str) -> bool {
    name.starts_with('.')
}

/// Splits file text into lines, accepting a missing final newline.
pub fn split_lines(text: &str) -> Vec<String> {
    let mut lines: Vec<String> = text.split('\n').map(str::to_string).collect();
    if lines.last().is_some_and(String::is_empty) {
        lines.pop();
    }
    lines
}

fn read_source_set(
    root: &Path,
    dir: &str,
    prefix: &str,
    adapter: &dyn LanguageAdapter,
    files: &mut BTreeMap<String, Vec<String>>,
) -> Result<()> {
    let base = root.join(dir);
    if !base.is_dir() {
        return Ok(());
    }
    let walker = WalkDir::new(&base)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !is_hidden(&e.file_name().to_string_lossy()));
    for entry in walker {
        let entry = entry.map_err(|e| Error::DonorIo {
            path: base.clone(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(&base)
            .expect("walked below base")
            .to_string_lossy()
            .replace('\\', "/");
        if !adapter.is_source(&rel) {
            continue;
        }
        let text = fs::read_to_string(entry.path()).map_err(|source| Error::DonorIo {
            path: entry.path().to_path_buf(),
            source,
        })?;
        files.insert(format!("{prefix}/{rel}"), split_lines(&text));
    }
    Ok(())
}

/// Reads a donor project directory: manifest, production and test sources.
pub fn load_donor(path: &Path, adapter: &dyn LanguageAdapter) -> Result<DonorSource> {
    let manifest_path = path.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|source| Error::DonorIo {
        path: manifest_path.clone(),
        source,
    })?;
    let manifest = adapter.parse_manifest(&text)?;
    let id = if manifest.name.is_empty() {
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "donor".to_string())
    } else {
        manifest.name.clone()
    };
    let id = sanitize_feature_name(&id);
    let mut files = BTreeMap::new();
    read_source_set(path, manifest.srcdir(), "src", adapter, &mut files)?;
    read_source_set(path, manifest.testdir(), "test", adapter, &mut files)?;
    let mut donor = DonorSource {
        id,
        root_path: path.to_path_buf(),
        manifest,
        files,
        test_candidates: Vec::new(),
        module_deps: ModuleGraph::default(),
    };
    donor.module_deps = module_graph(&donor, adapter);
    donor.test_candidates = scan_donor_tests(&donor, adapter);
    Ok(donor)
}

/// Annotated tests of every test source, ordered by path, then line.
pub fn scan_donor_tests(donor: &DonorSource, adapter: &dyn LanguageAdapter) -> Vec<TestCandidate> {
    donor
        .files
        .iter()
        .filter(|(p, _)| p.starts_with("test/"))
        .flat_map(|(p, lines)| adapter.scan_tests(&donor.id, p, lines))
        .collect()
}

/// File-level import graph of the production sources.
pub fn module_graph(donor: &DonorSource, adapter: &dyn LanguageAdapter) -> ModuleGraph {
    let mut graph = ModuleGraph::default();
    for (path, lines) in donor.files.iter().filter(|(p, _)| p.starts_with("src/")) {
        let mut edges = BTreeSet::new();
        for import in adapter.scan_imports(lines) {
            match adapter.resolve_import(&import, donor) {
                ImportTarget::File(f) if &f == path => {}
                ImportTarget::File(f) => {
                    edges.insert(DepTarget::File(f));
                }
                ImportTarget::External(d) => {
                    edges.insert(DepTarget::External(d));
                }
                ImportTarget::TestSource(_) | ImportTarget::Unresolved => {
                    graph.unresolved.entry(path.clone()).or_default().push(import);
                }
            }
        }
        graph.edges.insert(path.clone(), edges);
    }
    graph
}

/// Convenience for tests and tools: a donor assembled from in-memory files.
pub fn donor_from_files(
    manifest: ManifestModel,
    files: BTreeMap<String, Vec<String>>,
    adapter: &dyn LanguageAdapter,
) -> DonorSource {
    let mut donor = DonorSource {
        id: sanitize_feature_name(&manifest.name),
        root_path: Default::default(),
        manifest,
        files,
        test_candidates: Vec::new(),
        module_deps: ModuleGraph::default(),
    };
    donor.module_deps = module_graph(&donor, adapter);
    donor.test_candidates = scan_donor_tests(&donor, adapter);
    donor
}
