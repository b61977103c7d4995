use std::collections::{BTreeSet, VecDeque};

use super::adapter::{ImportTarget, LanguageAdapter};
use super::manifest::{adapt_manifest, ManifestModel};
use crate::error::{Error, Result};
use crate::model::{DepTarget, DonorSource, TestCandidate};

/// A transplantable unit: one test, its imports and its dependency slice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Organ {
    pub donor: String,
    pub test: TestCandidate,
    /// Import statements of the test's file.
    pub in_file_deps: Vec<String>,
    pub body: Vec<String>,
    /// Donor production files the test needs, closed under module dependencies.
    pub slice_files: BTreeSet<String>,
    pub manifest_fragment: ManifestModel,
}

/// Donor files reachable from `seeds` over the module graph, plus the
/// externals met on the way.
pub fn slice_closure(
    donor: &DonorSource,
    seeds: impl IntoIterator<Item = String>,
) -> Result<(BTreeSet<String>, BTreeSet<String>)> {
    let mut files = BTreeSet::new();
    let mut externals = BTreeSet::new();
    let mut queue: VecDeque<String> = seeds.into_iter().collect();
    while let Some(f) = queue.pop_front() {
        if !files.insert(f.clone()) {
            continue;
        }
        if let Some(import) = donor.module_deps.unresolved.get(&f).and_then(|v| v.first()) {
            return Err(Error::MissingDependency {
                file: f,
                import: import.clone(),
            });
        }
        for dep in donor.module_deps.deps_of(&f) {
            match dep {
                DepTarget::File(g) => queue.push_back(g.clone()),
                DepTarget::External(d) => {
                    externals.insert(d.clone());
                }
            }
        }
    }
    Ok((files, externals))
}

pub fn extract_organ(donor: &DonorSource, test_id: &str, adapter: &dyn LanguageAdapter) -> Result<Organ> {
    let test = donor
        .candidate(test_id)
        .ok_or_else(|| Error::UnknownTest(test_id.to_string()))?;
    if !test.modular {
        return Err(Error::NotModular(test_id.to_string()));
    }
    let mut seeds = Vec::new();
    let mut externals = BTreeSet::new();
    for import in &test.imports {
        match adapter.resolve_import(import, donor) {
            ImportTarget::File(f) => seeds.push(f),
            ImportTarget::External(d) => {
                externals.insert(d);
            }
            ImportTarget::TestSource(_) | ImportTarget::Unresolved => {
                return Err(Error::MissingDependency {
                    file: test.file.clone(),
                    import: import.clone(),
                })
            }
        }
    }
    let (slice_files, reached) = slice_closure(donor, seeds)?;
    externals.extend(reached);
    let mut manifest_fragment = adapt_manifest(&donor.manifest);
    manifest_fragment.name = donor.id.clone();
    manifest_fragment.deps.retain(|d| externals.contains(d));
    let file_lines = &donor.files[&test.file];
    Ok(Organ {
        donor: donor.id.clone(),
        test: test.clone(),
        in_file_deps: test.imports.iter().map(|i| format!("import {i}")).collect(),
        body: adapter.test_body(file_lines, test),
        slice_files,
        manifest_fragment,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::transplant::{donor_from_files, Minilang};

    fn lines(s: &str) -> Vec<String> {
        s.lines().map(str::to_string).collect()
    }

    fn donor() -> DonorSource {
        let mut files = BTreeMap::new();
        files.insert("src/m.ml".into(), lines("import n\nimport std.io\nfn m() {\n}"));
        files.insert("src/n.ml".into(), lines("fn n() {\n}"));
        files.insert("src/lonely.ml".into(), lines("fn l() {\n}"));
        files.insert("src/broken.ml".into(), lines("import ghost\n"));
        files.insert(
            "test/t.ml".into(),
            lines("import m\nimport std.io\n@test\nfn a() {\n  m.m()\n}\n"),
        );
        files.insert("test/ext.ml".into(), lines("import std.io\n@test\nfn b() {\n  io.out(1)\n}\n"));
        files.insert("test/bad.ml".into(), lines("import broken\n@test\nfn c() {\n  x()\n}\n"));
        files.insert(
            "test/local.ml".into(),
            lines("fn helper() {\n}\n@test\nfn d() {\n  helper()\n}\n"),
        );
        files.insert("test/uses_test.ml".into(), lines("import local\n@test\nfn e() {\n  y()\n}\n"));
        let manifest = ManifestModel::parse("name: don\ndeps: std, unused\npackaging: zip").unwrap();
        donor_from_files(manifest, files, &Minilang)
    }

    #[test]
    fn two_hop_closure() {
        let d = donor();
        let o = extract_organ(&d, "don:test/t.ml:a", &Minilang).unwrap();
        let expected: BTreeSet<String> = ["src/m.ml", "src/n.ml"].iter().map(|s| s.to_string()).collect();
        assert_eq!(o.slice_files, expected);
        assert_eq!(o.manifest_fragment.deps, vec!["std"]);
        assert_eq!(o.in_file_deps, vec!["import m", "import std.io"]);
        assert_eq!(o.body, vec!["  m.m()"]);
    }

    #[test]
    fn externals_only_test_has_empty_slice() {
        let o = extract_organ(&donor(), "don:test/ext.ml:b", &Minilang).unwrap();
        assert!(o.slice_files.is_empty());
        assert_eq!(o.manifest_fragment.emit(), vec!["name: don", "deps: std"]);
    }

    #[test]
    fn failures() {
        let d = donor();
        assert!(matches!(
            extract_organ(&d, "don:test/bad.ml:c", &Minilang),
            Err(Error::MissingDependency { .. })
        ));
        assert!(matches!(
            extract_organ(&d, "don:test/local.ml:d", &Minilang),
            Err(Error::NotModular(_))
        ));
        assert!(matches!(
            extract_organ(&d, "don:test/uses_test.ml:e", &Minilang),
            Err(Error::MissingDependency { .. })
        ));
        assert!(matches!(
            extract_organ(&d, "don:nope", &Minilang),
            Err(Error::UnknownTest(_))
        ));
    }
}
