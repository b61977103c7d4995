use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::history::Snapshot;
use crate::transplant::{braces_balanced, LanguageAdapter, ManifestModel, Minilang, MANIFEST_FILE, SLICES_DIR};

pub type Verdict = std::result::Result<(), String>;

/// Decides whether a materialized revision is compilable.
pub trait CompilabilityCheck: Send + Sync {
    fn check(&self, snapshot: &Snapshot) -> Verdict;
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CheckerSpec {
    #[default]
    Bundled,
    External {
        cmd: String,
        #[serde(default = "default_timeout")]
        timeout_s: u64,
    },
}

fn default_timeout() -> u64 {
    60
}

impl CheckerSpec {
    pub fn build(&self) -> Box<dyn CompilabilityCheck> {
        match self {
            CheckerSpec::Bundled => Box::new(BundledChecker),
            CheckerSpec::External { cmd, timeout_s } => Box::new(ExternalChecker {
                cmd: cmd.clone(),
                timeout: Duration::from_secs(*timeout_s),
            }),
        }
    }
}

/// Brace balance plus import resolution for minilang sources.
#[derive(Clone, Copy, Debug, Default)]
pub struct BundledChecker;

struct Scope {
    modules: BTreeSet<String>,
    manifests: Vec<ManifestModel>,
}

impl Scope {
    fn resolves(&self, import: &str) -> bool {
        self.modules.contains(import) || self.manifests.iter().any(|m| m.provides_external(import).is_some())
    }
}

fn modules_below(snap: &Snapshot, dir: &str) -> BTreeSet<String> {
    snap.files_under(dir)
        .filter_map(|(rel, _)| Minilang.module_name(rel))
        .collect()
}

fn manifest_at(snap: &Snapshot, path: &str) -> std::result::Result<Option<ManifestModel>, String> {
    snap.files
        .get(path)
        .map(|l| ManifestModel::parse_lines(l).map_err(|e| format!("{path}: {e}")))
        .transpose()
}

fn slice_scope(snap: &Snapshot, repo: &str, slice: &str) -> std::result::Result<Scope, String> {
    let base = format!("{repo}/{SLICES_DIR}/{slice}");
    let manifest = manifest_at(snap, &format!("{base}/{MANIFEST_FILE}"))?
        .ok_or_else(|| format!("{base}: slice has no {MANIFEST_FILE}"))?;
    Ok(Scope {
        modules: modules_below(snap, &format!("{base}/src")),
        manifests: vec![manifest],
    })
}

impl CompilabilityCheck for BundledChecker {
    fn check(&self, snap: &Snapshot) -> Verdict {
        for repo in snap.repositories() {
            let main = manifest_at(snap, &format!("{repo}/{MANIFEST_FILE}"))?.unwrap_or_default();
            let mut main_scope = Scope {
                modules: modules_below(snap, &format!("{repo}/{}", main.srcdir())),
                manifests: vec![main.clone()],
            };
            main_scope
                .modules
                .extend(modules_below(snap, &format!("{repo}/{}", main.testdir())));
            for local in &main.locals {
                let s = slice_scope(snap, repo, local)?;
                main_scope.modules.extend(s.modules);
                main_scope.manifests.extend(s.manifests);
            }
            let slices_prefix = format!("{SLICES_DIR}/");
            for (rel, lines) in snap.files_under(repo) {
                if !Minilang.is_source(rel) {
                    continue;
                }
                let path = format!("{repo}/{rel}");
                if !braces_balanced(lines) {
                    return Err(format!("{path}: unbalanced braces"));
                }
                let slice = rel
                    .strip_prefix(&slices_prefix)
                    .and_then(|r| r.split_once('/'))
                    .map(|(s, _)| s);
                let own;
                let scope = match slice {
                    Some(s) => {
                        own = slice_scope(snap, repo, s)?;
                        &own
                    }
                    None => &main_scope,
                };
                for import in Minilang.scan_imports(lines) {
                    if !scope.resolves(&import) {
                        return Err(format!("{path}: unresolved import `{import}`"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Runs a shell command in a materialized copy of the revision; exit status 0
/// means compilable.
#[derive(Clone, Debug)]
pub struct ExternalChecker {
    pub cmd: String,
    pub timeout: Duration,
}

impl ExternalChecker {
    fn run_in(&self, dir: &Path) -> Verdict {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.cmd)
            .current_dir(dir)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("checker failed to start: {e}"))?;
        let start = Instant::now();
        loop {
            match child.try_wait() {
                Ok(Some(status)) if status.success() => return Ok(()),
                Ok(Some(status)) => return Err(format!("checker exited with {status}")),
                Ok(None) if start.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err("timeout".into());
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(5)),
                Err(e) => return Err(format!("checker error: {e}")),
            }
        }
    }
}

impl CompilabilityCheck for ExternalChecker {
    fn check(&self, snap: &Snapshot) -> Verdict {
        let dir = tempfile::tempdir().map_err(|e| format!("checker error: {e}"))?;
        snap.write(dir.path()).map_err(|e| format!("checker error: {e}"))?;
        self.run_in(dir.path())
    }
}

/// Re-checks a snapshot directory on disk.
pub fn check_compilable(dir: &Path, checker: &dyn CompilabilityCheck) -> Result<Verdict> {
    let snap = Snapshot::read(dir, None)?;
    Ok(checker.check(&snap))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(files: &[(&str, &str)]) -> Snapshot {
        let mut s = Snapshot::default();
        for (p, text) in files {
            let mut d = *p;
            while let Some((parent, _)) = d.rsplit_once('/') {
                s.dirs.insert(parent.to_string());
                d = parent;
            }
            s.files.insert(p.to_string(), text.lines().map(str::to_string).collect());
        }
        s
    }

    #[test]
    fn unresolved_import_fails() {
        let s = snap(&[("calc/src/main.ml", "import missing.mod\nfn main() {\n}")]);
        assert!(BundledChecker.check(&s).unwrap_err().contains("missing.mod"));
    }

    #[test]
    fn empty_repository_passes() {
        let mut s = Snapshot::default();
        s.dirs.insert("calc".into());
        assert!(BundledChecker.check(&s).is_ok());
        assert!(BundledChecker.check(&s).is_ok());
    }

    #[test]
    fn imports_resolve_through_locals_and_deps() {
        let s = snap(&[
            ("calc/project.manifest", "name: calc\ndeps: std\nlocals: ring"),
            (
                "calc/src/main.ml",
                "import std.io\nimport util\nfn main() {\nimport ring.buffer\nimport testkit.assert\n}",
            ),
            ("calc/src/util.ml", "fn u() {\n}"),
            ("calc/slices/ring/project.manifest", "name: ring\ndeps: testkit"),
            ("calc/slices/ring/src/ring/buffer.ml", "import ring.slot\nimport testkit"),
            ("calc/slices/ring/src/ring/slot.ml", ""),
        ]);
        assert_eq!(BundledChecker.check(&s), Ok(()));
        let mut broken = s.clone();
        broken
            .files
            .get_mut("calc/slices/ring/src/ring/slot.ml")
            .unwrap()
            .push("import util".into());
        assert!(BundledChecker.check(&broken).is_err());
        let mut unbalanced = s;
        unbalanced.files.get_mut("calc/src/util.ml").unwrap().pop();
        assert!(BundledChecker.check(&unbalanced).unwrap_err().contains("braces"));
    }

    #[test]
    fn missing_local_slice_fails() {
        let s = snap(&[("calc/project.manifest", "name: calc\nlocals: ghost")]);
        assert!(BundledChecker.check(&s).is_err());
    }

    #[test]
    fn external_checker_uses_exit_status_and_timeout() {
        let s = snap(&[("calc/a.ml", "x")]);
        let ok = ExternalChecker {
            cmd: "test -f calc/a.ml".into(),
            timeout: Duration::from_secs(10),
        };
        assert!(ok.check(&s).is_ok());
        let fail = ExternalChecker {
            cmd: "test -f calc/b.ml".into(),
            timeout: Duration::from_secs(10),
        };
        assert!(fail.check(&s).is_err());
        let slow = ExternalChecker {
            cmd: "sleep 5".into(),
            timeout: Duration::from_millis(100),
        };
        assert_eq!(slow.check(&s), Err("timeout".into()));
    }
}
