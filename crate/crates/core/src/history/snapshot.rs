//! Plain-directory materializations of the asset tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::model::{AssetNode, AssetTree, FeatureModel, NodeKind};
use crate::transplant::split_lines;

/// Files and directories of one revision, keyed by `/`-separated paths
/// relative to the snapshot root.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Snapshot {
    pub files: BTreeMap<String, Vec<String>>,
    pub dirs: BTreeSet<String>,
}

/// Bytes of a file: every line terminated by LF.
pub fn file_text(lines: &[String]) -> String {
    let mut s = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        s.push_str(l);
        s.push('\n');
    }
    s
}

fn materialize(node: &AssetNode, path: &str, snap: &mut Snapshot) {
    match node.kind {
        NodeKind::File => {
            snap.files.insert(path.to_string(), node.lines());
        }
        NodeKind::Repository | NodeKind::Folder => {
            snap.dirs.insert(path.to_string());
            for c in &node.children {
                materialize(c, &format!("{path}/{}", c.name), snap);
            }
        }
        NodeKind::Root => {
            for c in &node.children {
                materialize(c, &c.name, snap);
            }
        }
        NodeKind::Block | NodeKind::Line => {}
    }
}

enum Entry {
    Dir(BTreeMap<String, Entry>),
    File(Vec<String>),
}

impl Snapshot {
    pub fn of(tree: &AssetTree) -> Snapshot {
        let mut snap = Snapshot::default();
        materialize(&tree.root, "", &mut snap);
        snap
    }

    pub fn repositories(&self) -> Vec<&str> {
        self.dirs.iter().filter(|d| !d.contains('/')).map(String::as_str).collect()
    }

    /// Files below `prefix/`, with paths relative to it.
    pub fn files_under<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a Vec<String>)> + 'a {
        self.files.iter().filter_map(move |(p, l)| {
            p.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('/'))
                .map(|r| (r, l))
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::snapshot_io(dir, e))?;
        for d in &self.dirs {
            let p = dir.join(d);
            fs::create_dir_all(&p).map_err(|e| Error::snapshot_io(&p, e))?;
        }
        for (f, lines) in &self.files {
            let p = dir.join(f);
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::snapshot_io(parent, e))?;
            }
            fs::write(&p, file_text(lines)).map_err(|e| Error::snapshot_io(&p, e))?;
        }
        Ok(())
    }

    /// Reads a directory, skipping hidden entries. With `prefix`, every path
    /// is placed below that directory name (used for single-repository inputs).
    pub fn read(dir: &Path, prefix: Option<&str>) -> Result<Snapshot> {
        if !dir.is_dir() {
            return Err(Error::snapshot_io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
            ));
        }
        let mut snap = Snapshot::default();
        if let Some(p) = prefix {
            snap.dirs.insert(p.to_string());
        }
        let walker = WalkDir::new(dir)
            .sort_by_file_name()
            .min_depth(1)
            .into_iter()
            .filter_entry(|e| !e.file_name().to_string_lossy().starts_with('.'));
        for entry in walker {
            let entry = entry.map_err(|e| Error::snapshot_io(dir, e.into()))?;
            let rel = entry
                .path()
                .strip_prefix(dir)
                .expect("walked below dir")
                .to_string_lossy()
                .replace('\\', "/");
            let rel = match prefix {
                Some(p) => format!("{p}/{rel}"),
                None => rel,
            };
            if entry.file_type().is_dir() {
                snap.dirs.insert(rel);
            } else if entry.file_type().is_file() {
                let text = fs::read_to_string(entry.path()).map_err(|e| Error::snapshot_io(entry.path(), e))?;
                snap.files.insert(rel, split_lines(&text));
            }
        }
        Ok(snap)
    }

    /// Builds an asset tree: top-level directories become repositories with
    /// empty feature models; files stay unsplit. Top-level files are ignored.
    pub fn to_tree(&self) -> AssetTree {
        let mut root: BTreeMap<String, Entry> = BTreeMap::new();
        let insert = |root: &mut BTreeMap<String, Entry>, path: &str, leaf: Option<&Vec<String>>| {
            let segs: Vec<&str> = path.split('/').collect();
            let mut cur = root;
            for (i, s) in segs.iter().enumerate() {
                let last = i + 1 == segs.len();
                if last {
                    if let Some(lines) = leaf {
                        cur.insert(s.to_string(), Entry::File(lines.clone()));
                        return;
                    }
                }
                let e = cur
                    .entry(s.to_string())
                    .or_insert_with(|| Entry::Dir(BTreeMap::new()));
                cur = match e {
                    Entry::Dir(m) => m,
                    Entry::File(_) => return,
                };
            }
        };
        for d in &self.dirs {
            insert(&mut root, d, None);
        }
        for (f, lines) in &self.files {
            if f.contains('/') {
                insert(&mut root, f, Some(lines));
            }
        }
        let mut tree = AssetTree::new();
        fn build(tree: &mut AssetTree, name: &str, entry: &Entry, kind: NodeKind) -> AssetNode {
            let id = tree.alloc_id();
            match entry {
                Entry::File(lines) => AssetNode::new(id, NodeKind::File, name).with_content(lines.clone()),
                Entry::Dir(children) => {
                    let mut node = AssetNode::new(id, kind, name);
                    node.children = children
                        .iter()
                        .map(|(n, e)| build(tree, n, e, NodeKind::Folder))
                        .collect();
                    node
                }
            }
        }
        for (name, entry) in &root {
            if let Entry::Dir(_) = entry {
                let mut repo = build(&mut tree, name, entry, NodeKind::Repository);
                repo.feature_model = Some(FeatureModel::new(name.clone()));
                tree.root.children.push(repo);
            }
        }
        tree
    }

    /// Materialized line count per repository.
    pub fn loc_per_repository(&self) -> BTreeMap<String, usize> {
        self.repositories()
            .into_iter()
            .map(|r| (r.to_string(), self.files_under(r).map(|(_, l)| l.len()).sum()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Snapshot {
        let mut s = Snapshot::default();
        s.dirs.insert("calc".into());
        s.dirs.insert("calc/src".into());
        s.dirs.insert("calc/empty".into());
        s.files.insert("calc/src/a.ml".into(), vec!["x".into(), "".into(), "y".into()]);
        s.files.insert("calc/project.manifest".into(), vec!["name: calc".into()]);
        s
    }

    #[test]
    fn tree_round_trip() {
        let s = sample();
        let t = s.to_tree();
        assert_eq!(Snapshot::of(&t), s);
        assert_eq!(t.root.children[0].children[0].name, "empty");
    }

    #[test]
    fn disk_round_trip_and_idempotence() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample();
        s.write(dir.path()).unwrap();
        let first = fs::read(dir.path().join("calc/src/a.ml")).unwrap();
        s.write(dir.path()).unwrap();
        assert_eq!(fs::read(dir.path().join("calc/src/a.ml")).unwrap(), first);
        assert_eq!(first, b"x\n\ny\n");
        assert_eq!(Snapshot::read(dir.path(), None).unwrap(), s);
    }

    #[test]
    fn single_repository_input_gets_prefixed() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("main.ml"), "fn main() {\n}\n").unwrap();
        fs::write(dir.path().join(".hidden"), "x").unwrap();
        let s = Snapshot::read(dir.path(), Some("calc")).unwrap();
        assert_eq!(s.files.keys().collect::<Vec<_>>(), vec!["calc/main.ml"]);
        assert_eq!(s.loc_per_repository()["calc"], 2);
    }
}
