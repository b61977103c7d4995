//! `project.manifest`: line-oriented `key: value` build descriptions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "project.manifest";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestModel {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srcdir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub testdir: Option<String>,
    /// External dependency declarations.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deps: Vec<String>,
    /// Local project slices this project depends on.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub locals: Vec<String>,
    /// Every other directive, in source order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<(String, String)>,
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn push_unique(list: &mut Vec<String>, items: Vec<String>) {
    for it in items {
        if !list.contains(&it) {
            list.push(it);
        }
    }
}

impl ManifestModel {
    pub fn named(name: impl Into<String>) -> Self {
        ManifestModel {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = ManifestModel::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once(':').ok_or_else(|| Error::ManifestParse {
                line: i + 1,
                message: format!("expected `key: value`, found `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::ManifestParse {
                    line: i + 1,
                    message: format!("invalid key `{key}`"),
                });
            }
            match key {
                "name" => m.name = value.to_string(),
                "srcdir" => m.srcdir = Some(value.to_string()),
                "testdir" => m.testdir = Some(value.to_string()),
                "deps" => push_unique(&mut m.deps, split_list(value)),
                "locals" => push_unique(&mut m.locals, split_list(value)),
                _ => m.extra.push((key.to_string(), value.to_string())),
            }
        }
        Ok(m)
    }

    pub fn parse_lines(lines: &[String]) -> Result<Self> {
        Self::parse(&lines.join("\n"))
    }

    pub fn emit(&self) -> Vec<String> {
        let mut out = vec![format!("name: {}", self.name)];
        if let Some(s) = &self.srcdir {
            out.push(format!("srcdir: {s}"));
        }
        if let Some(t) = &self.testdir {
            out.push(format!("testdir: {t}"));
        }
        if !self.deps.is_empty() {
            out.push(format!("deps: {}", self.deps.join(", ")));
        }
        if !self.locals.is_empty() {
            out.push(format!("locals: {}", self.locals.join(", ")));
        }
        out.extend(self.extra.iter().map(|(k, v)| format!("{k}: {v}")));
        out
    }

    pub fn srcdir(&self) -> &str {
        self.srcdir.as_deref().unwrap_or("src")
    }

    pub fn testdir(&self) -> &str {
        self.testdir.as_deref().unwrap_or("test")
    }

    /// Whether `import` names a declared external or something below it.
    pub fn provides_external(&self, import: &str) -> Option<&str> {
        self.deps
            .iter()
            .find(|d| {
                import == d.as_str()
                    || (import.len() > d.len()
                        && import.starts_with(d.as_str())
                        && import.as_bytes()[d.len()] == b'.')
            })
            .map(String::as_str)
    }
}

/// Reduces a donor build description to what a project slice needs: its
/// name, external dependencies and local slice declarations.
pub fn adapt_manifest(donor: &ManifestModel) -> ManifestModel {
    ManifestModel {
        name: donor.name.clone(),
        deps: donor.deps.clone(),
        locals: donor.locals.clone(),
        ..Default::default()
    }
}

/// Adds `local` to the `locals` directive of a manifest, editing the text in
/// place so that unrelated lines and comments survive.
pub fn add_local(lines: &[String], local: &str) -> Result<Vec<String>> {
    let parsed = ManifestModel::parse_lines(lines)?;
    if parsed.locals.iter().any(|l| l == local) {
        return Ok(lines.to_vec());
    }
    let mut out = lines.to_vec();
    match directive_position(&out, "locals") {
        Some(i) => {
            let (_, v) = out[i].split_once(':').expect("matched");
            let mut list = split_list(v);
            list.push(local.to_string());
            out[i] = format!("locals: {}", list.join(", "));
        }
        None => out.push(format!("locals: {local}")),
    }
    Ok(out)
}

fn directive_position(lines: &[String], key: &str) -> Option<usize> {
    lines.iter().position(|l| {
        l.trim()
            .split_once(':')
            .is_some_and(|(k, _)| k.trim() == key)
    })
}

/// Drops `local` from the `locals` directive, leaving other lines intact.
pub fn remove_local(lines: &[String], local: &str) -> Result<Vec<String>> {
    ManifestModel::parse_lines(lines)?;
    let mut out = lines.to_vec();
    if let Some(i) = directive_position(&out, "locals") {
        let (_, v) = out[i].split_once(':').expect("matched");
        let list: Vec<String> = split_list(v).into_iter().filter(|l| l != local).collect();
        if list.is_empty() {
            out.remove(i);
        } else {
            out[i] = format!("locals: {}", list.join(", "));
        }
    }
    Ok(out)
}

/// Adds missing external dependencies to the `deps` directive.
pub fn merge_deps(lines: &[String], deps: &[String]) -> Result<Vec<String>> {
    let parsed = ManifestModel::parse_lines(lines)?;
    let missing: Vec<String> = deps
        .iter()
        .filter(|d| !parsed.deps.contains(d))
        .cloned()
        .collect();
    let mut out = lines.to_vec();
    if missing.is_empty() {
        return Ok(out);
    }
    match directive_position(&out, "deps") {
        Some(i) => {
            let (_, v) = out[i].split_once(':').expect("matched");
            let mut list = split_list(v);
            list.extend(missing);
            out[i] = format!("deps: {}", list.join(", "));
        }
        None => out.push(format!("deps: {}", missing.join(", "))),
    }
    Ok(out)
}
