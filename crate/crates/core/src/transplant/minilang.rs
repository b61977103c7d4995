//! The bundled toy language.
//!
//! * Files are line based and end in `.ml`; a file's module name is its path
//!   below the source root with `/` replaced by `.` and the extension dropped.
//! * `import a.b.c` declares a dependency (anywhere in a file).
//! * `{` and `}` open and close blocks; `//` starts a comment.
//! * `@test` on its own line marks the following `fn name() {` block as a test.
//! * Top-level `fn`, `let` and `const` definitions are in-file symbols.

use std::collections::BTreeSet;

use super::adapter::LanguageAdapter;
use crate::model::TestCandidate;

#[derive(Clone, Copy, Debug, Default)]
pub struct Minilang;

pub const EXTENSION: &str = ".ml";

fn code_part(line: &str) -> &str {
    match line.find("//") {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Module named by an import line, if the line is one.
pub fn import_of(line: &str) -> Option<&str> {
    let t = code_part(line).trim();
    let rest = t.strip_prefix("import")?;
    if !rest.starts_with(char::is_whitespace) {
        return None;
    }
    let name = rest.trim();
    (!name.is_empty()).then_some(name)
}

pub fn brace_delta(line: &str) -> i64 {
    code_part(line)
        .chars()
        .map(|c| match c {
            '{' => 1,
            '}' => -1,
            _ => 0,
        })
        .sum()
}

/// True if the braces of `lines` never close more than they opened and end balanced.
pub fn braces_balanced(lines: &[String]) -> bool {
    let mut depth = 0i64;
    for l in lines {
        depth += brace_delta(l);
        if depth < 0 {
            return false;
        }
    }
    depth == 0
}

fn identifiers(line: &str) -> impl Iterator<Item = &str> {
    code_part(line)
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .filter(|w| w.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_'))
}

fn definition_name(line: &str) -> Option<&str> {
    let t = code_part(line).trim_start();
    for kw in ["fn ", "let ", "const "] {
        if let Some(rest) = t.strip_prefix(kw) {
            return identifiers(rest).next();
        }
    }
    None
}

/// Index of the line closing the block opened at `start`.
fn block_end(lines: &[String], start: usize) -> Option<usize> {
    let mut depth = 0i64;
    for (i, l) in lines.iter().enumerate().skip(start) {
        depth += brace_delta(l);
        if depth <= 0 {
            return (depth == 0 && i > start).then_some(i);
        }
    }
    None
}

impl LanguageAdapter for Minilang {
    fn name(&self) -> &str {
        "minilang"
    }

    fn is_source(&self, path: &str) -> bool {
        path.ends_with(EXTENSION)
    }

    fn module_name(&self, path_below_root: &str) -> Option<String> {
        let stem = path_below_root.strip_suffix(EXTENSION)?;
        if stem.is_empty() || stem.split('/').any(str::is_empty) {
            return None;
        }
        Some(stem.replace('/', "."))
    }

    fn scan_imports(&self, lines: &[String]) -> Vec<String> {
        lines
            .iter()
            .filter_map(|l| import_of(l).map(str::to_string))
            .collect()
    }

    fn scan_tests(&self, donor_id: &str, file: &str, lines: &[String]) -> Vec<TestCandidate> {
        let imports = self.scan_imports(lines);
        let mut out = Vec::new();
        for (i, l) in lines.iter().enumerate() {
            if code_part(l).trim() != "@test" {
                continue;
            }
            let Some(header) = (i + 1..lines.len()).find(|&j| !lines[j].trim().is_empty()) else {
                continue;
            };
            let t = code_part(&lines[header]).trim_start();
            let Some(name) = t.strip_prefix("fn ").and_then(|r| identifiers(r).next()) else {
                continue;
            };
            if brace_delta(&lines[header]) != 1 {
                continue;
            }
            let Some(end) = block_end(lines, header) else {
                continue;
            };
            let mut cand = TestCandidate {
                id: format!("{donor_id}:{file}:{name}"),
                name: name.to_string(),
                file: file.to_string(),
                marker_line: i,
                body_lines: (header, end),
                imports: imports.clone(),
                modular: false,
            };
            cand.modular = self.symbol_scan(lines, &cand).is_empty();
            out.push(cand);
        }
        out
    }

    fn symbol_scan(&self, file_lines: &[String], test: &TestCandidate) -> Vec<String> {
        let mut defined = BTreeSet::new();
        let mut depth = 0i64;
        for (i, l) in file_lines.iter().enumerate() {
            if depth == 0 && !(test.body_lines.0..=test.body_lines.1).contains(&i) {
                if let Some(n) = definition_name(l) {
                    defined.insert(n);
                }
            }
            depth += brace_delta(l);
        }
        let body = &file_lines[test.body_lines.0 + 1..test.body_lines.1];
        let used: BTreeSet<&str> = body.iter().flat_map(|l| identifiers(l)).collect();
        used.intersection(&defined).map(|s| s.to_string()).collect()
    }

    fn test_body(&self, file_lines: &[String], test: &TestCandidate) -> Vec<String> {
        file_lines[test.body_lines.0 + 1..test.body_lines.1].to_vec()
    }

    fn guard_wrap(&self, lines: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(lines.len() + 2);
        out.push("guard {".to_string());
        out.extend(lines.iter().cloned());
        out.push("}".to_string());
        out
    }

    fn nesting_delta(&self, line: &str) -> i64 {
        brace_delta(line)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(s: &str) -> Vec<String> {
        s.lines().map(str::to_string).collect()
    }

    const TEST_FILE: &str = "\
import ring.buffer
import testkit.assert

fn helper() {
  return 3
}

@test
fn publishes() {
  let rb = buffer.new(8)
  assert.eq(rb.size(), 8)
}

@test
fn uses_helper() {
  assert.eq(helper(), 3)
}
";

    #[test]
    fn scans_two_tests_one_modular() {
        let l = lines(TEST_FILE);
        let tests = Minilang.scan_tests("ringbuf", "test/ring/buffer_test.ml", &l);
        assert_eq!(tests.len(), 2);
        assert_eq!(tests[0].name, "publishes");
        assert!(tests[0].modular);
        assert!(!tests[1].modular);
        assert_eq!(Minilang.symbol_scan(&l, &tests[1]), vec!["helper"]);
        assert_eq!(tests[0].body_lines, (8, 11));
        assert_eq!(tests[0].imports, vec!["ring.buffer", "testkit.assert"]);
    }

    #[test]
    fn no_annotations_no_candidates() {
        assert!(Minilang.scan_tests("d", "test/a.ml", &lines("fn a() {\n}\n")).is_empty());
    }

    #[test]
    fn guard_wrap_adds_two_lines() {
        let body = lines("  a()\n  b()");
        let g = Minilang.guard_wrap(&body);
        assert_eq!(g.len(), body.len() + 2);
        assert!(braces_balanced(&g));
    }

    #[test]
    fn import_and_brace_scanning() {
        assert_eq!(import_of("  import a.b // x"), Some("a.b"));
        assert_eq!(import_of("important()"), None);
        assert_eq!(import_of("import"), None);
        assert_eq!(brace_delta("fn x() { // }"), 1);
        assert!(!braces_balanced(&lines("}\n{")));
    }

    #[test]
    fn module_names() {
        assert_eq!(Minilang.module_name("ring/buffer.ml").as_deref(), Some("ring.buffer"));
        assert_eq!(Minilang.module_name("README"), None);
    }
}
