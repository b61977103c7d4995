use std::path::{Path, PathBuf};
use std::process::Command;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libhistgen_ffi.a");
    lib.exists().then_some(lib)
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(crate_dir().join("include/histgen.h")).unwrap();
    for sym in [
        "histgen_last_error",
        "histgen_config_from_preset",
        "histgen_config_from_toml",
        "histgen_config_free",
        "histgen_generate",
        "histgen_validate",
        "histgen_report_violation_count",
        "histgen_report_json",
        "histgen_report_free",
        "histgen_stats",
        "histgen_string_free",
        "typedef struct HistgenConfig HistgenConfig",
        "HISTGEN_STATUS_INVALID_HISTORY = 4",
    ] {
        assert!(header.contains(sym), "missing {sym}");
    }
}

const PROGRAM: &str = r#"
#include <stdio.h>
#include "histgen.h"

int main(int argc, char **argv) {
    HistgenConfig *cfg = NULL;
    if (histgen_config_from_preset("uniform-generators", &cfg) != HISTGEN_STATUS_OK) return 10;
    histgen_config_set_max_iterations(cfg, 5);
    const char *donors[] = { argv[2] };
    HistgenRunSummary summary;
    HistgenStatus st = histgen_generate(cfg, argv[1], donors, 1, argv[3], &summary);
    histgen_config_free(cfg);
    if (st != HISTGEN_STATUS_OK) { fprintf(stderr, "%s\n", histgen_last_error()); return 11; }
    HistgenReport *report = NULL;
    if (histgen_validate(argv[3], &report) != HISTGEN_STATUS_OK) return 12;
    size_t n = histgen_report_violation_count(report);
    histgen_report_free(report);
    char *csv = NULL;
    if (histgen_stats(argv[3], false, &csv) != HISTGEN_STATUS_OK) return 13;
    printf("%llu %zu\n%s", (unsigned long long)summary.iterations, n, csv);
    histgen_string_free(csv);
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_static_library() {
    let (Some(lib), true) = (static_lib(), have_cc()) else {
        eprintln!("skipping: no C compiler or static library");
        return;
    };
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = tmp.path().join("smoke");
    let built = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(built.status.success(), "{}", String::from_utf8_lossy(&built.stderr));
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures");
    let out = tmp.path().join("h");
    let ran = Command::new(&exe)
        .arg(fixtures.join("calc"))
        .arg(fixtures.join("donors/ringlib"))
        .arg(&out)
        .output()
        .unwrap();
    assert!(ran.status.success(), "{}", String::from_utf8_lossy(&ran.stderr));
    let stdout = String::from_utf8(ran.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("5 0"));
    assert_eq!(lines.next(), Some("revision,distinct_features,total_features,repository_count,loc_per_variant"));
}
