//! Compiles a C program against the committed header and links it to the
//! static library, when a C compiler is available.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "cloudq.h"

int main(void) {
    CloudqReport *report = NULL;
    if (cloudq_report_from_preset("paper-case-1", &report) != CLOUDQ_STATUS_OK) return 2;
    CloudqTotals totals;
    if (cloudq_report_totals(report, &totals) != CLOUDQ_STATUS_OK) return 3;
    cloudq_report_free(report);
    if (cloudq_report_from_preset("nope", &report) != CLOUDQ_STATUS_CONFIG) return 4;
    if (strstr(cloudq_last_error_message(), "nope") == NULL) return 5;
    CloudqSolver *s = NULL;
    double n1 = 0.0;
    if (cloudq_solver_new(3, "constant:1", 0.1, &s) != CLOUDQ_STATUS_OK) return 6;
    if (cloudq_solver_advance(s, 1) != CLOUDQ_STATUS_OK) return 7;
    if (cloudq_solver_expected_count(s, 1, &n1) != CLOUDQ_STATUS_OK) return 8;
    cloudq_solver_free(s);
    printf("%llu %.6f\n", (unsigned long long)totals.logical_qubits, n1);
    return 0;
}
"#;

fn staticlib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libcloudq_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn header_compiles_and_links() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler `{cc}`");
        return;
    }
    let Some(lib) = staticlib() else {
        eprintln!("skipping: static library not built next to the test binary");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "C program exited with {:?}",
        out.status.code()
    );
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "18778 2.400000"
    );
}
