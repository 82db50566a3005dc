//! Compiles a small C program against the generated header and the static
//! library, then runs it.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "ssfind.h"

int main(void) {
    SsfGraph *g = NULL;
    SsfCode *c = NULL;
    SsfDecodeResult *r = NULL;
    SsfCodeParams p;
    SsfVerdict v;
    size_t err[2] = {3 * 24 + 5, 24 * 24 + 2 * 12 + 7};
    double radius[3];

    if (ssf_graph_generate(24, 3, 6, 1, &g) != SSF_STATUS_OK) return 1;
    if (ssf_code_new(g, &c) != SSF_STATUS_OK) return 2;
    ssf_graph_free(g);
    if (ssf_code_params(c, &p) != SSF_STATUS_OK || p.num_qubits != 720) return 3;
    if (ssf_decode_error(c, err, 2, 1, 20, &r) != SSF_STATUS_OK) return 4;
    if (ssf_result_verdict(r, &v) != SSF_STATUS_OK || v != SSF_VERDICT_SUCCESS) return 5;
    if (ssf_result_coset_equivalent(r) != 1) return 6;
    ssf_result_free(r);
    ssf_code_free(c);
    if (ssf_graph_parse("2 1 1\n", &g) != SSF_STATUS_PARSE) return 7;
    {
        char msg[128];
        ssf_last_error(msg, sizeof msg);
        if (strncmp(msg, "line 1", 6) != 0) return 8;
    }
    if (ssf_radius_coefficients(1, 2, 1, 20, 6, radius) != SSF_STATUS_OK) return 9;
    printf("%.6f %.6f %.6f\n", radius[0], radius[1], radius[2]);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps/
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler available, skipping");
        return;
    }
    let lib = target_dir().join("libssfind_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();

    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0.047619 0.058332 0.062500\n");
}
