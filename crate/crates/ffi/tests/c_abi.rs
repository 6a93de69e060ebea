use std::f64::consts::PI;
use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use pointerlab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(pl_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn spin_handle() -> *mut PlScenario {
    let mut h = ptr::null_mut();
    let s = unsafe { pl_scenario_from_spin(PI, PI / 2.0, 0.0, 0.95 * PI, &mut h) };
    assert_eq!(s, PlStatus::PlOk);
    h
}

#[test]
fn spin_handle_reproduces_closed_form() {
    let h = spin_handle();
    let mut n = 0usize;
    assert_eq!(unsafe { pl_scenario_dim(h, &mut n) }, PlStatus::PlOk);
    assert_eq!(n, 2);
    let mut q = [0.0; 4];
    assert_eq!(
        unsafe { pl_quasi_probabilities(h, q.as_mut_ptr(), 4) },
        PlStatus::PlOk
    );
    let mut closed = [0.0; 4];
    let s =
        unsafe { pl_spin_quasi_probabilities(PI, PI / 2.0, 0.0, 0.95 * PI, closed.as_mut_ptr()) };
    assert_eq!(s, PlStatus::PlOk);
    for k in 0..4 {
        assert!((q[k] - closed[k]).abs() < 1e-12);
    }
    assert!((closed[0] + 0.0360307014).abs() < 1e-9);
    let mut arr = [0.0; 2];
    assert_eq!(
        unsafe { pl_arrival_probabilities(h, arr.as_mut_ptr(), 2) },
        PlStatus::PlOk
    );
    assert!((arr[0] - 0.0061558297).abs() < 1e-9);
    let mut nodes = [0.0; 2];
    assert_eq!(
        unsafe { pl_node_probabilities(h, nodes.as_mut_ptr(), 2) },
        PlStatus::PlOk
    );
    assert!((nodes[0] + nodes[1] - 1.0).abs() < 1e-12);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(
        unsafe { pl_weak_value(h, 0, &mut re, &mut im) },
        PlStatus::PlOk
    );
    assert!((re + 12.7062047362).abs() < 1e-8);
    unsafe { pl_scenario_free(h) };
}

#[test]
fn errors_are_reported() {
    let h = spin_handle();
    let mut small = [0.0; 3];
    assert_eq!(
        unsafe { pl_quasi_probabilities(h, small.as_mut_ptr(), 3) },
        PlStatus::PlBufferTooSmall
    );
    assert!(last_error().contains("4 needed"));
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(
        unsafe { pl_weak_value(h, 5, &mut re, &mut im) },
        PlStatus::PlValidationError
    );
    assert_eq!(
        unsafe { pl_quasi_probabilities(ptr::null(), small.as_mut_ptr(), 3) },
        PlStatus::PlNullPointer
    );
    unsafe { pl_scenario_free(h) };
    unsafe { pl_scenario_free(ptr::null_mut()) };

    let mut h = ptr::null_mut();
    let bad = CString::new("kind = \"quantum").unwrap();
    assert_eq!(
        unsafe { pl_scenario_load_toml(bad.as_ptr(), &mut h) },
        PlStatus::PlParseError
    );
    assert!(h.is_null());
    assert!(last_error().contains("parse error"));

    let column = CString::new(
        "kind = \"classical\"\n[classical]\nentry = [0.5, 0.5]\nbranching = [[0.5, 0.4], [0.5, 0.5]]\nb_values = [0.0, 1.0]\nf_values = [0.0, 1.0]\n",
    )
    .unwrap();
    assert_eq!(
        unsafe { pl_scenario_load_toml(column.as_ptr(), &mut h) },
        PlStatus::PlValidationError
    );
    assert!(
        last_error().contains("classical.branching[*][1]"),
        "{}",
        last_error()
    );
}

#[test]
fn classical_handle_has_no_quantum_tables() {
    let text = CString::new(
        "kind = \"classical\"\n[classical]\nentry = [0.5, 0.5]\nbranching = [[0.3, 0.6], [0.7, 0.4]]\nb_values = [0.0, 1.0]\nf_values = [0.0, 1.0]\n",
    )
    .unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { pl_scenario_load_toml(text.as_ptr(), &mut h) },
        PlStatus::PlOk
    );
    let mut n = 0usize;
    assert_eq!(unsafe { pl_scenario_dim(h, &mut n) }, PlStatus::PlOk);
    assert_eq!(n, 2);
    let mut q = [0.0; 4];
    assert_eq!(
        unsafe { pl_quasi_probabilities(h, q.as_mut_ptr(), 4) },
        PlStatus::PlWrongKind
    );
    unsafe { pl_scenario_free(h) };
}

#[test]
fn collapse_center_and_degenerate_weights() {
    let w = [1.0, -0.8];
    let b = [0.0, -1.0];
    let mut z = 0.0;
    let s = unsafe { pl_collapse_center(w.as_ptr(), ptr::null(), b.as_ptr(), 2, &mut z) };
    assert_eq!(s, PlStatus::PlOk);
    assert!((z - 4.0).abs() < 1e-12);
    let w = [1.0, -1.0];
    let s = unsafe { pl_collapse_center(w.as_ptr(), ptr::null(), b.as_ptr(), 2, &mut z) };
    assert_eq!(s, PlStatus::PlDegenerate);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(pl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compile a small C program against the generated header and the static
/// library, when a C compiler is on the PATH.
#[test]
fn c_program_links_against_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("pointerlab.h").exists());
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler; skipping link test");
        return;
    };
    // the test binary lives in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libpointerlab_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping link test", lib.display());
        return;
    }
    let tmp = tempdir();
    let src = tmp.join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <math.h>
#include <stdio.h>
#include "pointerlab.h"
int main(void) {
    PlScenario *h = NULL;
    if (pl_scenario_from_spin(M_PI, M_PI / 2, 0.0, 0.95 * M_PI, &h) != PL_OK) return 1;
    double q[4];
    if (pl_quasi_probabilities(h, q, 4) != PL_OK) return 2;
    double re, im;
    if (pl_weak_value(h, 0, &re, &im) != PL_OK) return 3;
    pl_scenario_free(h);
    if (fabs(re + 12.7062047) > 1e-6) return 4;
    if (pl_quasi_probabilities(NULL, q, 4) != PL_NULL_POINTER) return 5;
    printf("%.10f %s\n", q[0], pl_last_error_message());
    return 0;
}
"#,
    )
    .unwrap();
    let bin = tmp.join("smoke");
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("-0.0360307014"), "{text}");
    assert!(text.contains("scenario is null"));
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
        {
            return Ok(cc);
        }
    }
    Err(())
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pointerlab-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
