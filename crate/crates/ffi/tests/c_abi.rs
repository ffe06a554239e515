use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use magnitude_ffi::*;

fn last_error() -> String {
    let p = mag_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn two_point_space() {
    let coords = [0.0, 0.0, 3.0, 4.0];
    let mut space = ptr::null_mut();
    unsafe {
        assert_eq!(mag_space_from_points(coords.as_ptr(), 2, 2, &mut space), MagStatus::Ok);
        assert_eq!(mag_space_len(space), 2);
        let mut m = 0.0;
        assert_eq!(mag_magnitude(space, 0.5, &mut m), MagStatus::Ok);
        assert!((m - 2.0 / (1.0 + (-2.5f64).exp())).abs() < 1e-12);

        let mut w = [0.0; 2];
        assert_eq!(mag_weighting(space, 0.5, w.as_mut_ptr(), 2), MagStatus::Ok);
        assert!((w[0] + w[1] - m).abs() < 1e-12);
        assert_eq!(mag_weighting(space, 0.5, w.as_mut_ptr(), 1), MagStatus::BufferTooSmall);
        mag_space_free(space);
    }
}

#[test]
fn distance_matrix_and_errors() {
    let d = [0.0, 1.0, 1.0, 0.0];
    let mut space = ptr::null_mut();
    unsafe {
        assert_eq!(mag_space_from_distances(d.as_ptr(), 2, &mut space), MagStatus::Ok);
        let mut m = 0.0;
        assert_eq!(mag_magnitude(space, 1.0, &mut m), MagStatus::Ok);
        assert!((m - 2.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-12);
        assert_eq!(mag_magnitude(space, -1.0, &mut m), MagStatus::InvalidInput);
        assert!(!last_error().is_empty());
        assert_eq!(mag_magnitude(ptr::null(), 1.0, &mut m), MagStatus::NullPointer);
        mag_space_free(space);

        let dup = [0.0, 0.0, 0.0, 0.0];
        assert_eq!(mag_space_from_distances(dup.as_ptr(), 2, &mut space), MagStatus::InvalidInput);
        mag_space_free(ptr::null_mut());
    }
}

#[test]
fn geometry_of_unit_ball() {
    let name = CString::new("ball").unwrap();
    let mut g = MagFunctionals::default();
    unsafe {
        assert_eq!(mag_geometry(name.as_ptr(), 64, &mut g), MagStatus::Ok);
    }
    let pi = std::f64::consts::PI;
    assert!((g.volume - 4.0 * pi / 3.0).abs() < 1e-10);
    assert!((g.willmore - 4.0 * pi).abs() < 1e-10);

    let bad = CString::new("sphere").unwrap();
    unsafe {
        assert_eq!(mag_geometry(bad.as_ptr(), 64, &mut g), MagStatus::InvalidInput);
    }
    assert!(last_error().contains("sphere"));
}

#[test]
fn interval_estimate_is_below_exact_value() {
    let d = CString::new(r#"{"kind":"interval","length":2.0}"#).unwrap();
    let mut m = 0.0;
    unsafe {
        assert_eq!(mag_estimate_domain(d.as_ptr(), 2.0, 1e-6, 1024, 0, &mut m), MagStatus::Ok);
    }
    assert!(m <= 3.0 && m > 2.97, "{m}");
}

#[test]
fn symbol_round_trip_and_parametrix() {
    let json = CString::new(
        r#"{"order":2,"dim":1,"terms":[
            {"degree":2,"alpha":[0],"k":0,"p":2,"coeff":{"re":[1,1],"im":[0,1]},"scalars":{"f":1}}]}"#,
    )
    .unwrap();
    unsafe {
        let mut a = ptr::null_mut();
        assert_eq!(mag_symbol_from_json(json.as_ptr(), &mut a), MagStatus::Ok);
        assert_eq!(mag_symbol_order(a), 2);

        let mut b = ptr::null_mut();
        assert_eq!(mag_symbol_parametrix(a, -6, &mut b), MagStatus::Ok);
        assert_eq!(mag_symbol_order(b), -2);
        let mut ab = ptr::null_mut();
        assert_eq!(mag_symbol_product(a, b, -4, &mut ab), MagStatus::Ok);
        let mut one = 0;
        assert_eq!(mag_symbol_is_identity(ab, &mut one), MagStatus::Ok);
        assert_eq!(one, 1);

        // b is only known down to -6, so a ∘ b only down to -4
        let mut too_deep = ptr::null_mut();
        assert_eq!(mag_symbol_product(a, b, -5, &mut too_deep), MagStatus::SymbolError);

        let mut text = ptr::null_mut();
        assert_eq!(mag_symbol_to_json(b, &mut text), MagStatus::Ok);
        let s = CStr::from_ptr(text).to_str().unwrap().to_owned();
        mag_string_free(text);
        let mut back = ptr::null_mut();
        let c = CString::new(s).unwrap();
        assert_eq!(mag_symbol_from_json(c.as_ptr(), &mut back), MagStatus::Ok);
        assert_eq!(mag_symbol_order(back), -2);

        for h in [a, b, ab, back] {
            mag_symbol_free(h);
        }
    }
}

#[test]
fn header_declares_every_export() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/magnitude.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["typedef struct MagSpace MagSpace", "typedef struct MagSymbol MagSymbol", "MAG_STATUS_OK = 0"] {
        assert!(header.contains(ty), "{ty}");
    }
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "magnitude.h"

int main(void) {
    double pts[3] = {0.0, 1.0, 2.0};
    MagSpace *s = NULL;
    if (mag_space_from_points(pts, 3, 1, &s) != MAG_STATUS_OK) return 1;
    double m = 0.0;
    if (mag_magnitude(s, 1.0, &m) != MAG_STATUS_OK) return 2;
    mag_space_free(s);
    if (!(m > 1.0 && m < 3.0)) return 3;
    if (mag_magnitude(NULL, 1.0, &m) != MAG_STATUS_NULL_POINTER) return 4;
    if (mag_last_error() == NULL) return 5;
    printf("%.12f\n", m);
    return 0;
}
"#;

/// Compiles and links a C client against the header and the static library,
/// when a C compiler is available.
#[test]
fn c_client_links_against_static_library() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = [deps.join("libmagnitude_ffi.a"), deps.parent().unwrap().join("libmagnitude_ffi.a")]
        .into_iter()
        .find(|p| p.exists());
    let Some(lib) = lib else {
        eprintln!("static library not built; skipping");
        return;
    };
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("client.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = tmp.path().join("client");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to build");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C client exited with {:?}", out.status);
    let m: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    // points on a line: 1 + Σ tanh(gap / 2)
    assert!((m - (1.0 + 2.0 * 0.5f64.tanh())).abs() < 1e-10, "{m}");
}
