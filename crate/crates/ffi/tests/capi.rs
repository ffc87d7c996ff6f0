use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use essential_lab_ffi::*;

fn last_error() -> String {
    let p = el_last_error_message();
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { el_string_free(p) };
    s
}

const COORD_ROWS: [f64; 45] = {
    let mut r = [0.0; 45];
    let mut i = 0;
    while i < 5 {
        r[9 * i + i] = 1.0;
        i += 1;
    }
    r
};

#[test]
fn linear_space_and_solve_roundtrip() {
    let u = [1.0, 0.0, 1.0, 0.2, 0.3, 1.0, 0.5, -0.2, 1.0, -0.1, 0.7, 1.0, 0.9, 0.1, 1.0];
    let v = [0.0, 1.0, 1.0, -0.4, 0.1, 1.0, 0.3, 0.3, 1.0, 0.6, -0.5, 1.0, -0.2, -0.8, 1.0];
    let mut space = ptr::null_mut();
    assert_eq!(unsafe { el_linear_space_from_correspondences(u.as_ptr(), v.as_ptr(), &mut space) }, ElStatus::Ok);
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { el_solve(space, 1, 5, &mut res) }, ElStatus::Ok);
    let mut count = 99u32;
    let mut failed = true;
    unsafe {
        assert_eq!(el_solve_result_real_count(res, &mut count), ElStatus::Ok);
        assert_eq!(el_solve_result_failed(res, &mut failed), ElStatus::Ok);
    }
    assert!(!failed);
    assert!(count % 2 == 0 && count <= 10);
    let mut m = [0.0; 9];
    for k in 0..count {
        assert_eq!(unsafe { el_solve_result_solution(res, k, m.as_mut_ptr()) }, ElStatus::Ok);
        // Each solution satisfies the five epipolar constraints.
        for i in 0..5 {
            let (a, b) = (&u[3 * i..3 * i + 3], &v[3 * i..3 * i + 3]);
            let mut s = 0.0;
            for r in 0..3 {
                for c in 0..3 {
                    s += a[r] * m[3 * r + c] * b[c];
                }
            }
            assert!(s.abs() < 1e-8);
        }
    }
    assert_eq!(unsafe { el_solve_result_solution(res, count, m.as_mut_ptr()) }, ElStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    unsafe {
        el_solve_result_free(res);
        el_linear_space_free(space);
    }
}

#[test]
fn error_codes() {
    let mut space = ptr::null_mut();
    assert_eq!(unsafe { el_linear_space_new(ptr::null(), &mut space) }, ElStatus::NullPointer);
    assert!(last_error().contains("rows"));
    let mut dup = COORD_ROWS;
    dup[9..18].copy_from_slice(&COORD_ROWS[0..9]);
    assert_eq!(unsafe { el_linear_space_new(dup.as_ptr(), &mut space) }, ElStatus::RankDeficient);
    assert!(space.is_null());
    assert_eq!(unsafe { el_linear_space_new(COORD_ROWS.as_ptr(), ptr::null_mut()) }, ElStatus::NullPointer);
    let mut count = 0u32;
    assert_eq!(unsafe { el_solve_result_real_count(ptr::null(), &mut count) }, ElStatus::NullPointer);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { el_experiment_run(ElDistribution::Psi, ptr::null(), 0, 1, 1, &mut report) }, ElStatus::InvalidArgument);
    let bad_boxes = [1.0; 40];
    assert_eq!(
        unsafe { el_experiment_run(ElDistribution::Box, bad_boxes.as_ptr(), 10, 1, 1, &mut report) },
        ElStatus::InvalidArgument
    );
    assert_eq!(unsafe { el_experiment_run(ElDistribution::Box, ptr::null(), 10, 1, 1, &mut report) }, ElStatus::NullPointer);
    unsafe {
        el_linear_space_free(ptr::null_mut());
        el_string_free(ptr::null_mut());
    }
}

#[test]
fn experiment_report() {
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { el_experiment_run(ElDistribution::UnifG, ptr::null(), 64, 7, 2, &mut report) }, ElStatus::Ok);
    let (mut mean, mut se) = (0.0, 0.0);
    let mut bins = [0u64; 11];
    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(el_experiment_mean(report, &mut mean, &mut se), ElStatus::Ok);
        assert_eq!(el_experiment_histogram(report, bins.as_mut_ptr()), ElStatus::Ok);
        assert_eq!(el_experiment_to_json(report, &mut json), ElStatus::Ok);
    }
    assert_eq!(bins.iter().sum::<u64>(), 64);
    let weighted: u64 = bins.iter().enumerate().map(|(k, c)| k as u64 * c).sum();
    assert!((mean - weighted as f64 / 64.0).abs() < 1e-12);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["n"], 64);
    unsafe {
        el_string_free(json);
        el_experiment_free(report);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(el_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/essential_lab.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["el_solve", "el_experiment_run", "el_last_error_message", "EL_STATUS_RANK_DEFICIENT", "typedef struct ElLinearSpace"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(
        &src,
        "#include \"essential_lab.h\"\nint main(void) { ElLinearSpace *s = NULL; return el_linear_space_new(NULL, &s) == EL_STATUS_NULL_POINTER ? 0 : 1; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
}
