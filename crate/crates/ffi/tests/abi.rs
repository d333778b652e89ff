//! Exercises the C ABI the way a foreign binding would: raw pointers, status
//! codes, and the per-thread error message.

use std::ffi::{c_char, CString};

use sgmrd_ffi::*;

fn last_error() -> String {
    unsafe {
        let needed = sgmrd_last_error(std::ptr::null_mut(), 0);
        let mut buffer = vec![0u8; needed + 1];
        sgmrd_last_error(buffer.as_mut_ptr().cast::<c_char>(), buffer.len());
        buffer.truncate(needed);
        String::from_utf8(buffer).unwrap()
    }
}

fn new_engine(dims: usize, window: usize, policy: &str, seed: u64) -> *mut SgmrdEngine {
    let policy = CString::new(policy).unwrap();
    unsafe {
        sgmrd_engine_new(
            dims,
            window,
            2,
            1,
            0.9,
            20,
            0.5,
            policy.as_ptr(),
            true,
            seed,
        )
    }
}

#[test]
fn version_is_a_c_string() {
    let version = unsafe { std::ffi::CStr::from_ptr(sgmrd_version()) };
    assert!(!version.to_str().unwrap().is_empty());
}

#[test]
fn engine_lifecycle_through_the_abi() {
    let engine = new_engine(4, 100, "ts", 7);
    assert!(!engine.is_null());
    unsafe {
        assert_eq!(sgmrd_engine_dims(engine), 4);
        assert!(!sgmrd_engine_ready(engine));

        // Qualities are unavailable until the window fills.
        let mut q = 0.0f64;
        assert_eq!(sgmrd_engine_quality(engine, 0, &mut q), SgmrdStatus::Data);

        let mut state = 0x243F6A8885A308D3u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut stepped = false;
        for t in 0..160 {
            let row: Vec<f64> = (0..4).map(|_| next()).collect();
            let status = sgmrd_engine_push(engine, row.as_ptr(), row.len(), &mut stepped);
            assert_eq!(status, SgmrdStatus::Ok);
            assert_eq!(stepped, t >= 99, "t = {t}");
        }
        assert!(sgmrd_engine_ready(engine));
        assert_eq!(sgmrd_engine_time(engine), 160);
        assert!(sgmrd_engine_evaluations(engine) > 0);

        for dim in 0..4 {
            assert_eq!(sgmrd_engine_quality(engine, dim, &mut q), SgmrdStatus::Ok);
            assert!((0.0..=1.0).contains(&q));

            let mut len = 0usize;
            // Length query with a null buffer first.
            assert_eq!(
                sgmrd_engine_subspace(engine, dim, std::ptr::null_mut(), 0, &mut len),
                SgmrdStatus::Ok
            );
            assert!(len >= 2);
            let mut dims = vec![0usize; len];
            assert_eq!(
                sgmrd_engine_subspace(engine, dim, dims.as_mut_ptr(), dims.len(), &mut len),
                SgmrdStatus::Ok
            );
            assert!(dims.contains(&dim));
        }

        // Shape violations surface as Data errors with a message.
        let short = [0.5f64; 2];
        assert_eq!(
            sgmrd_engine_push(engine, short.as_ptr(), short.len(), &mut stepped),
            SgmrdStatus::Data
        );
        assert!(last_error().contains("dimension mismatch"));

        sgmrd_engine_free(engine);
    }
}

#[test]
fn rejects_bad_policy_and_nulls() {
    let engine = new_engine(4, 100, "nope", 1);
    assert!(engine.is_null());
    assert!(last_error().contains("unknown policy"));

    unsafe {
        assert_eq!(
            sgmrd_engine_push(std::ptr::null_mut(), std::ptr::null(), 0, std::ptr::null_mut()),
            SgmrdStatus::Usage
        );
        sgmrd_engine_free(std::ptr::null_mut());
    }
}

#[test]
fn lof_over_the_abi() {
    // A tight cluster and one far point, row-major.
    let mut flat = Vec::new();
    let mut state = 1u64;
    for _ in 0..20 {
        for _ in 0..2 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            flat.push((state >> 11) as f64 / (1u64 << 53) as f64 * 0.2);
        }
    }
    flat.extend([5.0, 5.0]);
    let mut scores = vec![0.0f64; 21];
    let status = unsafe { sgmrd_lof(flat.as_ptr(), 21, 2, 5, scores.as_mut_ptr()) };
    assert_eq!(status, SgmrdStatus::Ok);
    assert!(scores[20] > 2.0);

    let status = unsafe { sgmrd_lof(flat.as_ptr(), 21, 2, 21, scores.as_mut_ptr()) };
    assert_eq!(status, SgmrdStatus::Usage);
}

#[test]
fn ks_pvalue_over_the_abi() {
    let a = [0.0f64, 0.0, 0.0];
    let b = [1.0f64, 1.0, 1.0];
    let mut p = 0.0f64;
    let status = unsafe { sgmrd_ks_pvalue(a.as_ptr(), 3, b.as_ptr(), 3, &mut p) };
    assert_eq!(status, SgmrdStatus::Ok);
    assert!((p - 0.09956184831478028).abs() < 1e-12);

    let status = unsafe { sgmrd_ks_pvalue(a.as_ptr(), 0, b.as_ptr(), 3, &mut p) };
    assert_eq!(status, SgmrdStatus::Data);
}

#[test]
fn generates_csv_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let csv = CString::new(dir.path().join("data.csv").to_str().unwrap()).unwrap();
    let truth = CString::new(dir.path().join("truth.json").to_str().unwrap()).unwrap();
    let status = unsafe {
        sgmrd_generate_csv(10, 2, 200, -1.0, 5, 3, csv.as_ptr(), truth.as_ptr())
    };
    assert_eq!(status, SgmrdStatus::Ok);
    let text = std::fs::read_to_string(dir.path().join("data.csv")).unwrap();
    assert_eq!(text.lines().count(), 401);
    assert!(text.starts_with("dim_0,"));
    assert!(std::fs::read_to_string(dir.path().join("truth.json"))
        .unwrap()
        .contains("distributions"));
}

#[test]
fn header_exposes_the_surface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sgmrd.h"))
        .expect("generated header");
    for symbol in [
        "typedef struct SgmrdEngine SgmrdEngine;",
        "SgmrdStatus_Ok",
        "sgmrd_engine_new",
        "sgmrd_engine_push",
        "sgmrd_engine_subspace",
        "sgmrd_lof",
        "sgmrd_ks_pvalue",
        "sgmrd_generate_csv",
        "sgmrd_last_error",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
}
