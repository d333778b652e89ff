//! C ABI for the streaming subspace search engine.
//!
//! Handles are opaque pointers owned by the library; every constructor has a
//! matching `_free`. Functions report a status code and leave a per-thread
//! message retrievable via [`sgmrd_last_error`]. No function panics across
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sgmrd::engine::{Engine, EngineConfig};
use sgmrd::error::Error;
use sgmrd::estimator::EstimatorConfig;
use sgmrd::stream::Observation;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgmrdStatus {
    Ok = 0,
    /// Invalid arguments or configuration.
    Usage = 1,
    /// Malformed or insufficient data.
    Data = 2,
    /// A failed internal invariant (a bug).
    Internal = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized: Vec<u8> = message.bytes().filter(|&b| b != 0).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> SgmrdStatus {
    match err {
        Error::InvalidConfig(_)
        | Error::PlaysOutOfRange { .. }
        | Error::BadNeighborhood { .. }
        | Error::UnknownLabelColumn(_) => SgmrdStatus::Usage,
        _ => SgmrdStatus::Data,
    }
}

fn fail(err: &Error) -> SgmrdStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn usage(message: &str) -> SgmrdStatus {
    set_error(message);
    SgmrdStatus::Usage
}

/// Runs a closure, converting panics into `Internal`.
fn guarded(body: impl FnOnce() -> SgmrdStatus) -> SgmrdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal invariant violation");
            SgmrdStatus::Internal
        }
    }
}

/// Version of the underlying library as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sgmrd_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Copies the last error message of this thread into `buffer` (truncated to
/// `capacity` bytes including the terminator) and returns the full message
/// length. Call with a null buffer to query the length.
///
/// # Safety
/// `buffer` must point to at least `capacity` writable bytes, or be null.
#[no_mangle]
pub unsafe extern "C" fn sgmrd_last_error(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let copy = bytes.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buffer.cast(), copy);
            *buffer.add(copy) = 0;
        }
        bytes.len()
    })
}

/// Streaming subspace monitor handle.
pub struct SgmrdEngine {
    inner: Engine,
    emitted: bool,
}

/// Creates an engine for a `dims`-dimensional stream.
///
/// `policy` is one of `ts`, `rd`, `gd`, `batch`, `init`, `gold`. Returns null
/// on error; see [`sgmrd_last_error`].
///
/// # Safety
/// `policy` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sgmrd_engine_new(
    dims: usize,
    window_size: usize,
    step_size: usize,
    plays: usize,
    gamma: f64,
    iterations: usize,
    slice_mass: f64,
    policy: *const c_char,
    monitor_every_step: bool,
    seed: u64,
) -> *mut SgmrdEngine {
    let mut out: *mut SgmrdEngine = std::ptr::null_mut();
    guarded(|| {
        if policy.is_null() {
            return usage("policy is null");
        }
        let policy = match CStr::from_ptr(policy).to_str() {
            Ok(s) => s,
            Err(_) => return usage("policy is not valid UTF-8"),
        };
        let policy = match policy.parse() {
            Ok(kind) => kind,
            Err(err) => return fail(&err),
        };
        let cfg = EngineConfig {
            window_size,
            step_size,
            plays,
            gamma,
            estimator: EstimatorConfig {
                iterations,
                slice_mass,
                seed,
            },
            policy,
            monitor_every_step,
        };
        match Engine::new(dims, cfg) {
            Ok(inner) => {
                out = Box::into_raw(Box::new(SgmrdEngine {
                    inner,
                    emitted: false,
                }));
                SgmrdStatus::Ok
            }
            Err(err) => fail(&err),
        }
    });
    out
}

/// Releases an engine. Null is allowed.
///
/// # Safety
/// `engine` must come from [`sgmrd_engine_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sgmrd_engine_free(engine: *mut SgmrdEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Feeds one observation of `dims` values. `stepped`, when non-null, is set
/// to true once the window is full and the engine state advanced.
///
/// # Safety
/// `engine` must be a live handle; `values` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sgmrd_engine_push(
    engine: *mut SgmrdEngine,
    values: *const f64,
    len: usize,
    stepped: *mut bool,
) -> SgmrdStatus {
    guarded(|| {
        if engine.is_null() || values.is_null() {
            return usage("null engine or values");
        }
        let handle = &mut *engine;
        let values = std::slice::from_raw_parts(values, len).to_vec();
        let obs = Observation::new(values, handle.inner.time() + 1);
        match handle.inner.push(obs) {
            Ok(snapshot) => {
                handle.emitted = snapshot.is_some();
                if !stepped.is_null() {
                    *stepped = handle.emitted;
                }
                SgmrdStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Number of observations ingested so far.
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgmrd_engine_time(engine: *const SgmrdEngine) -> u64 {
    if engine.is_null() {
        return 0;
    }
    (*engine).inner.time()
}

/// Stream dimensionality.
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgmrd_engine_dims(engine: *const SgmrdEngine) -> usize {
    if engine.is_null() {
        return 0;
    }
    (*engine).inner.dims()
}

/// Total quality estimates spent so far.
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgmrd_engine_evaluations(engine: *const SgmrdEngine) -> u64 {
    if engine.is_null() {
        return 0;
    }
    (*engine).inner.evaluation_count()
}

/// Smoothed quality of the subspace monitored for `dim`. Fails with `Data`
/// before the first window has filled.
///
/// # Safety
/// `engine` must be a live handle; `quality` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgmrd_engine_quality(
    engine: *const SgmrdEngine,
    dim: usize,
    quality: *mut f64,
) -> SgmrdStatus {
    guarded(|| {
        if engine.is_null() || quality.is_null() {
            return usage("null engine or output");
        }
        let handle = &*engine;
        if dim >= handle.inner.dims() {
            return fail(&Error::DimensionOutOfRange {
                dim,
                d: handle.inner.dims(),
            });
        }
        match handle.inner.monitor() {
            Some(monitor) => {
                *quality = monitor.smoothed[dim];
                SgmrdStatus::Ok
            }
            None => fail(&Error::WindowTooSmall {
                required: handle.inner.config().window_size,
                got: handle.inner.window().len(),
            }),
        }
    })
}

/// Copies the dimensions of the subspace monitored for `dim` into `buffer`
/// and stores the subspace size in `len`. At most `capacity` entries are
/// written; a larger subspace fails with `Usage` (query `len` first by
/// passing a null buffer). Fails with `Data` before the window has filled.
///
/// # Safety
/// `engine` must be a live handle; `buffer` must hold `capacity` entries or
/// be null; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgmrd_engine_subspace(
    engine: *const SgmrdEngine,
    dim: usize,
    buffer: *mut usize,
    capacity: usize,
    len: *mut usize,
) -> SgmrdStatus {
    guarded(|| {
        if engine.is_null() || len.is_null() {
            return usage("null engine or length output");
        }
        let handle = &*engine;
        if dim >= handle.inner.dims() {
            return fail(&Error::DimensionOutOfRange {
                dim,
                d: handle.inner.dims(),
            });
        }
        let map = match handle.inner.map() {
            Some(map) => map,
            None => {
                return fail(&Error::WindowTooSmall {
                    required: handle.inner.config().window_size,
                    got: handle.inner.window().len(),
                })
            }
        };
        let dims = map.get(dim).dims();
        *len = dims.len();
        if buffer.is_null() {
            return SgmrdStatus::Ok;
        }
        if capacity < dims.len() {
            return usage("buffer too small for subspace");
        }
        std::ptr::copy_nonoverlapping(dims.as_ptr(), buffer, dims.len());
        SgmrdStatus::Ok
    })
}

/// True when the last successful push advanced the engine (window full).
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgmrd_engine_ready(engine: *const SgmrdEngine) -> bool {
    if engine.is_null() {
        return false;
    }
    (*engine).inner.map().is_some()
}

/// LOF scores of `n` points with `m` dimensions, row-major in `points`,
/// written to `scores` (length `n`).
///
/// # Safety
/// `points` must hold `n * m` doubles and `scores` `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sgmrd_lof(
    points: *const f64,
    n: usize,
    m: usize,
    k: usize,
    scores: *mut f64,
) -> SgmrdStatus {
    guarded(|| {
        if points.is_null() || scores.is_null() {
            return usage("null points or scores");
        }
        let flat = std::slice::from_raw_parts(points, n * m);
        let rows: Vec<Vec<f64>> = flat.chunks_exact(m).map(|c| c.to_vec()).collect();
        match sgmrd::outliers::lof(&rows, k) {
            Ok(values) => {
                std::ptr::copy_nonoverlapping(values.as_ptr(), scores, n);
                SgmrdStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Two-sample Kolmogorov-Smirnov p-value. Inputs need not be sorted.
///
/// # Safety
/// `a` must hold `len_a` doubles, `b` `len_b` doubles, `p` one writable
/// double.
#[no_mangle]
pub unsafe extern "C" fn sgmrd_ks_pvalue(
    a: *const f64,
    len_a: usize,
    b: *const f64,
    len_b: usize,
    p: *mut f64,
) -> SgmrdStatus {
    guarded(|| {
        if a.is_null() || b.is_null() || p.is_null() {
            return usage("null sample or output");
        }
        let mut a = std::slice::from_raw_parts(a, len_a).to_vec();
        let mut b = std::slice::from_raw_parts(b, len_b).to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        match sgmrd::estimator::ks_two_sample_pvalue(&a, &b) {
            Ok(value) => {
                *p = value;
                SgmrdStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Generates a drift benchmark and writes the dataset CSV to `csv_path` and,
/// unless null, the ground truth JSON to `truth_path`. A negative
/// `outlier_prob` selects the calibrated default.
///
/// # Safety
/// The paths must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn sgmrd_generate_csv(
    dims: usize,
    phases: usize,
    per_phase: usize,
    outlier_prob: f64,
    max_subspace_dim: usize,
    seed: u64,
    csv_path: *const c_char,
    truth_path: *const c_char,
) -> SgmrdStatus {
    guarded(|| {
        if csv_path.is_null() {
            return usage("null csv path");
        }
        let csv_path = match CStr::from_ptr(csv_path).to_str() {
            Ok(s) => s.to_string(),
            Err(_) => return usage("csv path is not valid UTF-8"),
        };
        let truth_path = if truth_path.is_null() {
            None
        } else {
            match CStr::from_ptr(truth_path).to_str() {
                Ok(s) => Some(s.to_string()),
                Err(_) => return usage("truth path is not valid UTF-8"),
            }
        };
        let mut cfg = sgmrd::benchgen::GeneratorConfig::new(dims, seed);
        cfg.phases = phases;
        cfg.per_phase = per_phase;
        cfg.max_subspace_dim = max_subspace_dim;
        if outlier_prob >= 0.0 {
            cfg.outlier_prob = outlier_prob;
        }
        let data = match sgmrd::benchgen::generate(&cfg) {
            Ok(data) => data,
            Err(err) => return fail(&err),
        };
        if let Err(err) = sgmrd::benchgen::write_dataset_csv(&data.observations, &csv_path) {
            return fail(&err);
        }
        if let Some(path) = truth_path {
            let json = serde_json::to_string_pretty(&data.truth).expect("truth serializes");
            if let Err(source) = std::fs::write(&path, json + "\n") {
                return fail(&Error::Io {
                    path: path.into(),
                    source,
                });
            }
        }
        SgmrdStatus::Ok
    })
}
