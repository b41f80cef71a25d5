//! C bindings.
//!
//! A `DidaDetector` bundles a resolved run config, its resources and a
//! trained model. Every call returns a `DidaStatus`; on failure the message
//! is available from `dida_last_error` until the next failing call on the
//! same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dida::cli::RunConfig;
use dida::corpus::record_from_json_line;
use dida::network::{load_checkpoint, Model};
use dida::resources::Resources;
use dida::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DidaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Config = 5,
    Checkpoint = 6,
    Invalid = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque detector handle.
pub struct DidaDetector {
    config: RunConfig,
    resources: Resources,
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DidaStatus {
    match e {
        Error::Io { .. } | Error::MissingFile(_) => DidaStatus::Io,
        Error::Parse { .. } | Error::EmptyDataset(_) => DidaStatus::Parse,
        Error::Config(_) => DidaStatus::Config,
        Error::Checkpoint(_) => DidaStatus::Checkpoint,
        _ => DidaStatus::Invalid,
    }
}

struct Fail(DidaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DidaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DidaStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DidaStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(DidaStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(DidaStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn handle<'a>(p: *const DidaDetector) -> Result<&'a DidaDetector, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(DidaStatus::NullArgument, "detector is null".into()))
}

fn null_out(name: &str) -> Fail {
    Fail(DidaStatus::NullArgument, format!("{name} is null"))
}

/// Message of the last failed call on this thread, or NULL. Owned by the
/// library.
#[no_mangle]
pub extern "C" fn dida_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn dida_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opens a detector from a run config (TOML, as written by `dida train`)
/// and a checkpoint trained under it.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dida_detector_open(
    config_path: *const c_char,
    checkpoint_path: *const c_char,
    out: *mut *mut DidaDetector,
) -> DidaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_out("out"));
        }
        *out = ptr::null_mut();
        let config = RunConfig::from_file(Path::new(str_arg(config_path, "config_path")?))?;
        let resources = config.load_resources()?;
        let emotion_dim = config.train.featurizer(&resources).emotion_dim();
        let expected = config.train.model_config(&resources, emotion_dim);
        let model = load_checkpoint(Path::new(str_arg(checkpoint_path, "checkpoint_path")?), Some(&expected))?;
        *out = Box::into_raw(Box::new(DidaDetector {
            config,
            resources,
            model,
        }));
        Ok(())
    })
}

/// # Safety
/// `detector` must come from `dida_detector_open` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn dida_detector_free(detector: *mut DidaDetector) {
    if !detector.is_null() {
        drop(Box::from_raw(detector));
    }
}

/// Fake-news probability for one record given as a canonical JSON line.
///
/// # Safety
/// Pointers must be valid; `record_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dida_predict_json(
    detector: *const DidaDetector,
    record_json: *const c_char,
    p_fake: *mut f64,
) -> DidaStatus {
    guard(|| {
        let d = handle(detector)?;
        if p_fake.is_null() {
            return Err(null_out("p_fake"));
        }
        let record = record_from_json_line(str_arg(record_json, "record_json")?)?;
        let input = d.config.train.featurizer(&d.resources).prepare(&record)?;
        *p_fake = d.model.predict(&input, &d.resources.embeddings)?[1];
        Ok(())
    })
}

/// Width of the per-text emotion vector.
///
/// # Safety
/// `detector` must be valid or NULL (gives 0).
#[no_mangle]
pub unsafe extern "C" fn dida_emotion_dim(detector: *const DidaDetector) -> usize {
    detector
        .as_ref()
        .map_or(0, |d| d.config.train.featurizer(&d.resources).emotion_dim())
}

/// Writes the emotion vector of `text` into `out` (capacity `cap`) and its
/// width into `written`. Fails with `BufferTooSmall` when `cap` is short,
/// still reporting the needed width.
///
/// # Safety
/// `out` must hold `cap` doubles; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn dida_emotion_vector(
    detector: *const DidaDetector,
    text: *const c_char,
    out: *mut f64,
    cap: usize,
    written: *mut usize,
) -> DidaStatus {
    guard(|| {
        let d = handle(detector)?;
        if written.is_null() {
            return Err(null_out("written"));
        }
        let v = d.config.train.featurizer(&d.resources).extractor().vector(str_arg(text, "text")?);
        let n = v.values.len();
        *written = n;
        if cap < n {
            return Err(Fail(DidaStatus::BufferTooSmall, format!("need {n} values, got room for {cap}")));
        }
        if out.is_null() {
            return Err(null_out("out"));
        }
        for (i, x) in v.values.iter().enumerate() {
            *out.add(i) = *x;
        }
        Ok(())
    })
}
