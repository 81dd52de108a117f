//! C ABI over the online model and the experiment runner.
//!
//! Every function returns an [`OlmdisfStatus`]. On failure a message is kept
//! per thread and can be read with [`olmdisf_last_error`]. Strings handed
//! out by the library must be released with [`olmdisf_string_free`], models
//! with [`olmdisf_model_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use olmdisf::bench::{run_experiment, RunConfig};
use olmdisf::engine::{ModelConfig, OnlineModel, StreamModel};
use olmdisf::ingest::{Label, TypedSchema};
use olmdisf::stream::Instance;
use olmdisf::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OlmdisfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    InvalidData = 4,
    Io = 5,
    Internal = 6,
    Panic = 7,
}

/// Opaque online model.
pub struct OlmdisfModel {
    inner: OnlineModel,
}

/// What the model reported for one instance.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OlmdisfStep {
    /// `+1` or `-1`.
    pub prediction: i32,
    pub margin: f64,
    /// Ensemble weight on the observed-space learner after the step.
    pub alpha1: f64,
    pub entropy: f64,
    pub mismatch: f64,
    /// 1 when a drift was detected at this step.
    pub drift: i32,
    /// Proposed label for an unlabeled instance, 0 when none.
    pub pseudo_label: i32,
    pub pseudo_confidence: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> OlmdisfStatus {
    match err {
        Error::Config(_) => OlmdisfStatus::InvalidConfig,
        Error::Io { .. } => OlmdisfStatus::Io,
        Error::Parse { .. }
        | Error::UnsupportedTask(_)
        | Error::Schema(_)
        | Error::ColdStart(_)
        | Error::Dimension { .. }
        | Error::Csv(_)
        | Error::Json(_) => OlmdisfStatus::InvalidData,
        _ => OlmdisfStatus::Internal,
    }
}

struct Failure(OlmdisfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OlmdisfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OlmdisfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OlmdisfStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(OlmdisfStatus::NullArgument, format!("{name} is null"))
}

/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(OlmdisfStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

fn hand_out(s: String, out: *mut *mut c_char) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(OlmdisfStatus::Internal, "interior NUL in output".into()))?;
    // SAFETY: the caller checked `out` for null.
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn olmdisf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a model from a JSON model config (`{}` for defaults) and a JSON
/// feature schema (`{"features": [{"id": 0, "kind": {"kind":
/// "continuous"}, "level_values": []}, ...]}`).
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn olmdisf_model_new(
    config_json: *const c_char,
    schema_json: *const c_char,
    out: *mut *mut OlmdisfModel,
) -> OlmdisfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config: ModelConfig = serde_json::from_str(read_str(config_json, "config_json")?)
            .map_err(|e| Failure(OlmdisfStatus::InvalidConfig, e.to_string()))?;
        let schema: TypedSchema = serde_json::from_str(read_str(schema_json, "schema_json")?)
            .map_err(|e| Failure(OlmdisfStatus::InvalidData, e.to_string()))?;
        let inner = OnlineModel::new(&schema, config)?;
        *out = Box::into_raw(Box::new(OlmdisfModel { inner }));
        Ok(())
    })
}

/// Predicts one instance and then learns from it. `ids` and `values` hold
/// `n_observed` observed features. `label` is `+1`, `-1`, or 0 when the
/// label is hidden.
///
/// # Safety
/// `model` must come from [`olmdisf_model_new`]; `ids` and `values` must
/// point to `n_observed` elements (may be null when it is 0); `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn olmdisf_model_step(
    model: *mut OlmdisfModel,
    t: usize,
    ids: *const usize,
    values: *const f64,
    n_observed: usize,
    label: i32,
    out: *mut OlmdisfStep,
) -> OlmdisfStatus {
    guard(|| {
        let model = model.as_mut().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if n_observed > 0 && (ids.is_null() || values.is_null()) {
            return Err(null("ids/values"));
        }
        let observed: Vec<(usize, f64)> = if n_observed == 0 {
            Vec::new()
        } else {
            let ids = std::slice::from_raw_parts(ids, n_observed);
            let values = std::slice::from_raw_parts(values, n_observed);
            ids.iter().copied().zip(values.iter().copied()).collect()
        };
        let label = match label {
            1 => Some(Label::Pos),
            -1 => Some(Label::Neg),
            0 => None,
            other => return Err(Failure(OlmdisfStatus::InvalidData, format!("label must be -1, 0 or 1, got {other}"))),
        };
        // The model never reads `true_label`; it only matters to evaluation.
        let inst = Instance { t, observed, label, true_label: label.unwrap_or(Label::Pos) };
        let o = model.inner.step(&inst)?;
        *out = OlmdisfStep {
            prediction: o.prediction.label.sign() as i32,
            margin: o.prediction.margin,
            alpha1: o.alpha1.unwrap_or(f64::NAN),
            entropy: o.entropy,
            mismatch: o.mismatch,
            drift: i32::from(o.drift.is_some()),
            pseudo_label: o.pseudo.map_or(0, |p| p.label.sign() as i32),
            pseudo_confidence: o.pseudo.map_or(0.0, |p| p.confidence),
        };
        Ok(())
    })
}

/// Writes the two ensemble weights to `out[0]` and `out[1]`.
///
/// # Safety
/// `model` must come from [`olmdisf_model_new`]; `out` must hold two
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn olmdisf_model_alpha(model: *const OlmdisfModel, out: *mut f64) -> OlmdisfStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let [a, b] = model.inner.alpha();
        *out = a;
        *out.add(1) = b;
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from [`olmdisf_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn olmdisf_model_free(model: *mut OlmdisfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs one experiment described by a TOML run config and returns a JSON
/// summary (run id, final CER, per-step CER and weight trajectories, drift
/// events) through `out_json`.
///
/// # Safety
/// `config_toml` must be NUL-terminated; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn olmdisf_run_experiment(config_toml: *const c_char, out_json: *mut *mut c_char) -> OlmdisfStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let config = RunConfig::from_toml(read_str(config_toml, "config_toml")?)?;
        let r = run_experiment(&config)?;
        let summary = serde_json::json!({
            "run_id": r.run_id(),
            "config_hash": r.config.hash(),
            "dataset": r.dataset,
            "n": r.trace.len(),
            "final_cer": r.final_cer,
            "cer": r.cer_trajectory(),
            "alpha1": r.alpha1_trajectory(),
            "events": r.events,
        });
        hand_out(summary.to_string(), out_json)
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn olmdisf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
