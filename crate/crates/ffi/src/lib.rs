//! C ABI for the chorus engine: opaque handles, status codes, and accessors
//! over session traces, so other languages can drive decoding sessions.
//!
//! Usage from C mirrors the Rust flow: build a `ChorusConfig`, set engine and
//! model fields with the same `key`/`value` strings the flat config grammar
//! uses (`num_paths`, `model.vocab_size`, `prompt`, ...), then `chorus_run`
//! yields a `ChorusTrace` whose paths, steps, and aggregate answer are read
//! through accessor calls. All handles are freed with their matching `_free`
//! function exactly once; every function tolerates NULL and reports
//! `CHORUS_STATUS_NULL_ARGUMENT` instead of crashing.

use chorus_core::bench::RunSetup;
use chorus_core::engine::{SessionTrace, run_session, run_vanilla};
use chorus_core::model::SimModel;
use std::ffi::{CStr, c_char};

/// Status code returned by fallible functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChorusStatus {
    Ok = 0,
    NullArgument = 1,
    /// Unknown key, unparsable value, or invalid UTF-8.
    InvalidArgument = 2,
    /// The configuration violates an engine or model invariant.
    InvalidConfig = 3,
    /// Path or token index outside the trace.
    OutOfRange = 4,
    /// The requested value does not exist (e.g. no aggregate answer).
    NoValue = 5,
    IoError = 6,
}

/// Opaque session setup: engine config, simulated-model spec, prompt label.
#[repr(C)]
pub struct ChorusConfig {
    _private: [u8; 0],
}

/// Opaque completed-session trace.
#[repr(C)]
pub struct ChorusTrace {
    _private: [u8; 0],
}

struct ConfigInner {
    setup: RunSetup,
}

struct TraceInner {
    trace: SessionTrace,
}

fn config_ref<'a>(ptr: *const ChorusConfig) -> Option<&'a ConfigInner> {
    unsafe { (ptr as *const ConfigInner).as_ref() }
}

fn config_mut<'a>(ptr: *mut ChorusConfig) -> Option<&'a mut ConfigInner> {
    unsafe { (ptr as *mut ConfigInner).as_mut() }
}

fn trace_ref<'a>(ptr: *const ChorusTrace) -> Option<&'a TraceInner> {
    unsafe { (ptr as *const TraceInner).as_ref() }
}

/// New setup with the library defaults. Free with `chorus_config_free`.
#[unsafe(no_mangle)]
pub extern "C" fn chorus_config_new() -> *mut ChorusConfig {
    Box::into_raw(Box::new(ConfigInner {
        setup: RunSetup::default(),
    })) as *mut ChorusConfig
}

#[unsafe(no_mangle)]
pub extern "C" fn chorus_config_free(config: *mut ChorusConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config as *mut ConfigInner) });
    }
}

/// Set one field by its flat-grammar key: engine keys (`num_paths`,
/// `suffix_len`, `max_draft_len`, `edit_tolerance`, `alpha`, `temperature`,
/// `max_seq_len`, `rng_seed`, `pool_structure`, `fuzzy`), model keys
/// (`model.vocab_size`, `model.order`, `model.transition_seed`,
/// `model.base_concentration`, `model.eos_token`, `model.eos_prob`), or
/// `prompt`. Values are strings, e.g. `chorus_config_set(c, "alpha", "0.5")`.
///
/// # Safety
/// `key` and `value` must be NUL-terminated strings valid for the call, or
/// NULL; `config` must be a live handle from `chorus_config_new` or NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn chorus_config_set(
    config: *mut ChorusConfig,
    key: *const c_char,
    value: *const c_char,
) -> ChorusStatus {
    let Some(inner) = config_mut(config) else {
        return ChorusStatus::NullArgument;
    };
    if key.is_null() || value.is_null() {
        return ChorusStatus::NullArgument;
    }
    let (Ok(key), Ok(value)) = (
        unsafe { CStr::from_ptr(key) }.to_str(),
        unsafe { CStr::from_ptr(value) }.to_str(),
    ) else {
        return ChorusStatus::InvalidArgument;
    };

    match inner.setup.engine.apply_kv(key, value, 0) {
        Ok(true) => return ChorusStatus::Ok,
        Ok(false) => {}
        Err(_) => return ChorusStatus::InvalidArgument,
    }
    match inner.setup.model.apply_kv(key, value, 0) {
        Ok(true) => return ChorusStatus::Ok,
        Ok(false) => {}
        Err(_) => return ChorusStatus::InvalidArgument,
    }
    if key == "prompt" {
        return match value.parse() {
            Ok(v) => {
                inner.setup.prompt = v;
                ChorusStatus::Ok
            }
            Err(_) => ChorusStatus::InvalidArgument,
        };
    }
    ChorusStatus::InvalidArgument
}

/// Run a session on the simulated model. `drafting = false` runs the
/// one-token-per-step baseline; under the same seed both produce identical
/// token sequences. On success `*out_trace` owns the trace; free it with
/// `chorus_trace_free`.
///
/// # Safety
/// `config` must be a live handle or NULL; `out_trace` must point to
/// writable storage for one pointer, or be NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn chorus_run(
    config: *const ChorusConfig,
    drafting: bool,
    out_trace: *mut *mut ChorusTrace,
) -> ChorusStatus {
    let Some(inner) = config_ref(config) else {
        return ChorusStatus::NullArgument;
    };
    if out_trace.is_null() {
        return ChorusStatus::NullArgument;
    }
    let Ok(model) = SimModel::new(inner.setup.model.clone()) else {
        return ChorusStatus::InvalidConfig;
    };
    let run = if drafting { run_session } else { run_vanilla };
    match run(&inner.setup.engine, &model, inner.setup.prompt) {
        Ok(trace) => {
            let boxed = Box::into_raw(Box::new(TraceInner { trace })) as *mut ChorusTrace;
            unsafe { out_trace.write(boxed) };
            ChorusStatus::Ok
        }
        Err(_) => ChorusStatus::InvalidConfig,
    }
}

#[unsafe(no_mangle)]
pub extern "C" fn chorus_trace_free(trace: *mut ChorusTrace) {
    if !trace.is_null() {
        drop(unsafe { Box::from_raw(trace as *mut TraceInner) });
    }
}

/// Number of paths in the trace; 0 for NULL.
#[unsafe(no_mangle)]
pub extern "C" fn chorus_trace_num_paths(trace: *const ChorusTrace) -> u32 {
    trace_ref(trace).map_or(0, |t| t.trace.paths.len() as u32)
}

/// Number of decode steps recorded; 0 for NULL.
#[unsafe(no_mangle)]
pub extern "C" fn chorus_trace_step_count(trace: *const ChorusTrace) -> u64 {
    trace_ref(trace).map_or(0, |t| t.trace.steps.len() as u64)
}

/// Mean accepted draft length per step (the accept-length metric).
#[unsafe(no_mangle)]
pub extern "C" fn chorus_trace_mean_accept_len(trace: *const ChorusTrace) -> f64 {
    trace_ref(trace).map_or(0.0, |t| t.trace.mean_accept_len())
}

/// Mean tokens emitted per step.
#[unsafe(no_mangle)]
pub extern "C" fn chorus_trace_tokens_per_step(trace: *const ChorusTrace) -> f64 {
    trace_ref(trace).map_or(0.0, |t| t.trace.tokens_per_step())
}

/// Token count of one path.
///
/// # Safety
/// `trace` must be a live handle or NULL; `out_len` must be writable or NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn chorus_trace_path_len(
    trace: *const ChorusTrace,
    path: u32,
    out_len: *mut u64,
) -> ChorusStatus {
    let Some(inner) = trace_ref(trace) else {
        return ChorusStatus::NullArgument;
    };
    if out_len.is_null() {
        return ChorusStatus::NullArgument;
    }
    match inner.trace.paths.get(path as usize) {
        Some(p) => {
            unsafe { out_len.write(p.len() as u64) };
            ChorusStatus::Ok
        }
        None => ChorusStatus::OutOfRange,
    }
}

/// Token `index` of path `path`.
///
/// # Safety
/// `trace` must be a live handle or NULL; `out_token` must be writable or
/// NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn chorus_trace_path_token(
    trace: *const ChorusTrace,
    path: u32,
    index: u64,
    out_token: *mut u32,
) -> ChorusStatus {
    let Some(inner) = trace_ref(trace) else {
        return ChorusStatus::NullArgument;
    };
    if out_token.is_null() {
        return ChorusStatus::NullArgument;
    }
    let Some(p) = inner.trace.paths.get(path as usize) else {
        return ChorusStatus::OutOfRange;
    };
    match p.records().get(index as usize) {
        Some(record) => {
            unsafe { out_token.write(record.token.0) };
            ChorusStatus::Ok
        }
        None => ChorusStatus::OutOfRange,
    }
}

/// Majority-vote answer label of the session, when one exists.
///
/// # Safety
/// `trace` must be a live handle or NULL; `out_answer` must be writable or
/// NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn chorus_trace_answer(
    trace: *const ChorusTrace,
    out_answer: *mut u32,
) -> ChorusStatus {
    let Some(inner) = trace_ref(trace) else {
        return ChorusStatus::NullArgument;
    };
    if out_answer.is_null() {
        return ChorusStatus::NullArgument;
    }
    match inner.trace.answer {
        Some(token) => {
            unsafe { out_answer.write(token.0) };
            ChorusStatus::Ok
        }
        None => ChorusStatus::NoValue,
    }
}

/// Write the trace in the line-delimited JSON schema to `path`.
///
/// # Safety
/// `trace` must be a live handle or NULL; `path` must be a NUL-terminated
/// string valid for the call, or NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn chorus_trace_write_jsonl(
    trace: *const ChorusTrace,
    path: *const c_char,
) -> ChorusStatus {
    let Some(inner) = trace_ref(trace) else {
        return ChorusStatus::NullArgument;
    };
    if path.is_null() {
        return ChorusStatus::NullArgument;
    }
    let Ok(path) = unsafe { CStr::from_ptr(path) }.to_str() else {
        return ChorusStatus::InvalidArgument;
    };
    let Ok(file) = std::fs::File::create(path) else {
        return ChorusStatus::IoError;
    };
    match inner.trace.write_jsonl(std::io::BufWriter::new(file)) {
        Ok(()) => ChorusStatus::Ok,
        Err(_) => ChorusStatus::IoError,
    }
}

/// Static description of a status code.
#[unsafe(no_mangle)]
pub extern "C" fn chorus_status_message(status: ChorusStatus) -> *const c_char {
    let message: &'static CStr = match status {
        ChorusStatus::Ok => c"ok",
        ChorusStatus::NullArgument => c"null argument",
        ChorusStatus::InvalidArgument => c"unknown key or unparsable value",
        ChorusStatus::InvalidConfig => c"configuration violates an invariant",
        ChorusStatus::OutOfRange => c"index out of range",
        ChorusStatus::NoValue => c"no value available",
        ChorusStatus::IoError => c"io error",
    };
    message.as_ptr()
}
