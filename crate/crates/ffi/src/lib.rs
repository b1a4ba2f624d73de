//! C interface: opaque model and word-vector handles, clustering, metrics,
//! labeling and the full pipeline.
//!
//! Every fallible function returns a [`CureStatus`]. On failure the message
//! is kept per thread and read back with [`cure_last_error`]. Strings handed
//! out by the library are released with [`cure_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use cure::cluster::{cut, hac};
use cure::config::load_config;
use cure::corpus::{PairGroup, PairKey};
use cure::eval::rand_index;
use cure::label::{wvs_label, CandidateSet};
use cure::model::Model;
use cure::pipeline::run_pipeline;
use cure::ssp::SspTriple;
use cure::vocab::{load_pretrained, PretrainedVectors};
use cure::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CureStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Bad input, configuration, or a missing file.
    InvalidInput = 2,
    /// I/O or internal failure.
    Runtime = 3,
    /// A panic was caught at the boundary.
    Panic = 4,
}

/// A trained model loaded from a checkpoint.
pub struct CureModel {
    inner: Model,
}

/// A pretrained word-vector table.
pub struct CureVectors {
    inner: PretrainedVectors,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

enum Failure {
    Null(&'static str),
    Input(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CureStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CureStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            CureStatus::NullArgument
        }
        Ok(Err(Failure::Input(msg))) => {
            set_error(msg);
            CureStatus::InvalidInput
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            if e.exit_code() == 2 {
                CureStatus::InvalidInput
            } else {
                CureStatus::Runtime
            }
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CureStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| Failure::Input(format!("{what} is not valid UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn cure_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Release a string returned by the library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cure_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Load a checkpoint and its metadata sidecar.
#[no_mangle]
pub unsafe extern "C" fn cure_model_load(checkpoint: *const c_char, model_out: *mut *mut CureModel) -> CureStatus {
    guard(|| {
        let path = unsafe { text(checkpoint, "checkpoint") }?;
        let slot = unsafe { out(model_out, "model_out") }?;
        let inner = Model::load(&PathBuf::from(path))?;
        *slot = Box::into_raw(Box::new(CureModel { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cure_model_free(model: *mut CureModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Length of the relation vectors this model produces; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn cure_model_relation_dim(model: *const CureModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.inner.config.relation_dim())
}

/// Relation vector of one entity pair. `paths_json` is a JSON array of
/// `{"words": [...], "deps": [...], "poss": [...]}` objects, one per
/// sentence; `out_vec` receives `out_len` values, which must equal
/// `cure_model_relation_dim`.
#[no_mangle]
pub unsafe extern "C" fn cure_model_encode(
    model: *const CureModel,
    paths_json: *const c_char,
    out_vec: *mut f64,
    out_len: usize,
) -> CureStatus {
    guard(|| {
        let model = &unsafe { model.as_ref() }.ok_or(Failure::Null("model"))?.inner;
        let json = unsafe { text(paths_json, "paths_json") }?;
        let paths: Vec<SspTriple> =
            serde_json::from_str(json).map_err(|e| Failure::Input(format!("paths_json: {e}")))?;
        if paths.is_empty() {
            return Err(Failure::Input("paths_json has no paths".into()));
        }
        let dim = model.config.relation_dim();
        if out_len != dim {
            return Err(Failure::Input(format!("output length {out_len}, relation dimension {dim}")));
        }
        if out_vec.is_null() {
            return Err(Failure::Null("out"));
        }
        let group = PairGroup { pair: PairKey(String::new(), String::new()), paths };
        let v = model.infer_relation_vector(&group)?;
        unsafe { std::slice::from_raw_parts_mut(out_vec, dim) }.copy_from_slice(v.as_slice());
        Ok(())
    })
}

/// Load a word-vector text file.
#[no_mangle]
pub unsafe extern "C" fn cure_vectors_load(path: *const c_char, vectors_out: *mut *mut CureVectors) -> CureStatus {
    guard(|| {
        let path = unsafe { text(path, "path") }?;
        let slot = unsafe { out(vectors_out, "vectors_out") }?;
        let inner = load_pretrained(path)?;
        *slot = Box::into_raw(Box::new(CureVectors { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cure_vectors_free(vectors: *mut CureVectors) {
    if !vectors.is_null() {
        drop(unsafe { Box::from_raw(vectors) });
    }
}

/// Vector dimension; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn cure_vectors_dim(vectors: *const CureVectors) -> usize {
    unsafe { vectors.as_ref() }.map_or(0, |v| v.inner.dim())
}

/// Average-linkage clustering of `n` row-major vectors of length `dim` into
/// `k` clusters. `assignments` receives one cluster id per row; ids are
/// ordered by cluster size, largest first.
#[no_mangle]
pub unsafe extern "C" fn cure_cluster(
    data: *const f64,
    n: usize,
    dim: usize,
    k: usize,
    assignments: *mut usize,
) -> CureStatus {
    guard(|| {
        if dim == 0 {
            return Err(Failure::Input("dimension must be positive".into()));
        }
        let flat = unsafe { slice(data, n * dim, "data") }?;
        if assignments.is_null() {
            return Err(Failure::Null("assignments"));
        }
        let rows: Vec<Vec<f64>> = flat.chunks(dim).map(<[f64]>::to_vec).collect();
        let clusters = cut(&hac(&rows)?, &rows, k)?;
        let outv = unsafe { std::slice::from_raw_parts_mut(assignments, n) };
        for c in clusters {
            for m in c.members {
                outv[m] = c.id;
            }
        }
        Ok(())
    })
}

/// Rand index between two labelings of the same `n` items.
#[no_mangle]
pub unsafe extern "C" fn cure_rand_index(
    predicted: *const usize,
    gold: *const usize,
    n: usize,
    result: *mut f64,
) -> CureStatus {
    guard(|| {
        let a = unsafe { slice(predicted, n, "predicted") }?;
        let b = unsafe { slice(gold, n, "gold") }?;
        let slot = unsafe { out(result, "result") }?;
        *slot = rand_index(a, b)?;
        Ok(())
    })
}

/// Word-vector-similarity label for a candidate multiset of `n` words with
/// their counts. The chosen word goes to `label_out`; release it with
/// `cure_string_free`.
#[no_mangle]
pub unsafe extern "C" fn cure_wvs_label(
    vectors: *const CureVectors,
    words: *const *const c_char,
    counts: *const usize,
    n: usize,
    label_out: *mut *mut c_char,
) -> CureStatus {
    guard(|| {
        let table = &unsafe { vectors.as_ref() }.ok_or(Failure::Null("vectors"))?.inner;
        let ws = unsafe { slice(words, n, "words") }?;
        let cs = unsafe { slice(counts, n, "counts") }?;
        let slot = unsafe { out(label_out, "label_out") }?;
        let mut set = CandidateSet::new();
        for (&w, &c) in ws.iter().zip(cs) {
            if c == 0 {
                return Err(Failure::Input("counts must be positive".into()));
            }
            *set.entry(unsafe { text(w, "word") }?.to_string()).or_default() += c;
        }
        let label = wvs_label(&set, table)?;
        *slot = CString::new(label.chosen()).map_err(|e| Failure::Input(e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Run every stage. `config_path` may be null; `overrides` holds `n`
/// `key=value` strings applied after the file.
#[no_mangle]
pub unsafe extern "C" fn cure_run_pipeline(
    config_path: *const c_char,
    overrides: *const *const c_char,
    n: usize,
) -> CureStatus {
    guard(|| {
        let file = if config_path.is_null() {
            None
        } else {
            Some(PathBuf::from(unsafe { text(config_path, "config_path") }?))
        };
        let sets = unsafe { slice(overrides, n, "overrides") }?
            .iter()
            .map(|&s| unsafe { text(s, "override") }.map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;
        let cfg = load_config(file.as_deref(), &sets)?;
        run_pipeline(&cfg)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_a_status() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, CureStatus::Panic);
        let msg = unsafe { CStr::from_ptr(cure_last_error()) }.to_str().unwrap().to_string();
        assert_eq!(msg, "panic: boom");
    }

    #[test]
    fn success_clears_the_message() {
        set_error("old");
        assert_eq!(guard(|| Ok(())), CureStatus::Ok);
        assert!(cure_last_error().is_null());
    }

    #[test]
    fn interior_nul_is_replaced() {
        set_error("a\0b");
        assert_eq!(unsafe { CStr::from_ptr(cure_last_error()) }.to_str().unwrap(), "a b");
    }
}
