// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! C ABI over `asd-core`.
//!
//! Graphs, configurations and decompositions are opaque handles created
//! and released through this API. Every fallible call returns an
//! [`AsdStatus`]; the message of the most recent failure on the calling
//! thread is available from [`asd_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use asd_core::config::{EngineConfig, Profile};
use asd_core::separator::{separate, SeparatorConfig};
use asd_core::verifier::{verify_decomposition, Verdict};
use asd_core::{AsdError, Decomposition, Graph};

/// Status code of an API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsdStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    InvalidGraph = 3,
    Infeasible = 4,
    Engine = 5,
    Utf8 = 6,
    Panic = 7,
}

/// Verification outcome written by [`asd_decomposition_verify`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsdVerdict {
    Valid = 0,
    Invalid = 1,
    Undecided = 2,
}

/// Opaque graph handle.
pub struct AsdGraph(Graph);

/// Opaque engine configuration handle.
pub struct AsdConfig(EngineConfig);

/// Opaque decomposition handle; owns its JSON rendering.
pub struct AsdDecomposition {
    inner: Decomposition,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &AsdError) -> AsdStatus {
    match err.root() {
        AsdError::Parse { .. } | AsdError::Json(_) => AsdStatus::Parse,
        AsdError::InvalidGraph(_) => AsdStatus::InvalidGraph,
        AsdError::Precondition { .. } | AsdError::Infeasible { .. } | AsdError::Unsupported { .. } => {
            AsdStatus::Infeasible
        }
        _ => AsdStatus::Engine,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (AsdStatus, String)>) -> AsdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AsdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AsdStatus::Panic
        }
    }
}

fn core_err(err: AsdError) -> (AsdStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (AsdStatus, String) {
    (AsdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, (AsdStatus, String)> {
    if s.is_null() {
        return Err(null("string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| (AsdStatus::Utf8, format!("invalid UTF-8: {e}")))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn asd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses an edge list (vertex count line, then `u v` lines).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn asd_graph_parse(text: *const c_char, out: *mut *mut AsdGraph) -> AsdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = asd_core::parse_graph(read_str(text)?).map_err(core_err)?;
        *out = Box::into_raw(Box::new(AsdGraph(g)));
        Ok(())
    })
}

/// Builds a graph on `n` vertices from `edge_count` pairs stored as
/// `pairs[2i], pairs[2i+1]`.
///
/// # Safety
/// `pairs` must point to `2 * edge_count` readable values (or be null when
/// `edge_count` is 0), and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asd_graph_from_edges(
    n: usize,
    pairs: *const usize,
    edge_count: usize,
    out: *mut *mut AsdGraph,
) -> AsdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if pairs.is_null() && edge_count > 0 {
            return Err(null("pairs"));
        }
        let flat = if edge_count == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(pairs, 2 * edge_count)
        };
        let g = Graph::new(n, flat.chunks_exact(2).map(|p| (p[0], p[1]))).map_err(core_err)?;
        *out = Box::into_raw(Box::new(AsdGraph(g)));
        Ok(())
    })
}

/// Number of edges, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn asd_graph_edge_count(g: *const AsdGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.edge_count())
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn asd_graph_free(g: *mut AsdGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// New configuration for profile 0 (desk) or 1 (paper); null otherwise.
#[no_mangle]
pub extern "C" fn asd_config_new(profile: u32) -> *mut AsdConfig {
    let profile = match profile {
        0 => Profile::Desk,
        1 => Profile::Paper,
        _ => {
            set_error(format!("unknown profile {profile}"));
            return ptr::null_mut();
        }
    };
    Box::into_raw(Box::new(AsdConfig(EngineConfig::for_profile(profile))))
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn asd_config_set_seed(cfg: *mut AsdConfig, seed: u64) -> AsdStatus {
    guard(|| {
        cfg.as_mut().ok_or_else(|| null("cfg"))?.0.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn asd_config_set_fallback_m(cfg: *mut AsdConfig, fallback_m: usize) -> AsdStatus {
    guard(|| {
        cfg.as_mut().ok_or_else(|| null("cfg"))?.0.fallback_m = fallback_m;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn asd_config_free(cfg: *mut AsdConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Computes a verified ascending decomposition of `g`. A null `cfg` means
/// the desk defaults.
///
/// # Safety
/// `g` must be live, `cfg` null or live, and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn asd_decompose(
    g: *const AsdGraph,
    cfg: *const AsdConfig,
    out: *mut *mut AsdDecomposition,
) -> AsdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        let cfg = cfg.as_ref().map_or_else(EngineConfig::desk, |c| c.0.clone());
        let d = asd_core::engine::asd(&g.0, &cfg).map_err(core_err)?;
        let json = CString::new(d.to_json()).expect("JSON has no NUL bytes");
        *out = Box::into_raw(Box::new(AsdDecomposition { inner: d, json }));
        Ok(())
    })
}

/// Number of parts, or 0 for a null handle.
///
/// # Safety
/// `d` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn asd_decomposition_part_count(d: *const AsdDecomposition) -> usize {
    d.as_ref().map_or(0, |d| d.inner.parts.len())
}

/// Edge count of part `index`, or 0 when out of range.
///
/// # Safety
/// `d` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn asd_decomposition_part_size(d: *const AsdDecomposition, index: usize) -> usize {
    d.as_ref()
        .and_then(|d| d.inner.parts.get(index))
        .map_or(0, Graph::edge_count)
}

/// JSON form of the decomposition, owned by the handle.
///
/// # Safety
/// `d` must be null or live; the string dies with the handle.
#[no_mangle]
pub unsafe extern "C" fn asd_decomposition_json(d: *const AsdDecomposition) -> *const c_char {
    d.as_ref().map_or(ptr::null(), |d| d.json.as_ptr())
}

/// Checks `d` against `g` and writes the verdict.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn asd_decomposition_verify(
    g: *const AsdGraph,
    d: *const AsdDecomposition,
    verdict: *mut AsdVerdict,
) -> AsdStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        let d = d.as_ref().ok_or_else(|| null("decomposition"))?;
        let v = verdict.as_mut().ok_or_else(|| null("verdict"))?;
        *v = match verify_decomposition(&g.0, &d.inner).verdict() {
            Verdict::Ok => AsdVerdict::Valid,
            Verdict::Failed => AsdVerdict::Invalid,
            Verdict::Undecided => AsdVerdict::Undecided,
        };
        Ok(())
    })
}

/// # Safety
/// `d` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn asd_decomposition_free(d: *mut AsdDecomposition) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Separates `1..=m` into parts with the given sums and writes the result
/// as JSON to `*out`, to be released with [`asd_string_free`].
///
/// # Safety
/// `targets` must point to `len` readable values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asd_separate_json(
    m: usize,
    targets: *const usize,
    len: usize,
    out: *mut *mut c_char,
) -> AsdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if targets.is_null() && len > 0 {
            return Err(null("targets"));
        }
        let t = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(targets, len)
        };
        let res = separate(m, t, &SeparatorConfig::default()).map_err(core_err)?;
        let json = serde_json::to_string(&res).map_err(|e| (AsdStatus::Engine, e.to_string()))?;
        *out = CString::new(json).expect("JSON has no NUL bytes").into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn asd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
