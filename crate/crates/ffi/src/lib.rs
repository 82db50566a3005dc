//! C ABI over the `ssfind` crate.
//!
//! Graphs, codes and decode results are opaque handles created by the
//! library and released with the matching `*_free` function. Every fallible
//! call returns an [`SsfStatus`]; on failure the message is kept per thread
//! and can be copied out with [`ssf_last_error`].
//!
//! Qubits and checks cross the boundary as flat indices. Qubit `(ν, v)` of
//! the VV block is `ν·n + v`, qubit `(c, ζ)` of the CC block is
//! `n² + c·m + ζ`, and check `(ν, ζ)` is `ν·m + ζ`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ssfind::erasure::{erase_decode_quantum, DecodeStatus, DecodeVerdict};
use ssfind::graph::{gen_biregular, BipartiteGraph};
use ssfind::harness::radius_table;
use ssfind::hgp::{CheckSet, HgpCode, QubitSet};
use ssfind::ssfind::{ssfind, DecoderConfig, SsfindOutcome};
use ssfind::{io, Rational};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Graph = 4,
    Decode = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Outcome of the erasure solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsfVerdict {
    Success = 0,
    NoSolution = 1,
    AmbiguousLogical = 2,
}

impl From<DecodeStatus> for SsfVerdict {
    fn from(s: DecodeStatus) -> Self {
        match s {
            DecodeStatus::Success => SsfVerdict::Success,
            DecodeStatus::NoSolution => SsfVerdict::NoSolution,
            DecodeStatus::AmbiguousLogical => SsfVerdict::AmbiguousLogical,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SsfCodeParams {
    pub n: usize,
    pub m: usize,
    pub delta_v: usize,
    pub delta_c: usize,
    pub num_qubits: usize,
    pub num_checks: usize,
    pub num_generators: usize,
    pub logical_qubits: usize,
}

pub struct SsfGraph(BipartiteGraph);

pub struct SsfCode(HgpCode);

pub struct SsfDecodeResult {
    outcome: SsfindOutcome,
    verdict: DecodeVerdict,
    envelope: Vec<usize>,
    correction: Vec<usize>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: SsfStatus, msg: impl Into<String>) -> SsfStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SsfStatus) -> SsfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == SsfStatus::Ok {
                set_error("");
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SsfStatus::Panic, msg)
        }
    }
}

fn boxed<T>(out: *mut *mut T, value: T) {
    // SAFETY: callers check `out` for null before building `value`.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Reads `len` indices from `data`; a null pointer is accepted when `len == 0`.
unsafe fn slice<'a>(data: *const usize, len: usize) -> Option<&'a [usize]> {
    if len == 0 {
        Some(&[])
    } else if data.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(data, len))
    }
}

fn qubits_from(code: &HgpCode, idx: &[usize]) -> Result<QubitSet, String> {
    let mut s = QubitSet::new();
    for &i in idx {
        if i >= code.num_qubits() {
            return Err(format!("qubit index {i} out of range (N={})", code.num_qubits()));
        }
        s.toggle(code.qubit_at(i));
    }
    Ok(s)
}

fn checks_from(code: &HgpCode, idx: &[usize]) -> Result<CheckSet, String> {
    let mut s = CheckSet::new();
    for &i in idx {
        if i >= code.num_checks() {
            return Err(format!("check index {i} out of range ({} checks)", code.num_checks()));
        }
        s.insert(code.check_at(i));
    }
    Ok(s)
}

fn epsilon(num: i64, den: i64) -> Result<Rational, String> {
    if den <= 0 || num < 0 {
        return Err(format!("epsilon must be a non-negative fraction, got {num}/{den}"));
    }
    Ok(Rational::new(num, den))
}

/// Copies `src` into `buf` (capacity `cap`) and stores the full length in
/// `out_len`. Returns `BufferTooSmall` when it does not fit; `out_len` is
/// still set so the caller can retry.
unsafe fn copy_out(src: &[usize], buf: *mut usize, cap: usize, out_len: *mut usize) -> SsfStatus {
    if out_len.is_null() {
        return fail(SsfStatus::NullPointer, "out_len is null");
    }
    *out_len = src.len();
    if src.len() > cap {
        return fail(SsfStatus::BufferTooSmall, format!("need {} entries, buffer holds {cap}", src.len()));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return fail(SsfStatus::NullPointer, "buffer is null");
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    SsfStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ssf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `cap`) and returns the untruncated length.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ssf_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = e.len().min(cap - 1);
            ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Samples a random biregular graph with `n` left vertices.
///
/// # Safety
/// `out` must be a valid pointer to write a handle into.
#[no_mangle]
pub unsafe extern "C" fn ssf_graph_generate(n: usize, delta_v: usize, delta_c: usize, seed: u64, out: *mut *mut SsfGraph) -> SsfStatus {
    guard(|| {
        if out.is_null() {
            return fail(SsfStatus::NullPointer, "out is null");
        }
        match gen_biregular(n, delta_v, delta_c, seed) {
            Ok(g) => {
                boxed(out, SsfGraph(g));
                SsfStatus::Ok
            }
            Err(e) => fail(SsfStatus::Graph, e.to_string()),
        }
    })
}

/// Parses a graph in the text format written by [`ssf_graph_write`].
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ssf_graph_parse(text: *const c_char, out: *mut *mut SsfGraph) -> SsfStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(SsfStatus::NullPointer, "text or out is null");
        }
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(SsfStatus::Parse, "graph text is not UTF-8");
        };
        match io::parse_graph(text) {
            Ok(g) => {
                boxed(out, SsfGraph(g));
                SsfStatus::Ok
            }
            Err(e) => fail(SsfStatus::Parse, e.to_string()),
        }
    })
}

/// Writes the graph's text form into `buf` with a trailing NUL. `out_len`
/// receives the text length without the NUL.
///
/// # Safety
/// `graph` must be a live handle; `buf` must hold `cap` bytes or be null
/// when `cap == 0`; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ssf_graph_write(graph: *const SsfGraph, buf: *mut c_char, cap: usize, out_len: *mut usize) -> SsfStatus {
    guard(|| {
        let (Some(g), false) = (graph.as_ref(), out_len.is_null()) else {
            return fail(SsfStatus::NullPointer, "graph or out_len is null");
        };
        let text = io::write_graph(&g.0);
        *out_len = text.len();
        if text.len() + 1 > cap {
            return fail(SsfStatus::BufferTooSmall, format!("need {} bytes, buffer holds {cap}", text.len() + 1));
        }
        if buf.is_null() {
            return fail(SsfStatus::NullPointer, "buffer is null");
        }
        ptr::copy_nonoverlapping(text.as_ptr().cast::<c_char>(), buf, text.len());
        *buf.add(text.len()) = 0;
        SsfStatus::Ok
    })
}

/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ssf_graph_free(graph: *mut SsfGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Builds the hypergraph product code of `graph`. The graph handle stays
/// owned by the caller.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ssf_code_new(graph: *const SsfGraph, out: *mut *mut SsfCode) -> SsfStatus {
    guard(|| {
        let (Some(g), false) = (graph.as_ref(), out.is_null()) else {
            return fail(SsfStatus::NullPointer, "graph or out is null");
        };
        boxed(out, SsfCode(HgpCode::new(g.0.clone())));
        SsfStatus::Ok
    })
}

/// # Safety
/// `code` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ssf_code_free(code: *mut SsfCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// # Safety
/// `code` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ssf_code_params(code: *const SsfCode, out: *mut SsfCodeParams) -> SsfStatus {
    guard(|| {
        let (Some(c), false) = (code.as_ref(), out.is_null()) else {
            return fail(SsfStatus::NullPointer, "code or out is null");
        };
        let c = &c.0;
        *out = SsfCodeParams {
            n: c.n(),
            m: c.m(),
            delta_v: c.delta_v(),
            delta_c: c.delta_c(),
            num_qubits: c.num_qubits(),
            num_checks: c.num_checks(),
            num_generators: c.num_generators(),
            logical_qubits: c.k(),
        };
        SsfStatus::Ok
    })
}

/// Syndrome of a qubit set, as sorted check indices. Repeated qubits cancel.
///
/// # Safety
/// `code` must be a live handle, `qubits` must hold `len` entries (or be
/// null with `len == 0`), `out` must hold `cap` entries and `out_len` must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn ssf_code_syndrome(
    code: *const SsfCode,
    qubits: *const usize,
    len: usize,
    out: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> SsfStatus {
    guard(|| {
        let Some(c) = code.as_ref() else {
            return fail(SsfStatus::NullPointer, "code is null");
        };
        let Some(idx) = slice(qubits, len) else {
            return fail(SsfStatus::NullPointer, "qubits is null");
        };
        let e = match qubits_from(&c.0, idx) {
            Ok(e) => e,
            Err(m) => return fail(SsfStatus::InvalidArgument, m),
        };
        let s: Vec<usize> = c.0.syndrome(&e).iter().map(|k| c.0.check_index(k)).collect();
        copy_out(&s, out, cap, out_len)
    })
}

fn decode(code: &HgpCode, sigma: &CheckSet, eps: Rational, error: Option<&QubitSet>) -> Result<SsfDecodeResult, SsfStatus> {
    let outcome = ssfind(code, sigma, &DecoderConfig::new(eps)).map_err(|e| fail(SsfStatus::Decode, e.to_string()))?;
    let mut verdict = erase_decode_quantum(code, sigma, &outcome.envelope).map_err(|e| fail(SsfStatus::Decode, e.to_string()))?;
    if let Some(e) = error {
        verdict = verdict.judge(code, e);
    }
    Ok(SsfDecodeResult {
        envelope: outcome.envelope.iter().map(|q| code.qubit_index(q)).collect(),
        correction: verdict.correction.iter().map(|q| code.qubit_index(q)).collect(),
        outcome,
        verdict,
    })
}

/// Decodes a syndrome given as check indices with `ε = eps_num/eps_den`.
///
/// # Safety
/// `code` must be a live handle, `checks` must hold `len` entries (or be
/// null with `len == 0`) and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ssf_decode_syndrome(
    code: *const SsfCode,
    checks: *const usize,
    len: usize,
    eps_num: i64,
    eps_den: i64,
    out: *mut *mut SsfDecodeResult,
) -> SsfStatus {
    guard(|| {
        let (Some(c), false) = (code.as_ref(), out.is_null()) else {
            return fail(SsfStatus::NullPointer, "code or out is null");
        };
        let Some(idx) = slice(checks, len) else {
            return fail(SsfStatus::NullPointer, "checks is null");
        };
        let (sigma, eps) = match (checks_from(&c.0, idx), epsilon(eps_num, eps_den)) {
            (Ok(s), Ok(e)) => (s, e),
            (Err(m), _) | (_, Err(m)) => return fail(SsfStatus::InvalidArgument, m),
        };
        match decode(&c.0, &sigma, eps, None) {
            Ok(r) => {
                boxed(out, r);
                SsfStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Decodes the syndrome of a known error and also judges the correction
/// against it (see [`ssf_result_coset_equivalent`]).
///
/// # Safety
/// As for [`ssf_decode_syndrome`], with `qubits` holding `len` entries.
#[no_mangle]
pub unsafe extern "C" fn ssf_decode_error(
    code: *const SsfCode,
    qubits: *const usize,
    len: usize,
    eps_num: i64,
    eps_den: i64,
    out: *mut *mut SsfDecodeResult,
) -> SsfStatus {
    guard(|| {
        let (Some(c), false) = (code.as_ref(), out.is_null()) else {
            return fail(SsfStatus::NullPointer, "code or out is null");
        };
        let Some(idx) = slice(qubits, len) else {
            return fail(SsfStatus::NullPointer, "qubits is null");
        };
        let (error, eps) = match (qubits_from(&c.0, idx), epsilon(eps_num, eps_den)) {
            (Ok(e), Ok(x)) => (e, x),
            (Err(m), _) | (_, Err(m)) => return fail(SsfStatus::InvalidArgument, m),
        };
        let sigma = c.0.syndrome(&error);
        match decode(&c.0, &sigma, eps, Some(&error)) {
            Ok(r) => {
                boxed(out, r);
                SsfStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ssf_result_free(result: *mut SsfDecodeResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ssf_result_verdict(result: *const SsfDecodeResult, out: *mut SsfVerdict) -> SsfStatus {
    guard(|| {
        let (Some(r), false) = (result.as_ref(), out.is_null()) else {
            return fail(SsfStatus::NullPointer, "result or out is null");
        };
        *out = r.verdict.status.into();
        SsfStatus::Ok
    })
}

/// 1 if the correction matches the true error up to stabilizers, 0 if not,
/// -1 when no error was supplied or `result` is null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssf_result_coset_equivalent(result: *const SsfDecodeResult) -> i32 {
    match result.as_ref().and_then(|r| r.verdict.coset_equivalent) {
        Some(true) => 1,
        Some(false) => 0,
        None => -1,
    }
}

/// Number of decoder iterations, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssf_result_iterations(result: *const SsfDecodeResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.trace.len())
}

/// Envelope qubit indices in ascending order.
///
/// # Safety
/// `result` must be a live handle, `buf` must hold `cap` entries and
/// `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ssf_result_envelope(result: *const SsfDecodeResult, buf: *mut usize, cap: usize, out_len: *mut usize) -> SsfStatus {
    guard(|| match result.as_ref() {
        Some(r) => copy_out(&r.envelope, buf, cap, out_len),
        None => fail(SsfStatus::NullPointer, "result is null"),
    })
}

/// Correction qubit indices in ascending order.
///
/// # Safety
/// As for [`ssf_result_envelope`].
#[no_mangle]
pub unsafe extern "C" fn ssf_result_correction(result: *const SsfDecodeResult, buf: *mut usize, cap: usize, out_len: *mut usize) -> SsfStatus {
    guard(|| match result.as_ref() {
        Some(r) => copy_out(&r.correction, buf, cap, out_len),
        None => fail(SsfStatus::NullPointer, "result is null"),
    })
}

/// Decoding-radius coefficients (multiples of the distance) for
/// `r = r_num/r_den`, `ε = eps_num/eps_den` and `delta_c`, in the order
/// LTZ small-set flip, Grospellier small-set flip, ssfind. `out` receives
/// three doubles.
///
/// # Safety
/// `out` must point to three writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ssf_radius_coefficients(r_num: i64, r_den: i64, eps_num: i64, eps_den: i64, delta_c: usize, out: *mut f64) -> SsfStatus {
    guard(|| {
        if out.is_null() {
            return fail(SsfStatus::NullPointer, "out is null");
        }
        if r_den <= 0 {
            return fail(SsfStatus::InvalidArgument, "r denominator must be positive");
        }
        let eps = match epsilon(eps_num, eps_den) {
            Ok(e) => e,
            Err(m) => return fail(SsfStatus::InvalidArgument, m),
        };
        match radius_table(Rational::new(r_num, r_den), eps, delta_c) {
            Ok(rows) => {
                for (i, row) in rows.iter().enumerate() {
                    *out.add(i) = row.coefficient;
                }
                SsfStatus::Ok
            }
            Err(e) => fail(SsfStatus::InvalidArgument, e.to_string()),
        }
    })
}
