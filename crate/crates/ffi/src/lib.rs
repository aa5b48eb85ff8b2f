//! C interface to `mixmnl`.
//!
//! Objects live behind opaque handles that the caller frees with the matching
//! `*_free` function. Every fallible call returns an [`MnlStatus`]; on failure
//! [`mnl_last_error`] describes what went wrong on the calling thread. Panics
//! never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mixmnl::io::ResultsFile;
use mixmnl::pipeline::{learn_mixed_mnl, ComponentEstimates, LearnConfig};
use mixmnl::{ComparisonGraph, Error, MixedMnlModel, ObservationBatch};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GRAPH_RETRIES: usize = 100;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MnlStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

pub struct MnlGraph(ComparisonGraph);
pub struct MnlModel(MixedMnlModel);
pub struct MnlBatch(ObservationBatch);
pub struct MnlEstimate(ComponentEstimates);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> MnlStatus {
    if err.is_numerical() {
        MnlStatus::Numerical
    } else if matches!(err.root(), Error::Io(_)) {
        MnlStatus::Io
    } else {
        MnlStatus::Validation
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MnlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MnlStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer passed as {what}"));
            MnlStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            MnlStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn fill(dst: *mut f64, len: usize, src: &[f64]) -> Result<(), Fail> {
    if len != src.len() {
        return Err(Error::Invalid(format!(
            "output buffer holds {len} values, expected {}",
            src.len()
        ))
        .into());
    }
    if len > 0 {
        if dst.is_null() {
            return Err(Fail::Null("output buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dst, len);
    }
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(p))));
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mnl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mnl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Connected, non-bipartite G(n, p) graph with expected degree `dbar`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mnl_graph_erdos_renyi(
    n: usize,
    dbar: f64,
    seed: u64,
    out: *mut *mut MnlGraph,
) -> MnlStatus {
    guard(|| {
        let slot = unsafe { self::out(out, "out")? };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = ComparisonGraph::erdos_renyi(n, dbar, &mut rng, GRAPH_RETRIES)?;
        *slot = boxed(MnlGraph(g));
        Ok(())
    })
}

/// Graph from `num_edges` pairs stored flat as `[i0, j0, i1, j1, ...]`.
///
/// # Safety
/// `pairs` must point to `2 * num_edges` readable values and `out` to
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mnl_graph_from_edges(
    n: usize,
    pairs: *const usize,
    num_edges: usize,
    out: *mut *mut MnlGraph,
) -> MnlStatus {
    guard(|| {
        let slot = unsafe { self::out(out, "out")? };
        let flat = unsafe { slice(pairs, 2 * num_edges, "pairs")? };
        let edges: Vec<(usize, usize)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        *slot = boxed(MnlGraph(ComparisonGraph::from_edges(n, &edges)?));
        Ok(())
    })
}

/// Number of items, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn mnl_graph_num_items(g: *const MnlGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

/// Number of edges, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn mnl_graph_num_edges(g: *const MnlGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_pairs())
}

/// Spectral gap of the random-walk transition matrix.
///
/// # Safety
/// `g` must be a live graph handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mnl_graph_spectral_gap(g: *const MnlGraph, out: *mut f64) -> MnlStatus {
    guard(|| {
        let g = unsafe { borrow(g, "graph")? };
        *unsafe { self::out(out, "out")? } = g.0.diagnostics().spectral_gap;
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mnl_graph_free(g: *mut MnlGraph) {
    free(g)
}

/// Mixture of `r` components over `n` items. `weights` is row-major `r × n`.
/// Both weights and `q` are normalized.
///
/// # Safety
/// `weights` must hold `r * n` values, `q` must hold `r`, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mnl_model_new(
    n: usize,
    r: usize,
    weights: *const f64,
    q: *const f64,
    out: *mut *mut MnlModel,
) -> MnlStatus {
    guard(|| {
        let slot = unsafe { self::out(out, "out")? };
        let len = r
            .checked_mul(n)
            .ok_or_else(|| Error::Invalid("r * n overflows".into()))?;
        let w = unsafe { slice(weights, len, "weights")? };
        let q = unsafe { slice(q, r, "q")? };
        let rows = if n == 0 {
            vec![Vec::new(); r]
        } else {
            w.chunks_exact(n).map(<[f64]>::to_vec).collect()
        };
        *slot = boxed(MnlModel(MixedMnlModel::new(rows, q.to_vec())?));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mnl_model_free(m: *mut MnlModel) {
    free(m)
}

/// Draws `count` observations of `ell` distinct pairs each.
///
/// # Safety
/// `m` and `g` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mnl_batch_sample(
    m: *const MnlModel,
    g: *const MnlGraph,
    ell: usize,
    count: usize,
    seed: u64,
    out: *mut *mut MnlBatch,
) -> MnlStatus {
    guard(|| {
        let m = unsafe { borrow(m, "model")? };
        let g = unsafe { borrow(g, "graph")? };
        let slot = unsafe { self::out(out, "out")? };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        *slot = boxed(MnlBatch(m.0.sample_batch(&g.0, ell, count, &mut rng)?));
        Ok(())
    })
}

/// Number of observations, or 0 for a null handle.
///
/// # Safety
/// `b` must be null or a live batch handle.
#[no_mangle]
pub unsafe extern "C" fn mnl_batch_len(b: *const MnlBatch) -> usize {
    b.as_ref().map_or(0, |b| b.0.len())
}

/// # Safety
/// `b` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mnl_batch_free(b: *mut MnlBatch) {
    free(b)
}

/// Learns an `r`-component mixture. Pass 0 for `t1` or `t2` to use the
/// defaults.
///
/// # Safety
/// `b` and `g` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mnl_learn(
    b: *const MnlBatch,
    g: *const MnlGraph,
    r: usize,
    t1: usize,
    t2: usize,
    seed: u64,
    out: *mut *mut MnlEstimate,
) -> MnlStatus {
    guard(|| {
        let b = unsafe { borrow(b, "batch")? };
        let g = unsafe { borrow(g, "graph")? };
        let slot = unsafe { self::out(out, "out")? };
        let cfg = LearnConfig {
            r,
            t1: (t1 > 0).then_some(t1),
            t2: (t2 > 0).then_some(t2),
            seed,
        };
        *slot = boxed(MnlEstimate(learn_mixed_mnl(&b.0, &g.0, &cfg)?));
        Ok(())
    })
}

/// Number of components, or 0 for a null handle.
///
/// # Safety
/// `e` must be null or a live estimate handle.
#[no_mangle]
pub unsafe extern "C" fn mnl_estimate_num_components(e: *const MnlEstimate) -> usize {
    e.as_ref().map_or(0, |e| e.0.q_hat.len())
}

/// Copies the `r` estimated mixing probabilities into `dst`.
///
/// # Safety
/// `e` must be a live handle and `dst` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mnl_estimate_q(
    e: *const MnlEstimate,
    dst: *mut f64,
    len: usize,
) -> MnlStatus {
    guard(|| {
        let e = unsafe { borrow(e, "estimate")? };
        unsafe { fill(dst, len, &e.0.q_hat) }
    })
}

/// Copies the `n` weights of component `a` into `dst`.
///
/// # Safety
/// `e` must be a live handle and `dst` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mnl_estimate_weights(
    e: *const MnlEstimate,
    a: usize,
    dst: *mut f64,
    len: usize,
) -> MnlStatus {
    guard(|| {
        let e = unsafe { borrow(e, "estimate")? };
        let w = e.0.w_hat.get(a).ok_or_else(|| {
            Error::Invalid(format!(
                "component {a} out of range (r = {})",
                e.0.q_hat.len()
            ))
        })?;
        unsafe { fill(dst, len, w) }
    })
}

/// Estimates and diagnostics as JSON. Release with [`mnl_string_free`].
///
/// # Safety
/// `e` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mnl_estimate_to_json(
    e: *const MnlEstimate,
    out: *mut *mut c_char,
) -> MnlStatus {
    guard(|| {
        let e = unsafe { borrow(e, "estimate")? };
        let slot = unsafe { self::out(out, "out")? };
        let json = ResultsFile::new(&e.0, None, false).to_json()?;
        *slot = CString::new(json)
            .map_err(|_| Error::Invalid("JSON contained a NUL byte".into()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `e` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mnl_estimate_free(e: *mut MnlEstimate) {
    free(e)
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mnl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Stationary distribution of the comparison chain built from per-edge
/// expected outcomes `p` (one per edge, in edge order, clamped to [-1, 1]).
/// Pass 0 for `t2` to choose the iteration count adaptively.
///
/// # Safety
/// `g` must be a live handle, `p` must hold `num_edges` values and `dst`
/// must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn mnl_rank_centrality(
    g: *const MnlGraph,
    p: *const f64,
    num_edges: usize,
    t2: usize,
    dst: *mut f64,
    n: usize,
) -> MnlStatus {
    guard(|| {
        let g = unsafe { borrow(g, "graph")? };
        let p = unsafe { slice(p, num_edges, "p")? };
        let res = mixmnl::rank_centrality::rank_centrality(&g.0, p, (t2 > 0).then_some(t2))?;
        unsafe { fill(dst, n, &res.weights) }
    })
}

/// Copies the message of [`mnl_last_error`] into an owned Rust string.
/// Intended for tests and Rust callers of the C surface.
pub fn last_error_message() -> Option<String> {
    let p = mnl_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}
