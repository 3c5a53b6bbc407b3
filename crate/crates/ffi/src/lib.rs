//! C ABI over `stable-tree`.
//!
//! Every function returns an [`StStatus`]; results go through out-pointers.
//! Trees are opaque [`StTree`] handles released with [`st_tree_free`]. On a
//! non-zero status, [`st_last_error`] copies a message for the calling thread.
//! String outputs use the two-call pattern: pass a buffer and its capacity,
//! receive the needed size (including the terminating NUL) in `needed`, and
//! get `ST_BUFFER_TOO_SMALL` when it does not fit.
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the access described:
//! handles must come from this library and not be used after
//! [`st_tree_free`], strings must be NUL-terminated, and output buffers must
//! hold at least the stated number of elements. Nulls are reported as
//! `ST_NULL_POINTER` rather than dereferenced.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use stable_tree::chain::{normalized_chain, sample_trajectory, AlphaParam};
use stable_tree::distributions::{ml_moment, M1Sampler, MlParams};
use stable_tree::linebreaking::{grow, Algorithm, GrowthConfig};
use stable_tree::rng::RngStream;
use stable_tree::{Error, WeightedRTree};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StStatus {
    StOk = 0,
    StNullPointer = 1,
    StInvalidParameter = 2,
    StOutOfRange = 3,
    StUnsupported = 4,
    StDomain = 5,
    StStructure = 6,
    StState = 7,
    StParse = 8,
    StIo = 9,
    StBufferTooSmall = 10,
    StInvalidUtf8 = 11,
    StPanic = 12,
}

/// Opaque tree handle.
pub struct StTree {
    tree: WeightedRTree,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> StStatus {
    match e {
        Error::Parameter(_) => StStatus::StInvalidParameter,
        Error::Range(_) => StStatus::StOutOfRange,
        Error::Unsupported(_) => StStatus::StUnsupported,
        Error::Domain(_) => StStatus::StDomain,
        Error::Structure(_) => StStatus::StStructure,
        Error::State(_) => StStatus::StState,
        Error::Parse(_) => StStatus::StParse,
        Error::Io(_) => StStatus::StIo,
    }
}

struct Fail(StStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(StStatus::StNullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> StStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StStatus::StOk,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            StStatus::StPanic
        }
    }
}

unsafe fn tree_ref<'a>(tree: *const StTree) -> Result<&'a WeightedRTree, Fail> {
    tree.as_ref().map(|t| &t.tree).ok_or_else(|| null("tree"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Fail(StStatus::StInvalidUtf8, format!("{what} is not UTF-8")))
}

/// Copies `s` plus a NUL into `buf` if it fits; always reports the size.
unsafe fn write_string(s: &str, buf: *mut c_char, capacity: usize, needed: *mut usize) -> Result<(), Fail> {
    let n = s.len() + 1;
    if !needed.is_null() {
        needed.write(n);
    }
    if s.as_bytes().contains(&0) {
        return Err(Fail(StStatus::StStructure, "string contains NUL".into()));
    }
    if buf.is_null() || capacity < n {
        return Err(Fail(StStatus::StBufferTooSmall, format!("buffer needs {n} bytes")));
    }
    std::ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    buf.add(s.len()).write(0);
    Ok(())
}

/// Copies the calling thread's last error message (NUL-terminated,
/// truncated to `capacity`). Returns the full message length plus one.
#[no_mangle]
pub unsafe extern "C" fn st_last_error(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && capacity > 0 {
            let k = msg.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), k);
            buf.add(k).write(0);
        }
        msg.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn st_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Grows a tree with `leaves` leaves. `algorithm` is one of "I", "II",
/// "aldous", "normalized-I", "normalized-II", "marchal", "remy".
#[no_mangle]
pub unsafe extern "C" fn st_tree_grow(
    alpha: f64,
    leaves: usize,
    algorithm: *const c_char,
    seed: u64,
    out: *mut *mut StTree,
) -> StStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let alg: Algorithm = str_arg(algorithm, "algorithm")?.parse()?;
        let tree = grow(&GrowthConfig::new(alpha, leaves, alg, seed)?)?.tree;
        write_out(out, Box::into_raw(Box::new(StTree { tree })))
    })
}

/// Parses a Newick string into a new tree.
#[no_mangle]
pub unsafe extern "C" fn st_tree_from_newick(newick: *const c_char, out: *mut *mut StTree) -> StStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let tree = WeightedRTree::from_newick(str_arg(newick, "newick")?)?;
        write_out(out, Box::into_raw(Box::new(StTree { tree })))
    })
}

/// Parses a JSON tree document into a new tree.
#[no_mangle]
pub unsafe extern "C" fn st_tree_from_json(json: *const c_char, out: *mut *mut StTree) -> StStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let tree = WeightedRTree::from_json(str_arg(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(StTree { tree })))
    })
}

/// Releases a tree. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn st_tree_free(tree: *mut StTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

#[no_mangle]
pub unsafe extern "C" fn st_tree_leaf_count(tree: *const StTree, out: *mut usize) -> StStatus {
    guard(|| write_out(out, tree_ref(tree)?.leaf_count()))
}

#[no_mangle]
pub unsafe extern "C" fn st_tree_total_length(tree: *const StTree, out: *mut f64) -> StStatus {
    guard(|| write_out(out, tree_ref(tree)?.total_length()))
}

/// Distance between points `i` and `j`, where 0 is the root and `k ≥ 1` is
/// leaf `k`.
#[no_mangle]
pub unsafe extern "C" fn st_tree_distance(tree: *const StTree, i: usize, j: usize, out: *mut f64) -> StStatus {
    guard(|| {
        let t = tree_ref(tree)?;
        let vertex = |k: usize| {
            if k == 0 {
                Ok(t.root())
            } else {
                t.leaf(k).ok_or_else(|| Fail(StStatus::StOutOfRange, format!("leaf {k} not in 1..={}", t.leaf_count())))
            }
        };
        write_out(out, t.distance(vertex(i)?, vertex(j)?))
    })
}

/// Re-checks structural invariants; `ST_STRUCTURE` with a message if broken.
#[no_mangle]
pub unsafe extern "C" fn st_tree_check(tree: *const StTree) -> StStatus {
    guard(|| Ok(tree_ref(tree)?.check_invariants()?))
}

#[no_mangle]
pub unsafe extern "C" fn st_tree_to_newick(
    tree: *const StTree,
    buf: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> StStatus {
    guard(|| write_string(&tree_ref(tree)?.to_newick(), buf, capacity, needed))
}

#[no_mangle]
pub unsafe extern "C" fn st_tree_to_json(
    tree: *const StTree,
    buf: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> StStatus {
    guard(|| write_string(&tree_ref(tree)?.to_json(None, None)?, buf, capacity, needed))
}

/// Canonical shape signature (unlabelled, planted at the root).
#[no_mangle]
pub unsafe extern "C" fn st_tree_shape(
    tree: *const StTree,
    buf: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> StStatus {
    guard(|| write_string(tree_ref(tree)?.shape().as_str(), buf, capacity, needed))
}

/// Writes `M_1, …, M_steps` into `out` (length `steps`). With `normalized`
/// non-zero, the chain started at `M_1 = 1`.
#[no_mangle]
pub unsafe extern "C" fn st_chain_sample(
    alpha: f64,
    steps: usize,
    seed: u64,
    normalized: i32,
    out: *mut f64,
) -> StStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let a = AlphaParam::new(alpha)?;
        let mut rng = RngStream::new(seed, 0);
        let values = if normalized != 0 {
            normalized_chain(a, steps, &mut rng)?
        } else {
            sample_trajectory(a, M1Sampler::Exact, steps, &mut rng)?
        };
        std::slice::from_raw_parts_mut(out, steps).copy_from_slice(&values);
        Ok(())
    })
}

/// `E[X^k]` for `X ~ ML(beta, theta)`.
#[no_mangle]
pub unsafe extern "C" fn st_ml_moment(beta: f64, theta: f64, k: u32, out: *mut f64) -> StStatus {
    guard(|| write_out(out, ml_moment(MlParams::new(beta, theta)?, k)?))
}
