//! C ABI over `unlabeled_sensing`.
//!
//! Conventions:
//! - every fallible call returns a [`UsCode`]; on failure a message is
//!   available from [`us_last_error_message`] on the same thread;
//! - matrices and recovery reports are opaque handles released with their
//!   `_free` function (passing NULL is a no-op);
//! - output arrays are caller-allocated with an explicit length; a too-short
//!   buffer yields `US_CODE_ERR_BUFFER_TOO_SMALL`;
//! - panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use unlabeled_sensing::adversary;
use unlabeled_sensing::model::{gen_matrix, EntryDist};
use unlabeled_sensing::robust;
use unlabeled_sensing::solver::{self, RecoveryReport, SolveConfig, Status};
use unlabeled_sensing::{Error, Mat};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UsCode {
    Ok = 0,
    ErrNullPointer = 1,
    ErrDimension = 2,
    ErrInvalidArgument = 3,
    ErrPrecondition = 4,
    ErrDegenerate = 5,
    ErrNonFinite = 6,
    ErrBufferTooSmall = 7,
    ErrPanic = 8,
    ErrOther = 9,
}

/// Entry distribution for [`us_gen_matrix`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UsDist {
    Gaussian = 0,
    Uniform = 1,
}

/// Outcome of exact recovery.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UsRecoveryStatus {
    Unique = 0,
    Ambiguous = 1,
    Infeasible = 2,
    BudgetExhausted = 3,
}

/// Solver settings. `max_nodes == 0` means no budget.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct UsSolveConfig {
    pub residual_tol: f64,
    pub uniqueness_tol: f64,
    pub prune: bool,
    pub first_hit: bool,
    pub max_nodes: u64,
}

/// Opaque row-major real matrix.
pub struct UsMatrix(Mat);

/// Opaque result of [`us_recover`].
pub struct UsReport(RecoveryReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(UsCode, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Dimension(_) => UsCode::ErrDimension,
            Error::NonFinite(_) => UsCode::ErrNonFinite,
            Error::IndexOutOfRange { .. } | Error::InvalidArgument(_) => UsCode::ErrInvalidArgument,
            Error::Precondition(_) => UsCode::ErrPrecondition,
            Error::Degenerate(_) => UsCode::ErrDegenerate,
            _ => UsCode::ErrOther,
        };
        Failure(code, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UsCode {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UsCode::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            UsCode::ErrPanic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(UsCode::ErrNullPointer, format!("{what} is NULL"))
}

unsafe fn matrix<'a>(p: *const UsMatrix, what: &str) -> Result<&'a Mat, Failure> {
    p.as_ref().map(|m| &m.0).ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T: Copy>(
    src: &[T],
    dst: *mut T,
    cap: usize,
    what: &str,
) -> Result<(), Failure> {
    if cap < src.len() {
        return Err(Failure(
            UsCode::ErrBufferTooSmall,
            format!("{what} needs {} elements, buffer holds {cap}", src.len()),
        ));
    }
    if !src.is_empty() {
        if dst.is_null() {
            return Err(null(what));
        }
        std::ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    }
    Ok(())
}

unsafe fn put<T>(dst: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if dst.is_null() {
        return Err(null(what));
    }
    dst.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn us_version() -> *const c_char {
    static V: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version string"),
        };
    V.as_ptr()
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn us_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

/// Default solver settings.
#[no_mangle]
pub extern "C" fn us_solve_config_default() -> UsSolveConfig {
    let d = SolveConfig::default();
    UsSolveConfig {
        residual_tol: d.residual_tol,
        uniqueness_tol: d.uniqueness_tol,
        prune: d.prune,
        first_hit: d.first_hit,
        max_nodes: 0,
    }
}

/// Copies `rows * cols` row-major values into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn us_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut UsMatrix,
) -> UsCode {
    guard(|| {
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(UsCode::ErrDimension, "rows * cols overflows".into()))?;
        let m = Mat::new(rows, cols, slice(data, len, "data")?.to_vec())?;
        put(out, Box::into_raw(Box::new(UsMatrix(m))), "out")
    })
}

/// # Safety
/// `m` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn us_matrix_free(m: *mut UsMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Row count, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn us_matrix_rows(m: *const UsMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// Column count, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn us_matrix_cols(m: *const UsMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// Copies the row-major entries into `out` (capacity `len`).
///
/// # Safety
/// `m` must be a live handle; `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn us_matrix_data(m: *const UsMatrix, out: *mut f64, len: usize) -> UsCode {
    guard(|| write_out(matrix(m, "m")?.data(), out, len, "out"))
}

/// Seeded i.i.d. `m x k` matrix.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn us_gen_matrix(
    m: usize,
    k: usize,
    dist: UsDist,
    seed: u64,
    out: *mut *mut UsMatrix,
) -> UsCode {
    guard(|| {
        let dist = match dist {
            UsDist::Gaussian => EntryDist::Gaussian,
            UsDist::Uniform => EntryDist::Uniform,
        };
        let a = gen_matrix(m, k, dist, seed)?;
        put(out, Box::into_raw(Box::new(UsMatrix(a))), "out")
    })
}

/// Exact recovery of `x` from the `n` unlabeled values `y`. `cfg` may be NULL
/// for defaults.
///
/// # Safety
/// `a` must be a live handle, `y` must hold `n` doubles, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn us_recover(
    a: *const UsMatrix,
    y: *const f64,
    n: usize,
    cfg: *const UsSolveConfig,
    out: *mut *mut UsReport,
) -> UsCode {
    guard(|| {
        let a = matrix(a, "a")?;
        let y = slice(y, n, "y")?;
        let cfg = match cfg.as_ref() {
            None => SolveConfig::default(),
            Some(c) => SolveConfig {
                residual_tol: c.residual_tol,
                uniqueness_tol: c.uniqueness_tol,
                prune: c.prune,
                first_hit: c.first_hit,
                max_nodes: (c.max_nodes > 0).then_some(c.max_nodes),
            },
        };
        let rep = solver::solve(a, y, &cfg)?;
        put(out, Box::into_raw(Box::new(UsReport(rep))), "out")
    })
}

/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn us_report_free(r: *mut UsReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn us_report_status(
    r: *const UsReport,
    out: *mut UsRecoveryStatus,
) -> UsCode {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("r"))?;
        let s = match r.0.status {
            Status::Unique => UsRecoveryStatus::Unique,
            Status::Ambiguous => UsRecoveryStatus::Ambiguous,
            Status::Infeasible => UsRecoveryStatus::Infeasible,
            Status::BudgetExhausted => UsRecoveryStatus::BudgetExhausted,
        };
        put(out, s, "out")
    })
}

/// Number of distinct feasible solutions found.
///
/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn us_report_num_solutions(r: *const UsReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.distinct_solutions.len())
}

/// Search counters.
///
/// # Safety
/// `r` must be a live report handle; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn us_report_nodes(
    r: *const UsReport,
    explored: *mut u64,
    pruned: *mut u64,
) -> UsCode {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("r"))?;
        put(explored, r.0.nodes_explored, "explored")?;
        put(pruned, r.0.nodes_pruned, "pruned")
    })
}

/// Copies solution `index` (length K) into `out`.
///
/// # Safety
/// `r` must be a live report handle; `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn us_report_solution(
    r: *const UsReport,
    index: usize,
    out: *mut f64,
    len: usize,
) -> UsCode {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("r"))?;
        let sol = r.0.distinct_solutions.get(index).ok_or_else(|| {
            Failure(
                UsCode::ErrInvalidArgument,
                format!("solution {index} of {}", r.0.distinct_solutions.len()),
            )
        })?;
        write_out(sol, out, len, "out")
    })
}

/// Least-squares recovery from noisy values. Writes `x_hat` (length K), the
/// chosen rows of `a` (length `n`) and the residual.
///
/// # Safety
/// Pointers must be valid for the given lengths; `residual` must be writable.
#[no_mangle]
pub unsafe extern "C" fn us_robust_recover(
    a: *const UsMatrix,
    y: *const f64,
    n: usize,
    x_out: *mut f64,
    x_len: usize,
    picks_out: *mut usize,
    picks_len: usize,
    residual: *mut f64,
) -> UsCode {
    guard(|| {
        let a = matrix(a, "a")?;
        let rep = robust::robust_recover(a, slice(y, n, "y")?, n)?;
        write_out(&rep.x_hat, x_out, x_len, "x_out")?;
        write_out(
            rep.best_selection.picks(),
            picks_out,
            picks_len,
            "picks_out",
        )?;
        put(residual, rep.best_residual, "residual")
    })
}

/// Distance in `[0, 1]` between the column spans of `m1` and `m2`.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn us_subspace_distance(
    m1: *const UsMatrix,
    m2: *const UsMatrix,
    out: *mut f64,
) -> UsCode {
    guard(|| {
        let d = robust::subspace_distance(matrix(m1, "m1")?, matrix(m2, "m2")?)?;
        put(out, d, "out")
    })
}

/// For an `N x K` matrix `b` with `2 <= N < 2K`, writes `x != x_hat` (length K)
/// and the cyclic row order `pi` (length N) with `b x = (pi b) x_hat`.
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn us_construct_ambiguous_pair(
    b: *const UsMatrix,
    x_out: *mut f64,
    x_hat_out: *mut f64,
    k: usize,
    pi_out: *mut usize,
    n: usize,
) -> UsCode {
    guard(|| {
        let pair = adversary::construct(matrix(b, "b")?)?;
        write_out(&pair.x, x_out, k, "x_out")?;
        write_out(&pair.x_hat, x_hat_out, k, "x_hat_out")?;
        write_out(pair.pi.picks(), pi_out, n, "pi_out")
    })
}
