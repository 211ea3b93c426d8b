//! C ABI for the `dirmix` estimators.
//!
//! Count data lives behind an opaque `DirmixTable` handle created by
//! `dirmix_table_new` (or `dirmix_table_from_files`) and released with
//! `dirmix_table_free`. Every fallible function returns a `DIRMIX_*` status
//! code; on failure `dirmix_last_error_message` describes the error for the
//! calling thread. Estimator and divergence selectors are plain integers
//! (`DIRMIX_ESTIMATOR_*`, `DIRMIX_DIVERGENCE_*`).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dirmix::counts::{self, MultiplicityTable};
use dirmix::estimators::{self, Divergence, EstimateReport, Estimator, PluginScheme};
use dirmix::posterior::{self, HyperParams};
use dirmix::Error;

pub const DIRMIX_OK: i32 = 0;
/// A required pointer argument was null.
pub const DIRMIX_ERR_NULL_POINTER: i32 = 1;
/// An argument lies outside the domain of the estimator.
pub const DIRMIX_ERR_DOMAIN: i32 = 2;
/// Count arrays have incompatible lengths.
pub const DIRMIX_ERR_SHAPE: i32 = 3;
/// Inputs contradict each other, e.g. more listed categories than K.
pub const DIRMIX_ERR_INCONSISTENT: i32 = 4;
/// Unknown selector, unsupported combination, or invalid UTF-8.
pub const DIRMIX_ERR_INVALID_ARGUMENT: i32 = 5;
/// A file could not be read or parsed.
pub const DIRMIX_ERR_IO: i32 = 6;
/// An internal panic was caught at the boundary.
pub const DIRMIX_ERR_PANIC: i32 = 7;

pub const DIRMIX_ESTIMATOR_DPM: i32 = 0;
pub const DIRMIX_ESTIMATOR_DP: i32 = 1;
pub const DIRMIX_ESTIMATOR_NAIVE: i32 = 2;
pub const DIRMIX_ESTIMATOR_JEFFREYS: i32 = 3;
pub const DIRMIX_ESTIMATOR_TRYBULA: i32 = 4;
pub const DIRMIX_ESTIMATOR_PERKS: i32 = 5;
pub const DIRMIX_ESTIMATOR_ZHANG: i32 = 6;

pub const DIRMIX_DIVERGENCE_KL: i32 = 0;
pub const DIRMIX_DIVERGENCE_HELLINGER_SQ: i32 = 1;

/// Opaque joint histogram of two count samples.
pub struct DirmixTable {
    inner: MultiplicityTable,
}

/// Result of an estimate. Fields guarded by a `has_*` flag are NaN or zero
/// when the flag is 0.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirmixReport {
    pub value: f64,
    pub has_posterior_std: u8,
    pub posterior_std: f64,
    pub has_diagnostics: u8,
    pub alpha_star: f64,
    pub beta_star: f64,
    pub log_evidence_at_max: f64,
    pub grid_bins_alpha: u64,
    pub grid_bins_beta: u64,
    pub at_boundary: u8,
    pub flat: u8,
    pub collapsed: u8,
}

impl From<&EstimateReport> for DirmixReport {
    fn from(r: &EstimateReport) -> Self {
        let d = r.diagnostics.as_ref();
        DirmixReport {
            value: r.value,
            has_posterior_std: r.posterior_std.is_some() as u8,
            posterior_std: r.posterior_std.unwrap_or(f64::NAN),
            has_diagnostics: d.is_some() as u8,
            alpha_star: d.map_or(f64::NAN, |d| d.alpha_star),
            beta_star: d.and_then(|d| d.beta_star).unwrap_or(f64::NAN),
            log_evidence_at_max: d.map_or(f64::NAN, |d| d.log_evidence_at_max),
            grid_bins_alpha: d.map_or(0, |d| d.grid_bins_alpha as u64),
            grid_bins_beta: d.map_or(0, |d| d.grid_bins_beta as u64),
            at_boundary: d.is_some_and(|d| d.at_boundary) as u8,
            flat: d.is_some_and(|d| d.flat) as u8,
            collapsed: d.is_some_and(|d| d.collapsed) as u8,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn code_for(err: &Error) -> i32 {
    match err {
        Error::Domain(_) => DIRMIX_ERR_DOMAIN,
        Error::Shape(_) => DIRMIX_ERR_SHAPE,
        Error::Inconsistent(_) => DIRMIX_ERR_INCONSISTENT,
        Error::Config(_) => DIRMIX_ERR_INVALID_ARGUMENT,
        Error::Parse { .. } | Error::Io(_) | Error::Csv(_) => DIRMIX_ERR_IO,
        // the error enum may grow
        #[allow(unreachable_patterns)]
        _ => DIRMIX_ERR_INVALID_ARGUMENT,
    }
}

/// Internal failure carrying a status code and message.
struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(code_for(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DIRMIX_ERR_NULL_POINTER, format!("{what} is null"))
}

/// Runs `f` behind a panic guard and records any failure.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DIRMIX_OK,
        Ok(Err(Failure(code, msg))) => {
            set_last_error(msg);
            code
        }
        Err(_) => {
            set_last_error("internal panic".into());
            DIRMIX_ERR_PANIC
        }
    }
}

unsafe fn slice<'a>(p: *const u64, len: usize, what: &str) -> Result<&'a [u64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `len` readable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn table_ref<'a>(t: *const DirmixTable) -> Result<&'a MultiplicityTable, Failure> {
    // SAFETY: caller passes a handle from `dirmix_table_new` or null.
    unsafe { t.as_ref() }.map(|t| &t.inner).ok_or_else(|| null("table"))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: non-null and supplied by the caller for writing.
    unsafe { out.write(v) };
    Ok(())
}

fn estimator_from(code: i32) -> Result<Estimator, Failure> {
    Ok(match code {
        DIRMIX_ESTIMATOR_DPM => Estimator::Dpm,
        DIRMIX_ESTIMATOR_DP => Estimator::Dp,
        DIRMIX_ESTIMATOR_NAIVE => Estimator::Plugin(PluginScheme::Naive),
        DIRMIX_ESTIMATOR_JEFFREYS => Estimator::Plugin(PluginScheme::Jeffreys),
        DIRMIX_ESTIMATOR_TRYBULA => Estimator::Plugin(PluginScheme::Trybula),
        DIRMIX_ESTIMATOR_PERKS => Estimator::Plugin(PluginScheme::Perks),
        DIRMIX_ESTIMATOR_ZHANG => Estimator::Zhang,
        _ => {
            return Err(Failure(
                DIRMIX_ERR_INVALID_ARGUMENT,
                format!("unknown estimator code {code}"),
            ))
        }
    })
}

fn divergence_from(code: i32) -> Result<Divergence, Failure> {
    match code {
        DIRMIX_DIVERGENCE_KL => Ok(Divergence::Kl),
        DIRMIX_DIVERGENCE_HELLINGER_SQ => Ok(Divergence::HellingerSq),
        _ => Err(Failure(
            DIRMIX_ERR_INVALID_ARGUMENT,
            format!("unknown divergence code {code}"),
        )),
    }
}

/// Builds a table from two count arrays of equal length `len` over `k`
/// categories (`len <= k`; unlisted categories have zero counts).
///
/// # Safety
/// `n` and `m` must each point to `len` readable `uint64_t` values (they may
/// be null when `len` is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dirmix_table_new(
    n: *const u64,
    m: *const u64,
    len: usize,
    k: u64,
    out: *mut *mut DirmixTable,
) -> i32 {
    guard(|| {
        let n = unsafe { slice(n, len, "n") }?;
        let m = unsafe { slice(m, len, "m") }?;
        let inner = MultiplicityTable::from_counts(n, m, k)?;
        let handle = Box::into_raw(Box::new(DirmixTable { inner }));
        unsafe { write_out(out, handle) }.inspect_err(|_| {
            // SAFETY: just allocated above and not shared
            drop(unsafe { Box::from_raw(handle) });
        })
    })
}

/// Reads two `category<TAB>count` files joined on category id. `k = 0`
/// takes K from their `#K=` headers.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dirmix_table_from_files(
    path1: *const c_char,
    path2: *const c_char,
    k: u64,
    out: *mut *mut DirmixTable,
) -> i32 {
    guard(|| {
        let to_str = |p: *const c_char, what: &str| -> Result<String, Failure> {
            if p.is_null() {
                return Err(null(what));
            }
            // SAFETY: non-null, NUL-terminated per the contract
            unsafe { CStr::from_ptr(p) }
                .to_str()
                .map(str::to_owned)
                .map_err(|_| Failure(DIRMIX_ERR_INVALID_ARGUMENT, format!("{what} is not UTF-8")))
        };
        let p1 = to_str(path1, "path1")?;
        let p2 = to_str(path2, "path2")?;
        let inner = counts::read_pair_files(p1, p2, (k > 0).then_some(k))?;
        let handle = Box::into_raw(Box::new(DirmixTable { inner }));
        unsafe { write_out(out, handle) }.inspect_err(|_| {
            // SAFETY: just allocated above and not shared
            drop(unsafe { Box::from_raw(handle) });
        })
    })
}

/// Releases a table. Null is ignored.
///
/// # Safety
/// `table` must come from a constructor of this library and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn dirmix_table_free(table: *mut DirmixTable) {
    if !table.is_null() {
        // SAFETY: ownership returns to Rust exactly once per the contract
        drop(unsafe { Box::from_raw(table) });
    }
}

/// Writes K and the two sample sizes.
///
/// # Safety
/// `table` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn dirmix_table_shape(
    table: *const DirmixTable,
    k: *mut u64,
    n_total: *mut u64,
    m_total: *mut u64,
) -> i32 {
    guard(|| {
        let t = unsafe { table_ref(table) }?;
        unsafe {
            write_out(k, t.k())?;
            write_out(n_total, t.n_total())?;
            write_out(m_total, t.m_total())
        }
    })
}

/// Runs one estimator.
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dirmix_estimate(
    table: *const DirmixTable,
    estimator: i32,
    divergence: i32,
    out: *mut DirmixReport,
) -> i32 {
    guard(|| {
        let t = unsafe { table_ref(table) }?;
        let e = estimator_from(estimator)?;
        let d = divergence_from(divergence)?;
        let r = estimators::estimate(t, e, d)?;
        unsafe { write_out(out, DirmixReport::from(&r)) }
    })
}

/// Posterior mean and second moment of `D_KL` at fixed `(alpha, beta)`.
///
/// # Safety
/// `table` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn dirmix_posterior_dkl(
    table: *const DirmixTable,
    alpha: f64,
    beta: f64,
    mean: *mut f64,
    second_moment: *mut f64,
) -> i32 {
    guard(|| {
        let t = unsafe { table_ref(table) }?;
        let hp = HyperParams::new(alpha, beta, t.k())?;
        let m = posterior::posterior_dkl(t, hp)?;
        let s = posterior::posterior_dkl_squared(t, hp)?;
        unsafe {
            write_out(mean, m)?;
            write_out(second_moment, s)
        }
    })
}

/// Posterior mean of the squared Hellinger divergence at fixed
/// `(alpha, beta)`.
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dirmix_posterior_hellinger_sq(
    table: *const DirmixTable,
    alpha: f64,
    beta: f64,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let t = unsafe { table_ref(table) }?;
        let hp = HyperParams::new(alpha, beta, t.k())?;
        let v = posterior::posterior_hellinger_sq(t, hp)?;
        unsafe { write_out(out, v) }
    })
}

/// Mixture-prior entropy estimate of a single count sample.
///
/// # Safety
/// `counts` must point to `len` readable values (may be null when `len` is
/// 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dirmix_entropy_nsb(counts: *const u64, len: usize, k: u64, out: *mut DirmixReport) -> i32 {
    guard(|| {
        let c = unsafe { slice(counts, len, "counts") }?;
        let t = MultiplicityTable::single(c, k)?;
        let r = estimators::estimate_entropy_nsb(&t)?;
        unsafe { write_out(out, DirmixReport::from(&r)) }
    })
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn dirmix_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dirmix_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
