//! C ABI for `bartvs`.
//!
//! Objects cross the boundary as opaque handles (`BvDataset`, `BvTrace`,
//! `BvSelection`) created by `bv_*_new`/`bv_fit`/`bv_select` and released
//! with the matching `bv_*_free`. Every fallible call returns a `BvStatus`;
//! on failure, `bv_last_error_message` describes the most recent error on
//! the calling thread. Feature indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::time::Instant;

use bartvs::data::{Dataset, FitConfig, PosteriorTrace, PriorKind};
use bartvs::io::{load_trace, read_dataset, save_trace, ResultsDocument};
use bartvs::pipeline::{run_method, Method, RunConfig};
use bartvs::summaries::{metropolis_importance, mpvip, vc, vip};
use bartvs::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Usage = 3,
    Data = 4,
    Numeric = 5,
    MiUnavailable = 6,
    Io = 7,
    Parse = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BvImportanceKind {
    Vip = 0,
    Vc = 1,
    Mpvip = 2,
    Mi = 3,
}

/// Sampler settings for `bv_fit`. Obtain defaults from
/// `bv_fit_options_default` and override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BvFitOptions {
    pub n_trees: usize,
    pub burn_in: usize,
    pub n_draws: usize,
    pub seed: u64,
    /// Use the sparse Dirichlet split prior.
    pub dart: bool,
    /// Keep per-node acceptance probabilities (needed for MI).
    pub record_mi: bool,
}

/// Settings for `bv_select`. `l_rep == 0` selects the method's default.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BvSelectOptions {
    pub n_trees: usize,
    pub burn_in: usize,
    pub n_draws: usize,
    pub l_rep: usize,
    pub l_perm: usize,
    pub alpha: f64,
    pub seed: u64,
}

pub struct BvDataset(Dataset);

pub struct BvTrace(PosteriorTrace);

pub struct BvSelection(ResultsDocument);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BvStatus {
    match e {
        Error::Usage(_) | Error::Config(_) | Error::Expression { .. } => BvStatus::Usage,
        Error::EmptyData(_)
        | Error::NonFinite { .. }
        | Error::Dimension(_)
        | Error::TruthOutOfRange { .. } => BvStatus::Data,
        Error::Numeric(_) | Error::Generation(_) => BvStatus::Numeric,
        Error::MiUnavailable => BvStatus::MiUnavailable,
        Error::Permutation { source, .. } => status_of(source),
        Error::Io(_) => BvStatus::Io,
        _ => BvStatus::Parse,
    }
}

struct Failure(BvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: BvStatus, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, message.into()))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BvStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {message}"));
            BvStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .map_or_else(|| fail(BvStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .map_or_else(|| fail(BvStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(BvStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(BvStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(BvStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn copy_out(values: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if len < values.len() {
        return fail(
            BvStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        );
    }
    if !values.is_empty() {
        if out.is_null() {
            return fail(BvStatus::NullPointer, "output buffer is null");
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a dataset from a row-major `n x p` feature matrix and a response
/// of length `n`. The buffers are copied.
///
/// # Safety
/// `x` must point to `n * p` doubles, `y` to `n` doubles, and `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bv_dataset_new(
    x: *const f64,
    y: *const f64,
    n: usize,
    p: usize,
    out: *mut *mut BvDataset,
) -> BvStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cells = n
            .checked_mul(p)
            .map_or_else(|| fail(BvStatus::InvalidArgument, "n * p overflows"), Ok)?;
        let x = slice(x, cells, "x")?;
        let y = slice(y, n, "y")?.to_vec();
        let columns = (0..p)
            .map(|j| (0..n).map(|i| x[i * p + j]).collect())
            .collect();
        let data = Dataset::from_columns(y, columns, None)?;
        *out = Box::into_raw(Box::new(BvDataset(data)));
        Ok(())
    })
}

/// Reads a headed CSV; `response` names the response column.
///
/// # Safety
/// `path` and `response` must be NUL-terminated strings; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bv_dataset_read_csv(
    path: *const c_char,
    response: *const c_char,
    out: *mut *mut BvDataset,
) -> BvStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = string(path, "path")?;
        let response = string(response, "response")?;
        let data = read_dataset(Path::new(path), response)?;
        *out = Box::into_raw(Box::new(BvDataset(data)));
        Ok(())
    })
}

/// Records the known relevant features (0-based) so selections report
/// TPR/FPR/F1.
///
/// # Safety
/// `data` must be a live dataset handle and `idx` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn bv_dataset_set_truth(
    data: *mut BvDataset,
    idx: *const usize,
    len: usize,
) -> BvStatus {
    guard(|| {
        let data = out_ptr(data, "data")?;
        let idx = slice(idx, len, "idx")?;
        data.0 = data.0.clone().with_truth(idx.iter().copied())?;
        Ok(())
    })
}

/// # Safety
/// `data` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn bv_dataset_n(data: *const BvDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.n())
}

/// # Safety
/// `data` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn bv_dataset_p(data: *const BvDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.p())
}

/// # Safety
/// `data` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bv_dataset_free(data: *mut BvDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

#[no_mangle]
pub extern "C" fn bv_fit_options_default() -> BvFitOptions {
    let c = FitConfig::default();
    BvFitOptions {
        n_trees: c.n_trees,
        burn_in: c.burn_in,
        n_draws: c.n_draws,
        seed: c.seed,
        dart: false,
        record_mi: false,
    }
}

/// Runs one sampler chain.
///
/// # Safety
/// `data` must be a live dataset handle; `options` may be NULL for defaults;
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bv_fit(
    data: *const BvDataset,
    options: *const BvFitOptions,
    out: *mut *mut BvTrace,
) -> BvStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let data = borrow(data, "data")?;
        let o = options.as_ref().copied().unwrap_or_else(|| bv_fit_options_default());
        let mut config = if o.dart { FitConfig::dart() } else { FitConfig::default() };
        config.n_trees = o.n_trees;
        config.burn_in = o.burn_in;
        config.n_draws = o.n_draws;
        config.seed = o.seed;
        config.record_mi = o.record_mi;
        let trace = bartvs::sampler::fit(&data.0, &config)?;
        *out = Box::into_raw(Box::new(BvTrace(trace)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bv_trace_load(path: *const c_char, out: *mut *mut BvTrace) -> BvStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let trace = load_trace(Path::new(string(path, "path")?))?;
        *out = Box::into_raw(Box::new(BvTrace(trace)));
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live trace handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bv_trace_save(trace: *const BvTrace, path: *const c_char) -> BvStatus {
    guard(|| {
        let trace = borrow(trace, "trace")?;
        save_trace(Path::new(string(path, "path")?), &trace.0)?;
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn bv_trace_n_draws(trace: *const BvTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.n_draws())
}

/// # Safety
/// `trace` must be a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn bv_trace_n_features(trace: *const BvTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.n_features())
}

/// Writes one importance value per feature into `out` (capacity `len`).
///
/// # Safety
/// `trace` must be a live trace handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bv_trace_importance(
    trace: *const BvTrace,
    kind: BvImportanceKind,
    out: *mut f64,
    len: usize,
) -> BvStatus {
    guard(|| {
        let t = &borrow(trace, "trace")?.0;
        let values = match kind {
            BvImportanceKind::Vip => vip(t),
            BvImportanceKind::Vc => vc(t),
            BvImportanceKind::Mpvip => mpvip(t),
            BvImportanceKind::Mi => metropolis_importance(t)?,
        }
        .values;
        copy_out(&values, out, len)
    })
}

/// # Safety
/// `trace` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bv_trace_free(trace: *mut BvTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

#[no_mangle]
pub extern "C" fn bv_select_options_default() -> BvSelectOptions {
    let c = FitConfig::default();
    BvSelectOptions {
        n_trees: c.n_trees,
        burn_in: c.burn_in,
        n_draws: c.n_draws,
        l_rep: 0,
        l_perm: 50,
        alpha: 0.05,
        seed: 0,
    }
}

/// Runs a named selection method (for example `"dart-vc-measure"`).
///
/// # Safety
/// `data` must be a live dataset handle, `method` a NUL-terminated string,
/// `options` NULL or valid, and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bv_select(
    data: *const BvDataset,
    method: *const c_char,
    options: *const BvSelectOptions,
    out: *mut *mut BvSelection,
) -> BvStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let data = &borrow(data, "data")?.0;
        let method: Method = string(method, "method")?.parse()?;
        let o = options.as_ref().copied().unwrap_or_else(|| bv_select_options_default());
        let mut run = RunConfig::new(method);
        run.fit.n_trees = o.n_trees;
        run.fit.burn_in = o.burn_in;
        run.fit.n_draws = o.n_draws;
        run.fit.seed = o.seed;
        run.seed = o.seed;
        if o.l_rep > 0 {
            run.l_rep = o.l_rep;
        }
        run.l_perm = o.l_perm;
        run.alpha = o.alpha;
        let run = run.close();
        run.validate(data.p())?;
        let start = Instant::now();
        let output = run_method(data, &run)?;
        let doc = ResultsDocument::new(data, &run, &output, start.elapsed().as_secs_f64());
        *out = Box::into_raw(Box::new(BvSelection(doc)));
        Ok(())
    })
}

/// # Safety
/// `sel` must be a live selection handle.
#[no_mangle]
pub unsafe extern "C" fn bv_selection_count(sel: *const BvSelection) -> usize {
    sel.as_ref().map_or(0, |s| s.0.selected.len())
}

/// # Safety
/// `sel` must be a live selection handle.
#[no_mangle]
pub unsafe extern "C" fn bv_selection_n_features(sel: *const BvSelection) -> usize {
    sel.as_ref().map_or(0, |s| s.0.p)
}

/// Writes the selected feature indices (0-based, ascending) into `out`.
///
/// # Safety
/// `sel` must be a live selection handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn bv_selection_indices(
    sel: *const BvSelection,
    out: *mut usize,
    len: usize,
) -> BvStatus {
    guard(|| {
        let doc = &borrow(sel, "selection")?.0;
        let idx: Vec<usize> = doc.selected.iter().map(|f| f.index - 1).collect();
        if len < idx.len() {
            return fail(
                BvStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", idx.len()),
            );
        }
        if !idx.is_empty() {
            if out.is_null() {
                return fail(BvStatus::NullPointer, "output buffer is null");
            }
            ptr::copy_nonoverlapping(idx.as_ptr(), out, idx.len());
        }
        Ok(())
    })
}

/// Writes the per-feature importance the method ranked on.
///
/// # Safety
/// `sel` must be a live selection handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bv_selection_importance(
    sel: *const BvSelection,
    out: *mut f64,
    len: usize,
) -> BvStatus {
    guard(|| {
        let doc = &borrow(sel, "selection")?.0;
        let values: Vec<f64> = doc.features.iter().map(|f| f.importance).collect();
        copy_out(&values, out, len)
    })
}

/// Serializes the full results document as JSON. Release the string with
/// `bv_string_free`.
///
/// # Safety
/// `sel` must be a live selection handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bv_selection_to_json(
    sel: *const BvSelection,
    out: *mut *mut c_char,
) -> BvStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let json = borrow(sel, "selection")?.0.to_json()?;
        let c = CString::new(json)
            .or_else(|_| fail(BvStatus::Parse, "JSON contains a NUL byte"))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `sel` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bv_selection_free(sel: *mut BvSelection) {
    if !sel.is_null() {
        drop(Box::from_raw(sel));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Whether a trace was fitted with the sparse Dirichlet prior.
///
/// # Safety
/// `trace` must be a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn bv_trace_is_dart(trace: *const BvTrace) -> bool {
    trace
        .as_ref()
        .is_some_and(|t| t.0.config().prior == PriorKind::Dart)
}
