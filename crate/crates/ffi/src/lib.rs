//! C ABI over `spca`.
//!
//! Matrices and reports are opaque heap handles released with their `_free`
//! function. Every entry point returns an [`SpcaStatus`]; on failure the
//! message is available from [`spca_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spca::matrix::{load_matrix, MatrixFormat};
use spca::{
    run_multistart, DataMatrix, Formulation, MultiStartPlan, MultiStartReport, RunStatus, SolverConfig, SpcaError,
    StartScheme, Strategy,
};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    /// The input cannot support a loading (e.g. an all-zero matrix).
    Degenerate = 5,
    /// Output buffer shorter than required; nothing was written.
    BufferTooSmall = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

/// Terminal state of a single run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcaRunStatus {
    Converged = 0,
    MaxIterations = 1,
    Degenerate = 2,
    ZeroLoading = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcaStrategy {
    Nai = 0,
    Sfa = 1,
    Bat = 2,
    Otf = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcaFileFormat {
    /// Guess from the extension.
    Auto = 0,
    MatrixMarket = 1,
    Csv = 2,
    CsvWithHeader = 3,
}

/// Solve parameters. Fill with [`spca_solve_options_default`] and override.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SpcaSolveOptions {
    /// Formulation row, 1 to 8.
    pub formulation: u32,
    /// Sparsity level `s` for constrained rows, penalty `gamma` otherwise.
    pub param: f64,
    pub starts: usize,
    /// An `SpcaStrategy` value.
    pub strategy: u32,
    /// Block width; 0 selects `min(16, starts)`.
    pub batch: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iterations: usize,
    /// Nonzero draws starts from canonical basis vectors instead of the sphere.
    pub column_starts: u8,
}

/// Opaque data matrix.
pub struct SpcaMatrix(DataMatrix);

/// Opaque multistart result.
pub struct SpcaReport(MultiStartReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: SpcaStatus, msg: impl Into<String>) -> SpcaStatus {
    set_error(msg);
    status
}

fn status_of(err: &SpcaError) -> SpcaStatus {
    match err {
        SpcaError::Io(_) => SpcaStatus::Io,
        SpcaError::Parse { .. } => SpcaStatus::Parse,
        SpcaError::DegenerateInput(_) => SpcaStatus::Degenerate,
        _ => SpcaStatus::InvalidArgument,
    }
}

fn from_error(err: SpcaError) -> SpcaStatus {
    fail(status_of(&err), err.to_string())
}

/// Clears the error slot, runs `f`, and turns panics into `Panic`.
fn guard(f: impl FnOnce() -> SpcaStatus) -> SpcaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(SpcaStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(SpcaStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

unsafe fn slice<'a, T>(data: *const T, len: usize) -> &'a [T] {
    if len == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(data, len)
    }
}

unsafe fn emit_matrix(m: DataMatrix, out: *mut *mut SpcaMatrix) -> SpcaStatus {
    *out = Box::into_raw(Box::new(SpcaMatrix(m)));
    SpcaStatus::Ok
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn spca_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a dense `n x p` matrix from `n * p` column-major values.
///
/// # Safety
/// `values` must point to `n * p` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spca_matrix_from_dense(
    n: usize,
    p: usize,
    values: *const f64,
    out: *mut *mut SpcaMatrix,
) -> SpcaStatus {
    guard(|| {
        non_null!(values, out);
        let Some(len) = n.checked_mul(p) else {
            return fail(SpcaStatus::InvalidArgument, "n * p overflows");
        };
        match DataMatrix::from_col_major(n, p, slice(values, len).to_vec()) {
            Ok(m) => emit_matrix(m, out),
            Err(e) => from_error(e),
        }
    })
}

/// Builds a sparse matrix from compressed sparse column arrays
/// (`col_ptr` has `p + 1` entries, `row_idx` and `values` have `col_ptr[p]`).
///
/// # Safety
/// All arrays must be readable for the lengths above; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spca_matrix_from_csc(
    n: usize,
    p: usize,
    col_ptr: *const usize,
    row_idx: *const usize,
    values: *const f64,
    out: *mut *mut SpcaMatrix,
) -> SpcaStatus {
    guard(|| {
        non_null!(col_ptr, out);
        let Some(ptr_len) = p.checked_add(1) else {
            return fail(SpcaStatus::InvalidArgument, "p + 1 overflows");
        };
        let col_ptr = slice(col_ptr, ptr_len).to_vec();
        let nnz = col_ptr[p];
        if nnz > 0 {
            non_null!(row_idx, values);
        }
        let row_idx = slice(row_idx, nnz).to_vec();
        let values = slice(values, nnz).to_vec();
        match DataMatrix::from_csc(n, p, col_ptr, row_idx, values) {
            Ok(m) => emit_matrix(m, out),
            Err(e) => from_error(e),
        }
    })
}

/// Reads a MatrixMarket or CSV file. `format` is an `SpcaFileFormat` value.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spca_matrix_load(path: *const c_char, format: u32, out: *mut *mut SpcaMatrix) -> SpcaStatus {
    guard(|| {
        non_null!(path, out);
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(SpcaStatus::InvalidArgument, "path is not valid UTF-8");
        };
        let format = match format {
            1 => MatrixFormat::MatrixMarket,
            2 => MatrixFormat::Csv { has_header: false },
            3 => MatrixFormat::Csv { has_header: true },
            0 => match MatrixFormat::from_path(path.as_ref()) {
                Some(f) => f,
                None => return fail(SpcaStatus::InvalidArgument, format!("cannot infer format of {path}")),
            },
            other => return fail(SpcaStatus::InvalidArgument, format!("unknown file format {other}")),
        };
        match load_matrix(path, format) {
            Ok(m) => emit_matrix(m, out),
            Err(e) => from_error(e),
        }
    })
}

/// Replaces the matrix with its column-centered copy (densifies sparse input).
///
/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spca_matrix_center(m: *mut SpcaMatrix) -> SpcaStatus {
    guard(|| {
        non_null!(m);
        let m = &mut *m;
        m.0 = m.0.center_columns();
        SpcaStatus::Ok
    })
}

/// # Safety
/// `m` must be a live handle; `n`, `p` and `nnz` may each be null.
#[no_mangle]
pub unsafe extern "C" fn spca_matrix_dims(
    m: *const SpcaMatrix,
    n: *mut usize,
    p: *mut usize,
    nnz: *mut usize,
) -> SpcaStatus {
    guard(|| {
        non_null!(m);
        let m = &(*m).0;
        if !n.is_null() {
            *n = m.n();
        }
        if !p.is_null() {
            *p = m.p();
        }
        if !nnz.is_null() {
            *nnz = m.nnz();
        }
        SpcaStatus::Ok
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spca_matrix_free(m: *mut SpcaMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Defaults: row 1 with `s = 1`, 64 starts, OTF, width 16, seed 0,
/// `tol = 1e-6`, 200 iterations, sphere starts.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spca_solve_options_default(out: *mut SpcaSolveOptions) -> SpcaStatus {
    guard(|| {
        non_null!(out);
        let cfg = SolverConfig::default();
        *out = SpcaSolveOptions {
            formulation: 1,
            param: 1.0,
            starts: 64,
            strategy: SpcaStrategy::Otf as u32,
            batch: 0,
            seed: cfg.seed,
            tol: cfg.tol,
            max_iterations: cfg.max_iterations,
            column_starts: 0,
        };
        SpcaStatus::Ok
    })
}

/// Runs the multistart solver. Individual runs that end degenerate or with a
/// zero loading are reported through the report, not the return code.
///
/// # Safety
/// `m` must be a live handle, `options` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spca_solve(
    m: *const SpcaMatrix,
    options: *const SpcaSolveOptions,
    out: *mut *mut SpcaReport,
) -> SpcaStatus {
    guard(|| {
        non_null!(m, options, out);
        let a = &(*m).0;
        let o = *options;
        let form = match Formulation::from_index(o.formulation as usize, o.param) {
            Ok(f) => f,
            Err(e) => return from_error(e),
        };
        let strategy = match o.strategy {
            0 => Strategy::Nai,
            1 => Strategy::Sfa,
            2 => Strategy::Bat,
            3 => Strategy::Otf,
            other => return fail(SpcaStatus::InvalidArgument, format!("unknown strategy {other}")),
        };
        let batch = if o.batch == 0 { o.starts.min(16) } else { o.batch };
        let scheme = if o.column_starts != 0 {
            StartScheme::Column
        } else {
            StartScheme::GaussianSphere
        };
        let plan = MultiStartPlan::new(o.starts, strategy, batch, o.seed).with_scheme(scheme);
        let cfg = SolverConfig {
            max_iterations: o.max_iterations,
            tol: o.tol,
            seed: o.seed,
        };
        match run_multistart(&form, a, &plan, &cfg) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(SpcaReport(r)));
                SpcaStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

fn run_status(s: RunStatus) -> SpcaRunStatus {
    match s {
        RunStatus::Converged => SpcaRunStatus::Converged,
        RunStatus::Degenerate => SpcaRunStatus::Degenerate,
        RunStatus::ZeroLoading => SpcaRunStatus::ZeroLoading,
        RunStatus::MaxIterations | RunStatus::Running => SpcaRunStatus::MaxIterations,
    }
}

/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spca_report_best_objective(r: *const SpcaReport, out: *mut f64) -> SpcaStatus {
    guard(|| {
        non_null!(r, out);
        *out = (*r).0.best.objective;
        SpcaStatus::Ok
    })
}

/// Copies the best loading into `buf`, which must hold at least `p` doubles.
///
/// # Safety
/// `r` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn spca_report_best_loading(r: *const SpcaReport, buf: *mut f64, len: usize) -> SpcaStatus {
    guard(|| {
        non_null!(r, buf);
        let x = &(*r).0.best.loading;
        if len < x.len() {
            return fail(
                SpcaStatus::BufferTooSmall,
                format!("buffer holds {len} values, loading has {}", x.len()),
            );
        }
        std::slice::from_raw_parts_mut(buf, x.len()).copy_from_slice(x);
        SpcaStatus::Ok
    })
}

/// # Safety
/// `r` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn spca_report_best_run(
    r: *const SpcaReport,
    start_index: *mut usize,
    iterations: *mut usize,
    status: *mut SpcaRunStatus,
) -> SpcaStatus {
    guard(|| {
        non_null!(r);
        let best = &(*r).0.best;
        if !start_index.is_null() {
            *start_index = best.start_index;
        }
        if !iterations.is_null() {
            *iterations = best.iterations;
        }
        if !status.is_null() {
            *status = run_status(best.status);
        }
        SpcaStatus::Ok
    })
}

/// Number of starts, i.e. valid indices for [`spca_report_start`].
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spca_report_start_count(r: *const SpcaReport, out: *mut usize) -> SpcaStatus {
    guard(|| {
        non_null!(r, out);
        *out = (*r).0.all_results.len();
        SpcaStatus::Ok
    })
}

/// Objective, iteration count and status of start `index`.
///
/// # Safety
/// `r` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn spca_report_start(
    r: *const SpcaReport,
    index: usize,
    objective: *mut f64,
    iterations: *mut usize,
    status: *mut SpcaRunStatus,
) -> SpcaStatus {
    guard(|| {
        non_null!(r);
        let all = &(*r).0.all_results;
        let Some(run) = all.get(index) else {
            return fail(
                SpcaStatus::InvalidArgument,
                format!("start {index} out of range (have {})", all.len()),
            );
        };
        if !objective.is_null() {
            *objective = run.objective;
        }
        if !iterations.is_null() {
            *iterations = run.iterations;
        }
        if !status.is_null() {
            *status = run_status(run.status);
        }
        SpcaStatus::Ok
    })
}

/// Block sweeps and wall time (seconds) of the whole campaign.
///
/// # Safety
/// `r` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn spca_report_cost(
    r: *const SpcaReport,
    total_sweeps: *mut usize,
    column_iterations: *mut usize,
    wall_time: *mut f64,
) -> SpcaStatus {
    guard(|| {
        non_null!(r);
        let rep = &(*r).0;
        if !total_sweeps.is_null() {
            *total_sweeps = rep.total_sweeps;
        }
        if !column_iterations.is_null() {
            *column_iterations = rep.column_iterations;
        }
        if !wall_time.is_null() {
            *wall_time = rep.wall_time;
        }
        SpcaStatus::Ok
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spca_report_free(r: *mut SpcaReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
