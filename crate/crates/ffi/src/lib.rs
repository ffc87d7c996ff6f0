//! C interface to `essential_lab`.
//!
//! Objects cross the boundary as opaque handles created by `el_*_new` or
//! `el_*_run` functions and released by the matching `el_*_free`. Every
//! fallible call returns an [`ElStatus`]; on failure a description can be
//! fetched with [`el_last_error_message`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use essential_lab::distributions::{linear_space_from_correspondences, BoxConfig, BoxSpec, Correspondences5};
use essential_lab::geometry::Vec3;
use essential_lab::montecarlo::{run_experiment, Dist, ExperimentReport};
use essential_lab::solver::{solve_five_point, CountResult, LinearSpace, SolveOptions, SolveStatus};
use essential_lab::zonoid::{zonoid_lower_bound, Lambdas};
use essential_lab::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    RankDeficient = 3,
    DegenerateInput = 4,
    NumericalFailure = 5,
    Io = 6,
    Panic = 7,
}

/// Distribution selector for [`el_experiment_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElDistribution {
    UnifG = 0,
    Psi = 1,
    Box = 2,
}

/// A five-dimensional linear space of 3x3 matrices.
pub struct ElLinearSpace(LinearSpace);

/// Result of one five-point solve.
pub struct ElSolveResult(CountResult);

/// Summary of a Monte Carlo experiment.
pub struct ElExperimentReport(ExperimentReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ElStatus {
    match e {
        Error::RankDeficient { .. } => ElStatus::RankDeficient,
        Error::DegenerateInput(_) | Error::DegeneratePencil | Error::ChartSingularity(_) => ElStatus::DegenerateInput,
        Error::EliminationFailed { .. }
        | Error::EigenNoConvergence { .. }
        | Error::CrossCheckFailed { .. }
        | Error::AssertionFailure { .. } => ElStatus::NumericalFailure,
        Error::Io(_) | Error::Json(_) => ElStatus::Io,
        _ => ElStatus::InvalidArgument,
    }
}

struct Fail(ElStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ElStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> ElStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ElStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            ElStatus::Panic
        }
    }
}

unsafe fn read_array<const N: usize>(p: *const f64, what: &str) -> Result<[f64; N], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let mut out = [0.0; N];
    ptr::copy_nonoverlapping(p, out.as_mut_ptr(), N);
    Ok(out)
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message describing the last failure on this thread, or NULL if none.
/// The string is owned by the caller and must be released with
/// [`el_string_free`].
#[no_mangle]
pub extern "C" fn el_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().clone().map_or(ptr::null_mut(), CString::into_raw))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn el_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn el_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a linear space from five row-major 3x3 matrices (45 doubles).
///
/// # Safety
/// `rows` must point to 45 readable doubles and `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn el_linear_space_new(rows: *const f64, out: *mut *mut ElLinearSpace) -> ElStatus {
    guard(|| {
        let flat: [f64; 45] = read_array(rows, "rows")?;
        let rows: [[f64; 9]; 5] = std::array::from_fn(|i| std::array::from_fn(|j| flat[9 * i + j]));
        let l = LinearSpace::new(rows)?;
        write_out(out, Box::into_raw(Box::new(ElLinearSpace(l))), "out")
    })
}

/// Creates the linear space of matrices `E` with `u_i^T E v_i = 0` for five
/// correspondences given as 15 doubles each (`u_1, u_2, ...`).
///
/// # Safety
/// `u` and `v` must point to 15 readable doubles and `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn el_linear_space_from_correspondences(
    u: *const f64,
    v: *const f64,
    out: *mut *mut ElLinearSpace,
) -> ElStatus {
    guard(|| {
        let u: [f64; 15] = read_array(u, "u")?;
        let v: [f64; 15] = read_array(v, "v")?;
        let pt = |a: &[f64; 15], i: usize| Vec3::new(a[3 * i], a[3 * i + 1], a[3 * i + 2]);
        let c = Correspondences5::from_vectors(&std::array::from_fn(|i| pt(&u, i)), &std::array::from_fn(|i| pt(&v, i)))?;
        let l = linear_space_from_correspondences(&c)?;
        write_out(out, Box::into_raw(Box::new(ElLinearSpace(l))), "out")
    })
}

/// # Safety
/// `space` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn el_linear_space_free(space: *mut ElLinearSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Solves the five-point problem on `space`.
///
/// # Safety
/// `space` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn el_solve(space: *const ElLinearSpace, seed: u64, retries: u32, out: *mut *mut ElSolveResult) -> ElStatus {
    guard(|| {
        let l = handle(space, "space")?;
        let r = solve_five_point(&l.0, &SolveOptions { retries, seed });
        write_out(out, Box::into_raw(Box::new(ElSolveResult(r))), "out")
    })
}

/// Number of real solutions.
///
/// # Safety
/// `result` must be a live handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn el_solve_result_real_count(result: *const ElSolveResult, count: *mut u32) -> ElStatus {
    guard(|| write_out(count, handle(result, "result")?.0.real_count as u32, "count"))
}

/// Whether the solve gave up after all retries.
///
/// # Safety
/// `result` must be a live handle and `failed` writable.
#[no_mangle]
pub unsafe extern "C" fn el_solve_result_failed(result: *const ElSolveResult, failed: *mut bool) -> ElStatus {
    guard(|| write_out(failed, matches!(handle(result, "result")?.0.status, SolveStatus::Failed(_)), "failed"))
}

/// Copies solution `index` as a row-major 3x3 matrix into `matrix` (9 doubles).
///
/// # Safety
/// `result` must be a live handle and `matrix` must point to 9 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn el_solve_result_solution(result: *const ElSolveResult, index: u32, matrix: *mut f64) -> ElStatus {
    guard(|| {
        let r = handle(result, "result")?;
        let e = r
            .0
            .solutions
            .get(index as usize)
            .ok_or_else(|| Fail(ElStatus::InvalidArgument, format!("solution index {index} out of range")))?;
        if matrix.is_null() {
            return Err(null("matrix"));
        }
        let m = e.matrix();
        for i in 0..3 {
            for j in 0..3 {
                matrix.add(3 * i + j).write(m[(i, j)]);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `result` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn el_solve_result_free(result: *mut ElSolveResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Runs a Monte Carlo experiment. `boxes` is read only for
/// [`ElDistribution::Box`] and then holds 40 doubles `[a, b, c, d]` per point.
///
/// # Safety
/// `boxes` must point to 40 readable doubles when the distribution is `Box`;
/// `out` must be a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn el_experiment_run(
    dist: ElDistribution,
    boxes: *const f64,
    n: u64,
    seed: u64,
    workers: u32,
    out: *mut *mut ElExperimentReport,
) -> ElStatus {
    guard(|| {
        let d = match dist {
            ElDistribution::UnifG => Dist::UnifG,
            ElDistribution::Psi => Dist::Psi,
            ElDistribution::Box => {
                let flat: [f64; 40] = read_array(boxes, "boxes")?;
                let mut specs = Vec::with_capacity(10);
                for b in flat.chunks_exact(4) {
                    specs.push(BoxSpec::new(b[0], b[1], b[2], b[3])?);
                }
                let boxes: [BoxSpec; 10] = specs.try_into().expect("ten boxes");
                Dist::Box(BoxConfig { boxes })
            }
        };
        let r = run_experiment(&d, n, seed, workers as usize)?;
        write_out(out, Box::into_raw(Box::new(ElExperimentReport(r))), "out")
    })
}

/// Mean number of real solutions and its standard error.
///
/// # Safety
/// `report` must be a live handle; `mean` and `std_error` writable.
#[no_mangle]
pub unsafe extern "C" fn el_experiment_mean(report: *const ElExperimentReport, mean: *mut f64, std_error: *mut f64) -> ElStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        write_out(mean, r.mean, "mean")?;
        write_out(std_error, r.std_error, "std_error")
    })
}

/// Copies the 11 histogram bins (counts 0 through 10).
///
/// # Safety
/// `report` must be a live handle and `bins` must point to 11 writable integers.
#[no_mangle]
pub unsafe extern "C" fn el_experiment_histogram(report: *const ElExperimentReport, bins: *mut u64) -> ElStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        if bins.is_null() {
            return Err(null("bins"));
        }
        ptr::copy_nonoverlapping(r.histogram.as_ptr(), bins, 11);
        Ok(())
    })
}

/// The report as a JSON string, released with [`el_string_free`].
///
/// # Safety
/// `report` must be a live handle and `json` a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn el_experiment_to_json(report: *const ElExperimentReport, json: *mut *mut c_char) -> ElStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        let s = serde_json::to_string(r).map_err(|e| Fail(ElStatus::Io, e.to_string()))?;
        let c = CString::new(s).map_err(|e| Fail(ElStatus::Io, e.to_string()))?;
        write_out(json, c.into_raw(), "json")
    })
}

/// # Safety
/// `report` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn el_experiment_free(report: *mut ElExperimentReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Runs the zonoid lower-bound pipeline with the default scales.
///
/// # Safety
/// `bound` and `all_members` must be writable.
#[no_mangle]
pub unsafe extern "C" fn el_zonoid_lower_bound(grid: u32, bound: *mut f64, all_members: *mut bool) -> ElStatus {
    guard(|| {
        if grid == 0 {
            return Err(Fail(ElStatus::InvalidArgument, "grid must be at least 1".into()));
        }
        let r = zonoid_lower_bound(&Lambdas::default(), grid as usize)?;
        write_out(bound, r.final_bound, "bound")?;
        write_out(all_members, r.all_members, "all_members")
    })
}
