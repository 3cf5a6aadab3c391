//! C interface to the `nondiv-lsq` solver.
//!
//! Meshes and solutions are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns an
//! [`LsqStatus`]; the message of the last failure on the calling thread is
//! available from [`lsq_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nondiv_lsq::adapt::{dorfler_mark, estimate, EstimatorField};
use nondiv_lsq::assembly::{error_norms, ErrorNorms, SolverConfig};
use nondiv_lsq::mesh::Mesh;
use nondiv_lsq::problems::{cordes_check, ProblemCase};
use nondiv_lsq::solver::{solve, TwoStageSolution};
use nondiv_lsq::{vtk, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsqStatus {
    Ok = 0,
    InvalidArgument = 1,
    RefinementFailure = 2,
    IllConditioned = 3,
    NotElliptic = 4,
    NonConvergence = 5,
    Io = 6,
    NullPointer = 7,
    Panic = 8,
}

impl From<&Error> for LsqStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => LsqStatus::InvalidArgument,
            Error::RefinementFailure { .. } => LsqStatus::RefinementFailure,
            Error::IllConditionedBasis { .. } => LsqStatus::IllConditioned,
            Error::NotElliptic { .. } => LsqStatus::NotElliptic,
            Error::NonConvergence(_) => LsqStatus::NonConvergence,
            Error::Io(_) => LsqStatus::Io,
        }
    }
}

/// Opaque triangulation handle.
pub struct LsqMesh {
    mesh: Mesh,
}

/// Opaque handle to a two-stage solution with its estimator and errors.
pub struct LsqSolution {
    mesh: Mesh,
    solution: TwoStageSolution,
    estimator: EstimatorField,
    errors: ErrorNorms,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LsqErrors {
    pub p_l2: f64,
    pub p_energy: f64,
    pub u_l2: f64,
    pub u_energy: f64,
    pub eta_total: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LsqMeshCounts {
    pub vertices: usize,
    pub edges: usize,
    pub triangles: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> LsqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            LsqStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            LsqStatus::from(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            LsqStatus::NullPointer
        }
        Err(_) => {
            set_last_error("internal panic");
            LsqStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::InvalidArgument(format!("{what} is not valid UTF-8"))))
}

/// Uniform `nx × ny` triangulation of `[xmin, xmax] × [ymin, ymax]`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn lsq_mesh_rect(
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
    nx: usize,
    ny: usize,
    out: *mut *mut LsqMesh,
) -> LsqStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let mesh = Mesh::rect(xmin, ymin, xmax, ymax, nx, ny)?;
        *out = Box::into_raw(Box::new(LsqMesh { mesh }));
        Ok(())
    })
}

/// # Safety
/// `mesh` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsq_mesh_counts(mesh: *const LsqMesh, out: *mut LsqMeshCounts) -> LsqStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.mesh;
        *out_ref(out, "out")? =
            LsqMeshCounts { vertices: m.num_vertices(), edges: m.num_edges(), triangles: m.num_triangles() };
        Ok(())
    })
}

/// # Safety
/// `mesh` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsq_mesh_h_max(mesh: *const LsqMesh, out: *mut f64) -> LsqStatus {
    guard(|| {
        *out_ref(out, "out")? = deref(mesh, "mesh")?.mesh.h_max();
        Ok(())
    })
}

/// Longest-edge bisection of `count` marked triangles into a new mesh.
///
/// # Safety
/// `marked` must point to `count` readable ids (or be null when `count` is
/// 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsq_mesh_bisect(
    mesh: *const LsqMesh,
    marked: *const usize,
    count: usize,
    out: *mut *mut LsqMesh,
) -> LsqStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let m = &deref(mesh, "mesh")?.mesh;
        let ids: &[usize] = if count == 0 {
            &[]
        } else {
            if marked.is_null() {
                return Err(Failure::Null("marked"));
            }
            std::slice::from_raw_parts(marked, count)
        };
        *out = Box::into_raw(Box::new(LsqMesh { mesh: m.bisect(ids)? }));
        Ok(())
    })
}

/// # Safety
/// `mesh` must come from this library; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lsq_mesh_write_vtk(mesh: *const LsqMesh, path: *const c_char) -> LsqStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.mesh;
        vtk::write_mesh(Path::new(c_str(path, "path")?), m)?;
        Ok(())
    })
}

/// # Safety
/// `mesh` must come from this library and not be used afterwards. Null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn lsq_mesh_free(mesh: *mut LsqMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Two-stage solve of the named case on `mesh` with polynomial degree
/// `degree` and penalty `mu`; also evaluates the estimator and errors.
///
/// # Safety
/// `mesh` must come from this library; `case_name` must be NUL-terminated;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsq_solve(
    mesh: *const LsqMesh,
    case_name: *const c_char,
    degree: u32,
    mu: f64,
    out: *mut *mut LsqSolution,
) -> LsqStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let m = &deref(mesh, "mesh")?.mesh;
        let case = ProblemCase::by_name(c_str(case_name, "case_name")?)?;
        let cfg = SolverConfig { mu, degree: degree as usize, ..SolverConfig::default() };
        let solution = solve(m, &case, &cfg)?;
        let estimator = estimate(m, &solution.p_h, &case, &cfg)?;
        let errors = error_norms(m, &solution.p_h, &solution.u_h, &case, &cfg)?;
        *out = Box::into_raw(Box::new(LsqSolution { mesh: m.clone(), solution, estimator, errors }));
        Ok(())
    })
}

/// # Safety
/// `sol` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsq_solution_errors(sol: *const LsqSolution, out: *mut LsqErrors) -> LsqStatus {
    guard(|| {
        let s = deref(sol, "sol")?;
        *out_ref(out, "out")? = LsqErrors {
            p_l2: s.errors.p_l2,
            p_energy: s.errors.p_energy,
            u_l2: s.errors.u_l2,
            u_energy: s.errors.u_energy,
            eta_total: s.estimator.total(),
        };
        Ok(())
    })
}

/// Copies the element indicators `η_K` into `buf`, which must hold one
/// value per triangle.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lsq_solution_eta(sol: *const LsqSolution, buf: *mut f64, len: usize) -> LsqStatus {
    guard(|| {
        let s = deref(sol, "sol")?;
        let n = s.estimator.len();
        if len != n {
            return Err(Error::InvalidArgument(format!("buffer holds {len} values, mesh has {n} triangles")).into());
        }
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        let out = std::slice::from_raw_parts_mut(buf, len);
        for (t, v) in out.iter_mut().enumerate() {
            *v = s.estimator.eta(t);
        }
        Ok(())
    })
}

/// Bulk marking with fraction `theta`; writes up to `cap` triangle ids to
/// `buf` and the number marked to `count`.
///
/// # Safety
/// `buf` must point to `cap` writable values; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsq_solution_mark(
    sol: *const LsqSolution,
    theta: f64,
    buf: *mut usize,
    cap: usize,
    count: *mut usize,
) -> LsqStatus {
    guard(|| {
        let s = deref(sol, "sol")?;
        let count = out_ref(count, "count")?;
        let marked = dorfler_mark(&s.estimator, theta)?;
        *count = marked.len();
        if marked.len() > cap {
            return Err(Error::InvalidArgument(format!("{} marked, buffer holds {cap}", marked.len())).into());
        }
        if !marked.is_empty() {
            if buf.is_null() {
                return Err(Failure::Null("buf"));
            }
            std::slice::from_raw_parts_mut(buf, marked.len()).copy_from_slice(&marked);
        }
        Ok(())
    })
}

/// # Safety
/// `sol` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lsq_solution_write_vtk(sol: *const LsqSolution, path: *const c_char) -> LsqStatus {
    guard(|| {
        let s = deref(sol, "sol")?;
        vtk::write_solution(Path::new(c_str(path, "path")?), &s.mesh, &s.solution, Some(&s.estimator))?;
        Ok(())
    })
}

/// # Safety
/// `sol` must come from this library and not be used afterwards. Null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn lsq_solution_free(sol: *mut LsqSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Cordes parameter `ε` of the named case's coefficient, sampled on a
/// `samples × samples` grid.
///
/// # Safety
/// `case_name` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsq_cordes_epsilon(case_name: *const c_char, samples: usize, out: *mut f64) -> LsqStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let case = ProblemCase::by_name(c_str(case_name, "case_name")?)?;
        *out = cordes_check(&case.coefficient(), case.domain(), samples)?.epsilon;
        Ok(())
    })
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn lsq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn lsq_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
