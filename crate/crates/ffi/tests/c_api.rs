use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use nondiv_lsq_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(lsq_last_error()) }.to_string_lossy().into_owned()
}

fn rect(n: usize) -> *mut LsqMesh {
    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { lsq_mesh_rect(0.0, 0.0, 1.0, 1.0, n, n, &mut mesh) }, LsqStatus::Ok);
    assert!(!mesh.is_null());
    mesh
}

#[test]
fn mesh_lifecycle() {
    let mesh = rect(4);
    let mut counts = LsqMeshCounts::default();
    let mut h = 0.0;
    unsafe {
        assert_eq!(lsq_mesh_counts(mesh, &mut counts), LsqStatus::Ok);
        assert_eq!(counts, LsqMeshCounts { vertices: 25, edges: 56, triangles: 32 });
        assert_eq!(lsq_mesh_h_max(mesh, &mut h), LsqStatus::Ok);
        assert!((h - 2f64.sqrt() / 4.0).abs() < 1e-15);

        let marked = [0usize, 5];
        let mut fine = ptr::null_mut();
        assert_eq!(lsq_mesh_bisect(mesh, marked.as_ptr(), marked.len(), &mut fine), LsqStatus::Ok);
        let mut fine_counts = LsqMeshCounts::default();
        lsq_mesh_counts(fine, &mut fine_counts);
        assert!(fine_counts.triangles > counts.triangles);

        let bad = [1000usize];
        let mut none = ptr::null_mut();
        assert_eq!(lsq_mesh_bisect(mesh, bad.as_ptr(), 1, &mut none), LsqStatus::InvalidArgument);
        assert!(none.is_null());
        assert!(last_error().contains("out of range"));

        lsq_mesh_free(fine);
        lsq_mesh_free(mesh);
        lsq_mesh_free(ptr::null_mut());
    }
}

#[test]
fn invalid_arguments_and_null_pointers() {
    let mut mesh = ptr::null_mut();
    unsafe {
        assert_eq!(lsq_mesh_rect(0.0, 0.0, 1.0, 1.0, 0, 3, &mut mesh), LsqStatus::InvalidArgument);
        assert!(mesh.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(lsq_mesh_rect(0.0, 0.0, 1.0, 1.0, 2, 2, ptr::null_mut()), LsqStatus::NullPointer);
        assert_eq!(lsq_mesh_h_max(ptr::null(), &mut 0.0), LsqStatus::NullPointer);

        let m = rect(2);
        let case = CString::new("ex9").unwrap();
        let mut sol = ptr::null_mut();
        assert_eq!(lsq_solve(m, case.as_ptr(), 1, 10.0, &mut sol), LsqStatus::InvalidArgument);
        assert!(last_error().contains("ex9"));
        let case = CString::new("ex1").unwrap();
        assert_eq!(lsq_solve(m, case.as_ptr(), 7, 10.0, &mut sol), LsqStatus::InvalidArgument);
        assert_eq!(lsq_solve(m, case.as_ptr(), 1, -1.0, &mut sol), LsqStatus::InvalidArgument);
        assert!(sol.is_null());
        lsq_mesh_free(m);
    }
}

#[test]
fn patch_solve_through_the_c_interface() {
    let mesh = rect(4);
    let case = CString::new("patch_linear").unwrap();
    let mut sol = ptr::null_mut();
    unsafe {
        assert_eq!(lsq_solve(mesh, case.as_ptr(), 1, 10.0, &mut sol), LsqStatus::Ok, "{}", last_error());
        let mut e = LsqErrors::default();
        assert_eq!(lsq_solution_errors(sol, &mut e), LsqStatus::Ok);
        assert!(e.p_l2 < 1e-9 && e.u_l2 < 1e-9 && e.eta_total < 1e-8, "{e:?}");

        let mut eta = vec![0.0; 32];
        assert_eq!(lsq_solution_eta(sol, eta.as_mut_ptr(), eta.len()), LsqStatus::Ok);
        assert!(eta.iter().all(|v| *v >= 0.0 && *v < 1e-8));
        assert_eq!(lsq_solution_eta(sol, eta.as_mut_ptr(), 3), LsqStatus::InvalidArgument);

        let mut count = 0;
        let mut ids = vec![0usize; 32];
        assert_eq!(lsq_solution_mark(sol, 0.0, ids.as_mut_ptr(), ids.len(), &mut count), LsqStatus::InvalidArgument);
        lsq_solution_free(sol);
        lsq_mesh_free(mesh);
    }
}

#[test]
fn adaptive_round_trip_and_vtk() {
    let dir = tempfile::tempdir().unwrap();
    let case = CString::new("ex4").unwrap();
    let mut mesh = rect(4);
    unsafe {
        for _ in 0..3 {
            let mut sol = ptr::null_mut();
            assert_eq!(lsq_solve(mesh, case.as_ptr(), 1, 10.0, &mut sol), LsqStatus::Ok);
            let mut counts = LsqMeshCounts::default();
            lsq_mesh_counts(mesh, &mut counts);
            let mut ids = vec![0usize; counts.triangles];
            let mut n = 0;
            assert_eq!(lsq_solution_mark(sol, 0.4, ids.as_mut_ptr(), ids.len(), &mut n), LsqStatus::Ok);
            assert!(n > 0 && n <= counts.triangles);
            let mut next = ptr::null_mut();
            assert_eq!(lsq_mesh_bisect(mesh, ids.as_ptr(), n, &mut next), LsqStatus::Ok);
            let path = CString::new(dir.path().join("sol.vtk").to_str().unwrap()).unwrap();
            assert_eq!(lsq_solution_write_vtk(sol, path.as_ptr()), LsqStatus::Ok);
            lsq_solution_free(sol);
            lsq_mesh_free(mesh);
            mesh = next;
        }
        let path = CString::new(dir.path().join("mesh.vtk").to_str().unwrap()).unwrap();
        assert_eq!(lsq_mesh_write_vtk(mesh, path.as_ptr()), LsqStatus::Ok);
        let missing = CString::new("/nonexistent/dir/mesh.vtk").unwrap();
        assert_eq!(lsq_mesh_write_vtk(mesh, missing.as_ptr()), LsqStatus::Io);
        lsq_mesh_free(mesh);
    }
    let text = std::fs::read_to_string(dir.path().join("sol.vtk")).unwrap();
    assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(text.contains("SCALARS eta double 1"));
}

#[test]
fn cordes_and_version() {
    let mut eps = 0.0;
    let case = CString::new("ex2").unwrap();
    assert_eq!(unsafe { lsq_cordes_epsilon(case.as_ptr(), 20, &mut eps) }, LsqStatus::Ok);
    assert!((eps - 0.6).abs() < 1e-12);
    let v = unsafe { CStr::from_ptr(lsq_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/nondiv_lsq.h")
}

#[test]
fn header_declares_the_interface() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "lsq_mesh_rect",
        "lsq_mesh_counts",
        "lsq_mesh_h_max",
        "lsq_mesh_bisect",
        "lsq_mesh_write_vtk",
        "lsq_mesh_free",
        "lsq_solve",
        "lsq_solution_errors",
        "lsq_solution_eta",
        "lsq_solution_mark",
        "lsq_solution_write_vtk",
        "lsq_solution_free",
        "lsq_cordes_epsilon",
        "lsq_last_error",
        "lsq_version",
        "LSQ_STATUS_NON_CONVERGENCE = 5",
        "typedef struct LsqMesh LsqMesh;",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "nondiv_lsq.h"

int main(void) {
    LsqMesh *mesh = NULL;
    LsqSolution *sol = NULL;
    LsqErrors e;
    if (lsq_mesh_rect(0.0, 0.0, 1.0, 1.0, 4, 4, &mesh) != LSQ_STATUS_OK) return 1;
    if (lsq_solve(mesh, "patch_quadratic", 2, 10.0, &sol) != LSQ_STATUS_OK) return 2;
    if (lsq_solution_errors(sol, &e) != LSQ_STATUS_OK) return 3;
    if (lsq_solve(mesh, "nope", 1, 10.0, &sol) != LSQ_STATUS_INVALID_ARGUMENT) return 4;
    printf("%.3e %.3e %s\n", e.p_l2, e.u_l2, lsq_last_error());
    lsq_solution_free(sol);
    lsq_mesh_free(mesh);
    return (e.p_l2 < 1e-8 && e.u_l2 < 1e-8) ? 0 : 5;
}
"#;

/// Compiles and runs a small C client against the static library when a C
/// compiler is available.
#[test]
fn c_client_links_and_runs() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(cc.status.success());
    // target/<profile>/deps/<test binary> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libnondiv_lsq_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = dir.path().join("client");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to build");
    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "client exited with {:?}: {stdout}", out.status);
    assert!(stdout.contains("unknown case 'nope'"));
}
