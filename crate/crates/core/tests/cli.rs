use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nondiv-lsq")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {line}"))
        .parse()
        .unwrap()
}

#[test]
fn solve_patch_case() {
    let o = run(&["solve", "--case", "patch_linear", "--degree", "1", "--nx", "4", "--tol", "1e-14"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    assert!(line.starts_with("case=patch_linear degree=1"));
    for key in ["err_p_L2", "err_u_L2", "err_p_energy", "err_u_energy"] {
        assert!(field(&line, key) < 1e-9, "{line}");
    }
}

#[test]
fn bad_arguments_exit_with_code_two() {
    for args in [
        &["solve", "--case", "ex9"][..],
        &["solve", "--degree", "4", "--nx", "2"],
        &["solve", "--mu", "0", "--nx", "2"],
        &["adapt", "--case", "ex4", "--theta", "0"],
        &["adapt", "--case", "ex4", "--theta", "1"],
        &["convergence", "--levels", "1", "--nx", "2"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
}

fn without_wall_time(csv: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let skip = header.iter().position(|h| *h == "wall_time").unwrap();
    csv.lines()
        .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != skip).map(|(_, c)| c).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn serial_convergence_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut tables = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("run{k}.csv"));
        let o = run(&[
            "convergence", "--case", "ex2", "--degree", "1", "--nx", "4", "--levels", "3", "--serial", "--csv",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        let file = std::fs::read_to_string(&path).unwrap();
        assert_eq!(file, stdout(&o));
        tables.push(without_wall_time(&file));
    }
    assert_eq!(tables[0], tables[1]);
    let header = tables[0].lines().next().unwrap();
    assert!(header.starts_with("level,h_max,dofs_p,dofs_u,err_p_L2,err_p_energy,err_u_L2,err_u_energy,eta_total"));
    assert_eq!(tables[0].lines().count(), 4);
    // parallel run gives the same numbers
    let o = run(&["convergence", "--case", "ex2", "--degree", "1", "--nx", "4", "--levels", "3"]);
    assert_eq!(without_wall_time(&stdout(&o)), tables[0]);
}

#[test]
fn check_cordes_reports_epsilon() {
    let o = run(&["check-cordes", "--case", "ex2", "--samples", "50"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let eps: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("epsilon = "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((eps - 0.6).abs() < 1e-12, "{text}");
}

fn check_vtk(path: &Path) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# vtk DataFile Version 3.0"));
    lines.next();
    assert_eq!(lines.next(), Some("ASCII"));
    assert_eq!(lines.next(), Some("DATASET UNSTRUCTURED_GRID"));
    let points: usize = text
        .lines()
        .find_map(|l| l.strip_prefix("POINTS "))
        .and_then(|r| r.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(text.contains(&format!("POINT_DATA {points}")));
    assert!(text.contains("SCALARS u_h double 1"));
}

#[test]
fn vtk_output_for_solve_and_adapt() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["solve", "--case", "ex1", "--degree", "2", "--nx", "4", "--out", out]);
    assert!(o.status.success());
    check_vtk(&dir.path().join("ex1_m2.vtk"));

    let o = run(&["adapt", "--case", "ex4", "--max-rounds", "3", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 4);
    for r in 0..3 {
        check_vtk(&dir.path().join(format!("ex4_round{r:02}.vtk")));
    }
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# test\ncase = patch_quadratic\ndegree = 2\nnx = 3\ntol = 1e-14\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let line = stdout(&run(&["solve", "--config", cfg]));
    assert!(line.starts_with("case=patch_quadratic degree=2"), "{line}");
    assert!(field(&line, "err_u_L2") < 1e-9);

    let line = stdout(&run(&["solve", "--config", cfg, "--degree", "1"]));
    assert!(line.starts_with("case=patch_quadratic degree=1"), "{line}");
    assert!(field(&line, "err_u_L2") > 1e-6);

    std::fs::write(dir.path().join("bad.cfg"), "colour = red\n").unwrap();
    let o = run(&["solve", "--config", dir.path().join("bad.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
