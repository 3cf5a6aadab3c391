use nondiv_lsq::adapt::{adapt_loop, report_of, AdaptConfig};
use nondiv_lsq::assembly::SolverConfig;
use nondiv_lsq::problems::ProblemCase;

/// Spearman rank correlation without ties.
fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        for (k, &i) in idx.iter().enumerate() {
            r[i] = k as f64;
        }
        r
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

#[test]
fn patch_case_stops_after_one_round() {
    let case = ProblemCase::by_name("patch_linear").unwrap();
    for degree in 1..=3 {
        let cfg = AdaptConfig { solver: SolverConfig::with_degree(degree), ..AdaptConfig::default() };
        let rounds = adapt_loop(&case, &cfg).unwrap();
        assert_eq!(rounds.len(), 1, "degree {degree}");
        assert!(rounds[0].marked.is_empty());
    }
}

#[test]
fn corner_singularity_run() {
    let case = ProblemCase::by_name("ex4").unwrap();
    let cfg = AdaptConfig { max_dofs: 8000, ..AdaptConfig::default() };
    let rounds = adapt_loop(&case, &cfg).unwrap();
    assert!(rounds.len() >= 6);
    assert!(rounds.iter().all(|r| r.row.dofs_p <= 8000 || r.row.level == 0));
    let eta: Vec<f64> = rounds.iter().map(|r| r.row.eta_total).collect();
    let err: Vec<f64> = rounds.iter().map(|r| r.row.err_p_energy).collect();
    assert!((spearman(&eta, &err) - 1.0).abs() < 1e-12, "{eta:?} {err:?}");
    for w in rounds.windows(2) {
        assert!(w[1].mesh.num_triangles() > w[0].mesh.num_triangles());
    }
    let last = rounds.last().unwrap();
    let m = &last.mesh;
    let h_min = m.triangles().iter().map(|t| t.diameter).fold(f64::INFINITY, f64::min);
    let h_corner = m
        .triangles()
        .iter()
        .filter(|t| t.vertices.iter().any(|&v| m.vertices()[v].norm() < 1e-14))
        .map(|t| t.diameter)
        .fold(f64::INFINITY, f64::min);
    assert!(h_corner <= h_min * (1.0 + 1e-12), "{h_corner} vs {h_min}");

    let report = report_of(&rounds);
    assert!(!report.uniform);
    let csv = report.to_csv_string().unwrap();
    assert_eq!(csv.lines().count(), rounds.len() + 1);
}

#[test]
fn round_cap_and_bad_theta() {
    let case = ProblemCase::by_name("ex1").unwrap();
    let cfg = AdaptConfig { max_rounds: Some(2), initial_cells: Some(4), ..AdaptConfig::default() };
    assert_eq!(adapt_loop(&case, &cfg).unwrap().len(), 2);
    for theta in [0.0, 1.0, f64::NAN] {
        let cfg = AdaptConfig { theta, ..AdaptConfig::default() };
        assert!(adapt_loop(&case, &cfg).is_err());
    }
    let cfg = AdaptConfig { solver: SolverConfig { mu: -1.0, ..SolverConfig::default() }, ..AdaptConfig::default() };
    assert!(adapt_loop(&case, &cfg).is_err());
}
