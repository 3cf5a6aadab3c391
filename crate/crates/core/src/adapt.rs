//! Element estimator, Dörfler marking and the solve–estimate–mark–refine loop.

use std::time::Instant;

use log::info;
use rayon::prelude::*;

use crate::assembly::{edge_residual, error_norms, volume_residual, ErrorNorms, SolverConfig};
use crate::error::{invalid, Result};
use crate::mesh::Mesh;
use crate::problems::ProblemCase;
use crate::report::{ErrorReport, ErrorRow};
use crate::solver::{solve, TwoStageSolution};
use crate::spaces::{basis_dimension, DiscreteGradientField};

pub const DEFAULT_THETA: f64 = 0.4;
pub const DEFAULT_MAX_DOFS: usize = 200_000;
/// Total estimator below which the loop stops refining.
pub const DEFAULT_ETA_TOL: f64 = 1e-8;

/// Squared element indicators `η_K²`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorField {
    eta_sq: Vec<f64>,
}

impl EstimatorField {
    pub fn from_squares(eta_sq: Vec<f64>) -> Result<Self> {
        if eta_sq.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("indicators must be non-negative"));
        }
        Ok(Self { eta_sq })
    }

    pub fn len(&self) -> usize {
        self.eta_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_sq.is_empty()
    }

    pub fn eta(&self, t: usize) -> f64 {
        self.eta_sq[t].sqrt()
    }

    pub fn squares(&self) -> &[f64] {
        &self.eta_sq
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.eta_sq.iter().sum()
    }

    /// `(Σ η_K²)^{1/2}`.
    pub fn total(&self) -> f64 {
        self.sum_of_squares().sqrt()
    }
}

/// `η_K² = ‖A:∇p_h − f‖²_K + Σ_{e ⊂ ∂K} h_e⁻¹‖residual‖²_e`, where interior
/// edges contribute the jump to both neighbours and boundary edges the
/// tangential data mismatch.
pub fn estimate(mesh: &Mesh, p_h: &DiscreteGradientField, case: &ProblemCase, cfg: &SolverConfig) -> Result<EstimatorField> {
    p_h.check_mesh(mesh)?;
    let (vrule, erule) = cfg.rules()?;
    let edges: Vec<f64> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| edge_residual(mesh, p_h, case, &erule, e))
        .collect();
    let eta_sq = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let vol = volume_residual(mesh, p_h, case, &vrule, t);
            vol + mesh.triangles()[t].edges.iter().map(|&e| edges[e]).sum::<f64>()
        })
        .collect();
    Ok(EstimatorField { eta_sq })
}

/// Smallest greedy set carrying a `θ` fraction of `Σ η_K²`, largest
/// indicators first, ties broken by lower element id.
pub fn dorfler_mark(eta: &EstimatorField, theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid(format!("theta must lie in (0, 1), got {theta}")));
    }
    let total = eta.sum_of_squares();
    if total == 0.0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..eta.len()).collect();
    order.sort_by(|&a, &b| eta.eta_sq[b].total_cmp(&eta.eta_sq[a]).then(a.cmp(&b)));
    let target = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for t in order {
        if acc >= target {
            break;
        }
        acc += eta.eta_sq[t];
        marked.push(t);
    }
    Ok(marked)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptConfig {
    pub theta: f64,
    /// Stop before solving on a mesh with more stage-one unknowns.
    pub max_dofs: usize,
    pub max_rounds: Option<usize>,
    /// Cells per side of the initial mesh; the case default when `None`.
    pub initial_cells: Option<usize>,
    pub eta_tol: f64,
    pub solver: SolverConfig,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            max_dofs: DEFAULT_MAX_DOFS,
            max_rounds: None,
            initial_cells: None,
            eta_tol: DEFAULT_ETA_TOL,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdaptRound {
    pub mesh: Mesh,
    pub solution: TwoStageSolution,
    pub estimator: EstimatorField,
    pub errors: ErrorNorms,
    /// Elements marked for refinement; empty on the last round.
    pub marked: Vec<usize>,
    pub row: ErrorRow,
}

/// Solve, estimate and record one mesh.
pub fn solve_and_measure(
    mesh: &Mesh,
    case: &ProblemCase,
    cfg: &SolverConfig,
    level: usize,
) -> Result<(TwoStageSolution, EstimatorField, ErrorNorms, ErrorRow)> {
    let start = Instant::now();
    let sol = solve(mesh, case, cfg)?;
    let eta = estimate(mesh, &sol.p_h, case, cfg)?;
    let errors = error_norms(mesh, &sol.p_h, &sol.u_h, case, cfg)?;
    let row = ErrorRow {
        level,
        h_max: mesh.h_max(),
        dofs_p: sol.dofs_p(),
        dofs_u: sol.dofs_u(),
        err_p_l2: errors.p_l2,
        err_p_energy: errors.p_energy,
        err_u_l2: errors.u_l2,
        err_u_energy: errors.u_energy,
        eta_total: eta.total(),
        cg_iters_p: sol.stats_p.iterations,
        cg_iters_u: sol.stats_u.iterations,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((sol, eta, errors, row))
}

/// Runs the adaptive loop, calling `on_round` after each completed round.
pub fn adapt_loop_with<F>(case: &ProblemCase, cfg: &AdaptConfig, mut on_round: F) -> Result<()>
where
    F: FnMut(&AdaptRound) -> Result<()>,
{
    cfg.solver.validate()?;
    if !(cfg.theta > 0.0 && cfg.theta < 1.0) {
        return Err(invalid(format!("theta must lie in (0, 1), got {}", cfg.theta)));
    }
    let d = case.domain();
    let n = cfg.initial_cells.unwrap_or_else(|| case.default_cells());
    let ny = ((n as f64) * d.height() / d.width()).round().max(1.0) as usize;
    let mut mesh = Mesh::rect(d.xmin, d.ymin, d.xmax, d.ymax, n, ny)?;
    let nb = basis_dimension(cfg.solver.degree);
    let mut round = 0;
    loop {
        if cfg.max_rounds.is_some_and(|r| round >= r) {
            break;
        }
        if round > 0 && nb * mesh.num_triangles() > cfg.max_dofs {
            break;
        }
        let (solution, estimator, errors, row) = solve_and_measure(&mesh, case, &cfg.solver, round)?;
        let marked = if estimator.total() <= cfg.eta_tol {
            Vec::new()
        } else {
            dorfler_mark(&estimator, cfg.theta)?
        };
        info!(
            "round {round}: {} elements, {} p-dofs, eta {:.3e}, |||p - p_h||| {:.3e}, {} marked",
            mesh.num_triangles(),
            row.dofs_p,
            row.eta_total,
            row.err_p_energy,
            marked.len()
        );
        let next = if marked.is_empty() { None } else { Some(mesh.bisect(&marked)?) };
        on_round(&AdaptRound { mesh, solution, estimator, errors, marked, row })?;
        match next {
            Some(m) => mesh = m,
            None => break,
        }
        round += 1;
    }
    Ok(())
}

pub fn adapt_loop(case: &ProblemCase, cfg: &AdaptConfig) -> Result<Vec<AdaptRound>> {
    let mut rounds = Vec::new();
    adapt_loop_with(case, cfg, |r| {
        rounds.push(r.clone());
        Ok(())
    })?;
    Ok(rounds)
}

pub fn report_of(rounds: &[AdaptRound]) -> ErrorReport {
    let mut report = ErrorReport::adaptive();
    report.rows = rounds.iter().map(|r| r.row.clone()).collect();
    report
}
