//! The two-stage solve: gradient first, then the scalar.

use log::debug;

use crate::assembly::{assemble_p, assemble_u, SolverConfig};
use crate::error::Result;
use crate::linsolve::{cg_solve, Preconditioner, SolveOptions, SolveStats};
use crate::mesh::Mesh;
use crate::problems::ProblemCase;
use crate::spaces::{basis_dimension, DiscreteGradientField, DiscreteScalarField};

#[derive(Debug, Clone)]
pub struct TwoStageSolution {
    pub p_h: DiscreteGradientField,
    pub u_h: DiscreteScalarField,
    pub stats_p: SolveStats,
    pub stats_u: SolveStats,
}

impl TwoStageSolution {
    pub fn dofs_p(&self) -> usize {
        self.p_h.coeffs().len()
    }

    pub fn dofs_u(&self) -> usize {
        self.u_h.coeffs().len()
    }
}

fn options(cfg: &SolverConfig, preconditioner: Preconditioner) -> SolveOptions {
    SolveOptions { tol: cfg.tol, max_iter: cfg.max_iter, preconditioner }
}

/// Stage one, with block-Jacobi preconditioning on the element blocks.
pub fn solve_p(mesh: &Mesh, case: &ProblemCase, cfg: &SolverConfig) -> Result<(DiscreteGradientField, SolveStats)> {
    let sys = assemble_p(mesh, case, cfg)?;
    let mut x = vec![0.0; sys.dim()];
    let opts = options(cfg, Preconditioner::BlockJacobi(basis_dimension(cfg.degree)));
    let stats = cg_solve(&sys.matrix, &sys.rhs, &mut x, &opts)?;
    debug!("p-stage: {} unknowns, {} CG iterations", sys.dim(), stats.iterations);
    Ok((DiscreteGradientField::new(mesh, cfg.degree, x)?, stats))
}

/// Stage two, given the gradient.
pub fn solve_u(
    mesh: &Mesh,
    case: &ProblemCase,
    cfg: &SolverConfig,
    p_h: &DiscreteGradientField,
) -> Result<(DiscreteScalarField, SolveStats)> {
    let (space, sys) = assemble_u(mesh, case, cfg, p_h)?;
    let mut x = vec![0.0; sys.dim()];
    let stats = cg_solve(&sys.matrix, &sys.rhs, &mut x, &options(cfg, Preconditioner::Diagonal))?;
    debug!("u-stage: {} unknowns, {} CG iterations", sys.dim(), stats.iterations);
    Ok((DiscreteScalarField::new(space, x)?, stats))
}

pub fn solve(mesh: &Mesh, case: &ProblemCase, cfg: &SolverConfig) -> Result<TwoStageSolution> {
    let (p_h, stats_p) = solve_p(mesh, case, cfg)?;
    let (u_h, stats_u) = solve_u(mesh, case, cfg, &p_h)?;
    Ok(TwoStageSolution { p_h, u_h, stats_p, stats_u })
}
