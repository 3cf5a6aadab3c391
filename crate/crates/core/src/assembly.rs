//! Linear systems for both least-squares stages, the discrete functionals
//! and error norms against exact solutions.
//!
//! Stage-one unknowns are element-blocked: element `t` owns coefficients
//! `t·n_b .. (t+1)·n_b`. Interior jump terms use
//! `[[q⊗n]] : [[r⊗n]] = (q⁺ − q⁻)·(r⁺ − r⁻)`; boundary terms use the scalar
//! cross product `q × n`.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::linsolve::{CsrMatrix, DEFAULT_TOLERANCE};
use crate::mesh::Mesh;
use crate::problems::ProblemCase;
use crate::quadrature::{edge_rule, triangle_rule, EdgeRule, TriangleRule, MAX_EDGE_DEGREE, MAX_TRIANGLE_DEGREE};
use crate::spaces::{
    combine, BasisSample, Barycentric, DiscreteGradientField, DiscreteScalarField, ElementFrame, IrrotationalBasis,
    LagrangeSpace,
};
use crate::{cross, Mat2, Vec2};

pub const DEFAULT_MU: f64 = 10.0;

/// Boundary weight of the second-stage functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryWeight {
    /// `1/h` with `h` the largest element diameter.
    #[default]
    GlobalH,
    /// `1/h_e` per boundary edge.
    EdgeLength,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Jump penalty `μ > 0`.
    pub mu: f64,
    /// Polynomial degree of both discrete spaces.
    pub degree: usize,
    /// Triangle rule degree; `None` means `2m + 4`.
    pub volume_quad_degree: Option<usize>,
    /// Edge rule degree; `None` means `2m + 2`.
    pub edge_quad_degree: Option<usize>,
    /// Relative residual tolerance of the linear solves.
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub u_boundary_weight: BoundaryWeight,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: DEFAULT_MU,
            degree: 1,
            volume_quad_degree: None,
            edge_quad_degree: None,
            tol: DEFAULT_TOLERANCE,
            max_iter: None,
            u_boundary_weight: BoundaryWeight::GlobalH,
        }
    }
}

impl SolverConfig {
    pub fn with_degree(degree: usize) -> Self {
        Self { degree, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(invalid(format!("penalty mu must be positive, got {}", self.mu)));
        }
        if !(1..=3).contains(&self.degree) {
            return Err(invalid(format!("degree {} outside 1..=3", self.degree)));
        }
        if !(self.tol > 0.0) {
            return Err(invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        let v = self.volume_degree();
        if v == 0 || v > MAX_TRIANGLE_DEGREE {
            return Err(invalid(format!("volume quadrature degree {v} outside 1..={MAX_TRIANGLE_DEGREE}")));
        }
        let e = self.edge_degree();
        if e == 0 || e > MAX_EDGE_DEGREE {
            return Err(invalid(format!("edge quadrature degree {e} outside 1..={MAX_EDGE_DEGREE}")));
        }
        Ok(())
    }

    pub fn volume_degree(&self) -> usize {
        self.volume_quad_degree.unwrap_or(2 * self.degree + 4)
    }

    pub fn edge_degree(&self) -> usize {
        self.edge_quad_degree.unwrap_or(2 * self.degree + 2)
    }

    pub(crate) fn rules(&self) -> Result<(TriangleRule, EdgeRule)> {
        self.validate()?;
        Ok((triangle_rule(self.volume_degree())?, edge_rule(self.edge_degree())?))
    }

    fn u_boundary_h(&self, mesh: &Mesh, edge_len: f64) -> f64 {
        match self.u_boundary_weight {
            BoundaryWeight::GlobalH => mesh.h_max(),
            BoundaryWeight::EdgeLength => edge_len,
        }
    }
}

/// Symmetric positive definite matrix with its right-hand side.
#[derive(Debug, Clone)]
pub struct SparseSpdSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

impl SparseSpdSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }
}

/// `A : J` for symmetric `J`.
#[inline]
fn frob(a: &Mat2, j: &Mat2) -> f64 {
    a.component_mul(j).sum()
}

fn edge_points(mesh: &Mesh, e: usize, rule: &EdgeRule) -> Vec<(Vec2, f64)> {
    let edge = &mesh.edges()[e];
    let v = mesh.vertices();
    rule.mapped(v[edge.vertices[0]], v[edge.vertices[1]]).collect()
}

/// Dense blocks of one block row of the stage-one matrix.
struct BlockRow {
    /// Column block ids, ascending, with `nb × nb` row-major values each.
    blocks: Vec<(usize, Vec<f64>)>,
    rhs: Vec<f64>,
}

fn p_block_row(
    mesh: &Mesh,
    case: &ProblemCase,
    mu: f64,
    basis: &IrrotationalBasis,
    vrule: &TriangleRule,
    erule: &EdgeRule,
    t: usize,
) -> BlockRow {
    let nb = basis.dim();
    let tri = &mesh.triangles()[t];
    let frame = ElementFrame::of(mesh, t);
    let mut diag = vec![0.0; nb * nb];
    let mut rhs = vec![0.0; nb];
    let mut own: Vec<BasisSample> = Vec::with_capacity(nb);
    let mut other: Vec<BasisSample> = Vec::with_capacity(nb);
    let mut s = vec![0.0; nb];

    for (x, w) in vrule.mapped(&mesh.triangle_points(t), tri.area) {
        let a = case.a(&x);
        let f = case.f(&x);
        basis.eval_into(&frame, &x, &mut own);
        for (si, b) in s.iter_mut().zip(&own) {
            *si = frob(&a, &b.jacobian);
        }
        for i in 0..nb {
            let wi = w * s[i];
            rhs[i] += wi * f;
            for j in 0..nb {
                diag[i * nb + j] += wi * s[j];
            }
        }
    }

    let mut blocks = Vec::with_capacity(4);
    for &e in &tri.edges {
        let edge = &mesh.edges()[e];
        let pen = mu / edge.length;
        if edge.is_boundary {
            let n = edge.normal;
            for (x, w) in edge_points(mesh, e, erule) {
                let gn = cross(&case.grad_g(&x), &n);
                basis.eval_into(&frame, &x, &mut own);
                for (si, b) in s.iter_mut().zip(&own) {
                    *si = cross(&b.value, &n);
                }
                for i in 0..nb {
                    let wi = w * pen * s[i];
                    rhs[i] += wi * gn;
                    for j in 0..nb {
                        diag[i * nb + j] += wi * s[j];
                    }
                }
            }
        } else {
            let nbr = if edge.triangles[0] == t { edge.triangles[1] } else { edge.triangles[0] };
            let nframe = ElementFrame::of(mesh, nbr);
            let mut off = vec![0.0; nb * nb];
            for (x, w) in edge_points(mesh, e, erule) {
                basis.eval_into(&frame, &x, &mut own);
                basis.eval_into(&nframe, &x, &mut other);
                for i in 0..nb {
                    let vi = own[i].value * (w * pen);
                    for j in 0..nb {
                        diag[i * nb + j] += vi.dot(&own[j].value);
                        off[i * nb + j] -= vi.dot(&other[j].value);
                    }
                }
            }
            blocks.push((nbr, off));
        }
    }
    blocks.push((t, diag));
    blocks.sort_by_key(|b| b.0);
    BlockRow { blocks, rhs }
}

/// Stage-one system for the gradient.
pub fn assemble_p(mesh: &Mesh, case: &ProblemCase, cfg: &SolverConfig) -> Result<SparseSpdSystem> {
    let (vrule, erule) = cfg.rules()?;
    let basis = IrrotationalBasis::new(cfg.degree);
    let nb = basis.dim();
    let rows: Vec<BlockRow> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| p_block_row(mesh, case, cfg.mu, &basis, &vrule, &erule, t))
        .collect();

    let n = nb * mesh.num_triangles();
    let nnz: usize = rows.iter().map(|r| r.blocks.len() * nb * nb).sum();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    let mut rhs = Vec::with_capacity(n);
    row_ptr.push(0);
    for row in &rows {
        for i in 0..nb {
            for (c, block) in &row.blocks {
                col_idx.extend(c * nb..(c + 1) * nb);
                values.extend_from_slice(&block[i * nb..(i + 1) * nb]);
            }
            row_ptr.push(col_idx.len());
        }
        rhs.extend_from_slice(&row.rhs);
    }
    Ok(SparseSpdSystem { matrix: CsrMatrix::from_raw(n, n, row_ptr, col_idx, values)?, rhs })
}

struct LocalU {
    mat: Vec<f64>,
    rhs: Vec<f64>,
}

/// Stage-two system for the scalar, given the stage-one gradient.
pub fn assemble_u(
    mesh: &Mesh,
    case: &ProblemCase,
    cfg: &SolverConfig,
    p_h: &DiscreteGradientField,
) -> Result<(LagrangeSpace, SparseSpdSystem)> {
    p_h.check_mesh(mesh)?;
    let (vrule, erule) = cfg.rules()?;
    let space = LagrangeSpace::new(mesh, cfg.degree)?;
    let nl = space.local_size();
    let mut boundary_of = vec![Vec::new(); mesh.num_triangles()];
    for (e, edge) in mesh.boundary_edges() {
        boundary_of[edge.triangles[0]].push(e);
    }

    let locals: Vec<LocalU> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let corners = mesh.triangle_points(t);
            let geo = Barycentric::new(&corners);
            let pframe = ElementFrame::of(mesh, t);
            let pc = p_h.element_coeffs(t);
            let mut mat = vec![0.0; nl * nl];
            let mut rhs = vec![0.0; nl];
            let mut vals = vec![0.0; nl];
            let mut grads = vec![Vec2::zeros(); nl];
            let mut ps = Vec::with_capacity(pc.len());
            for (x, w) in vrule.mapped(&corners, mesh.triangles()[t].area) {
                space.eval_local(&geo, &x, &mut vals, &mut grads);
                p_h.basis().eval_into(&pframe, &x, &mut ps);
                let p = combine(&ps, pc).0;
                for i in 0..nl {
                    rhs[i] += w * grads[i].dot(&p);
                    for j in 0..nl {
                        mat[i * nl + j] += w * grads[i].dot(&grads[j]);
                    }
                }
            }
            for &e in &boundary_of[t] {
                let weight = 1.0 / cfg.u_boundary_h(mesh, mesh.edges()[e].length);
                for (x, w) in edge_points(mesh, e, &erule) {
                    space.eval_local(&geo, &x, &mut vals, &mut grads);
                    let g = case.g(&x);
                    for i in 0..nl {
                        let wi = w * weight * vals[i];
                        rhs[i] += wi * g;
                        for j in 0..nl {
                            mat[i * nl + j] += wi * vals[j];
                        }
                    }
                }
            }
            LocalU { mat, rhs }
        })
        .collect();

    let n = space.num_dofs();
    let mut triplets = Vec::with_capacity(locals.len() * nl * nl);
    let mut rhs = vec![0.0; n];
    for (t, local) in locals.iter().enumerate() {
        let dofs = space.element_dofs(t);
        for i in 0..nl {
            rhs[dofs[i]] += local.rhs[i];
            for j in 0..nl {
                triplets.push((dofs[i], dofs[j], local.mat[i * nl + j]));
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(n, n, triplets)?;
    Ok((space, SparseSpdSystem { matrix, rhs }))
}

/// Unweighted pieces of the stage-one functional.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FunctionalTerms {
    /// `Σ_K ‖A:∇q − f‖²_K`.
    pub volume: f64,
    /// `Σ_{interior e} h_e⁻¹ ‖[[q⊗n]]‖²_e`, each edge once.
    pub interior: f64,
    /// `Σ_{boundary e} h_e⁻¹ ‖(q − ∇g)×n‖²_e`.
    pub boundary: f64,
}

impl FunctionalTerms {
    /// `volume + μ (interior + boundary)`.
    pub fn total(&self, mu: f64) -> f64 {
        self.volume + mu * (self.interior + self.boundary)
    }
}

fn field_at(q: &DiscreteGradientField, mesh: &Mesh, t: usize, x: &Vec2, buf: &mut Vec<BasisSample>) -> (Vec2, Mat2) {
    q.basis().eval_into(&ElementFrame::of(mesh, t), x, buf);
    combine(buf, q.element_coeffs(t))
}

pub(crate) fn volume_residual(
    mesh: &Mesh,
    q: &DiscreteGradientField,
    case: &ProblemCase,
    vrule: &TriangleRule,
    t: usize,
) -> f64 {
    let mut buf = Vec::new();
    vrule
        .mapped(&mesh.triangle_points(t), mesh.triangles()[t].area)
        .map(|(x, w)| {
            let (_, j) = field_at(q, mesh, t, &x, &mut buf);
            w * (frob(&case.a(&x), &j) - case.f(&x)).powi(2)
        })
        .sum()
}

/// `h_e⁻¹ ‖[[q⊗n]]‖²_e` for interior edges, `h_e⁻¹ ‖(q − ∇g)×n‖²_e` on the
/// boundary.
pub(crate) fn edge_residual(
    mesh: &Mesh,
    q: &DiscreteGradientField,
    case: &ProblemCase,
    erule: &EdgeRule,
    e: usize,
) -> f64 {
    let edge = &mesh.edges()[e];
    let mut buf = Vec::new();
    let sum: f64 = edge_points(mesh, e, erule)
        .into_iter()
        .map(|(x, w)| {
            let (qa, _) = field_at(q, mesh, edge.triangles[0], &x, &mut buf);
            if edge.is_boundary {
                w * cross(&(qa - case.grad_g(&x)), &edge.normal).powi(2)
            } else {
                let (qb, _) = field_at(q, mesh, edge.triangles[1], &x, &mut buf);
                w * (qa - qb).norm_squared()
            }
        })
        .sum();
    sum / edge.length
}

/// Stage-one functional of `q`, split into its three terms.
pub fn functional_p(
    mesh: &Mesh,
    q: &DiscreteGradientField,
    case: &ProblemCase,
    cfg: &SolverConfig,
) -> Result<FunctionalTerms> {
    q.check_mesh(mesh)?;
    let (vrule, erule) = cfg.rules()?;
    let vol: Vec<f64> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| volume_residual(mesh, q, case, &vrule, t))
        .collect();
    let edges: Vec<f64> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| edge_residual(mesh, q, case, &erule, e))
        .collect();
    let mut terms = FunctionalTerms { volume: vol.iter().sum(), ..Default::default() };
    for (edge, r) in mesh.edges().iter().zip(&edges) {
        if edge.is_boundary {
            terms.boundary += r;
        } else {
            terms.interior += r;
        }
    }
    Ok(terms)
}

/// Stage-two functional `Σ_K ‖∇v − p_h‖² + Σ_bnd h⁻¹ ‖v − g‖²`.
pub fn functional_u(
    mesh: &Mesh,
    v: &DiscreteScalarField,
    p_h: &DiscreteGradientField,
    case: &ProblemCase,
    cfg: &SolverConfig,
) -> Result<f64> {
    v.check_mesh(mesh)?;
    p_h.check_mesh(mesh)?;
    let (vrule, erule) = cfg.rules()?;
    let vol: Vec<f64> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let mut buf = Vec::new();
            vrule
                .mapped(&mesh.triangle_points(t), mesh.triangles()[t].area)
                .map(|(x, w)| {
                    let (_, gv) = v.eval(mesh, t, &x);
                    let (p, _) = field_at(p_h, mesh, t, &x, &mut buf);
                    w * (gv - p).norm_squared()
                })
                .sum()
        })
        .collect();
    let mut total: f64 = vol.iter().sum();
    for (e, edge) in mesh.boundary_edges() {
        let weight = 1.0 / cfg.u_boundary_h(mesh, edge.length);
        for (x, w) in edge_points(mesh, e, &erule) {
            let (val, _) = v.eval(mesh, edge.triangles[0], &x);
            total += w * weight * (val - case.g(&x)).powi(2);
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorms {
    pub p_l2: f64,
    /// Broken `H¹` seminorm plus `h_e`-weighted jump and tangential terms.
    pub p_energy: f64,
    pub u_l2: f64,
    /// `H¹` seminorm plus the `h`-weighted boundary term.
    pub u_energy: f64,
}

/// Errors of the discrete pair against the exact solution.
pub fn error_norms(
    mesh: &Mesh,
    p_h: &DiscreteGradientField,
    u_h: &DiscreteScalarField,
    case: &ProblemCase,
    cfg: &SolverConfig,
) -> Result<ErrorNorms> {
    p_h.check_mesh(mesh)?;
    u_h.check_mesh(mesh)?;
    let (vrule, erule) = cfg.rules()?;
    let per_element: Vec<[f64; 4]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let mut buf = Vec::new();
            let mut acc = [0.0; 4];
            for (x, w) in vrule.mapped(&mesh.triangle_points(t), mesh.triangles()[t].area) {
                let (p, j) = field_at(p_h, mesh, t, &x, &mut buf);
                let (u, gu) = u_h.eval(mesh, t, &x);
                acc[0] += w * (case.grad_u(&x) - p).norm_squared();
                acc[1] += w * (case.hess_u(&x) - j).norm_squared();
                acc[2] += w * (case.u(&x) - u).powi(2);
                acc[3] += w * (case.grad_u(&x) - gu).norm_squared();
            }
            acc
        })
        .collect();
    let mut sums = [0.0; 4];
    for acc in &per_element {
        for k in 0..4 {
            sums[k] += acc[k];
        }
    }
    let mut p_edges = 0.0;
    let mut u_bnd = 0.0;
    let mut buf = Vec::new();
    for (e, edge) in mesh.edges().iter().enumerate() {
        if !edge.is_boundary {
            // The exact gradient is continuous, so only the discrete jump remains.
            p_edges += edge_residual(mesh, p_h, case, &erule, e);
            continue;
        }
        let weight = 1.0 / cfg.u_boundary_h(mesh, edge.length);
        let t = edge.triangles[0];
        for (x, w) in edge_points(mesh, e, &erule) {
            let (p, _) = field_at(p_h, mesh, t, &x, &mut buf);
            p_edges += w * cross(&(case.grad_u(&x) - p), &edge.normal).powi(2) / edge.length;
            let (u, _) = u_h.eval(mesh, t, &x);
            u_bnd += w * weight * (case.u(&x) - u).powi(2);
        }
    }
    Ok(ErrorNorms {
        p_l2: sums[0].sqrt(),
        p_energy: (sums[1] + p_edges).sqrt(),
        u_l2: sums[2].sqrt(),
        u_energy: (sums[3] + u_bnd).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { mu: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig::with_degree(4).validate().is_err());
        assert!(SolverConfig { tol: -1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { volume_quad_degree: Some(13), ..Default::default() }.validate().is_err());
        assert_eq!(SolverConfig::with_degree(2).volume_degree(), 8);
        assert_eq!(SolverConfig::with_degree(2).edge_degree(), 6);
    }

    #[test]
    fn two_element_dimensions_and_symmetry() {
        let mesh = Mesh::rect(0.0, 0.0, 1.0, 1.0, 1, 1).unwrap();
        let case = ProblemCase::by_name("patch_linear").unwrap();
        let sys = assemble_p(&mesh, &case, &SolverConfig::default()).unwrap();
        assert_eq!(sys.dim(), 10);
        assert!(sys.matrix.is_symmetric(1e-14));
        let p = DiscreteGradientField::zeros(&mesh, 1);
        let (space, usys) = assemble_u(&mesh, &case, &SolverConfig::default(), &p).unwrap();
        assert_eq!(space.num_dofs(), 4);
        assert_eq!(usys.dim(), 4);
    }

    #[test]
    fn exact_members_have_zero_functional() {
        let mesh = Mesh::rect(0.0, 0.0, 1.0, 1.0, 3, 3).unwrap();
        let case = ProblemCase::by_name("patch_quadratic").unwrap();
        let cfg = SolverConfig::with_degree(1);
        let rule = triangle_rule(6).unwrap();
        let q = DiscreteGradientField::project(&mesh, 1, &rule, |x| case.grad_u(x)).unwrap();
        let terms = functional_p(&mesh, &q, &case, &cfg).unwrap();
        assert!(terms.total(cfg.mu) < 1e-20, "{terms:?}");
    }

    #[test]
    fn mismatched_mesh_is_rejected() {
        let mesh = Mesh::rect(0.0, 0.0, 1.0, 1.0, 2, 2).unwrap();
        let other = Mesh::rect(0.0, 0.0, 1.0, 1.0, 2, 2).unwrap();
        let case = ProblemCase::by_name("patch_linear").unwrap();
        let p = DiscreteGradientField::zeros(&other, 1);
        assert!(assemble_u(&mesh, &case, &SolverConfig::default(), &p).is_err());
    }
}
