//! Discrete spaces: the discontinuous curl-free space for the gradient and
//! the continuous Lagrange space for the scalar.

mod irrotational;
mod lagrange;

pub use irrotational::{basis_dimension, BasisSample, ElementFrame, IrrotationalBasis};
pub use lagrange::{local_lattice, Barycentric, LagrangeSpace};

use crate::error::{invalid, Result};
use crate::mesh::Mesh;
use crate::quadrature::TriangleRule;
use crate::{Mat2, Vec2};

/// Element-blocked coefficients of a field in the curl-free space.
#[derive(Debug, Clone)]
pub struct DiscreteGradientField {
    mesh_id: u64,
    basis: IrrotationalBasis,
    coeffs: Vec<f64>,
}

impl DiscreteGradientField {
    pub fn new(mesh: &Mesh, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let basis = IrrotationalBasis::new(degree);
        if coeffs.len() != basis.dim() * mesh.num_triangles() {
            return Err(invalid(format!(
                "expected {} coefficients, got {}",
                basis.dim() * mesh.num_triangles(),
                coeffs.len()
            )));
        }
        Ok(Self { mesh_id: mesh.id(), basis, coeffs })
    }

    pub fn zeros(mesh: &Mesh, degree: usize) -> Self {
        let basis = IrrotationalBasis::new(degree);
        let coeffs = vec![0.0; basis.dim() * mesh.num_triangles()];
        Self { mesh_id: mesh.id(), basis, coeffs }
    }

    /// Global L² projection, element by element.
    pub fn project<F>(mesh: &Mesh, degree: usize, rule: &TriangleRule, q: F) -> Result<Self>
    where
        F: Fn(&Vec2) -> Vec2,
    {
        let basis = IrrotationalBasis::new(degree);
        let mut coeffs = Vec::with_capacity(basis.dim() * mesh.num_triangles());
        for t in 0..mesh.num_triangles() {
            coeffs.extend(basis.l2_project(mesh, t, rule, &q)?);
        }
        Ok(Self { mesh_id: mesh.id(), basis, coeffs })
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn basis(&self) -> &IrrotationalBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn element_coeffs(&self, t: usize) -> &[f64] {
        let nb = self.basis.dim();
        &self.coeffs[t * nb..(t + 1) * nb]
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.mesh_id != mesh.id() {
            return Err(invalid("gradient field belongs to a different mesh"));
        }
        Ok(())
    }

    /// Value and jacobian of the restriction to element `t` at `x`.
    pub fn eval(&self, mesh: &Mesh, t: usize, x: &Vec2) -> (Vec2, Mat2) {
        let samples = self.basis.eval(&ElementFrame::of(mesh, t), x);
        combine(&samples, self.element_coeffs(t))
    }
}

pub(crate) fn combine(samples: &[BasisSample], coeffs: &[f64]) -> (Vec2, Mat2) {
    samples.iter().zip(coeffs).fold((Vec2::zeros(), Mat2::zeros()), |(v, j), (s, c)| {
        (v + s.value * *c, j + s.jacobian * *c)
    })
}

/// Coefficients over a [`LagrangeSpace`].
#[derive(Debug, Clone)]
pub struct DiscreteScalarField {
    space: LagrangeSpace,
    coeffs: Vec<f64>,
}

impl DiscreteScalarField {
    pub fn new(space: LagrangeSpace, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.num_dofs() {
            return Err(invalid(format!("expected {} coefficients, got {}", space.num_dofs(), coeffs.len())));
        }
        Ok(Self { space, coeffs })
    }

    pub fn interpolate<F: Fn(&Vec2) -> f64>(space: LagrangeSpace, u: F) -> Self {
        let coeffs = space.interpolate(u);
        Self { space, coeffs }
    }

    pub fn space(&self) -> &LagrangeSpace {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.space.degree()
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.space.mesh_id() != mesh.id() {
            return Err(invalid("scalar field belongs to a different mesh"));
        }
        Ok(())
    }

    /// Value and gradient of the restriction to element `t` at `x`.
    pub fn eval(&self, mesh: &Mesh, t: usize, x: &Vec2) -> (f64, Vec2) {
        let (vals, grads) = self.space.eval(mesh, t, x);
        let dofs = self.space.element_dofs(t);
        let mut v = 0.0;
        let mut g = Vec2::zeros();
        for (i, &d) in dofs.iter().enumerate() {
            v += self.coeffs[d] * vals[i];
            g += grads[i] * self.coeffs[d];
        }
        (v, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::triangle_rule;

    #[test]
    fn scalar_field_is_continuous_across_edges() {
        let mesh = Mesh::rect(0.0, 0.0, 1.0, 1.0, 3, 3).unwrap().bisect(&[2, 7]).unwrap();
        for m in 1..=3 {
            let space = LagrangeSpace::new(&mesh, m).unwrap();
            let coeffs: Vec<f64> = (0..space.num_dofs()).map(|i| ((i * 37 % 11) as f64).sin()).collect();
            let field = DiscreteScalarField::new(space, coeffs).unwrap();
            for (_, e) in mesh.interior_edges() {
                let a = mesh.vertices()[e.vertices[0]];
                let b = mesh.vertices()[e.vertices[1]];
                for s in [0.0, 0.21, 0.5, 0.77, 1.0] {
                    let x = a + s * (b - a);
                    let (u0, _) = field.eval(&mesh, e.triangles[0], &x);
                    let (u1, _) = field.eval(&mesh, e.triangles[1], &x);
                    assert!((u0 - u1).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn projection_error_converges_at_order_m_plus_one() {
        let q = |x: &Vec2| Vec2::new(x.x.cos() * x.y.sin(), x.x.sin() * x.y.cos());
        let rule = triangle_rule(10).unwrap();
        for m in 1..=3 {
            let mut errs = Vec::new();
            for n in [4, 8, 16] {
                let mesh = Mesh::rect(0.0, 0.0, 1.0, 1.0, n, n).unwrap();
                let f = DiscreteGradientField::project(&mesh, m, &rule, q).unwrap();
                let mut e2 = 0.0;
                for t in 0..mesh.num_triangles() {
                    let corners = mesh.triangle_points(t);
                    for (x, w) in rule.mapped(&corners, mesh.triangles()[t].area) {
                        e2 += w * (q(&x) - f.eval(&mesh, t, &x).0).norm_squared();
                    }
                }
                errs.push(e2.sqrt());
            }
            let rate = (errs[1] / errs[2]).log2();
            assert!((rate - (m as f64 + 1.0)).abs() < 0.25, "m={m} rate={rate} {errs:?}");
        }
    }

    #[test]
    fn rejects_wrong_lengths_and_meshes() {
        let mesh = Mesh::rect(0.0, 0.0, 1.0, 1.0, 1, 1).unwrap();
        let other = Mesh::rect(0.0, 0.0, 1.0, 1.0, 1, 1).unwrap();
        assert!(DiscreteGradientField::new(&mesh, 1, vec![0.0; 9]).is_err());
        let f = DiscreteGradientField::zeros(&mesh, 1);
        assert_eq!(f.coeffs().len(), 10);
        assert!(f.check_mesh(&mesh).is_ok());
        assert!(f.check_mesh(&other).is_err());
    }
}
