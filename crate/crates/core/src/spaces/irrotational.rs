//! Element-wise curl-free vector polynomials.
//!
//! On each triangle the space of curl-free vector polynomials of degree `m`
//! is spanned by gradients of the scalar monomials `X^a Y^b`,
//! `1 ≤ a + b ≤ m + 1`, in the scaled local coordinates
//! `X = (x − x_c)/√T`, `Y = (y − y_c)/√T` (barycenter `x_c`, area `T`).
//! The constant potential is dropped since its gradient vanishes.
//!
//! Basis values are the gradients with respect to `(X, Y)`, so the linear
//! family reads `(1,0), (0,1), (2X,0), (Y,X), (0,2Y)`; the returned
//! jacobians are taken with respect to the physical coordinates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::TriangleRule;
use crate::{Mat2, Vec2};

/// `(m + 2)(m + 3)/2 − 1`.
pub fn basis_dimension(m: usize) -> usize {
    (m + 2) * (m + 3) / 2 - 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrrotationalBasis {
    degree: usize,
    /// Potential exponents, by total degree then `a` descending.
    exponents: Vec<(u32, u32)>,
}

/// Value and physical jacobian of one basis function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSample {
    pub value: Vec2,
    /// `∂_j value_i`; symmetric since it is the Hessian of the potential.
    pub jacobian: Mat2,
}

/// Per-element affine normalization: barycenter and `√area`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementFrame {
    pub center: Vec2,
    pub scale: f64,
}

impl ElementFrame {
    pub fn new(center: Vec2, area: f64) -> Self {
        Self { center, scale: area.sqrt() }
    }

    pub fn of(mesh: &Mesh, t: usize) -> Self {
        Self::new(mesh.barycenter(t), mesh.triangles()[t].area)
    }
}

impl IrrotationalBasis {
    pub fn new(degree: usize) -> Self {
        let mut exponents = Vec::with_capacity(basis_dimension(degree));
        for total in 1..=degree as u32 + 1 {
            for a in (0..=total).rev() {
                exponents.push((a, total - a));
            }
        }
        Self { degree, exponents }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exponents
    }

    /// Fills `out` with one sample per basis function at the physical `point`.
    pub fn eval_into(&self, frame: &ElementFrame, point: &Vec2, out: &mut Vec<BasisSample>) {
        let n = self.degree + 2;
        let x = (point.x - frame.center.x) / frame.scale;
        let y = (point.y - frame.center.y) / frame.scale;
        // xp[k] = X^k, with xp of negative index treated as 0 via the
        // derivative factors below.
        let mut xp = [1.0f64; 8];
        let mut yp = [1.0f64; 8];
        for k in 1..n {
            xp[k] = xp[k - 1] * x;
            yp[k] = yp[k - 1] * y;
        }
        let pw = |p: &[f64; 8], k: u32| if k == 0 { 0.0 } else { p[k as usize - 1] };
        let pw2 = |p: &[f64; 8], k: u32| if k < 2 { 0.0 } else { p[k as usize - 2] };
        let inv = 1.0 / frame.scale;
        out.clear();
        for &(a, b) in &self.exponents {
            let (af, bf) = (a as f64, b as f64);
            let value = Vec2::new(af * pw(&xp, a) * yp[b as usize], bf * xp[a as usize] * pw(&yp, b));
            let hxx = af * (af - 1.0) * pw2(&xp, a) * yp[b as usize];
            let hxy = af * bf * pw(&xp, a) * pw(&yp, b);
            let hyy = bf * (bf - 1.0) * xp[a as usize] * pw2(&yp, b);
            out.push(BasisSample { value, jacobian: Mat2::new(hxx, hxy, hxy, hyy) * inv });
        }
    }

    pub fn eval(&self, frame: &ElementFrame, point: &Vec2) -> Vec<BasisSample> {
        let mut out = Vec::with_capacity(self.dim());
        self.eval_into(frame, point, &mut out);
        out
    }

    /// Element Gram matrix `∫_K φ_i · φ_j`.
    pub fn gram(&self, mesh: &Mesh, t: usize, rule: &TriangleRule) -> DMatrix<f64> {
        let nb = self.dim();
        let frame = ElementFrame::of(mesh, t);
        let corners = mesh.triangle_points(t);
        let mut g = DMatrix::zeros(nb, nb);
        let mut s = Vec::with_capacity(nb);
        for (x, w) in rule.mapped(&corners, mesh.triangles()[t].area) {
            self.eval_into(&frame, &x, &mut s);
            for i in 0..nb {
                for j in 0..nb {
                    g[(i, j)] += w * s[i].value.dot(&s[j].value);
                }
            }
        }
        g
    }

    /// Local L² projection of `q` onto the curl-free polynomials on `t`.
    pub fn l2_project<F>(&self, mesh: &Mesh, t: usize, rule: &TriangleRule, q: F) -> Result<Vec<f64>>
    where
        F: Fn(&Vec2) -> Vec2,
    {
        let nb = self.dim();
        let frame = ElementFrame::of(mesh, t);
        let corners = mesh.triangle_points(t);
        let mut rhs = DVector::zeros(nb);
        let mut s = Vec::with_capacity(nb);
        for (x, w) in rule.mapped(&corners, mesh.triangles()[t].area) {
            let qx = q(&x);
            self.eval_into(&frame, &x, &mut s);
            for i in 0..nb {
                rhs[i] += w * qx.dot(&s[i].value);
            }
        }
        let chol = self.gram(mesh, t, rule).cholesky().ok_or(Error::IllConditionedBasis { element: t })?;
        Ok(chol.solve(&rhs).iter().copied().collect())
    }
}
