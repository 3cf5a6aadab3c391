//! Sequential least-squares finite elements for second-order elliptic
//! equations in non-divergence form, `A : D²u = f` in a rectangle with
//! Dirichlet data `u = g`.
//!
//! The solve runs in two stages:
//!
//! 1. The gradient `p = ∇u` is sought in a discontinuous, element-wise
//!    curl-free polynomial space by minimizing
//!    `Σ_K ‖A:∇q − f‖² + Σ_int μ/h_e ‖[[q⊗n]]‖² + Σ_bnd μ/h_e ‖(q − ∇g)×n‖²`.
//! 2. The scalar `u` is sought in the continuous Lagrange space by minimizing
//!    `Σ_K ‖∇v − p_h‖² + Σ_bnd 1/h ‖v − g‖²`.
//!
//! The first functional doubles as an element-wise a-posteriori estimator,
//! which drives Dörfler marking and longest-edge bisection in [`adapt`].

pub mod adapt;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod linsolve;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod report;
pub mod solver;
pub mod spaces;
pub mod vtk;

pub use error::{Error, Result};

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

/// Scalar 2D cross product `a × b = a₁b₂ − a₂b₁`.
#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}
