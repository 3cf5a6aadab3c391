//! Manufactured test problems `A : D²u = f`, `u = g`, and the Cordes
//! condition check for their coefficients.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::mesh::Rect;
use crate::{Mat2, Vec2};

pub const DEFAULT_ALPHA: f64 = 1.2;

/// `xy/|xy|`, set to 0 near the axes where it is undefined.
fn sign_xy(x: &Vec2) -> f64 {
    let xy = x.x * x.y;
    if xy.abs() < 1e-14 {
        0.0
    } else {
        xy.signum()
    }
}

/// Symmetric coefficient fields `A(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Identity,
    /// `[[|sin 4πx|^{1/5} + 1, cos 2πxy], [cos 2πxy, |sin 4πy|^{1/5} + 1]]`.
    RoughOscillating,
    /// `[[2, xy/|xy|], [xy/|xy|, 2]]`, discontinuous across the axes.
    SignCoupled,
    /// `I + x xᵀ`.
    RankOneRadial,
}

impl Coefficient {
    pub fn eval(&self, x: &Vec2) -> Mat2 {
        match self {
            Coefficient::Identity => Mat2::identity(),
            Coefficient::RoughOscillating => {
                let a11 = (4.0 * PI * x.x).sin().abs().powf(0.2) + 1.0;
                let a22 = (4.0 * PI * x.y).sin().abs().powf(0.2) + 1.0;
                let a12 = (2.0 * PI * x.x * x.y).cos();
                Mat2::new(a11, a12, a12, a22)
            }
            Coefficient::SignCoupled => {
                let s = sign_xy(x);
                Mat2::new(2.0, s, s, 2.0)
            }
            Coefficient::RankOneRadial => Mat2::identity() + x * x.transpose(),
        }
    }

    /// False where the field has no pointwise value.
    pub fn is_defined(&self, x: &Vec2) -> bool {
        match self {
            Coefficient::SignCoupled => (x.x * x.y).abs() >= 1e-14,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Solution {
    /// `xy sin(2πx) sin(3πy)`.
    Oscillatory,
    /// `|x|^α`.
    CornerPower(f64),
    /// `1 + x + 2y`.
    Linear,
    /// `x² + xy − y`.
    Quadratic,
}

impl Solution {
    fn value(&self, p: &Vec2) -> f64 {
        let (x, y) = (p.x, p.y);
        match *self {
            Solution::Oscillatory => x * y * (2.0 * PI * x).sin() * (3.0 * PI * y).sin(),
            Solution::CornerPower(alpha) => p.norm().powf(alpha),
            Solution::Linear => 1.0 + x + 2.0 * y,
            Solution::Quadratic => x * x + x * y - y,
        }
    }

    fn gradient(&self, p: &Vec2) -> Vec2 {
        let (x, y) = (p.x, p.y);
        match *self {
            Solution::Oscillatory => {
                let (fx, dfx, _) = osc_factor(x, 2.0);
                let (gy, dgy, _) = osc_factor(y, 3.0);
                Vec2::new(dfx * gy, fx * dgy)
            }
            Solution::CornerPower(alpha) => {
                let r = p.norm();
                if r < 1e-14 {
                    Vec2::zeros()
                } else {
                    p * (alpha * r.powf(alpha - 2.0))
                }
            }
            Solution::Linear => Vec2::new(1.0, 2.0),
            Solution::Quadratic => Vec2::new(2.0 * x + y, x - 1.0),
        }
    }

    fn hessian(&self, p: &Vec2) -> Mat2 {
        let (x, y) = (p.x, p.y);
        match *self {
            Solution::Oscillatory => {
                let (fx, dfx, d2fx) = osc_factor(x, 2.0);
                let (gy, dgy, d2gy) = osc_factor(y, 3.0);
                let xy = dfx * dgy;
                Mat2::new(d2fx * gy, xy, xy, fx * d2gy)
            }
            Solution::CornerPower(alpha) => {
                let r = p.norm();
                if r < 1e-14 {
                    Mat2::zeros()
                } else {
                    Mat2::identity() * (alpha * r.powf(alpha - 2.0))
                        + (p * p.transpose()) * (alpha * (alpha - 2.0) * r.powf(alpha - 4.0))
                }
            }
            Solution::Linear => Mat2::zeros(),
            Solution::Quadratic => Mat2::new(2.0, 1.0, 1.0, 0.0),
        }
    }
}

/// `s ↦ s sin(kπs)` with its first two derivatives.
fn osc_factor(s: f64, k: f64) -> (f64, f64, f64) {
    let w = k * PI;
    let (sn, cs) = (w * s).sin_cos();
    (s * sn, sn + w * s * cs, 2.0 * w * cs - w * w * s * sn)
}

/// A problem with known exact solution; `f` and `g` are manufactured from it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemCase {
    name: &'static str,
    domain: Rect,
    coefficient: Coefficient,
    solution: Solution,
}

pub const CASE_NAMES: [&str; 5] = ["ex1", "ex2", "ex4", "patch_linear", "patch_quadratic"];

impl ProblemCase {
    /// Looks a case up by name; `ex4` uses [`DEFAULT_ALPHA`].
    pub fn by_name(name: &str) -> Result<Self> {
        Self::with_alpha(name, DEFAULT_ALPHA)
    }

    /// Like [`by_name`](Self::by_name); `alpha` only affects `ex4`.
    pub fn with_alpha(name: &str, alpha: f64) -> Result<Self> {
        let sym = Rect { xmin: -1.0, ymin: -1.0, xmax: 1.0, ymax: 1.0 };
        let unit = Rect { xmin: 0.0, ymin: 0.0, xmax: 1.0, ymax: 1.0 };
        let (name, domain, coefficient, solution) = match name {
            "ex1" => ("ex1", sym, Coefficient::RoughOscillating, Solution::Oscillatory),
            "ex2" => ("ex2", sym, Coefficient::SignCoupled, Solution::Oscillatory),
            "ex4" => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(invalid(format!("alpha must be positive, got {alpha}")));
                }
                ("ex4", unit, Coefficient::RankOneRadial, Solution::CornerPower(alpha))
            }
            "patch_linear" => ("patch_linear", unit, Coefficient::Identity, Solution::Linear),
            "patch_quadratic" => ("patch_quadratic", unit, Coefficient::Identity, Solution::Quadratic),
            other => {
                return Err(invalid(format!(
                    "unknown case '{other}' (expected one of {})",
                    CASE_NAMES.join(", ")
                )))
            }
        };
        Ok(Self { name, domain, coefficient, solution })
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn domain(&self) -> &Rect {
        &self.domain
    }

    pub fn coefficient(&self) -> Coefficient {
        self.coefficient
    }

    /// Cells per side of the starting mesh: cell side 1/10.
    pub fn default_cells(&self) -> usize {
        (self.domain.width() * 10.0).round() as usize
    }

    pub fn a(&self, x: &Vec2) -> Mat2 {
        self.coefficient.eval(x)
    }

    pub fn u(&self, x: &Vec2) -> f64 {
        self.solution.value(x)
    }

    /// `p = ∇u`.
    pub fn grad_u(&self, x: &Vec2) -> Vec2 {
        self.solution.gradient(x)
    }

    pub fn hess_u(&self, x: &Vec2) -> Mat2 {
        self.solution.hessian(x)
    }

    /// `f = A : D²u`.
    pub fn f(&self, x: &Vec2) -> f64 {
        self.a(x).component_mul(&self.hess_u(x)).sum()
    }

    /// Dirichlet data, the trace of `u`.
    pub fn g(&self, x: &Vec2) -> f64 {
        self.u(x)
    }

    pub fn grad_g(&self, x: &Vec2) -> Vec2 {
        self.grad_u(x)
    }
}

impl fmt::Display for ProblemCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CordesReport {
    /// Largest sampled `|A|²/(tr A)²`.
    pub max_ratio: f64,
    /// Largest `ε ∈ (0, 1]` with `ratio ≤ 1/(1 + ε)` at every evaluated point.
    pub epsilon: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Smallest sampled eigenvalue of `A`.
    pub min_eigenvalue: f64,
    pub points_used: usize,
    pub points_skipped: usize,
    pub gamma_checks: usize,
    pub gamma_violations: usize,
    /// `min (√(1−ε)|B| − |γA:B − tr B|)/|B|` over the random checks.
    pub gamma_worst_margin: f64,
}

pub const CORDES_CHECK_POINTS: usize = 100;
pub const CORDES_CHECK_MATRICES: usize = 100;

/// Samples `|A|²/(tr A)²` on a cell-centered `samples × samples` grid and at
/// random points, then checks `|γA:B − tr B| ≤ √(1−ε)|B|` with
/// `γ = tr A/|A|²` for random matrices `B`.
pub fn cordes_check(coef: &Coefficient, domain: &Rect, samples: usize) -> Result<CordesReport> {
    cordes_check_with(coef, domain, samples, CORDES_CHECK_POINTS, CORDES_CHECK_MATRICES, 0x5eed)
}

pub fn cordes_check_with(
    coef: &Coefficient,
    domain: &Rect,
    samples: usize,
    check_points: usize,
    check_matrices: usize,
    seed: u64,
) -> Result<CordesReport> {
    if samples == 0 {
        return Err(invalid("cordes_check needs at least one sample per direction"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(samples * samples + check_points);
    for j in 0..samples {
        for i in 0..samples {
            let x = domain.xmin + (i as f64 + 0.5) * domain.width() / samples as f64;
            let y = domain.ymin + (j as f64 + 0.5) * domain.height() / samples as f64;
            points.push(Vec2::new(x, y));
        }
    }
    let grid_len = points.len();
    let mut random_points = Vec::with_capacity(check_points);
    while random_points.len() < check_points {
        let p = Vec2::new(
            rng.random_range(domain.xmin..domain.xmax),
            rng.random_range(domain.ymin..domain.ymax),
        );
        if coef.is_defined(&p) {
            random_points.push(p);
        }
    }
    points.extend_from_slice(&random_points);

    let mut report = CordesReport {
        max_ratio: 0.0,
        epsilon: 1.0,
        gamma_min: f64::INFINITY,
        gamma_max: f64::NEG_INFINITY,
        min_eigenvalue: f64::INFINITY,
        points_used: 0,
        points_skipped: 0,
        gamma_checks: 0,
        gamma_violations: 0,
        gamma_worst_margin: f64::INFINITY,
    };
    for (k, p) in points.iter().enumerate() {
        if !coef.is_defined(p) {
            report.points_skipped += 1;
            continue;
        }
        let a = coef.eval(p);
        let trace = a.trace();
        if !(trace > 0.0) {
            return Err(Error::NotElliptic { x: p.x, y: p.y, trace });
        }
        let norm2 = a.norm_squared();
        report.max_ratio = report.max_ratio.max(norm2 / (trace * trace));
        let gamma = trace / norm2;
        report.gamma_min = report.gamma_min.min(gamma);
        report.gamma_max = report.gamma_max.max(gamma);
        report.min_eigenvalue = report.min_eigenvalue.min(a.symmetric_eigenvalues().min());
        if k < grid_len {
            report.points_used += 1;
        }
    }
    report.epsilon = (1.0 / report.max_ratio - 1.0).min(1.0);

    let bound = (1.0 - report.epsilon).max(0.0).sqrt();
    for p in &random_points {
        let a = coef.eval(p);
        let gamma = a.trace() / a.norm_squared();
        for _ in 0..check_matrices {
            let b = Mat2::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let bn = b.norm();
            let lhs = (gamma * a.component_mul(&b).sum() - b.trace()).abs();
            let margin = (bound * bn - lhs) / bn;
            report.gamma_checks += 1;
            report.gamma_worst_margin = report.gamma_worst_margin.min(margin);
            if margin < -1e-12 {
                report.gamma_violations += 1;
            }
        }
    }
    Ok(report)
}
