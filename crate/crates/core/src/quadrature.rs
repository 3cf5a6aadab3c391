//! Quadrature on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}` and the
//! reference edge `[0, 1]`.
//!
//! Triangle rules up to degree 8 come from fully symmetric positive-weight
//! tables (Dunavant). Higher degrees use a collapsed Gauss–Legendre product
//! rule averaged over the six vertex permutations, which keeps the rule
//! symmetric, positive and strictly interior.

use crate::error::{invalid, Result};
use crate::Vec2;

pub const MAX_TRIANGLE_DEGREE: usize = 12;
pub const MAX_EDGE_DEGREE: usize = 40;

#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<Vec2>,
    /// Sums to 1/2, the reference area.
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

#[derive(Debug, Clone)]
pub struct EdgeRule {
    /// Parameters in (0, 1).
    pub points: Vec<f64>,
    /// Sums to 1.
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

/// Symmetric orbit in barycentric coordinates with weight relative to area 1.
enum Orbit {
    Centroid(f64),
    /// `(a, a, 1 − 2a)` and permutations.
    Three(f64, f64),
    /// `(a, b, 1 − a − b)` and permutations.
    Six(f64, f64, f64),
}

use Orbit::*;

fn table(degree: usize) -> Option<&'static [Orbit]> {
    const D1: &[Orbit] = &[Centroid(1.0)];
    const D2: &[Orbit] = &[Three(1.0 / 6.0, 1.0 / 3.0)];
    const D4: &[Orbit] = &[
        Three(0.445948490915965, 0.223381589678011),
        Three(0.091576213509771, 0.109951743655322),
    ];
    const D5: &[Orbit] = &[
        Centroid(0.225),
        Three(0.470142064105115, 0.132394152788506),
        Three(0.101286507323456, 0.125939180544827),
    ];
    const D6: &[Orbit] = &[
        Three(0.249286745170910, 0.116786275726379),
        Three(0.063089014491502, 0.050844906370207),
        Six(0.053145049844817, 0.310352451033784, 0.082851075618374),
    ];
    const D8: &[Orbit] = &[
        Centroid(0.144315607677787),
        Three(0.459292588292723, 0.095091634267285),
        Three(0.170569307751760, 0.103217370534718),
        Three(0.050547228317031, 0.032458497623198),
        Six(0.008394777409958, 0.263112829634638, 0.027230314174435),
    ];
    match degree {
        1 => Some(D1),
        2 => Some(D2),
        3 | 4 => Some(D4),
        5 => Some(D5),
        6 => Some(D6),
        7 | 8 => Some(D8),
        _ => None,
    }
}

/// Symmetric positive-weight rule exact for polynomials of total degree
/// `degree` on the reference triangle.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule> {
    if degree == 0 || degree > MAX_TRIANGLE_DEGREE {
        return Err(invalid(format!(
            "triangle rule degree {degree} outside 1..={MAX_TRIANGLE_DEGREE}"
        )));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut push = |l: [f64; 3], w: f64| {
        points.push(Vec2::new(l[1], l[2]));
        weights.push(0.5 * w);
    };
    match table(degree) {
        Some(orbits) => {
            for orbit in orbits {
                match *orbit {
                    Centroid(w) => push([1.0 / 3.0; 3], w),
                    Three(a, w) => {
                        let b = 1.0 - 2.0 * a;
                        for l in [[b, a, a], [a, b, a], [a, a, b]] {
                            push(l, w);
                        }
                    }
                    Six(a, b, w) => {
                        let c = 1.0 - a - b;
                        for l in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                            push(l, w);
                        }
                    }
                }
            }
        }
        None => {
            let (u_pts, u_wts) = gauss_legendre((degree + 3) / 2);
            let (v_pts, v_wts) = gauss_legendre((degree + 2) / 2);
            for (u, wu) in u_pts.iter().zip(&u_wts) {
                for (v, wv) in v_pts.iter().zip(&v_wts) {
                    let (xi, eta) = (*u, v * (1.0 - u));
                    // Area-1 weight: the collapsed Jacobian is (1 − u) on area 1/2.
                    let w = 2.0 * wu * wv * (1.0 - u) / 6.0;
                    let l = [1.0 - xi - eta, xi, eta];
                    for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                        push(perm.map(|i| l[i]), w);
                    }
                }
            }
        }
    }
    Ok(TriangleRule { points, weights, exact_degree: degree })
}

/// Gauss–Legendre rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> Result<EdgeRule> {
    if degree == 0 || degree > MAX_EDGE_DEGREE {
        return Err(invalid(format!("edge rule degree {degree} outside 1..={MAX_EDGE_DEGREE}")));
    }
    let (points, weights) = gauss_legendre(degree / 2 + 1);
    Ok(EdgeRule { points, weights, exact_degree: degree })
}

/// `n`-point Gauss–Legendre nodes (ascending) and weights mapped to `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

impl TriangleRule {
    /// Physical points and weights on the triangle `corners` (any orientation).
    pub fn mapped<'a>(&'a self, corners: &'a [Vec2; 3], area: f64) -> impl Iterator<Item = (Vec2, f64)> + 'a {
        let scale = 2.0 * area;
        let (a, e1, e2) = (corners[0], corners[1] - corners[0], corners[2] - corners[0]);
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(p, w)| (a + p.x * e1 + p.y * e2, w * scale))
    }
}

impl EdgeRule {
    /// Physical points and weights on the segment `a → b`.
    pub fn mapped(&self, a: Vec2, b: Vec2) -> impl Iterator<Item = (Vec2, f64)> + '_ {
        let len = (b - a).norm();
        self.points.iter().zip(&self.weights).map(move |(t, w)| (a + *t * (b - a), w * len))
    }
}
