//! Continuous Lagrange elements of degree 1 to 3 on triangles.

use crate::error::{invalid, Result};
use crate::mesh::Mesh;
use crate::Vec2;

/// Barycentric lattice indices `(i0, i1, i2)`, `i0 + i1 + i2 = m`, in local
/// node order: vertices, then the interior nodes of each local edge `k`
/// (running from vertex `k` to vertex `k + 1`), then element-interior nodes.
pub fn local_lattice(m: usize) -> Vec<[usize; 3]> {
    let mut nodes = vec![[m, 0, 0], [0, m, 0], [0, 0, m]];
    for k in 0..3 {
        for s in 1..m {
            let mut l = [0; 3];
            l[k] = m - s;
            l[(k + 1) % 3] = s;
            nodes.push(l);
        }
    }
    for i in 1..m {
        for j in 1..m - i {
            nodes.push([m - i - j, i, j]);
        }
    }
    nodes
}

/// Affine element geometry: barycentric coordinates of points and their
/// constant gradients.
#[derive(Debug, Clone, Copy)]
pub struct Barycentric {
    origin: Vec2,
    /// Rows are `∇λ1`, `∇λ2`.
    inv: nalgebra::Matrix2<f64>,
}

impl Barycentric {
    pub fn new(corners: &[Vec2; 3]) -> Self {
        let jac = nalgebra::Matrix2::from_columns(&[corners[1] - corners[0], corners[2] - corners[0]]);
        let inv = jac.try_inverse().expect("degenerate triangle");
        Self { origin: corners[0], inv }
    }

    pub fn coords(&self, p: &Vec2) -> [f64; 3] {
        let l = self.inv * (p - self.origin);
        [1.0 - l.x - l.y, l.x, l.y]
    }

    pub fn gradients(&self) -> [Vec2; 3] {
        let g1 = Vec2::new(self.inv[(0, 0)], self.inv[(0, 1)]);
        let g2 = Vec2::new(self.inv[(1, 0)], self.inv[(1, 1)]);
        [-(g1 + g2), g1, g2]
    }
}

/// `P_i(λ) = Π_{l<i} (mλ − l)/(l + 1)` and its derivative.
fn lattice_factor(m: usize, i: usize, lambda: f64) -> (f64, f64) {
    let mf = m as f64;
    let mut value = 1.0;
    let mut deriv = 0.0;
    for l in 0..i {
        let c = 1.0 / (l as f64 + 1.0);
        let f = (mf * lambda - l as f64) * c;
        deriv = deriv * f + value * mf * c;
        value *= f;
    }
    (value, deriv)
}

#[derive(Debug, Clone)]
pub struct LagrangeSpace {
    degree: usize,
    mesh_id: u64,
    lattice: Vec<[usize; 3]>,
    /// `element_dofs[t * n_local + i]`.
    element_dofs: Vec<usize>,
    nodes: Vec<Vec2>,
    on_boundary: Vec<bool>,
}

impl LagrangeSpace {
    pub fn new(mesh: &Mesh, degree: usize) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(invalid(format!("Lagrange degree {degree} outside 1..=3")));
        }
        let m = degree;
        let lattice = local_lattice(m);
        let n_local = lattice.len();
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let per_edge = m - 1;
        let per_cell = n_local - 3 - 3 * per_edge;
        let n = nv + ne * per_edge + mesh.num_triangles() * per_cell;

        let mut element_dofs = Vec::with_capacity(mesh.num_triangles() * n_local);
        let mut nodes = vec![Vec2::zeros(); n];
        let mut on_boundary = vec![false; n];

        for (t, tri) in mesh.triangles().iter().enumerate() {
            let corners = mesh.triangle_points(t);
            let base = element_dofs.len();
            element_dofs.extend_from_slice(&tri.vertices);
            for k in 0..3 {
                let e = tri.edges[k];
                let forward = mesh.edges()[e].vertices[0] == tri.vertices[k];
                for s in 1..m {
                    let offset = if forward { s - 1 } else { m - 1 - s };
                    element_dofs.push(nv + e * per_edge + offset);
                }
            }
            for c in 0..per_cell {
                element_dofs.push(nv + ne * per_edge + t * per_cell + c);
            }
            for (i, l) in lattice.iter().enumerate() {
                let p = (corners[0] * l[0] as f64 + corners[1] * l[1] as f64 + corners[2] * l[2] as f64) / m as f64;
                nodes[element_dofs[base + i]] = p;
            }
        }
        for (e, edge) in mesh.boundary_edges() {
            for v in edge.vertices {
                on_boundary[v] = true;
            }
            for s in 0..per_edge {
                on_boundary[nv + e * per_edge + s] = true;
            }
        }

        Ok(Self { degree, mesh_id: mesh.id(), lattice, element_dofs, nodes, on_boundary })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn num_dofs(&self) -> usize {
        self.nodes.len()
    }

    pub fn local_size(&self) -> usize {
        self.lattice.len()
    }

    pub fn element_dofs(&self, t: usize) -> &[usize] {
        let n = self.lattice.len();
        &self.element_dofs[t * n..(t + 1) * n]
    }

    /// Coordinates of global node `i`.
    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn is_boundary_node(&self, i: usize) -> bool {
        self.on_boundary[i]
    }

    /// Shape function values and gradients at a point given by its
    /// barycentric coordinates on an element.
    pub fn eval_local(&self, geo: &Barycentric, point: &Vec2, values: &mut [f64], grads: &mut [Vec2]) {
        let lam = geo.coords(point);
        let glam = geo.gradients();
        let m = self.degree;
        for (n, l) in self.lattice.iter().enumerate() {
            let f = [0, 1, 2].map(|c| lattice_factor(m, l[c], lam[c]));
            values[n] = f[0].0 * f[1].0 * f[2].0;
            grads[n] = glam[0] * (f[0].1 * f[1].0 * f[2].0)
                + glam[1] * (f[0].0 * f[1].1 * f[2].0)
                + glam[2] * (f[0].0 * f[1].0 * f[2].1);
        }
    }

    pub fn eval(&self, mesh: &Mesh, t: usize, point: &Vec2) -> (Vec<f64>, Vec<Vec2>) {
        let geo = Barycentric::new(&mesh.triangle_points(t));
        let n = self.local_size();
        let mut values = vec![0.0; n];
        let mut grads = vec![Vec2::zeros(); n];
        self.eval_local(&geo, point, &mut values, &mut grads);
        (values, grads)
    }

    /// Nodal interpolation coefficients of `u`.
    pub fn interpolate<F: Fn(&Vec2) -> f64>(&self, u: F) -> Vec<f64> {
        self.nodes.iter().map(u).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dof_counts() {
        let mesh = Mesh::rect(0.0, 0.0, 1.0, 1.0, 3, 2).unwrap();
        let p1 = LagrangeSpace::new(&mesh, 1).unwrap();
        assert_eq!(p1.local_size(), 3);
        assert_eq!(p1.num_dofs(), mesh.num_vertices());
        let p2 = LagrangeSpace::new(&mesh, 2).unwrap();
        assert_eq!(p2.local_size(), 6);
        assert_eq!(p2.num_dofs(), mesh.num_vertices() + mesh.num_edges());
        let p3 = LagrangeSpace::new(&mesh, 3).unwrap();
        assert_eq!(p3.local_size(), 10);
        assert_eq!(p3.num_dofs(), mesh.num_vertices() + 2 * mesh.num_edges() + mesh.num_triangles());
        assert!(LagrangeSpace::new(&mesh, 0).is_err());
        assert!(LagrangeSpace::new(&mesh, 4).is_err());
    }

    #[test]
    fn kronecker_property_and_shared_nodes() {
        let mesh = Mesh::rect(0.0, 0.0, 1.0, 1.0, 2, 2).unwrap().bisect(&[0, 5]).unwrap();
        for m in 1..=3 {
            let space = LagrangeSpace::new(&mesh, m).unwrap();
            for t in 0..mesh.num_triangles() {
                let dofs = space.element_dofs(t).to_vec();
                for (i, &gi) in dofs.iter().enumerate() {
                    let (vals, _) = space.eval(&mesh, t, &space.nodes()[gi]);
                    for (j, v) in vals.iter().enumerate() {
                        let expected = if i == j { 1.0 } else { 0.0 };
                        assert!((v - expected).abs() < 1e-12, "m={m} t={t} i={i} j={j}: {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let mesh = Mesh::rect(-1.0, -1.0, 1.0, 1.0, 3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in 1..=3 {
            let space = LagrangeSpace::new(&mesh, m).unwrap();
            for t in 0..mesh.num_triangles() {
                let [a, b, c] = mesh.triangle_points(t);
                for _ in 0..10 {
                    let (mut r, mut s): (f64, f64) = (rng.random(), rng.random());
                    if r + s > 1.0 {
                        (r, s) = (1.0 - r, 1.0 - s);
                    }
                    let p = a + r * (b - a) + s * (c - a);
                    let (vals, grads) = space.eval(&mesh, t, &p);
                    assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-13);
                    assert!(grads.iter().sum::<Vec2>().norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn boundary_flags() {
        let mesh = Mesh::rect(0.0, 0.0, 1.0, 1.0, 4, 4).unwrap();
        for m in 1..=3 {
            let space = LagrangeSpace::new(&mesh, m).unwrap();
            for (i, p) in space.nodes().iter().enumerate() {
                assert_eq!(space.is_boundary_node(i), mesh.domain().on_boundary(p));
            }
        }
    }
}
