//! Conforming triangulations of rectangles and longest-edge bisection.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{invalid, Error, Result};
use crate::Vec2;

/// Closure propagation depth allowed in [`Mesh::bisect`] before giving up.
pub const DEFAULT_REFINE_DEPTH_CAP: usize = 64;

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

/// Axis-aligned rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        let finite = [xmin, ymin, xmax, ymax].iter().all(|v| v.is_finite());
        if !finite || xmax <= xmin || ymax <= ymin {
            return Err(invalid(format!(
                "degenerate domain ({xmin}, {ymin}) x ({xmax}, {ymax})"
            )));
        }
        Ok(Self { xmin, ymin, xmax, ymax })
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    /// True when `p` lies on the boundary, up to a relative tolerance.
    pub fn on_boundary(&self, p: &Vec2) -> bool {
        let tol = 1e-12 * self.width().max(self.height());
        (p.x - self.xmin).abs() <= tol
            || (p.x - self.xmax).abs() <= tol
            || (p.y - self.ymin).abs() <= tol
            || (p.y - self.ymax).abs() <= tol
    }

    fn same_side(&self, a: &Vec2, b: &Vec2) -> bool {
        let tol = 1e-12 * self.width().max(self.height());
        let near = |u: f64, v: f64| (u - v).abs() <= tol;
        (near(a.x, self.xmin) && near(b.x, self.xmin))
            || (near(a.x, self.xmax) && near(b.x, self.xmax))
            || (near(a.y, self.ymin) && near(b.y, self.ymin))
            || (near(a.y, self.ymax) && near(b.y, self.ymax))
    }
}

#[derive(Debug, Clone)]
pub struct Triangle {
    /// Counter-clockwise vertex ids.
    pub vertices: [usize; 3],
    /// `edges[k]` joins `vertices[k]` and `vertices[(k + 1) % 3]`.
    pub edges: [usize; 3],
    /// Longest edge length, `diam(K)`.
    pub diameter: f64,
    pub area: f64,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub length: f64,
    /// Outward unit normal of `triangles[0]`.
    pub normal: Vec2,
    pub triangles: [usize; 2],
    pub is_boundary: bool,
}

impl Edge {
    /// Incident triangles: one for boundary edges, two otherwise.
    pub fn incident(&self) -> &[usize] {
        if self.is_boundary {
            &self.triangles[..1]
        } else {
            &self.triangles[..]
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    id: u64,
    domain: Rect,
    vertices: Vec<Vec2>,
    edges: Vec<Edge>,
    triangles: Vec<Triangle>,
    h_max: f64,
}

impl Mesh {
    /// Uniform `nx × ny` grid on the rectangle, every cell split along the
    /// diagonal running from its lower-left to its upper-right corner.
    pub fn rect(xmin: f64, ymin: f64, xmax: f64, ymax: f64, nx: usize, ny: usize) -> Result<Self> {
        let domain = Rect::new(xmin, ymin, xmax, ymax)?;
        if nx == 0 || ny == 0 {
            return Err(invalid(format!("cell counts must be positive, got {nx} x {ny}")));
        }
        let dx = domain.width() / nx as f64;
        let dy = domain.height() / ny as f64;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                // Snap the last row/column so boundary tests are exact.
                let x = if i == nx { xmax } else { xmin + i as f64 * dx };
                let y = if j == ny { ymax } else { ymin + j as f64 * dy };
                vertices.push(Vec2::new(x, y));
            }
        }
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut tris = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                tris.push([v00, v10, v11]);
                tris.push([v00, v11, v01]);
            }
        }
        Self::from_triangles(domain, vertices, tris)
    }

    /// Builds edge tables and geometric data from a vertex list and
    /// counter-clockwise triangles, validating conformity.
    pub fn from_triangles(domain: Rect, vertices: Vec<Vec2>, tris: Vec<[usize; 3]>) -> Result<Self> {
        if tris.is_empty() {
            return Err(invalid("mesh has no triangles"));
        }
        let mut edge_of: HashMap<(usize, usize), usize> = HashMap::with_capacity(tris.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(tris.len() * 3 / 2 + 4);
        let mut triangles = Vec::with_capacity(tris.len());
        let mut h_max: f64 = 0.0;

        for (t, tv) in tris.iter().enumerate() {
            if tv.iter().any(|&v| v >= vertices.len()) {
                return Err(invalid(format!("triangle {t} references a missing vertex")));
            }
            let [a, b, c] = tv.map(|v| vertices[v]);
            let signed = 0.5 * crate::cross(&(b - a), &(c - a));
            if !(signed > 0.0) {
                return Err(invalid(format!("triangle {t} is not counter-clockwise (area {signed})")));
            }
            let mut tri_edges = [0usize; 3];
            let mut diameter: f64 = 0.0;
            for k in 0..3 {
                let (v0, v1) = (tv[k], tv[(k + 1) % 3]);
                let key = (v0.min(v1), v0.max(v1));
                let e = match edge_of.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if !edge.is_boundary {
                            return Err(invalid(format!("edge {v0}-{v1} shared by more than two triangles")));
                        }
                        edge.triangles[1] = t;
                        edge.is_boundary = false;
                        e
                    }
                    None => {
                        let d = vertices[v1] - vertices[v0];
                        let length = d.norm();
                        let e = edges.len();
                        edges.push(Edge {
                            vertices: [v0, v1],
                            length,
                            normal: Vec2::new(d.y, -d.x) / length,
                            triangles: [t, usize::MAX],
                            is_boundary: true,
                        });
                        edge_of.insert(key, e);
                        e
                    }
                };
                tri_edges[k] = e;
                diameter = diameter.max(edges[e].length);
            }
            h_max = h_max.max(diameter);
            triangles.push(Triangle { vertices: *tv, edges: tri_edges, diameter, area: signed });
        }

        for e in &edges {
            if e.is_boundary {
                let (a, b) = (&vertices[e.vertices[0]], &vertices[e.vertices[1]]);
                if !domain.same_side(a, b) {
                    return Err(invalid(format!(
                        "non-conforming mesh: unmatched edge ({}, {})-({}, {}) inside the domain",
                        a.x, a.y, b.x, b.y
                    )));
                }
            }
        }

        Ok(Self {
            id: NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed),
            domain,
            vertices,
            edges,
            triangles,
            h_max,
        })
    }

    /// Identity token; fields built on this mesh remember it.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn domain(&self) -> &Rect {
        &self.domain
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn h_min(&self) -> f64 {
        self.triangles.iter().map(|t| t.diameter).fold(f64::INFINITY, f64::min)
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(|(_, e)| !e.is_boundary)
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(|(_, e)| e.is_boundary)
    }

    /// V − E + T; equals 1 for any triangulation of a rectangle.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn triangle_points(&self, t: usize) -> [Vec2; 3] {
        self.triangles[t].vertices.map(|v| self.vertices[v])
    }

    pub fn barycenter(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.triangle_points(t);
        (a + b + c) / 3.0
    }

    /// Smallest interior angle of triangle `t`, in radians.
    pub fn min_angle(&self, t: usize) -> f64 {
        let p = self.triangle_points(t);
        (0..3)
            .map(|k| {
                let u = p[(k + 1) % 3] - p[k];
                let v = p[(k + 2) % 3] - p[k];
                (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `+1` if `t` is the triangle that owns the stored normal of its local
    /// edge `k`, `-1` otherwise.
    pub fn edge_sign(&self, t: usize, k: usize) -> f64 {
        if self.edges[self.triangles[t].edges[k]].triangles[0] == t {
            1.0
        } else {
            -1.0
        }
    }

    fn longest_local_edge(&self, t: usize) -> usize {
        let tri = &self.triangles[t];
        let mut best = 0;
        for k in 1..3 {
            if self.edges[tri.edges[k]].length > self.edges[tri.edges[best]].length * (1.0 + 1e-12) {
                best = k;
            }
        }
        best
    }

    /// Longest-edge bisection of the marked triangles with conforming closure.
    pub fn bisect(&self, marked: &[usize]) -> Result<Mesh> {
        self.bisect_with_cap(marked, DEFAULT_REFINE_DEPTH_CAP)
    }

    pub fn bisect_with_cap(&self, marked: &[usize], depth_cap: usize) -> Result<Mesh> {
        if let Some(&t) = marked.iter().find(|&&t| t >= self.triangles.len()) {
            return Err(invalid(format!("marked triangle {t} out of range")));
        }
        if marked.is_empty() {
            return Ok(self.clone());
        }

        // Closure: any triangle with a refined edge must also refine its
        // longest edge.
        let mut edge_depth: Vec<Option<usize>> = vec![None; self.edges.len()];
        let mut work = Vec::new();
        for &t in marked {
            let e = self.triangles[t].edges[self.longest_local_edge(t)];
            if edge_depth[e].is_none() {
                edge_depth[e] = Some(0);
                work.push(e);
            }
        }
        while let Some(e) = work.pop() {
            let depth = edge_depth[e].unwrap_or(0);
            for &t in self.edges[e].incident() {
                let le = self.triangles[t].edges[self.longest_local_edge(t)];
                if edge_depth[le].is_none() {
                    if depth + 1 > depth_cap {
                        return Err(Error::RefinementFailure { cap: depth_cap });
                    }
                    edge_depth[le] = Some(depth + 1);
                    work.push(le);
                }
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, depth) in edge_depth.iter().enumerate() {
            if depth.is_some() {
                let [a, b] = self.edges[e].vertices;
                midpoint.insert((a.min(b), a.max(b)), vertices.len());
                vertices.push(0.5 * (self.vertices[a] + self.vertices[b]));
            }
        }

        let mut tris = Vec::with_capacity(self.triangles.len() + 3 * midpoint.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let k = self.longest_local_edge(t);
            if edge_depth[tri.edges[k]].is_some() {
                split_at(tri.vertices, k, &midpoint, &mut tris);
            } else {
                tris.push(tri.vertices);
            }
        }
        Mesh::from_triangles(self.domain, vertices, tris)
    }

    /// Uniform refinement: every triangle bisected through its longest edge.
    pub fn bisect_all(&self) -> Result<Mesh> {
        let all: Vec<usize> = (0..self.triangles.len()).collect();
        self.bisect(&all)
    }
}

fn split_at(v: [usize; 3], k: usize, midpoint: &HashMap<(usize, usize), usize>, out: &mut Vec<[usize; 3]>) {
    let (a, b, o) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
    let m = midpoint[&(a.min(b), a.max(b))];
    for child in [[a, m, o], [m, b, o]] {
        // Only the child's original (old-old) edge can carry a midpoint.
        let next = (0..3).find(|&j| {
            let (p, q) = (child[j], child[(j + 1) % 3]);
            midpoint.contains_key(&(p.min(q), p.max(q)))
        });
        match next {
            Some(j) => split_at(child, j, midpoint, out),
            None => out.push(child),
        }
    }
}
