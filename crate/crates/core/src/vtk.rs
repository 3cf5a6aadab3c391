//! Legacy ASCII VTK (version 3.0) output of triangle meshes and fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::adapt::EstimatorField;
use crate::error::{invalid, Result};
use crate::mesh::Mesh;
use crate::quadrature::triangle_rule;
use crate::solver::TwoStageSolution;
use crate::Vec2;

const VTK_TRIANGLE: u8 = 5;

/// Named fields attached to a mesh for output.
#[derive(Debug, Default)]
pub struct Fields<'a> {
    pub point_scalars: Vec<(&'a str, Vec<f64>)>,
    pub cell_scalars: Vec<(&'a str, Vec<f64>)>,
    pub cell_vectors: Vec<(&'a str, Vec<Vec2>)>,
}

pub fn write_vtk<W: Write>(out: &mut W, mesh: &Mesh, title: &str, fields: &Fields) -> Result<()> {
    let nv = mesh.num_vertices();
    let nt = mesh.num_triangles();
    for (name, v) in &fields.point_scalars {
        if v.len() != nv {
            return Err(invalid(format!("point field '{name}' has {} values for {nv} points", v.len())));
        }
    }
    for (name, len) in fields
        .cell_scalars
        .iter()
        .map(|(n, v)| (n, v.len()))
        .chain(fields.cell_vectors.iter().map(|(n, v)| (n, v.len())))
    {
        if len != nt {
            return Err(invalid(format!("cell field '{name}' has {len} values for {nt} cells")));
        }
    }

    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {nv} double")?;
    for p in mesh.vertices() {
        writeln!(out, "{} {} 0", p.x, p.y)?;
    }
    writeln!(out, "CELLS {nt} {}", 4 * nt)?;
    for t in mesh.triangles() {
        let [a, b, c] = t.vertices;
        writeln!(out, "3 {a} {b} {c}")?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "{VTK_TRIANGLE}")?;
    }
    if !fields.point_scalars.is_empty() {
        writeln!(out, "POINT_DATA {nv}")?;
        for (name, values) in &fields.point_scalars {
            write_scalars(out, name, values)?;
        }
    }
    if !fields.cell_scalars.is_empty() || !fields.cell_vectors.is_empty() {
        writeln!(out, "CELL_DATA {nt}")?;
        for (name, values) in &fields.cell_scalars {
            write_scalars(out, name, values)?;
        }
        for (name, values) in &fields.cell_vectors {
            writeln!(out, "VECTORS {name} double")?;
            for v in values {
                writeln!(out, "{} {} 0", v.x, v.y)?;
            }
        }
    }
    Ok(())
}

fn write_scalars<W: Write>(out: &mut W, name: &str, values: &[f64]) -> Result<()> {
    writeln!(out, "SCALARS {name} double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in values {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

pub fn write_mesh(path: &Path, mesh: &Mesh) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_vtk(&mut out, mesh, "mesh", &Fields::default())?;
    out.flush()?;
    Ok(())
}

/// `u_h` at the vertices, element means of `p_h`, and `η_K` when given.
pub fn solution_fields<'a>(mesh: &Mesh, sol: &TwoStageSolution, eta: Option<&EstimatorField>) -> Result<Fields<'a>> {
    sol.p_h.check_mesh(mesh)?;
    sol.u_h.check_mesh(mesh)?;
    let rule = triangle_rule(2 * sol.p_h.degree().max(1))?;
    let mut u = vec![0.0; mesh.num_vertices()];
    let mut p_mean = Vec::with_capacity(mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for (k, &v) in tri.vertices.iter().enumerate() {
            // Vertex dofs come first and are interpolatory.
            u[v] = sol.u_h.coeffs()[sol.u_h.space().element_dofs(t)[k]];
        }
        let mut acc = Vec2::zeros();
        for (x, w) in rule.mapped(&mesh.triangle_points(t), tri.area) {
            acc += sol.p_h.eval(mesh, t, &x).0 * w;
        }
        p_mean.push(acc / tri.area);
    }
    let mut fields = Fields { point_scalars: vec![("u_h", u)], cell_vectors: vec![("p_h", p_mean)], ..Default::default() };
    if let Some(eta) = eta {
        if eta.len() != mesh.num_triangles() {
            return Err(invalid("estimator does not match the mesh"));
        }
        fields.cell_scalars.push(("eta", (0..eta.len()).map(|t| eta.eta(t)).collect()));
    }
    Ok(fields)
}

pub fn write_solution(path: &Path, mesh: &Mesh, sol: &TwoStageSolution, eta: Option<&EstimatorField>) -> Result<()> {
    let fields = solution_fields(mesh, sol, eta)?;
    let mut out = BufWriter::new(File::create(path)?);
    write_vtk(&mut out, mesh, "least-squares solution", &fields)?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_triangle_file_layout() {
        let mesh = Mesh::rect(0.0, 0.0, 1.0, 1.0, 1, 1).unwrap();
        let fields = Fields { cell_scalars: vec![("id", vec![0.0, 1.0])], ..Default::default() };
        let mut buf = Vec::new();
        write_vtk(&mut buf, &mesh, "t", &fields).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[3], "DATASET UNSTRUCTURED_GRID");
        assert_eq!(lines[4], "POINTS 4 double");
        assert_eq!(lines[9], "CELLS 2 8");
        assert_eq!(lines[10], "3 0 1 3");
        assert_eq!(lines[13..15], ["5", "5"]);
        assert_eq!(lines[15], "CELL_DATA 2");
        assert!(text.ends_with("0\n1\n"));
    }

    #[test]
    fn wrong_field_length_rejected() {
        let mesh = Mesh::rect(0.0, 0.0, 1.0, 1.0, 1, 1).unwrap();
        let fields = Fields { point_scalars: vec![("u", vec![0.0; 3])], ..Default::default() };
        assert!(write_vtk(&mut Vec::new(), &mesh, "t", &fields).is_err());
    }
}
