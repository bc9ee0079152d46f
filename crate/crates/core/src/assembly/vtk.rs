use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::polymesh::PolyMesh;

use super::{DiscreteSolution, Discretization};

/// Legacy ASCII VTK unstructured grid with polygon cells.
pub fn vtk_string(mesh: &PolyMesh, disc: &Discretization, sol: &DiscreteSolution) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str(&format!("sfvem solution k={}\n", disc.k));
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {} double", mesh.n_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{:.16e} {:.16e} 0", p.x, p.y).unwrap();
    }
    let size: usize = mesh.cells().iter().map(|c| c.len() + 1).sum();
    writeln!(s, "CELLS {} {}", mesh.n_cells(), size).unwrap();
    for c in mesh.cells() {
        s.push_str(&c.len().to_string());
        for v in c {
            write!(s, " {v}").unwrap();
        }
        s.push('\n');
    }
    writeln!(s, "CELL_TYPES {}", mesh.n_cells()).unwrap();
    for _ in mesh.cells() {
        s.push_str("7\n");
    }
    writeln!(s, "POINT_DATA {}", mesh.n_vertices()).unwrap();
    s.push_str("SCALARS u_vertex double 1\nLOOKUP_TABLE default\n");
    for v in 0..mesh.n_vertices() {
        writeln!(s, "{:.16e}", sol.dofs[v]).unwrap();
    }
    writeln!(s, "CELL_DATA {}", mesh.n_cells()).unwrap();
    s.push_str("SCALARS u_pi_center double 1\nLOOKUP_TABLE default\n");
    for (c, el) in disc.elements.iter().enumerate() {
        writeln!(s, "{:.16e}", sol.reconstruction(disc, c).eval(el.geom.star_center)).unwrap();
    }
    s.push_str("SCALARS ell int 1\nLOOKUP_TABLE default\n");
    for el in &disc.elements {
        writeln!(s, "{}", el.space.ell).unwrap();
    }
    s.push_str("SCALARS peclet double 1\nLOOKUP_TABLE default\n");
    for el in &disc.elements {
        writeln!(s, "{:.16e}", el.coeffs.peclet).unwrap();
    }
    s
}

pub fn export_vtk(mesh: &PolyMesh, disc: &Discretization, sol: &DiscreteSolution, path: &Path) -> Result<()> {
    std::fs::write(path, vtk_string(mesh, disc, sol))?;
    Ok(())
}
