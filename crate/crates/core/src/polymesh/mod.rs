//! Polygonal meshes of planar domains.
//!
//! Cells are simple polygons with counter-clockwise vertex lists. Edge
//! topology is derived on construction; every interior edge must be shared
//! by exactly two cells with opposite orientation.

mod generate;
mod geometry;
mod io;

use std::collections::HashMap;

pub use generate::{generate_cartesian, generate_concave_pentagons, generate_voronoi, label_unit_square};
pub use geometry::{
    check_regularity, kernel_chebyshev, kernel_polygon, polygon_area, polygon_centroid,
    CellRegularity, EdgeGeom, EdgeRule, ElementGeometry, RegularityReport,
};
pub use io::{read_mesh, write_mesh, mesh_from_json, mesh_to_json};

use crate::error::{Result, VemError};
use crate::Point;

/// Label attached to a boundary edge, identified by cell and local edge
/// (local edge `j` joins local vertices `j` and `j + 1`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BoundaryTag {
    pub cell: usize,
    pub edge: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyMesh {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    boundary: Vec<BoundaryTag>,
    pub family: Option<String>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<Vec<usize>>,
    edge_cells: Vec<[Option<usize>; 2]>,
    edge_labels: HashMap<usize, usize>,
}

fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, p: Point, d: f64| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

impl PolyMesh {
    /// Builds a mesh and validates every structural invariant.
    pub fn new(vertices: Vec<Point>, cells: Vec<Vec<usize>>, boundary: Vec<BoundaryTag>) -> Result<Self> {
        let nv = vertices.len();
        let mut used = vec![false; nv];
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(VemError::InvalidCell {
                    cell: c,
                    reason: format!("{} vertices, need at least 3", cell.len()),
                });
            }
            for &v in cell {
                if v >= nv {
                    return Err(VemError::InvalidCell {
                        cell: c,
                        reason: format!("vertex index {v} out of range ({nv} vertices)"),
                    });
                }
                used[v] = true;
            }
            let mut sorted = cell.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(VemError::InvalidCell {
                    cell: c,
                    reason: "repeated vertex".into(),
                });
            }
            let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            if !(polygon_area(&pts) > 0.0) {
                return Err(VemError::InvalidCell {
                    cell: c,
                    reason: "vertices are not counter-clockwise (signed area <= 0)".into(),
                });
            }
            let n = pts.len();
            for i in 0..n {
                for j in i + 1..n {
                    if j == i + 1 || (i == 0 && j == n - 1) {
                        continue;
                    }
                    if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                        return Err(VemError::InvalidCell {
                            cell: c,
                            reason: format!("edges {i} and {j} intersect (not a simple polygon)"),
                        });
                    }
                }
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(VemError::InvalidMesh(format!("vertex {v} is not used by any cell")));
        }

        let mut edge_ids: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_cells: Vec<[Option<usize>; 2]> = Vec::new();
        let mut edge_dirs: Vec<[bool; 2]> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let n = cell.len();
            let mut ce = Vec::with_capacity(n);
            for j in 0..n {
                let (a, b) = (cell[j], cell[(j + 1) % n]);
                let key = [a.min(b), a.max(b)];
                let forward = a < b;
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_cells.push([None, None]);
                    edge_dirs.push([false, false]);
                    edges.len() - 1
                });
                match edge_cells[id] {
                    [None, _] => {
                        edge_cells[id][0] = Some(c);
                        edge_dirs[id][0] = forward;
                    }
                    [Some(_), None] => {
                        if edge_dirs[id][0] == forward {
                            return Err(VemError::InvalidCell {
                                cell: c,
                                reason: format!("edge {a}-{b} has the same orientation in two cells"),
                            });
                        }
                        edge_cells[id][1] = Some(c);
                        edge_dirs[id][1] = forward;
                    }
                    _ => {
                        return Err(VemError::InvalidCell {
                            cell: c,
                            reason: format!("edge {a}-{b} is shared by more than two cells"),
                        })
                    }
                }
                ce.push(id);
            }
            cell_edges.push(ce);
        }

        let mut edge_labels = HashMap::new();
        for (t, tag) in boundary.iter().enumerate() {
            let Some(ce) = cell_edges.get(tag.cell) else {
                return Err(VemError::InvalidMesh(format!(
                    "boundary label {t} refers to missing cell {}",
                    tag.cell
                )));
            };
            let Some(&e) = ce.get(tag.edge) else {
                return Err(VemError::InvalidCell {
                    cell: tag.cell,
                    reason: format!("boundary label refers to missing local edge {}", tag.edge),
                });
            };
            if edge_cells[e][1].is_some() {
                return Err(VemError::InvalidCell {
                    cell: tag.cell,
                    reason: format!("local edge {} is interior but carries a boundary label", tag.edge),
                });
            }
            if edge_labels.insert(e, t).is_some() {
                return Err(VemError::InvalidCell {
                    cell: tag.cell,
                    reason: format!("local edge {} labeled twice", tag.edge),
                });
            }
        }

        Ok(Self {
            vertices,
            cells,
            boundary,
            family: None,
            edges,
            cell_edges,
            edge_cells,
            edge_labels,
        })
    }

    pub fn with_family(mut self, family: impl Into<String>) -> Self {
        self.family = Some(family.into());
        self
    }

    /// Replaces every boundary label with `relabel(edge midpoint, old label)`.
    /// Unlabeled boundary edges get `relabel(midpoint, "")`.
    pub fn relabel_boundary(&self, relabel: impl Fn(Point, &str) -> String) -> Result<Self> {
        let mut tags = Vec::new();
        for e in self.boundary_edges() {
            let cell = self.edge_cells[e][0].unwrap();
            let local = self.cell_edges[cell].iter().position(|&x| x == e).unwrap();
            let [a, b] = self.edges[e];
            let mid = (self.vertices[a] + self.vertices[b]) * 0.5;
            let old = self.edge_label(e).unwrap_or("");
            tags.push(BoundaryTag {
                cell,
                edge: local,
                label: relabel(mid, old),
            });
        }
        tags.sort();
        let mut m = Self::new(self.vertices.clone(), self.cells.clone(), tags)?;
        m.family = self.family.clone();
        Ok(m)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    pub fn boundary_tags(&self) -> &[BoundaryTag] {
        &self.boundary
    }

    /// Global edges as sorted vertex pairs.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge ids of the local edges of cell `c`.
    pub fn cell_edges(&self, c: usize) -> &[usize] {
        &self.cell_edges[c]
    }

    pub fn edge_cells(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_cells[e]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_cells[e][1].is_none()
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.is_boundary_edge(e))
    }

    pub fn edge_label(&self, e: usize) -> Option<&str> {
        self.edge_labels.get(&e).map(|&t| self.boundary[t].label.as_str())
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cells[c].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        polygon_area(&self.cell_points(c))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// Diameter of cell `c`.
    pub fn cell_diameter(&self, c: usize) -> f64 {
        geometry::diameter(&self.cell_points(c))
    }

    /// Largest cell diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| self.cell_diameter(c))
            .fold(0.0, f64::max)
    }

    /// First cell (in index order) whose closure contains `p`.
    pub fn find_cell(&self, p: Point) -> Option<usize> {
        (0..self.n_cells()).find(|&c| geometry::point_in_polygon(&self.cell_points(c), p))
    }

    /// Histogram of vertex counts per cell.
    pub fn vertex_count_histogram(&self) -> std::collections::BTreeMap<usize, usize> {
        let mut h = std::collections::BTreeMap::new();
        for c in &self.cells {
            *h.entry(c.len()).or_insert(0) += 1;
        }
        h
    }
}
