use nalgebra::{Matrix3, Vector3};

use super::PolyMesh;
use crate::error::{Result, VemError};
use crate::polybasis::quadrature::{gauss_legendre, triangle_rule};
use crate::Point;

/// Signed area (positive for counter-clockwise order).
pub fn polygon_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
}

pub fn polygon_centroid(pts: &[Point]) -> Point {
    let n = pts.len();
    let mut c = Point::zeros();
    let mut a2 = 0.0;
    for i in 0..n {
        let (p, q) = (pts[i], pts[(i + 1) % n]);
        let w = p.x * q.y - q.x * p.y;
        a2 += w;
        c += (p + q) * w;
    }
    c / (3.0 * a2)
}

pub(crate) fn diameter(pts: &[Point]) -> f64 {
    let mut h: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            h = h.max((pts[i] - pts[j]).norm());
        }
    }
    h
}

/// Closed point-in-polygon test (points on the boundary count as inside).
pub(crate) fn point_in_polygon(pts: &[Point], p: Point) -> bool {
    let n = pts.len();
    let scale = diameter(pts);
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let ab = b - a;
        let t = (p - a).dot(&ab) / ab.norm_squared();
        if (0.0..=1.0).contains(&t) && (a + ab * t - p).norm() <= 1e-12 * scale {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Keeps the part of a convex polygon with `n . x <= c`.
pub(crate) fn clip_halfplane(poly: &[Point], n: Point, c: f64) -> Vec<Point> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let m = poly.len();
    for i in 0..m {
        let (p, q) = (poly[i], poly[(i + 1) % m]);
        let (dp, dq) = (n.dot(&p) - c, n.dot(&q) - c);
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            let t = dp / (dp - dq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

/// Kernel of a simple CCW polygon (the set of points that see the whole
/// polygon), by half-plane intersection. Empty when the polygon is not
/// star-shaped.
pub fn kernel_polygon(pts: &[Point]) -> Vec<Point> {
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let mut k = vec![lo, Point::new(hi.x, lo.y), hi, Point::new(lo.x, hi.y)];
    let n = pts.len();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let d = b - a;
        // interior is to the left of a -> b
        let normal = Point::new(d.y, -d.x);
        k = clip_halfplane(&k, normal, normal.dot(&a));
        if k.len() < 3 {
            return Vec::new();
        }
    }
    if polygon_area(&k) <= 0.0 {
        return Vec::new();
    }
    k
}

/// Center and radius of the largest disc contained in the kernel of a
/// simple CCW polygon, i.e. the Chebyshev center of the edge half-planes.
/// Returns `None` for an empty (or degenerate) kernel. When the optimum is
/// not unique the optimal vertices are averaged.
pub fn kernel_chebyshev(pts: &[Point]) -> Option<(Point, f64)> {
    let n = pts.len();
    // inward unit normals: nrm . x >= off
    let lines: Vec<(Point, f64)> = (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let d = (b - a).normalize();
            let nrm = Point::new(-d.y, d.x);
            (nrm, nrm.dot(&a))
        })
        .collect();
    let scale = diameter(pts);
    let tol = 1e-12 * scale;
    let mut best = 0.0;
    let mut centers: Vec<Point> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for l in j + 1..n {
                let m = Matrix3::new(
                    lines[i].0.x, lines[i].0.y, -1.0,
                    lines[j].0.x, lines[j].0.y, -1.0,
                    lines[l].0.x, lines[l].0.y, -1.0,
                );
                let Some(sol) = m.lu().solve(&Vector3::new(lines[i].1, lines[j].1, lines[l].1)) else {
                    continue;
                };
                if !sol.iter().all(|v| v.is_finite()) {
                    continue;
                }
                let (c, r) = (Point::new(sol[0], sol[1]), sol[2]);
                if r <= tol || lines.iter().any(|(nrm, off)| nrm.dot(&c) - r < off - tol) {
                    continue;
                }
                if r > best + tol {
                    best = r;
                    centers.clear();
                    centers.push(c);
                } else if r >= best - tol {
                    centers.push(c);
                }
            }
        }
    }
    if centers.is_empty() {
        return None;
    }
    // deduplicate before averaging so repeated vertices do not bias the mean
    let mut uniq: Vec<Point> = Vec::new();
    for c in centers {
        if uniq.iter().all(|u| (u - c).norm() > tol) {
            uniq.push(c);
        }
    }
    let center = uniq.iter().fold(Point::zeros(), |acc, c| acc + c) / uniq.len() as f64;
    Some((center, best))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGeom {
    pub start: Point,
    pub end: Point,
    pub length: f64,
    /// Outward unit normal.
    pub normal: Point,
}

/// Gauss rule on one edge: `points[g] = start + params[g] * (end - start)`,
/// weights already include the edge length.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub params: Vec<f64>,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

/// Geometry and quadrature of one polygonal cell.
///
/// The volume rule (collapsed Gauss on the fan triangles from the star
/// center) is exact to degree `2 * poly_degree + 2`; each edge carries a
/// `poly_degree + 1` point Gauss rule (exact to `2 * poly_degree + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub cell: usize,
    pub vertices: Vec<Point>,
    pub h: f64,
    pub area: f64,
    pub star_center: Point,
    pub kernel_radius: f64,
    pub edges: Vec<EdgeGeom>,
    pub triangles: Vec<[Point; 3]>,
    pub poly_degree: usize,
    pub volume_degree: usize,
    pub quad_points: Vec<Point>,
    pub quad_weights: Vec<f64>,
    pub edge_rules: Vec<EdgeRule>,
}

impl ElementGeometry {
    pub fn new(cell: usize, vertices: &[Point], poly_degree: usize) -> Result<Self> {
        let (star_center, kernel_radius) =
            kernel_chebyshev(vertices).ok_or(VemError::NotStarShaped { cell })?;
        let n = vertices.len();
        let edges = (0..n)
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let d = b - a;
                let length = d.norm();
                EdgeGeom {
                    start: a,
                    end: b,
                    length,
                    normal: Point::new(d.y, -d.x) / length,
                }
            })
            .collect();
        let triangles = (0..n)
            .map(|i| [star_center, vertices[i], vertices[(i + 1) % n]])
            .collect();
        let mut g = Self {
            cell,
            vertices: vertices.to_vec(),
            h: diameter(vertices),
            area: polygon_area(vertices),
            star_center,
            kernel_radius,
            edges,
            triangles,
            poly_degree: 0,
            volume_degree: 0,
            quad_points: Vec::new(),
            quad_weights: Vec::new(),
            edge_rules: Vec::new(),
        };
        g.build_rules(poly_degree);
        Ok(g)
    }

    pub fn from_mesh(mesh: &PolyMesh, cell: usize, poly_degree: usize) -> Result<Self> {
        Self::new(cell, &mesh.cell_points(cell), poly_degree)
    }

    /// Same cell with quadrature rebuilt for a different polynomial degree.
    pub fn with_poly_degree(&self, poly_degree: usize) -> Self {
        if poly_degree == self.poly_degree {
            return self.clone();
        }
        let mut g = self.clone();
        g.build_rules(poly_degree);
        g
    }

    fn build_rules(&mut self, poly_degree: usize) {
        self.poly_degree = poly_degree;
        self.volume_degree = 2 * poly_degree + 2;
        self.quad_points.clear();
        self.quad_weights.clear();
        for t in &self.triangles {
            let (p, w) = triangle_rule(t[0], t[1], t[2], self.volume_degree);
            self.quad_points.extend(p);
            self.quad_weights.extend(w);
        }
        let (s, w) = gauss_legendre(poly_degree + 1);
        self.edge_rules = self
            .edges
            .iter()
            .map(|e| EdgeRule {
                params: s.clone(),
                points: s.iter().map(|&t| e.start + (e.end - e.start) * t).collect(),
                weights: w.iter().map(|&w| w * e.length).collect(),
            })
            .collect();
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Shortest edge length.
    pub fn min_edge(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRegularity {
    /// Radius of the largest disc in the kernel (0 if not star-shaped).
    pub rho: f64,
    pub h: f64,
    pub min_edge: f64,
    pub rho_ratio: f64,
    pub edge_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub cells: Vec<CellRegularity>,
    pub min_rho_ratio: f64,
    pub min_edge_ratio: f64,
    /// Cells with an empty kernel; downstream assembly rejects these.
    pub non_star_shaped: Vec<usize>,
}

impl RegularityReport {
    /// The mesh regularity constant: the smaller of the two global minima.
    pub fn kappa(&self) -> f64 {
        self.min_rho_ratio.min(self.min_edge_ratio)
    }
}

pub fn check_regularity(mesh: &PolyMesh) -> RegularityReport {
    let mut cells = Vec::with_capacity(mesh.n_cells());
    let mut non_star_shaped = Vec::new();
    for c in 0..mesh.n_cells() {
        let pts = mesh.cell_points(c);
        let h = diameter(&pts);
        let n = pts.len();
        let min_edge = (0..n)
            .map(|i| (pts[(i + 1) % n] - pts[i]).norm())
            .fold(f64::INFINITY, f64::min);
        let rho = match kernel_chebyshev(&pts) {
            Some((_, r)) => r,
            None => {
                non_star_shaped.push(c);
                0.0
            }
        };
        cells.push(CellRegularity {
            rho,
            h,
            min_edge,
            rho_ratio: rho / h,
            edge_ratio: min_edge / h,
        });
    }
    let min_rho_ratio = cells.iter().map(|c| c.rho_ratio).fold(f64::INFINITY, f64::min);
    let min_edge_ratio = cells.iter().map(|c| c.edge_ratio).fold(f64::INFINITY, f64::min);
    RegularityReport {
        cells,
        min_rho_ratio,
        min_edge_ratio,
        non_star_shaped,
    }
}
