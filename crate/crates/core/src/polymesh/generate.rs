//! The three benchmark mesh families on the unit square.

use std::collections::HashMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::geometry::{clip_halfplane, polygon_area, polygon_centroid};
use super::PolyMesh;
use crate::error::{Result, VemError};
use crate::Point;

/// Labels boundary edges of a unit-square mesh by side: `bottom`, `right`,
/// `top`, `left` (corners are never edge midpoints, so this is unambiguous).
pub fn label_unit_square(mesh: &PolyMesh) -> Result<PolyMesh> {
    mesh.relabel_boundary(|mid, _| {
        let tol = 1e-10;
        if mid.y.abs() < tol {
            "bottom"
        } else if (mid.x - 1.0).abs() < tol {
            "right"
        } else if (mid.y - 1.0).abs() < tol {
            "top"
        } else if mid.x.abs() < tol {
            "left"
        } else {
            "boundary"
        }
        .to_string()
    })
}

fn finish(vertices: Vec<Point>, cells: Vec<Vec<usize>>, family: &str) -> Result<PolyMesh> {
    let mesh = PolyMesh::new(vertices, cells, Vec::new())?;
    Ok(label_unit_square(&mesh)?.with_family(family))
}

/// `nx * ny` axis-aligned rectangles tiling `(0,1)^2` (family T1).
pub fn generate_cartesian(nx: usize, ny: usize) -> Result<PolyMesh> {
    if nx == 0 || ny == 0 {
        return Err(VemError::InvalidArgument(format!(
            "cartesian mesh needs positive cell counts, got {nx} x {ny}"
        )));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point::new(i as f64 / nx as f64, j as f64 / ny as f64));
        }
    }
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    finish(vertices, cells, "t1")
}

/// `n * n` blocks, each split into two pentagons by the polyline
/// bottom-midpoint -> `(x0 + 3/4 dx, y0 + 1/2 dy)` -> top-midpoint
/// (family T2). The left pentagon is convex, the right one has a reflex
/// vertex.
pub fn generate_concave_pentagons(n: usize) -> Result<PolyMesh> {
    if n == 0 {
        return Err(VemError::InvalidArgument("pentagon mesh needs n >= 1".into()));
    }
    // lattice in quarter-block units along x and half-block units along y
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vid = |ix: usize, iy: usize, vertices: &mut Vec<Point>| -> usize {
        *ids.entry((ix, iy)).or_insert_with(|| {
            vertices.push(Point::new(ix as f64 / (4 * n) as f64, iy as f64 / (2 * n) as f64));
            vertices.len() - 1
        })
    };
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (x, y) = (4 * i, 2 * j);
            let bl = vid(x, y, &mut vertices);
            let b = vid(x + 2, y, &mut vertices);
            let br = vid(x + 4, y, &mut vertices);
            let p = vid(x + 3, y + 1, &mut vertices);
            let tl = vid(x, y + 2, &mut vertices);
            let t = vid(x + 2, y + 2, &mut vertices);
            let tr = vid(x + 4, y + 2, &mut vertices);
            cells.push(vec![bl, b, p, t, tl]);
            cells.push(vec![b, br, tr, t, p]);
        }
    }
    finish(vertices, cells, "t2")
}

fn unit_square() -> Vec<Point> {
    vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ]
}

/// Voronoi cell of `sites[i]` clipped to the unit square.
fn voronoi_cell(sites: &[Point], i: usize, order: &mut Vec<(f64, usize)>) -> Vec<Point> {
    let s = sites[i];
    order.clear();
    order.extend(
        sites
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, q)| ((q - s).norm_squared(), j)),
    );
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut poly = unit_square();
    for &(d2, j) in order.iter() {
        let reach = poly.iter().map(|p| (p - s).norm_squared()).fold(0.0, f64::max);
        // sites farther than twice the cell radius cannot cut the cell
        if d2 > 4.0 * reach {
            break;
        }
        let q = sites[j];
        let nrm = q - s;
        let mid = (q + s) * 0.5;
        poly = clip_halfplane(&poly, nrm, nrm.dot(&mid));
    }
    poly
}

/// Clipped Voronoi tessellation of `(0,1)^2` from `n_cells` seeded random
/// sites relaxed by `lloyd_iters` Lloyd (centroid) iterations (family T3).
pub fn generate_voronoi(n_cells: usize, lloyd_iters: usize, seed: u64) -> Result<PolyMesh> {
    if n_cells < 2 {
        return Err(VemError::InvalidArgument("voronoi mesh needs at least 2 cells".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sites: Vec<Point> = (0..n_cells)
        .map(|_| Point::new(rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    let mut sorted = sites.clone();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    if sorted.windows(2).any(|w| (w[0] - w[1]).norm() < 1e-12) {
        return Err(VemError::InvalidArgument("duplicate voronoi sites".into()));
    }

    let mut order = Vec::with_capacity(n_cells);
    for _ in 0..lloyd_iters {
        sites = (0..n_cells)
            .map(|i| polygon_centroid(&voronoi_cell(&sites, i, &mut order)))
            .collect();
    }
    let polys: Vec<Vec<Point>> = (0..n_cells).map(|i| voronoi_cell(&sites, i, &mut order)).collect();

    // merge coincident vertices across cells
    let tol = 1e-10;
    let key = |p: Point| ((p.x / tol).round() as i64, (p.y / tol).round() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut cells = Vec::with_capacity(n_cells);
    for (c, poly) in polys.iter().enumerate() {
        let mut cell: Vec<usize> = Vec::with_capacity(poly.len());
        for &p in poly {
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(list) = buckets.get(&(kx + dx, ky + dy)) {
                        for &v in list {
                            if (vertices[v] - p).norm() <= tol {
                                found = Some(v);
                                break 'search;
                            }
                        }
                    }
                }
            }
            let v = found.unwrap_or_else(|| {
                vertices.push(p);
                buckets.entry((kx, ky)).or_default().push(vertices.len() - 1);
                vertices.len() - 1
            });
            if cell.last() != Some(&v) {
                cell.push(v);
            }
        }
        while cell.len() > 1 && cell.first() == cell.last() {
            cell.pop();
        }
        if cell.len() < 3 {
            return Err(VemError::InvalidCell {
                cell: c,
                reason: "voronoi cell collapsed".into(),
            });
        }
        cells.push(cell);
    }
    debug_assert!(cells
        .iter()
        .all(|c| polygon_area(&c.iter().map(|&v| vertices[v]).collect::<Vec<_>>()) > 0.0));
    finish(vertices, cells, "t3")
}
