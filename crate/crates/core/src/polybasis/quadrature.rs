//! Gauss rules on intervals and collapsed (conical product) rules on
//! triangles.

use crate::Point;

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule mapped to `[0, 1]`, nodes ascending.
/// Exact for polynomials of degree `2n - 1`; weights sum to one.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss rule needs at least one point");
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root; mirror it to keep the rule symmetric
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    (nodes, weights)
}

/// Interior nodes of the `(k+1)`-point Gauss-Lobatto rule on `[0, 1]`
/// (the roots of `P_k'`), ascending and exactly symmetric about 1/2.
pub fn gauss_lobatto_interior(k: usize) -> Vec<f64> {
    if k < 2 {
        return Vec::new();
    }
    let m = k - 1;
    let kf = k as f64;
    let mut nodes = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Chebyshev-Gauss-Lobatto guess for the (i+1)-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 1.0) / kf).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(k, x);
            // (1 - x^2) P'' = 2x P' - k(k+1) P
            let d2p = (2.0 * x * dp - kf * (kf + 1.0) * p) / (1.0 - x * x);
            let dx = dp / d2p;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.5;
    }
    nodes
}

/// Number of Gauss points per direction needed by the collapsed triangle
/// rule to integrate degree `degree` exactly.
pub fn collapsed_points_for_degree(degree: usize) -> usize {
    (degree + 3) / 2
}

/// A quadrature rule exact for total degree `degree` on the triangle `abc`,
/// as `(points, weights)`. Weights sum to the (unsigned) triangle area.
pub fn triangle_rule(a: Point, b: Point, c: Point, degree: usize) -> (Vec<Point>, Vec<f64>) {
    let n = collapsed_points_for_degree(degree);
    let (g, w) = gauss_legendre(n);
    let e1 = b - a;
    let e2 = c - a;
    let jac = (e1.x * e2.y - e1.y * e2.x).abs();
    let mut pts = Vec::with_capacity(n * n);
    let mut wts = Vec::with_capacity(n * n);
    for (i, &u) in g.iter().enumerate() {
        for (j, &v) in g.iter().enumerate() {
            let xi = u;
            let eta = v * (1.0 - u);
            pts.push(a + e1 * xi + e2 * eta);
            wts.push(w[i] * w[j] * (1.0 - u) * jac);
        }
    }
    (pts, wts)
}

/// Lagrange basis polynomials through `nodes`, evaluated at `s`.
pub fn lagrange_basis(nodes: &[f64], s: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| (s - xj) / (nodes[i] - xj))
                .product()
        })
        .collect()
}
