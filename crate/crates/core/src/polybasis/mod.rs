//! Scaled monomial bases, their derivative maps in coefficient form, and
//! element Gram matrices.
//!
//! Monomials are `m_a(x, y) = ((x - x_E) / h_E)^a1 ((y - y_E) / h_E)^a2`,
//! listed in graded-lexicographic order: `1, x, y, x^2, xy, y^2, ...`.

pub mod quadrature;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, VemError};
use crate::polymesh::ElementGeometry;
use crate::Point;

/// Dimension of `P_n` in two variables.
pub const fn dim(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// Dimension of `P_n`, with `P_n = {0}` for negative `n`.
pub const fn dim_or_zero(n: isize) -> usize {
    if n < 0 {
        0
    } else {
        dim(n as usize)
    }
}

/// Position of the exponent `(a1, a2)` in graded-lex order.
pub const fn index(a1: usize, a2: usize) -> usize {
    let d = a1 + a2;
    d * (d + 1) / 2 + a2
}

/// Exponents of all monomials of total degree `<= n`.
pub fn exponents(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim(n));
    for d in 0..=n {
        for a2 in 0..=d {
            out.push((d - a2, a2));
        }
    }
    out
}

/// Total degree of the monomial at position `i`.
pub fn degree_of(i: usize) -> usize {
    let mut d = 0;
    while dim(d) <= i {
        d += 1;
    }
    d
}

/// Scaled monomial basis of `P_n(E)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialBasis {
    pub degree: usize,
    pub center: Point,
    pub h: f64,
}

impl MonomialBasis {
    pub fn new(degree: usize, center: Point, h: f64) -> Self {
        Self { degree, center, h }
    }

    pub fn for_element(degree: usize, geom: &ElementGeometry) -> Self {
        Self::new(degree, geom.star_center, geom.h)
    }

    pub fn dim(&self) -> usize {
        dim(self.degree)
    }

    /// Same center and scaling, different degree.
    pub fn with_degree(&self, degree: usize) -> Self {
        Self { degree, ..*self }
    }

    pub fn exponents(&self) -> Vec<(usize, usize)> {
        exponents(self.degree)
    }

    fn scaled(&self, p: Point) -> (f64, f64) {
        ((p.x - self.center.x) / self.h, (p.y - self.center.y) / self.h)
    }

    /// Values of every basis member at `p`.
    pub fn eval(&self, p: Point) -> DVector<f64> {
        let (sx, sy) = self.scaled(p);
        let n = self.degree;
        let mut px = vec![1.0; n + 1];
        let mut py = vec![1.0; n + 1];
        for i in 1..=n {
            px[i] = px[i - 1] * sx;
            py[i] = py[i - 1] * sy;
        }
        let mut out = DVector::zeros(self.dim());
        let mut i = 0;
        for d in 0..=n {
            for a2 in 0..=d {
                out[i] = px[d - a2] * py[a2];
                i += 1;
            }
        }
        out
    }

    /// Entry `(a, q)` is `m_a(points[q])`.
    pub fn eval_points(&self, points: &[Point]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim(), points.len());
        for (q, &p) in points.iter().enumerate() {
            out.set_column(q, &self.eval(p));
        }
        out
    }

    /// Gradients of every basis member at `p`, as `(d/dx, d/dy)`.
    pub fn eval_grad(&self, p: Point) -> (DVector<f64>, DVector<f64>) {
        let (gx, gy) = self.grad_map();
        let lower = self.with_degree(self.degree.saturating_sub(1)).eval(p);
        let lower = lower.rows(0, gx.nrows()).into_owned();
        (gx.transpose() * &lower, gy.transpose() * &lower)
    }

    /// Coefficient maps `P_n -> P_{n-1}` for `d/dx` and `d/dy`, including the
    /// `1/h` chain factor.
    pub fn grad_map(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.degree;
        let rows = dim_or_zero(n as isize - 1);
        let mut gx = DMatrix::zeros(rows, self.dim());
        let mut gy = DMatrix::zeros(rows, self.dim());
        for (j, (a1, a2)) in exponents(n).into_iter().enumerate() {
            if a1 > 0 {
                gx[(index(a1 - 1, a2), j)] = a1 as f64 / self.h;
            }
            if a2 > 0 {
                gy[(index(a1, a2 - 1), j)] = a2 as f64 / self.h;
            }
        }
        (gx, gy)
    }

    /// Coefficient map `P_n -> P_{n-2}` of the Laplacian.
    pub fn laplace_map(&self) -> DMatrix<f64> {
        let n = self.degree;
        let rows = dim_or_zero(n as isize - 2);
        let h2 = self.h * self.h;
        let mut l = DMatrix::zeros(rows, self.dim());
        for (j, (a1, a2)) in exponents(n).into_iter().enumerate() {
            if a1 > 1 {
                l[(index(a1 - 2, a2), j)] += (a1 * (a1 - 1)) as f64 / h2;
            }
            if a2 > 1 {
                l[(index(a1, a2 - 2), j)] += (a2 * (a2 - 1)) as f64 / h2;
            }
        }
        l
    }

    /// Coefficient map `[P_n]^2 -> P_{n-1}` of the divergence; the input
    /// stacks the x-component coefficients above the y-component ones.
    pub fn div_map(&self) -> DMatrix<f64> {
        let (gx, gy) = self.grad_map();
        let mut out = DMatrix::zeros(gx.nrows(), 2 * self.dim());
        out.view_mut((0, 0), (gx.nrows(), self.dim())).copy_from(&gx);
        out.view_mut((0, self.dim()), (gy.nrows(), self.dim()))
            .copy_from(&gy);
        out
    }
}

/// A polynomial expressed in a scaled monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs {
    pub basis: MonomialBasis,
    pub coeffs: DVector<f64>,
}

impl PolyCoeffs {
    pub fn new(basis: MonomialBasis, coeffs: DVector<f64>) -> Self {
        assert_eq!(basis.dim(), coeffs.len(), "coefficient length mismatch");
        Self { basis, coeffs }
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.basis.eval(p).dot(&self.coeffs)
    }

    pub fn grad(&self, p: Point) -> Point {
        let (gx, gy) = self.basis.eval_grad(p);
        Point::new(gx.dot(&self.coeffs), gy.dot(&self.coeffs))
    }
}

/// `H_ab = (m_a, m_b)_E` for the basis of `P_n(E)`.
pub fn mass_matrix(basis: &MonomialBasis, geom: &ElementGeometry) -> Result<DMatrix<f64>> {
    let need = 2 * basis.degree;
    if geom.volume_degree < need {
        return Err(VemError::QuadratureDegree {
            need,
            have: geom.volume_degree,
        });
    }
    let v = basis.eval_points(&geom.quad_points);
    let mut weighted = v.clone();
    for (q, &w) in geom.quad_weights.iter().enumerate() {
        weighted.column_mut(q).scale_mut(w);
    }
    let h = &weighted * v.transpose();
    Ok((&h + h.transpose()) * 0.5)
}

/// `diag(H, H)`: the Gram matrix of `[P_n(E)]^2`.
pub fn vector_mass_matrix(basis: &MonomialBasis, geom: &ElementGeometry) -> Result<DMatrix<f64>> {
    Ok(crate::dense::block_diag2(&mass_matrix(basis, geom)?))
}
