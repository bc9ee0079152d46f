//! Local enlarged-enhancement virtual element spaces.
//!
//! Local DOFs of `V_h^{k,ell}(E)` are ordered as
//!
//! 1. values at the `N_V` vertices,
//! 2. for each edge `j` (from vertex `j` to `j+1`), values at the `k-1`
//!    interior Gauss-Lobatto nodes, ordered along the edge,
//! 3. the scaled moments `(v, m_a) / |E|` for `|a| <= k-2`.
//!
//! Every projector is stored as a matrix acting on the local DOF vector.

use nalgebra::{DMatrix, DVector};

use crate::dense::{block_diag2, lu_solve, spd_solve};
use crate::error::{Result, VemError};
use crate::polybasis::quadrature::{gauss_lobatto_interior, lagrange_basis};
use crate::polybasis::{degree_of, dim, dim_or_zero, MonomialBasis};
use crate::polymesh::ElementGeometry;
use crate::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct DofLayout {
    pub k: usize,
    pub n_vertices: usize,
    /// Interior edge nodes as parameters in `(0, 1)`, ascending.
    pub edge_nodes: Vec<f64>,
}

impl DofLayout {
    pub fn new(k: usize, n_vertices: usize) -> Self {
        assert!(k >= 1, "order k must be at least 1");
        Self {
            k,
            n_vertices,
            edge_nodes: gauss_lobatto_interior(k),
        }
    }

    pub fn n_edge_internal(&self) -> usize {
        self.k - 1
    }

    pub fn n_moments(&self) -> usize {
        dim_or_zero(self.k as isize - 2)
    }

    /// `N_V k + k(k-1)/2`.
    pub fn n_dofs(&self) -> usize {
        self.n_vertices * self.k + self.n_moments()
    }

    pub fn edge_dof(&self, edge: usize, j: usize) -> usize {
        self.n_vertices + edge * (self.k - 1) + j
    }

    pub fn moment_dof(&self, c: usize) -> usize {
        self.n_vertices * self.k + c
    }

    /// Local DOFs carrying the trace on edge `e`, matching [`Self::trace_nodes`].
    pub fn edge_trace_dofs(&self, e: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.k + 1);
        out.push(e);
        out.extend((0..self.k - 1).map(|j| self.edge_dof(e, j)));
        out.push((e + 1) % self.n_vertices);
        out
    }

    /// Interpolation nodes of the degree-`k` edge trace: `0`, the Lobatto
    /// interior nodes, `1`.
    pub fn trace_nodes(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.k + 1);
        t.push(0.0);
        t.extend_from_slice(&self.edge_nodes);
        t.push(1.0);
        t
    }
}

/// Whether the moment against monomials of this degree is a DOF (as opposed
/// to being fixed by the enhancement constraint `(v, p) = (Pi^nabla v, p)`).
///
/// The enhancement covers degrees `k-1 ..= k+ell` for `k >= 2` and all
/// degrees `0 ..= 1+ell` for `k = 1`.
pub fn is_dof_moment_degree(k: usize, degree: usize) -> bool {
    degree + 2 <= k
}

#[derive(Debug, Clone)]
pub struct LocalSpace {
    pub k: usize,
    pub ell: usize,
    pub layout: DofLayout,
    /// Basis of `P_{k+ell}(E)`; lower degrees are leading sub-bases.
    pub basis: MonomialBasis,
    pub area: f64,
    /// Gram matrix of `P_{k+ell}(E)`.
    pub mass: DMatrix<f64>,
    /// DOFs -> `P_k` coefficients of `Pi^nabla_k v`.
    pub pi_nabla: DMatrix<f64>,
    /// DOFs -> DOFs of `Pi^nabla_k v`.
    pub pi_nabla_dof: DMatrix<f64>,
    /// DOFs of each monomial of `P_k` (columns).
    pub monomial_dofs: DMatrix<f64>,
    /// DOFs -> `(v, m_a)` for `|a| <= k+ell`.
    pub moments: DMatrix<f64>,
    /// DOFs -> `P_{k-1}` coefficients of `Pi^0_{k-1} v`.
    pub pi_zero: DMatrix<f64>,
    /// DOFs -> `[P_{k+ell-1}]^2` coefficients of `Pi^0_{k+ell-1} grad v`
    /// (x block above y block).
    pub pi_zero_grad: DMatrix<f64>,
    /// DOFs -> `[P_{k-1}]^2` coefficients of `Pi^0_{k-1} grad v`.
    pub pi_zero_grad_low: DMatrix<f64>,
    edge_traces: Vec<EdgeTrace>,
}

/// Trace evaluation data on one edge at its Gauss points.
#[derive(Debug, Clone)]
struct EdgeTrace {
    /// `(n_gauss, k+1)` Lagrange values of the trace nodes.
    lagrange: DMatrix<f64>,
    /// Monomials of `P_{k+ell}` at the Gauss points, `(dim, n_gauss)`.
    monomials: DMatrix<f64>,
    weights: Vec<f64>,
    normal: Point,
    dofs: Vec<usize>,
}

impl LocalSpace {
    /// Builds every projector of `V_h^{k,ell}(E)`.
    pub fn build(geom: &ElementGeometry, k: usize, ell: usize) -> Result<Self> {
        if k == 0 {
            return Err(VemError::InvalidArgument("order k must be at least 1".into()));
        }
        let top = k + ell;
        if geom.poly_degree < top {
            return Err(VemError::QuadratureDegree {
                need: 2 * top + 2,
                have: geom.volume_degree,
            });
        }
        let cell = geom.cell;
        let layout = DofLayout::new(k, geom.n_vertices());
        let ndof = layout.n_dofs();
        let basis = MonomialBasis::for_element(top, geom);
        let mass = crate::polybasis::mass_matrix(&basis, geom)?;
        let area = geom.area;

        let nodes = layout.trace_nodes();
        let edge_traces: Vec<EdgeTrace> = geom
            .edge_rules
            .iter()
            .zip(&geom.edges)
            .enumerate()
            .map(|(e, (rule, eg))| {
                let mut lagrange = DMatrix::zeros(rule.params.len(), k + 1);
                for (g, &s) in rule.params.iter().enumerate() {
                    for (j, v) in lagrange_basis(&nodes, s).into_iter().enumerate() {
                        lagrange[(g, j)] = v;
                    }
                }
                EdgeTrace {
                    lagrange,
                    monomials: basis.eval_points(&rule.points),
                    weights: rule.weights.clone(),
                    normal: eg.normal,
                    dofs: layout.edge_trace_dofs(e),
                }
            })
            .collect();

        let mut space = Self {
            k,
            ell,
            layout,
            basis,
            area,
            mass,
            pi_nabla: DMatrix::zeros(0, 0),
            pi_nabla_dof: DMatrix::zeros(0, 0),
            monomial_dofs: DMatrix::zeros(0, 0),
            moments: DMatrix::zeros(0, 0),
            pi_zero: DMatrix::zeros(0, 0),
            pi_zero_grad: DMatrix::zeros(0, 0),
            pi_zero_grad_low: DMatrix::zeros(0, 0),
            edge_traces,
        };

        space.build_pi_nabla(geom, cell)?;
        space.build_moments();
        space.pi_zero = space.pi_zero_scalar(k - 1, cell)?;
        space.pi_zero_grad = space.pi_zero_grad_of_degree(top - 1, cell)?;
        space.pi_zero_grad_low = space.pi_zero_grad_of_degree(k - 1, cell)?;
        debug_assert_eq!(space.pi_nabla.ncols(), ndof);
        Ok(space)
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.n_dofs()
    }

    pub fn monomials(&self, degree: usize) -> MonomialBasis {
        self.basis.with_degree(degree)
    }

    /// `sum_e int_e phi_i q_a` for every DOF basis function `phi_i`, where
    /// `q(e, g)` returns the values of the `q_a` at Gauss point `g` of edge
    /// `e`. Result is `(nq, ndof)`.
    fn boundary_integrals(&self, nq: usize, q: impl Fn(&EdgeTrace, usize) -> DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(nq, self.n_dofs());
        for tr in &self.edge_traces {
            for g in 0..tr.weights.len() {
                let qv = q(tr, g) * tr.weights[g];
                for (j, &dof) in tr.dofs.iter().enumerate() {
                    let lj = tr.lagrange[(g, j)];
                    if lj != 0.0 {
                        out.column_mut(dof).axpy(lj, &qv, 1.0);
                    }
                }
            }
        }
        out
    }

    fn build_pi_nabla(&mut self, geom: &ElementGeometry, cell: usize) -> Result<()> {
        let k = self.k;
        let nk = dim(k);
        let ndof = self.n_dofs();
        let kb = self.basis.with_degree(k);
        let (gx, gy) = kb.grad_map();
        let nlow = gx.nrows();
        let hlow = self.mass.view((0, 0), (nlow, nlow)).into_owned();
        let mut g = gx.transpose() * &hlow * &gx + gy.transpose() * &hlow * &gy;

        // (grad phi_i, grad m_a) = -(phi_i, lap m_a) + int_dE phi_i dm_a/dn
        let mut b = self.boundary_integrals(nk, |tr, q| {
            let low = tr.monomials.column(q).rows(0, nlow).into_owned();
            (gx.transpose() * &low) * tr.normal.x + (gy.transpose() * &low) * tr.normal.y
        });
        let lap = kb.laplace_map();
        for a in 0..nk {
            for c in 0..lap.nrows() {
                let l = lap[(c, a)];
                if l != 0.0 {
                    b[(a, self.layout.moment_dof(c))] -= l * self.area;
                }
            }
        }

        // mean condition replaces the first (constant) row
        if k == 1 {
            let bnd = self.boundary_integrals(1, |_, _| DVector::from_element(1, 1.0));
            let perimeter_moments = self.boundary_monomial_integrals(nk);
            g.row_mut(0).copy_from(&perimeter_moments.transpose());
            b.row_mut(0).copy_from(&bnd.row(0));
        } else {
            for j in 0..nk {
                g[(0, j)] = self.mass[(0, j)];
            }
            b.row_mut(0).fill(0.0);
            b[(0, self.layout.moment_dof(0))] = self.area;
        }
        self.pi_nabla = lu_solve(g, &b, cell, "Pi-nabla Gram matrix")?;

        let mut d = DMatrix::zeros(ndof, nk);
        for (i, v) in geom.vertices.iter().enumerate() {
            d.row_mut(i).copy_from(&kb.eval(*v).transpose());
        }
        for (e, eg) in geom.edges.iter().enumerate() {
            for (j, &s) in self.layout.edge_nodes.iter().enumerate() {
                let p = eg.start + (eg.end - eg.start) * s;
                d.row_mut(self.layout.edge_dof(e, j)).copy_from(&kb.eval(p).transpose());
            }
        }
        for c in 0..self.layout.n_moments() {
            for j in 0..nk {
                d[(self.layout.moment_dof(c), j)] = self.mass[(c, j)] / self.area;
            }
        }
        self.pi_nabla_dof = &d * &self.pi_nabla;
        self.monomial_dofs = d;
        Ok(())
    }

    /// `int_dE m_a` for the first `n` monomials.
    fn boundary_monomial_integrals(&self, n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for tr in &self.edge_traces {
            for (g, &w) in tr.weights.iter().enumerate() {
                out.axpy(w, &tr.monomials.column(g).rows(0, n), 1.0);
            }
        }
        out
    }

    fn build_moments(&mut self) {
        let nfull = self.basis.dim();
        let nk = dim(self.k);
        let mut m = DMatrix::zeros(nfull, self.n_dofs());
        for a in 0..nfull {
            if is_dof_moment_degree(self.k, degree_of(a)) {
                m[(a, self.layout.moment_dof(a))] = self.area;
            } else {
                let h_row = self.mass.view((a, 0), (1, nk));
                m.row_mut(a).copy_from(&(h_row * &self.pi_nabla));
            }
        }
        self.moments = m;
    }

    /// DOFs -> `P_n` coefficients of the L2 projection `Pi^0_n v`,
    /// for `n <= k + ell`.
    pub fn pi_zero_scalar(&self, n: usize, cell: usize) -> Result<DMatrix<f64>> {
        assert!(n <= self.k + self.ell, "projection degree above k + ell");
        let d = dim(n);
        let h = self.mass.view((0, 0), (d, d)).into_owned();
        let rhs = self.moments.rows(0, d).into_owned();
        spd_solve(&h, &rhs, cell, "monomial Gram matrix")
    }

    /// DOFs -> `[P_n]^2` coefficients of `Pi^0_n grad v`, for
    /// `n <= k + ell - 1`.
    pub fn pi_zero_grad_of_degree(&self, n: usize, cell: usize) -> Result<DMatrix<f64>> {
        assert!(n < self.k + self.ell, "gradient projection degree above k + ell - 1");
        let d = dim(n);
        let bn = self.basis.with_degree(n);
        let (gx, gy) = bn.grad_map();
        let nlow = gx.nrows();
        let low_moments = self.moments.rows(0, nlow);
        // (d_x phi, m_a) = -(phi, d_x m_a) + int_dE phi m_a n_x
        let mut r = DMatrix::zeros(2 * d, self.n_dofs());
        let rx = self.boundary_integrals(d, |tr, g| tr.monomials.column(g).rows(0, d) * tr.normal.x)
            - gx.transpose() * low_moments;
        let ry = self.boundary_integrals(d, |tr, g| tr.monomials.column(g).rows(0, d) * tr.normal.y)
            - gy.transpose() * low_moments;
        r.rows_mut(0, d).copy_from(&rx);
        r.rows_mut(d, d).copy_from(&ry);
        let h = self.mass.view((0, 0), (d, d)).into_owned();
        spd_solve(&block_diag2(&h), &r, cell, "vector monomial Gram matrix")
    }

    /// DOF vector of a function defined on the element; moments use the
    /// element quadrature, which is exact for polynomials of degree
    /// `<= 2(k+ell)+2-(k-2)`.
    pub fn interpolate(&self, geom: &ElementGeometry, f: impl Fn(Point) -> f64) -> DVector<f64> {
        let mut dofs = DVector::zeros(self.n_dofs());
        for (i, v) in geom.vertices.iter().enumerate() {
            dofs[i] = f(*v);
        }
        for (e, eg) in geom.edges.iter().enumerate() {
            for (j, &s) in self.layout.edge_nodes.iter().enumerate() {
                dofs[self.layout.edge_dof(e, j)] = f(eg.start + (eg.end - eg.start) * s);
            }
        }
        let nm = self.layout.n_moments();
        if nm > 0 {
            let mb = self.basis.with_degree(self.k - 2);
            for (p, &w) in geom.quad_points.iter().zip(&geom.quad_weights) {
                let fv = f(*p) * w / self.area;
                let m = mb.eval(*p);
                for c in 0..nm {
                    dofs[self.layout.moment_dof(c)] += fv * m[c];
                }
            }
        }
        dofs
    }
}
