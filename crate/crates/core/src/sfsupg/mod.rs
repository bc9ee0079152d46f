//! SUPG parameters, the coercivity probe for `ell`, and the local discrete
//! forms of the stabilization-free scheme and of the stabilized baseline.
//!
//! Local matrices are indexed `[test, trial]`: entry `(i, j)` of `A_h` is
//! `a_h(phi_j, phi_i)`, so the local system reads `K u = F`.

mod problem;

pub use problem::{DirichletFn, ExactSolution, ProblemData, RelabelFn, ScalarFn, VectorFn};

use nalgebra::{DMatrix, DVector};

use crate::dense::sorted_eigenvalues;
use crate::error::{Result, VemError};
use crate::polybasis::{mass_matrix, MonomialBasis};
use crate::polymesh::ElementGeometry;
use crate::vemspace::LocalSpace;

/// Default relative eigenvalue threshold of the coercivity probe.
pub const DEFAULT_PROBE_TOL: f64 = 1e-8;
/// Default search cap of the coercivity probe.
pub const DEFAULT_ELL_MAX: usize = 6;

/// `m_1` in the Peclet number for linear elements.
pub const M1: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ElementCoefficients {
    pub kappa: f64,
    pub beta_sup: f64,
    pub h: f64,
    /// Inverse-inequality constant, `None` for `k = 1`.
    pub c_tilde: Option<f64>,
    pub m_k: f64,
    pub peclet: f64,
    pub tau: f64,
}

/// Largest `|beta|` over the volume and edge quadrature points of `E`.
pub fn beta_sup(geom: &ElementGeometry, beta: &VectorFn) -> f64 {
    geom.quad_points
        .iter()
        .chain(geom.edge_rules.iter().flat_map(|r| r.points.iter()))
        .map(|&p| beta(p).norm())
        .fold(0.0, f64::max)
}

/// Largest `C` with `C h^2 ||lap p||^2 <= ||grad p||^2` on `P_k(E)`, `k > 1`.
///
/// Computed as `1 / (h^2 mu_max)` where `mu_max` is the top eigenvalue of
/// the pencil `(L, S)` on `P_k` modulo constants, `S` the gradient Gram
/// matrix and `L` the Laplacian Gram matrix. Harmonic polynomials give
/// `mu = 0` and drop out.
pub fn tilde_c_k(geom: &ElementGeometry, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(VemError::InvalidArgument("inverse constant needs k > 1 (m_1 = 1/3 is used for k = 1)".into()));
    }
    let geom = if geom.poly_degree < k { geom.with_poly_degree(k) } else { geom.clone() };
    let kb = MonomialBasis::for_element(k, &geom);
    let h = mass_matrix(&kb.with_degree(k - 1), &geom)?;
    let (gx, gy) = kb.grad_map();
    let s = gx.transpose() * &h * &gx + gy.transpose() * &h * &gy;
    let lap = kb.laplace_map();
    let nl = lap.nrows();
    let hl = h.view((0, 0), (nl, nl));
    let l = lap.transpose() * hl * &lap;
    let n = kb.dim() - 1;
    let s = s.view((1, 1), (n, n)).into_owned();
    let l = l.view((1, 1), (n, n)).into_owned();
    let chol = s.cholesky().ok_or(VemError::SingularLocal {
        cell: geom.cell,
        what: "gradient Gram matrix",
        rcond: 0.0,
    })?;
    let lower = chol.l();
    let linv = lower
        .clone()
        .try_inverse()
        .ok_or(VemError::SingularLocal { cell: geom.cell, what: "gradient Gram matrix", rcond: 0.0 })?;
    let m = &linv * l * linv.transpose();
    let mu = sorted_eigenvalues(&m).last().copied().unwrap_or(0.0);
    Ok(1.0 / (geom.h * geom.h * mu))
}

/// `m_k`: 1/3 for `k = 1`, `2 C_k` otherwise.
pub fn m_k(k: usize, c_tilde: Option<f64>) -> f64 {
    match (k, c_tilde) {
        (1, _) => M1,
        (_, Some(c)) => 2.0 * c,
        (_, None) => panic!("m_k for k > 1 needs the inverse-inequality constant"),
    }
}

/// `(Pe_E, tau_E)` with `Pe_E = m_k beta_E h_E / kappa` and
/// `tau_E = h_E / (2 beta_E) min(1, Pe_E)`; both vanish when `beta_E = 0`.
pub fn peclet_tau(kappa: f64, beta_e: f64, h: f64, m_k: f64) -> Result<(f64, f64)> {
    if !(kappa > 0.0) {
        return Err(VemError::InvalidArgument(format!("diffusivity must be positive, got {kappa}")));
    }
    if beta_e == 0.0 {
        return Ok((0.0, 0.0));
    }
    let pe = m_k * beta_e * h / kappa;
    Ok((pe, h / (2.0 * beta_e) * pe.min(1.0)))
}

pub fn element_coefficients(geom: &ElementGeometry, k: usize, problem: &ProblemData) -> Result<ElementCoefficients> {
    let beta_e = beta_sup(geom, &problem.beta);
    let c_tilde = if k > 1 { Some(tilde_c_k(geom, k)?) } else { None };
    let mk = m_k(k, c_tilde);
    let (peclet, tau) = peclet_tau(problem.kappa, beta_e, geom.h, mk)?;
    Ok(ElementCoefficients {
        kappa: problem.kappa,
        beta_sup: beta_e,
        h: geom.h,
        c_tilde,
        m_k: mk,
        peclet,
        tau,
    })
}

/// `A^E_ij = (Pi^0_{k+ell-1} grad phi_i, Pi^0_{k+ell-1} grad phi_j)`.
pub fn coercivity_matrix(space: &LocalSpace) -> DMatrix<f64> {
    let d = space.pi_zero_grad.nrows() / 2;
    let h = space.mass.view((0, 0), (d, d));
    let x = space.pi_zero_grad.rows(0, d);
    let y = space.pi_zero_grad.rows(d, d);
    let a = x.transpose() * h * x + y.transpose() * h * y;
    (&a + a.transpose()) * 0.5
}

/// `(lambda_1 / lambda_max, lambda_2 / lambda_max)` of `A^E`.
pub fn coercivity_ratios(space: &LocalSpace) -> (f64, f64) {
    let ev = sorted_eigenvalues(&coercivity_matrix(space));
    let max = *ev.last().unwrap();
    (ev[0] / max, ev.get(1).copied().unwrap_or(max) / max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub ell: usize,
    /// `lambda_2 / lambda_max` for every `ell` tried.
    pub trace: Vec<f64>,
}

/// Smallest `ell <= ell_max` for which `A^E` has only the constants in its
/// numerical kernel: `lambda_2 >= tol_rel * lambda_max`.
pub fn probe_min_ell(geom: &ElementGeometry, k: usize, ell_max: usize, tol_rel: f64) -> Result<ProbeOutcome> {
    let mut trace = Vec::new();
    for ell in 0..=ell_max {
        let g = geom.with_poly_degree(k + ell);
        let space = LocalSpace::build(&g, k, ell)?;
        let (r1, r2) = coercivity_ratios(&space);
        trace.push(r2);
        if r1 < tol_rel && r2 >= tol_rel {
            return Ok(ProbeOutcome { ell, trace });
        }
    }
    Err(VemError::ProbeFailed {
        cell: geom.cell,
        ell_max,
        trace,
    })
}

/// Local matrices and load of one element, indexed `[test, trial]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalForms {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub load: DVector<f64>,
    /// `A^E` of the coercivity probe.
    pub probe: DMatrix<f64>,
    /// Stabilizing part included in `a` (baseline only).
    pub stabilization: Option<DMatrix<f64>>,
}

impl LocalForms {
    /// `A_h + B_h + D_h`.
    pub fn system(&self) -> DMatrix<f64> {
        &self.a + &self.b + &self.d
    }
}

/// Projections of the local basis sampled at the volume quadrature points;
/// every matrix is `(n_points, n_dofs)`.
pub struct ProjectedFields {
    pub weights: Vec<f64>,
    pub beta: Vec<crate::Point>,
    /// `beta . Pi^0_{k+ell-1} grad phi_i`.
    pub streamline_hi: DMatrix<f64>,
    /// `beta . Pi^0_{k-1} grad phi_i`.
    pub streamline_lo: DMatrix<f64>,
    /// `div(Pi^0_{k-1} grad phi_i)`.
    pub div_lo: DMatrix<f64>,
    /// `Pi^0_{k-1} phi_i`.
    pub value_lo: DMatrix<f64>,
}

impl ProjectedFields {
    pub fn new(geom: &ElementGeometry, space: &LocalSpace, beta: &VectorFn) -> Self {
        let k = space.k;
        let pts = &geom.quad_points;
        let npts = pts.len();
        let beta: Vec<_> = pts.iter().map(|&p| beta(p)).collect();
        let streamline = |x: &DMatrix<f64>, degree: usize| {
            let d = x.nrows() / 2;
            let v = space.monomials(degree).eval_points(pts).transpose();
            let gx = &v * x.rows(0, d);
            let gy = &v * x.rows(d, d);
            DMatrix::from_fn(npts, space.n_dofs(), |q, i| beta[q].x * gx[(q, i)] + beta[q].y * gy[(q, i)])
        };
        let streamline_hi = streamline(&space.pi_zero_grad, k + space.ell - 1);
        let streamline_lo = streamline(&space.pi_zero_grad_low, k - 1);
        let div_lo = if k >= 2 {
            let div = space.monomials(k - 1).div_map() * &space.pi_zero_grad_low;
            space.monomials(k - 2).eval_points(pts).transpose() * div
        } else {
            DMatrix::zeros(npts, space.n_dofs())
        };
        let value_lo = space.monomials(k - 1).eval_points(pts).transpose() * &space.pi_zero;
        Self {
            weights: geom.quad_weights.clone(),
            beta,
            streamline_hi,
            streamline_lo,
            div_lo,
            value_lo,
        }
    }

    /// `sum_q w_q u[q, i] v[q, j]`.
    fn weighted_product(&self, u: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        let mut wv = v.clone();
        for (q, &w) in self.weights.iter().enumerate() {
            wv.row_mut(q).scale_mut(w);
        }
        u.transpose() * wv
    }
}

/// `a_h`: `kappa (Pi0 grad w, Pi0 grad v) + tau (beta . Pi0 grad w, beta . Pi0 grad v)`
/// with the degree `k+ell-1` gradient projection and no stabilization.
pub fn local_a_h(space: &LocalSpace, fields: &ProjectedFields, coeffs: &ElementCoefficients) -> DMatrix<f64> {
    let a = coercivity_matrix(space) * coeffs.kappa
        + fields.weighted_product(&fields.streamline_hi, &fields.streamline_hi) * coeffs.tau;
    (&a + a.transpose()) * 0.5
}

/// `b_h`: `(beta . Pi0_{k-1} grad w, Pi0_{k-1} v)`.
pub fn local_b_h(fields: &ProjectedFields) -> DMatrix<f64> {
    fields.weighted_product(&fields.value_lo, &fields.streamline_lo)
}

/// `d_h`: `-tau kappa (div(Pi0_{k-1} grad w), beta . Pi0_{k+ell-1} grad v)`.
pub fn local_d_h(fields: &ProjectedFields, coeffs: &ElementCoefficients) -> DMatrix<f64> {
    fields.weighted_product(&fields.streamline_hi, &fields.div_lo) * (-coeffs.tau * coeffs.kappa)
}

/// `F_h`: `(f, Pi0_{k-1} v + tau beta . Pi0_{k+ell-1} grad v)`.
pub fn local_rhs(geom: &ElementGeometry, fields: &ProjectedFields, coeffs: &ElementCoefficients, f: &ScalarFn) -> DVector<f64> {
    let n = fields.value_lo.ncols();
    let mut out = DVector::zeros(n);
    for (q, &p) in geom.quad_points.iter().enumerate() {
        let fw = f(p) * fields.weights[q];
        if fw == 0.0 {
            continue;
        }
        for i in 0..n {
            out[i] += fw * (fields.value_lo[(q, i)] + coeffs.tau * fields.streamline_hi[(q, i)]);
        }
    }
    out
}

/// All local forms of the stabilization-free scheme on `space`.
pub fn local_forms(
    geom: &ElementGeometry,
    space: &LocalSpace,
    coeffs: &ElementCoefficients,
    problem: &ProblemData,
) -> LocalForms {
    let fields = ProjectedFields::new(geom, space, &problem.beta);
    LocalForms {
        a: local_a_h(space, &fields, coeffs),
        b: local_b_h(&fields),
        d: local_d_h(&fields, coeffs),
        load: local_rhs(geom, &fields, coeffs, &problem.source),
        probe: coercivity_matrix(space),
        stabilization: None,
    }
}

/// Scaling of the baseline's dofi-dofi stabilization.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StabilizationScale {
    /// `sigma_E = kappa + tau_E beta_E^2`.
    #[default]
    EnergyMatched,
    Fixed(f64),
}

impl StabilizationScale {
    pub fn sigma(&self, coeffs: &ElementCoefficients) -> f64 {
        match *self {
            Self::EnergyMatched => coeffs.kappa + coeffs.tau * coeffs.beta_sup * coeffs.beta_sup,
            Self::Fixed(s) => s,
        }
    }
}

/// `sigma (I - Pi)^T (I - Pi)` with `Pi` the DOF matrix of `Pi^nabla_k`.
pub fn dofi_dofi_stabilization(space: &LocalSpace, sigma: f64) -> DMatrix<f64> {
    let n = space.n_dofs();
    let r = DMatrix::<f64>::identity(n, n) - &space.pi_nabla_dof;
    r.transpose() * r * sigma
}

/// Classical SUPG-VEM forms: the `ell = 0` consistency terms plus the
/// dofi-dofi stabilization.
pub fn baseline_vem_forms(
    geom: &ElementGeometry,
    space: &LocalSpace,
    coeffs: &ElementCoefficients,
    problem: &ProblemData,
    scale: StabilizationScale,
) -> Result<LocalForms> {
    if space.ell != 0 {
        return Err(VemError::InvalidArgument(format!(
            "baseline uses the standard space (ell = 0), got ell = {}",
            space.ell
        )));
    }
    let mut forms = local_forms(geom, space, coeffs, problem);
    let stab = dofi_dofi_stabilization(space, scale.sigma(coeffs));
    forms.a += &stab;
    forms.stabilization = Some(stab);
    Ok(forms)
}
