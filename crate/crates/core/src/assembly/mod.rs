//! Global assembly, strong Dirichlet conditions, the sparse solve, energy
//! errors and VTK export.

mod dofmap;
mod vtk;

use std::collections::{BTreeMap, HashMap};

use faer::sparse::{SparseColMat, Triplet};
use faer::prelude::Solve;
use faer::Mat;
use nalgebra::DVector;

pub use dofmap::DofMap;
pub use vtk::{export_vtk, vtk_string};

use crate::error::{Result, VemError};
use crate::polybasis::PolyCoeffs;
use crate::polymesh::{ElementGeometry, PolyMesh};
use crate::sfsupg::{
    baseline_vem_forms, element_coefficients, local_forms, probe_min_ell, ElementCoefficients, LocalForms,
    ProblemData, StabilizationScale, DEFAULT_ELL_MAX, DEFAULT_PROBE_TOL,
};
use crate::vemspace::LocalSpace;
use crate::Point;

/// Required relative residual of the global solve.
pub const SOLVE_TOL: f64 = 1e-10;
const MAX_REFINEMENT_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Enlarged-enhancement space without stabilization.
    StabilizationFree,
    /// Standard space (`ell = 0`) with the dofi-dofi stabilization.
    Baseline(StabilizationScale),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EllPolicy {
    /// Run the coercivity probe on every distinct cell shape.
    Auto { ell_max: usize, tol: f64 },
    Fixed(usize),
    /// Lookup by number of cell vertices.
    ByVertexCount(BTreeMap<usize, usize>),
}

impl Default for EllPolicy {
    fn default() -> Self {
        Self::Auto {
            ell_max: DEFAULT_ELL_MAX,
            tol: DEFAULT_PROBE_TOL,
        }
    }
}

/// Probe results keyed by cell shape up to translation and scaling.
#[derive(Debug, Default, Clone)]
pub struct ProbeCache {
    entries: HashMap<(usize, Vec<(i64, i64)>), usize>,
    pub hits: usize,
    pub misses: usize,
}

impl ProbeCache {
    fn key(geom: &ElementGeometry, k: usize) -> (usize, Vec<(i64, i64)>) {
        let o = geom.vertices[0];
        let shape = geom
            .vertices
            .iter()
            .map(|&p| {
                let q = (p - o) / geom.h;
                ((q.x * 1e9).round() as i64, (q.y * 1e9).round() as i64)
            })
            .collect();
        (k, shape)
    }

    pub fn probe(&mut self, geom: &ElementGeometry, k: usize, ell_max: usize, tol: f64) -> Result<usize> {
        let key = Self::key(geom, k);
        if let Some(&ell) = self.entries.get(&key) {
            self.hits += 1;
            return Ok(ell);
        }
        self.misses += 1;
        let ell = probe_min_ell(geom, k, ell_max, tol)?.ell;
        self.entries.insert(key, ell);
        Ok(ell)
    }
}

#[derive(Debug, Clone)]
pub struct ElementData {
    /// Geometry with quadrature for degree `k + ell`.
    pub geom: ElementGeometry,
    pub space: LocalSpace,
    pub coeffs: ElementCoefficients,
    pub forms: LocalForms,
}

/// Local spaces and forms of every cell with the global numbering.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub k: usize,
    pub method: Method,
    pub dofmap: DofMap,
    pub elements: Vec<ElementData>,
}

impl Discretization {
    pub fn ells(&self) -> Vec<usize> {
        self.elements.iter().map(|e| e.space.ell).collect()
    }

    pub fn mean_peclet(&self) -> f64 {
        self.elements.iter().map(|e| e.coeffs.peclet).sum::<f64>() / self.elements.len() as f64
    }
}

/// Builds local spaces and forms. SUPG coefficients are evaluated on the
/// degree-`k` geometry so both methods share `tau_E` on a given mesh.
pub fn discretize(
    mesh: &PolyMesh,
    problem: &ProblemData,
    k: usize,
    method: Method,
    policy: &EllPolicy,
    cache: &mut ProbeCache,
) -> Result<Discretization> {
    if k == 0 {
        return Err(VemError::InvalidArgument("order k must be at least 1".into()));
    }
    let mut elements = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let base = ElementGeometry::from_mesh(mesh, c, k)?;
        let ell = match (method, policy) {
            (Method::Baseline(_), _) => 0,
            (_, EllPolicy::Fixed(l)) => *l,
            (_, EllPolicy::Auto { ell_max, tol }) => cache.probe(&base, k, *ell_max, *tol)?,
            (_, EllPolicy::ByVertexCount(t)) => *t.get(&base.n_vertices()).ok_or_else(|| {
                VemError::InvalidArgument(format!("no ell given for cells with {} vertices", base.n_vertices()))
            })?,
        };
        let coeffs = element_coefficients(&base, k, problem)?;
        let geom = base.with_poly_degree(k + ell);
        let space = LocalSpace::build(&geom, k, ell)?;
        let forms = match method {
            Method::StabilizationFree => local_forms(&geom, &space, &coeffs, problem),
            Method::Baseline(scale) => baseline_vem_forms(&geom, &space, &coeffs, problem, scale)?,
        };
        let finite = forms.a.iter().chain(forms.b.iter()).chain(forms.d.iter()).chain(forms.load.iter());
        if !finite.into_iter().all(|v| v.is_finite()) {
            return Err(VemError::NonFinite { cell: c });
        }
        elements.push(ElementData { geom, space, coeffs, forms });
    }
    Ok(Discretization {
        k,
        method,
        dofmap: DofMap::new(mesh, k),
        elements,
    })
}

/// Global matrix as triplets (duplicates summed), load vector and the
/// prescribed Dirichlet values.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub n: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    pub dirichlet: Vec<Option<f64>>,
}

impl GlobalSystem {
    /// Dense copy; intended for small systems and tests.
    pub fn dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.triplets {
            m[(i, j)] += v;
        }
        m
    }
}

/// Scatter-adds `A_h + B_h + D_h` and `F_h` in cell order.
pub fn assemble(mesh: &PolyMesh, disc: &Discretization, problem: &ProblemData) -> Result<GlobalSystem> {
    let n = disc.dofmap.n_dofs();
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n];
    for (c, el) in disc.elements.iter().enumerate() {
        let dofs = disc.dofmap.cell_dofs(c);
        let k = el.forms.system();
        for (jl, &jg) in dofs.iter().enumerate() {
            for (il, &ig) in dofs.iter().enumerate() {
                let v = k[(il, jl)];
                if v != 0.0 {
                    triplets.push((ig, jg, v));
                }
            }
        }
        for (il, &ig) in dofs.iter().enumerate() {
            rhs[ig] += el.forms.load[il];
        }
    }
    let dirichlet = dirichlet_values(mesh, &disc.dofmap, problem)?;
    Ok(GlobalSystem { n, triplets, rhs, dirichlet })
}

/// Boundary DOF values: vertices take the label of highest priority among
/// their boundary edges, edge nodes the label of their edge.
pub fn dirichlet_values(mesh: &PolyMesh, dofmap: &DofMap, problem: &ProblemData) -> Result<Vec<Option<f64>>> {
    let mut values = vec![None; dofmap.n_dofs()];
    let mut vertex_label: BTreeMap<usize, String> = BTreeMap::new();
    let nodes = crate::polybasis::quadrature::gauss_lobatto_interior(dofmap.k);
    for e in mesh.boundary_edges() {
        let [a, b] = mesh.edges()[e];
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        let Some(label) = mesh.edge_label(e) else {
            let cell = mesh.edge_cells(e)[0].unwrap();
            let edge = mesh.cell_edges(cell).iter().position(|&x| x == e).unwrap();
            return Err(VemError::UnlabeledBoundary { cell, edge });
        };
        let label = match &problem.relabel {
            Some(f) => f((pa + pb) * 0.5, label),
            None => label.to_string(),
        };
        for (j, &s) in nodes.iter().enumerate() {
            values[dofmap.edge_dof(e, j)] = Some((problem.dirichlet)(&label, pa + (pb - pa) * s));
        }
        for v in [a, b] {
            let better = match vertex_label.get(&v) {
                Some(cur) => problem.label_rank(&label) < problem.label_rank(cur),
                None => true,
            };
            if better {
                vertex_label.insert(v, label.clone());
            }
        }
    }
    for (v, label) in vertex_label {
        values[v] = Some((problem.dirichlet)(&label, mesh.vertices()[v]));
    }
    Ok(values)
}

/// System on the free DOFs after eliminating the Dirichlet ones.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    /// Global index of each free DOF.
    pub free: Vec<usize>,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    /// Full-length vector holding the prescribed values (zero elsewhere).
    pub lifted: Vec<f64>,
}

pub fn apply_dirichlet(system: &GlobalSystem) -> ReducedSystem {
    let mut index = vec![usize::MAX; system.n];
    let mut free = Vec::new();
    let mut lifted = vec![0.0; system.n];
    for (i, d) in system.dirichlet.iter().enumerate() {
        match d {
            Some(g) => lifted[i] = *g,
            None => {
                index[i] = free.len();
                free.push(i);
            }
        }
    }
    let mut rhs: Vec<f64> = free.iter().map(|&i| system.rhs[i]).collect();
    let mut triplets = Vec::new();
    for &(i, j, v) in &system.triplets {
        let ri = index[i];
        if ri == usize::MAX {
            continue;
        }
        match system.dirichlet[j] {
            None => triplets.push((ri, index[j], v)),
            Some(g) => rhs[ri] -= v * g,
        }
    }
    ReducedSystem { free, triplets, rhs, lifted }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub n: usize,
    pub residual: f64,
    pub refinement_steps: usize,
}

impl SolveReport {
    /// Machine-readable diagnostics line.
    pub fn line(&self) -> String {
        format!("solve: n={} residual={:.3e}", self.n, self.residual)
    }
}

fn spmv(n: usize, triplets: &[(usize, usize, f64)], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for &(i, j, v) in triplets {
        y[i] += v * x[j];
    }
    y
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sparse LU solve with iterative refinement; fails if the relative
/// residual stays above [`SOLVE_TOL`].
pub fn solve_reduced(sys: &ReducedSystem) -> Result<(Vec<f64>, SolveReport)> {
    let n = sys.free.len();
    if n == 0 {
        return Ok((Vec::new(), SolveReport { n, residual: 0.0, refinement_steps: 0 }));
    }
    let trip: Vec<_> = sys.triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip).map_err(|e| VemError::Solver {
        reason: format!("matrix construction failed: {e:?}"),
        residual: f64::NAN,
    })?;
    let lu = a.sp_lu().map_err(|e| VemError::Solver {
        reason: format!("sparse LU failed: {e:?}"),
        residual: f64::NAN,
    })?;
    let bnorm = norm(&sys.rhs).max(f64::MIN_POSITIVE);
    let b = Mat::<f64>::from_fn(n, 1, |i, _| sys.rhs[i]);
    let sol = lu.solve(&b);
    let mut x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    let residual_of = |x: &[f64]| {
        let ax = spmv(n, &sys.triplets, x);
        let r: Vec<f64> = sys.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let rel = norm(&r) / bnorm;
        (r, rel)
    };
    let (mut r, mut rel) = residual_of(&x);
    let mut steps = 0;
    while !(rel <= SOLVE_TOL) && rel.is_finite() && steps < MAX_REFINEMENT_STEPS {
        let rm = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
        let dx = lu.solve(&rm);
        let trial: Vec<f64> = (0..n).map(|i| x[i] + dx[(i, 0)]).collect();
        let (tr, trel) = residual_of(&trial);
        steps += 1;
        if !(trel < rel) {
            break;
        }
        x = trial;
        r = tr;
        rel = trel;
    }
    if !(rel <= SOLVE_TOL) || x.iter().any(|v| !v.is_finite()) {
        return Err(VemError::Solver {
            reason: "relative residual above tolerance (singular or ill-conditioned system)".into(),
            residual: rel,
        });
    }
    Ok((x, SolveReport { n, residual: rel, refinement_steps: steps }))
}

#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    /// Global DOF vector.
    pub dofs: Vec<f64>,
    /// `P_k` coefficients of `Pi^nabla_k u_h` on every cell.
    pub pi_nabla: Vec<DVector<f64>>,
    pub ells: Vec<usize>,
    pub report: SolveReport,
}

impl DiscreteSolution {
    /// Wraps a given global DOF vector (e.g. an interpolant).
    pub fn from_dofs(disc: &Discretization, dofs: Vec<f64>, report: SolveReport) -> Self {
        let pi_nabla = disc
            .elements
            .iter()
            .enumerate()
            .map(|(c, el)| &el.space.pi_nabla * local_values(disc, c, &dofs))
            .collect();
        Self {
            dofs,
            pi_nabla,
            ells: disc.ells(),
            report,
        }
    }

    pub fn local_dofs(&self, disc: &Discretization, c: usize) -> DVector<f64> {
        local_values(disc, c, &self.dofs)
    }

    pub fn reconstruction(&self, disc: &Discretization, c: usize) -> PolyCoeffs {
        PolyCoeffs::new(disc.elements[c].space.monomials(disc.k), self.pi_nabla[c].clone())
    }

    /// `Pi^nabla_k u_h` at `p`, using the first cell that contains it.
    pub fn eval(&self, mesh: &PolyMesh, disc: &Discretization, p: Point) -> Option<f64> {
        mesh.find_cell(p).map(|c| self.reconstruction(disc, c).eval(p))
    }

    /// `sum_E a_h(u_h, u_h)` as a quadratic form of the local matrices.
    pub fn discrete_energy(&self, disc: &Discretization) -> f64 {
        disc.elements
            .iter()
            .enumerate()
            .map(|(c, el)| {
                let u = self.local_dofs(disc, c);
                u.dot(&(&el.forms.a * &u))
            })
            .sum()
    }
}

fn local_values(disc: &Discretization, c: usize, global: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        disc.dofmap.cell_dofs(c).len(),
        disc.dofmap.cell_dofs(c).iter().map(|&g| global[g]),
    )
}

pub fn solve(system: &GlobalSystem, disc: &Discretization) -> Result<DiscreteSolution> {
    let reduced = apply_dirichlet(system);
    let (x, report) = solve_reduced(&reduced)?;
    let mut dofs = reduced.lifted.clone();
    for (r, &g) in reduced.free.iter().enumerate() {
        dofs[g] = x[r];
    }
    Ok(DiscreteSolution::from_dofs(disc, dofs, report))
}

/// Discretize, assemble and solve in one call.
pub fn solve_problem(
    mesh: &PolyMesh,
    problem: &ProblemData,
    k: usize,
    method: Method,
    policy: &EllPolicy,
    cache: &mut ProbeCache,
) -> Result<(Discretization, DiscreteSolution)> {
    let disc = discretize(mesh, problem, k, method, policy, cache)?;
    let system = assemble(mesh, &disc, problem)?;
    let sol = solve(&system, &disc)?;
    Ok((disc, sol))
}

/// Relative SUPG energy error of `Pi^nabla_k u_h`:
/// `sum kappa |grad e|^2 + tau_E |beta . grad e|^2`, normalized by the same
/// quantity for `u`.
pub fn energy_error(
    disc: &Discretization,
    sol: &DiscreteSolution,
    problem: &ProblemData,
    grad_u: &dyn Fn(Point) -> Point,
) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (c, el) in disc.elements.iter().enumerate() {
        let rec = sol.reconstruction(disc, c);
        let (kappa, tau) = (el.coeffs.kappa, el.coeffs.tau);
        for (&p, &w) in el.geom.quad_points.iter().zip(&el.geom.quad_weights) {
            let gu = grad_u(p);
            let ge = gu - rec.grad(p);
            let b = (problem.beta)(p);
            num += w * (kappa * ge.norm_squared() + tau * b.dot(&ge).powi(2));
            den += w * (kappa * gu.norm_squared() + tau * b.dot(&gu).powi(2));
        }
    }
    if !(den > 0.0) {
        return Err(VemError::UndefinedNorm("energy norm of the exact solution vanishes"));
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests;
