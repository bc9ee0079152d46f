//! Benchmark problems, experiment drivers and their tabular outputs, plus
//! the command line front end.

pub mod cli;
mod problems;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

pub use problems::{
    problem_by_name, problem_smooth, problem_test1, problem_test1_with, problem_test2, problem_test2_with,
    test1_grad, test1_laplacian, test1_u, PROBLEM_NAMES, TEST2_INFLOW, TEST2_REST,
};

use crate::assembly::{
    assemble, discretize, energy_error, export_vtk, solve, DiscreteSolution, Discretization, EllPolicy, Method,
    ProbeCache,
};
use crate::error::{Result, VemError};
use crate::polymesh::{generate_cartesian, generate_concave_pentagons, generate_voronoi, ElementGeometry, PolyMesh};
use crate::sfsupg::{coercivity_ratios, ProblemData, StabilizationScale, DEFAULT_ELL_MAX, DEFAULT_PROBE_TOL};
use crate::vemspace::LocalSpace;

/// Lloyd iterations used for every T3 mesh.
pub const T3_LLOYD_ITERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    /// Uniform squares, refinement parameter = cells per side.
    T1,
    /// Convex and concave pentagons, refinement parameter = columns.
    T2,
    /// Lloyd-relaxed Voronoi cells, refinement parameter = cell count.
    T3,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::T1, Family::T2, Family::T3];

    pub fn name(self) -> &'static str {
        match self {
            Family::T1 => "t1",
            Family::T2 => "t2",
            Family::T3 => "t3",
        }
    }

    pub fn default_refinements(self) -> Vec<usize> {
        match self {
            Family::T1 => vec![8, 16, 32, 64],
            Family::T2 => vec![4, 8, 16, 32],
            Family::T3 => vec![25, 100, 400, 1600],
        }
    }

    /// Mesh at refinement parameter `n`; T3 level `level` uses `seed + level`.
    pub fn mesh(self, n: usize, seed: u64, level: usize) -> Result<PolyMesh> {
        match self {
            Family::T1 => generate_cartesian(n, n),
            Family::T2 => generate_concave_pentagons(n),
            Family::T3 => generate_voronoi(n, T3_LLOYD_ITERS, seed + level as u64),
        }
    }
}

impl FromStr for Family {
    type Err = VemError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t1" => Ok(Family::T1),
            "t2" => Ok(Family::T2),
            "t3" => Ok(Family::T3),
            _ => Err(VemError::InvalidArgument(format!("unknown mesh family '{s}' (expected t1, t2 or t3)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EllMode {
    Auto,
    Fixed(usize),
    ByVertexCount(BTreeMap<usize, usize>),
}

impl FromStr for EllMode {
    type Err = VemError;
    /// `auto`, an integer, or a table like `4:2,5:1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || VemError::InvalidArgument(format!("invalid ell mode '{s}' (expected auto, <int> or nv:ell,...)"));
        if s == "auto" {
            return Ok(EllMode::Auto);
        }
        if let Ok(l) = s.parse() {
            return Ok(EllMode::Fixed(l));
        }
        let mut t = BTreeMap::new();
        for part in s.split(',') {
            let (nv, l) = part.split_once(':').ok_or_else(bad)?;
            t.insert(nv.trim().parse().map_err(|_| bad())?, l.trim().parse().map_err(|_| bad())?);
        }
        Ok(EllMode::ByVertexCount(t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: String,
    /// Overrides the problem's default diffusivity.
    pub kappa: Option<f64>,
    pub family: Family,
    pub refinements: Vec<usize>,
    pub k: usize,
    pub ell: EllMode,
    pub probe_tol: f64,
    pub ell_max: usize,
    pub out_dir: Option<PathBuf>,
    pub baseline: bool,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(problem: &str, family: Family, k: usize) -> Self {
        Self {
            problem: problem.to_string(),
            kappa: None,
            family,
            refinements: family.default_refinements(),
            k,
            ell: EllMode::Auto,
            probe_tol: DEFAULT_PROBE_TOL,
            ell_max: DEFAULT_ELL_MAX,
            out_dir: None,
            baseline: false,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.k) {
            return Err(VemError::InvalidArgument(format!("k must be in 1..=4, got {}", self.k)));
        }
        if self.refinements.is_empty() {
            return Err(VemError::InvalidArgument("empty refinement schedule".into()));
        }
        if self.refinements.windows(2).any(|w| w[1] <= w[0]) {
            return Err(VemError::InvalidArgument(format!(
                "refinement schedule must be strictly increasing (decreasing h), got {:?}",
                self.refinements
            )));
        }
        if !(self.probe_tol > 0.0 && self.probe_tol < 1.0) {
            return Err(VemError::InvalidArgument(format!("probe tolerance must be in (0, 1), got {}", self.probe_tol)));
        }
        Ok(())
    }

    pub fn problem_data(&self) -> Result<ProblemData> {
        problem_by_name(&self.problem, self.kappa)
    }

    pub fn ell_policy(&self) -> EllPolicy {
        match &self.ell {
            EllMode::Auto => EllPolicy::Auto {
                ell_max: self.ell_max,
                tol: self.probe_tol,
            },
            EllMode::Fixed(l) => EllPolicy::Fixed(*l),
            EllMode::ByVertexCount(t) => EllPolicy::ByVertexCount(t.clone()),
        }
    }

    pub fn meshes(&self) -> Result<Vec<PolyMesh>> {
        let meshes = self
            .refinements
            .iter()
            .enumerate()
            .map(|(level, &n)| self.family.mesh(n, self.seed, level))
            .collect::<Result<Vec<_>>>()?;
        if meshes.windows(2).any(|w| w[1].h_max() >= w[0].h_max()) {
            return Err(VemError::InvalidArgument("refinement schedule does not decrease h_max".into()));
        }
        Ok(meshes)
    }
}

/// `log(e0 / e1) / log(h0 / h1)`.
pub fn alpha(h0: f64, e0: f64, h1: f64, e1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h_max: f64,
    pub n_dof: usize,
    pub err_sf: f64,
    pub err_vem: Option<f64>,
    pub mean_pe: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

pub const CONVERGENCE_HEADER: &str = "level,h_max,n_dof,err_sf,err_vem,ratio,mean_pe,alpha_sf,alpha_vem";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl ConvergenceReport {
    /// Rate between rows `i-1` and `i` for the stabilization-free errors.
    pub fn alpha_sf_at(&self, i: usize) -> Option<f64> {
        let (a, b) = (self.rows.get(i.checked_sub(1)?)?, self.rows.get(i)?);
        Some(alpha(a.h_max, a.err_sf, b.h_max, b.err_sf))
    }

    pub fn alpha_vem_at(&self, i: usize) -> Option<f64> {
        let (a, b) = (self.rows.get(i.checked_sub(1)?)?, self.rows.get(i)?);
        Some(alpha(a.h_max, a.err_vem?, b.h_max, b.err_vem?))
    }

    /// Rate from the last two levels.
    pub fn alpha_sf(&self) -> Option<f64> {
        self.alpha_sf_at(self.rows.len().checked_sub(1)?)
    }

    pub fn alpha_vem(&self) -> Option<f64> {
        self.alpha_vem_at(self.rows.len().checked_sub(1)?)
    }

    /// One CSV line per row; floats use the shortest round-trip form.
    pub fn csv_line(&self, i: usize) -> String {
        let r = &self.rows[i];
        let ratio = r.err_vem.map(|v| v / r.err_sf);
        format!(
            "{},{:e},{},{:e},{},{},{:e},{},{}",
            r.level,
            r.h_max,
            r.n_dof,
            r.err_sf,
            opt(r.err_vem),
            opt(ratio),
            r.mean_pe,
            opt(self.alpha_sf_at(i)),
            opt(self.alpha_vem_at(i))
        )
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{CONVERGENCE_HEADER}\n");
        for i in 0..self.rows.len() {
            s.push_str(&self.csv_line(i));
            s.push('\n');
        }
        s
    }
}

fn out_file(config: &ExperimentConfig, name: &str) -> Result<Option<std::fs::File>> {
    match &config.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Ok(Some(std::fs::File::create(dir.join(name))?))
        }
        None => Ok(None),
    }
}

fn solve_level(
    mesh: &PolyMesh,
    problem: &ProblemData,
    config: &ExperimentConfig,
    method: Method,
    cache: &mut ProbeCache,
    log: &mut dyn Write,
) -> Result<(Discretization, DiscreteSolution)> {
    let disc = discretize(mesh, problem, config.k, method, &config.ell_policy(), cache)?;
    let system = assemble(mesh, &disc, problem)?;
    let sol = solve(&system, &disc)?;
    writeln!(log, "{}", sol.report.line())?;
    Ok((disc, sol))
}

/// Solves every refinement level with the stabilization-free method (and
/// the baseline if enabled) and records relative energy errors. With an
/// output directory, `convergence.csv` is written row by row.
pub fn run_convergence(config: &ExperimentConfig, log: &mut dyn Write) -> Result<ConvergenceReport> {
    config.validate()?;
    let problem = config.problem_data()?;
    let exact = problem
        .exact
        .clone()
        .ok_or_else(|| VemError::InvalidArgument(format!("problem '{}' has no exact solution", problem.name)))?;
    let mut csv = out_file(config, "convergence.csv")?;
    if let Some(f) = csv.as_mut() {
        writeln!(f, "{CONVERGENCE_HEADER}")?;
    }
    writeln!(
        log,
        "convergence: problem={} family={} k={} kappa={:e} levels={:?} baseline={}",
        problem.name,
        config.family.name(),
        config.k,
        problem.kappa,
        config.refinements,
        config.baseline
    )?;
    let mut report = ConvergenceReport::default();
    let mut cache = ProbeCache::default();
    for (level, mesh) in config.meshes()?.iter().enumerate() {
        let (disc, sol) = solve_level(mesh, &problem, config, Method::StabilizationFree, &mut cache, log)?;
        let err_sf = energy_error(&disc, &sol, &problem, &*exact.grad)?;
        let err_vem = if config.baseline {
            let method = Method::Baseline(StabilizationScale::default());
            let (bd, bs) = solve_level(mesh, &problem, config, method, &mut cache, log)?;
            Some(energy_error(&bd, &bs, &problem, &*exact.grad)?)
        } else {
            None
        };
        report.rows.push(ConvergenceRow {
            level,
            h_max: mesh.h_max(),
            n_dof: disc.dofmap.n_dofs(),
            err_sf,
            err_vem,
            mean_pe: disc.mean_peclet(),
        });
        let line = report.csv_line(level);
        writeln!(log, "level {level}: cells={} ells={:?} {line}", mesh.n_cells(), ell_histogram(&disc))?;
        if let Some(f) = csv.as_mut() {
            writeln!(f, "{line}")?;
            f.flush()?;
        }
    }
    Ok(report)
}

fn ell_histogram(disc: &Discretization) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for l in disc.ells() {
        *h.entry(l).or_insert(0) += 1;
    }
    h
}

#[derive(Debug, Clone)]
pub struct FieldReport {
    pub mesh: PolyMesh,
    pub disc: Discretization,
    pub solution: DiscreteSolution,
    pub min_vertex: f64,
    pub max_vertex: f64,
    pub vtk: Vec<PathBuf>,
    pub baseline: Option<(Discretization, DiscreteSolution)>,
}

impl FieldReport {
    /// `Pi^nabla_k u_h` at a point of the domain.
    pub fn eval(&self, p: crate::Point) -> Option<f64> {
        self.solution.eval(&self.mesh, &self.disc, p)
    }
}

/// Solves once on the finest configured mesh and exports VTK fields.
pub fn run_field(config: &ExperimentConfig, log: &mut dyn Write) -> Result<FieldReport> {
    config.validate()?;
    let level = config.refinements.len() - 1;
    let n = config.refinements[level];
    let mesh = config.family.mesh(n, config.seed, level)?;
    run_field_on(mesh, &format!("{}_n{n}", config.family.name()), config, log)
}

/// Like [`run_field`] on a given mesh; `tag` names the output files.
pub fn run_field_on(mesh: PolyMesh, tag: &str, config: &ExperimentConfig, log: &mut dyn Write) -> Result<FieldReport> {
    config.validate()?;
    let problem = config.problem_data()?;
    let mut cache = ProbeCache::default();
    writeln!(log, "field: problem={} mesh={tag} k={} cells={}", problem.name, config.k, mesh.n_cells())?;
    let (disc, solution) = solve_level(&mesh, &problem, config, Method::StabilizationFree, &mut cache, log)?;
    let nv = mesh.n_vertices();
    let min_vertex = solution.dofs[..nv].iter().copied().fold(f64::INFINITY, f64::min);
    let max_vertex = solution.dofs[..nv].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    writeln!(log, "vertex values: min={min_vertex:e} max={max_vertex:e}")?;
    if let Some(ex) = &problem.exact {
        writeln!(log, "energy error: {:e}", energy_error(&disc, &solution, &problem, &*ex.grad)?)?;
    }
    let baseline = if config.baseline {
        let method = Method::Baseline(StabilizationScale::default());
        Some(solve_level(&mesh, &problem, config, method, &mut cache, log)?)
    } else {
        None
    };
    let mut vtk = Vec::new();
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)?;
        let stem = format!("{}_{tag}_k{}", problem.name, config.k);
        let path = dir.join(format!("{stem}_sf.vtk"));
        export_vtk(&mesh, &disc, &solution, &path)?;
        vtk.push(path);
        if let Some((bd, bs)) = &baseline {
            let path = dir.join(format!("{stem}_vem.vtk"));
            export_vtk(&mesh, bd, bs, &path)?;
            vtk.push(path);
        }
    }
    Ok(FieldReport {
        mesh,
        disc,
        solution,
        min_vertex,
        max_vertex,
        vtk,
        baseline,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEntry {
    pub family: Family,
    pub n_vertices: usize,
    pub k: usize,
    /// Largest probed `ell` over the cells with this vertex count, `None`
    /// if the probe failed on any of them.
    pub ell: Option<usize>,
    pub cells: usize,
    pub distinct_shapes: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbeTable {
    pub entries: Vec<ProbeEntry>,
}

impl ProbeTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("family,n_vertices,k,ell,cells,distinct_shapes\n");
        for e in &self.entries {
            let ell = e.ell.map(|l| l.to_string()).unwrap_or_else(|| "—".into());
            writeln!(s, "{},{},{},{},{},{}", e.family.name(), e.n_vertices, e.k, ell, e.cells, e.distinct_shapes).unwrap();
        }
        s
    }

    /// Rows `k`, columns `(family, N_V)`.
    pub fn layout(&self) -> String {
        let mut cols: Vec<(Family, usize)> = self.entries.iter().map(|e| (e.family, e.n_vertices)).collect();
        cols.sort();
        cols.dedup();
        let mut ks: Vec<usize> = self.entries.iter().map(|e| e.k).collect();
        ks.sort();
        ks.dedup();
        let mut s = String::from("     ");
        for (f, nv) in &cols {
            write!(s, " {:>6}", format!("{}:{}", f.name(), nv)).unwrap();
        }
        s.push('\n');
        for k in ks {
            write!(s, "k = {k}").unwrap();
            for c in &cols {
                let cell = self
                    .entries
                    .iter()
                    .find(|e| e.k == k && (e.family, e.n_vertices) == *c)
                    .map(|e| e.ell.map(|l| l.to_string()).unwrap_or_else(|| "—".into()))
                    .unwrap_or_default();
                write!(s, " {cell:>6}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn get(&self, family: Family, n_vertices: usize, k: usize) -> Option<&ProbeEntry> {
        self.entries
            .iter()
            .find(|e| e.family == family && e.n_vertices == n_vertices && e.k == k)
    }
}

/// Probes every distinct cell shape of `mesh` for each order in `ks`.
pub fn probe_mesh(
    mesh: &PolyMesh,
    family: Family,
    ks: &[usize],
    ell_max: usize,
    tol: f64,
) -> Result<Vec<ProbeEntry>> {
    let mut entries = Vec::new();
    for &k in ks {
        let mut by_nv: BTreeMap<usize, (Option<usize>, usize, usize)> = BTreeMap::new();
        let mut cache = ProbeCache::default();
        for c in 0..mesh.n_cells() {
            let geom = ElementGeometry::from_mesh(mesh, c, k)?;
            let misses = cache.misses;
            let ell = match cache.probe(&geom, k, ell_max, tol) {
                Ok(l) => Some(l),
                Err(VemError::ProbeFailed { .. }) => None,
                Err(e) => return Err(e),
            };
            let entry = by_nv.entry(geom.n_vertices()).or_insert((Some(0), 0, 0));
            entry.0 = match (entry.0, ell) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
            entry.1 += 1;
            entry.2 += cache.misses - misses;
        }
        for (nv, (ell, cells, distinct)) in by_nv {
            entries.push(ProbeEntry {
                family,
                n_vertices: nv,
                k,
                ell,
                cells,
                distinct_shapes: distinct,
            });
        }
    }
    Ok(entries)
}

/// Probe table over families, each meshed at the given refinement parameter.
pub fn probe_table(
    families: &[(Family, usize)],
    ks: &[usize],
    config: &ExperimentConfig,
    log: &mut dyn Write,
) -> Result<ProbeTable> {
    let mut table = ProbeTable::default();
    for &(family, n) in families {
        let mesh = family.mesh(n, config.seed, 0)?;
        writeln!(log, "probe: family={} n={n} cells={}", family.name(), mesh.n_cells())?;
        table.entries.extend(probe_mesh(&mesh, family, ks, config.ell_max, config.probe_tol)?);
    }
    if let Some(mut f) = out_file(config, "probe_table.csv")? {
        f.write_all(table.to_csv().as_bytes())?;
    }
    writeln!(log, "{}", table.layout())?;
    Ok(table)
}

/// Whether `A^E` at exactly this `ell` has only the constants below
/// `tol * lambda_max`.
pub fn coercive_at(geom: &ElementGeometry, k: usize, ell: usize, tol: f64) -> Result<bool> {
    let space = LocalSpace::build(&geom.with_poly_degree(k + ell), k, ell)?;
    let (r1, r2) = coercivity_ratios(&space);
    Ok(r1 < tol && r2 >= tol)
}
