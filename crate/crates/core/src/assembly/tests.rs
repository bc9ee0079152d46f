use std::sync::Arc;

use super::*;
use crate::polymesh::{generate_cartesian, generate_concave_pentagons, generate_voronoi, BoundaryTag};
use crate::sfsupg::{ScalarFn, VectorFn};

/// `u = sum c x^a y^b` with the data of the advection-diffusion patch test.
fn patch_problem(terms: Vec<(i32, i32, f64)>, kappa: f64, beta: Point) -> ProblemData {
    let t = Arc::new(terms);
    let (t1, t2, t3) = (t.clone(), t.clone(), t.clone());
    let u: ScalarFn = Arc::new(move |p: Point| t1.iter().map(|&(a, b, c)| c * p.x.powi(a) * p.y.powi(b)).sum());
    let grad: VectorFn = Arc::new(move |p: Point| {
        let mut g = Point::zeros();
        for &(a, b, c) in t2.iter() {
            if a > 0 {
                g.x += c * a as f64 * p.x.powi(a - 1) * p.y.powi(b);
            }
            if b > 0 {
                g.y += c * b as f64 * p.x.powi(a) * p.y.powi(b - 1);
            }
        }
        g
    });
    let g2 = grad.clone();
    let f: ScalarFn = Arc::new(move |p: Point| {
        let mut lap = 0.0;
        for &(a, b, c) in t3.iter() {
            if a > 1 {
                lap += c * (a * (a - 1)) as f64 * p.x.powi(a - 2) * p.y.powi(b);
            }
            if b > 1 {
                lap += c * (b * (b - 1)) as f64 * p.x.powi(a) * p.y.powi(b - 2);
            }
        }
        -kappa * lap + beta.dot(&g2(p))
    });
    ProblemData::new("patch", kappa, Arc::new(move |_| beta), f, u.clone())
        .unwrap()
        .with_exact(u, grad)
}

fn degree_k_terms(k: usize) -> Vec<(i32, i32, f64)> {
    let mut t = Vec::new();
    for d in 0..=k as i32 {
        for b in 0..=d {
            t.push((d - b, b, 0.3 + 0.17 * (d * 3 + b) as f64 * if b % 2 == 0 { 1.0 } else { -1.0 }));
        }
    }
    t
}

fn solve_sf(mesh: &PolyMesh, pd: &ProblemData, k: usize) -> (Discretization, DiscreteSolution) {
    solve_problem(mesh, pd, k, Method::StabilizationFree, &EllPolicy::default(), &mut ProbeCache::default()).unwrap()
}

#[test]
fn shared_edge_dofs_agree_across_cells() {
    let mesh = generate_concave_pentagons(2).unwrap();
    for k in 1..=4 {
        let dm = DofMap::new(&mesh, k);
        let p = |x: Point| 1.0 + x.x * 0.3 - x.y.powi(3) + x.x.powi(k as i32) * x.y;
        let mut global: Vec<Option<f64>> = vec![None; dm.n_dofs()];
        for c in 0..mesh.n_cells() {
            let g = ElementGeometry::from_mesh(&mesh, c, k).unwrap();
            let s = LocalSpace::build(&g, k, 0).unwrap();
            let local = s.interpolate(&g, p);
            for (il, &ig) in dm.cell_dofs(c).iter().enumerate() {
                if ig >= dm.n_vertices + dm.n_edges * (k - 1) {
                    continue;
                }
                match global[ig] {
                    Some(v) => assert!((v - local[il]).abs() < 1e-14, "k={k} dof {ig}"),
                    None => global[ig] = Some(local[il]),
                }
            }
        }
        assert_eq!(dm.n_dofs(), mesh.n_vertices() + mesh.n_edges() * (k - 1) + mesh.n_cells() * k * (k - 1) / 2);
        let mut all: Vec<usize> = (0..mesh.n_cells()).flat_map(|c| dm.cell_dofs(c).to_vec()).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), dm.n_dofs());
    }
}

#[test]
fn single_cell_global_equals_local() {
    let mesh = generate_cartesian(1, 1).unwrap();
    let pd = patch_problem(degree_k_terms(2), 0.5, Point::new(1.0, 0.3));
    let disc = discretize(&mesh, &pd, 2, Method::StabilizationFree, &EllPolicy::Fixed(2), &mut ProbeCache::default()).unwrap();
    let sys = assemble(&mesh, &disc, &pd).unwrap();
    let local = disc.elements[0].forms.system();
    let dofs = disc.dofmap.cell_dofs(0);
    let global = sys.dense();
    for (il, &ig) in dofs.iter().enumerate() {
        for (jl, &jg) in dofs.iter().enumerate() {
            assert_eq!(global[(ig, jg)], local[(il, jl)]);
        }
        assert_eq!(sys.rhs[ig], disc.elements[0].forms.load[il]);
    }
}

#[test]
fn two_cells_diffusion_rows_sum_to_zero() {
    let mesh = generate_cartesian(2, 1).unwrap();
    let mut pd = patch_problem(vec![(0, 0, 1.0)], 1.0, Point::zeros());
    pd.beta = Arc::new(|_| Point::zeros());
    let disc = discretize(&mesh, &pd, 1, Method::StabilizationFree, &EllPolicy::Fixed(1), &mut ProbeCache::default()).unwrap();
    let sys = assemble(&mesh, &disc, &pd).unwrap();
    assert_eq!(sys.n, 6);
    let m = sys.dense();
    assert!((&m - m.transpose()).abs().max() < 1e-13);
    for i in 0..6 {
        assert!(m.row(i).sum().abs() < 1e-13);
    }
    // the two vertices on the shared edge couple to all 6 vertices
    let shared: Vec<usize> = (0..6).filter(|&v| mesh.vertices()[v].x == 0.5).collect();
    assert_eq!(shared.len(), 2);
    for &v in &shared {
        let a = &disc.elements[0].forms.a;
        let l0 = disc.dofmap.cell_dofs(0).iter().position(|&g| g == v).unwrap();
        let l1 = disc.dofmap.cell_dofs(1).iter().position(|&g| g == v).unwrap();
        let expect = a[(l0, l0)] + disc.elements[1].forms.a[(l1, l1)];
        assert!((m[(v, v)] - expect).abs() < 1e-14);
    }
}

#[test]
fn zero_boundary_data_keeps_interior_load() {
    let mesh = generate_cartesian(3, 3).unwrap();
    let pd = ProblemData::new(
        "zero",
        1e-2,
        Arc::new(|_| Point::new(1.0, 0.5)),
        Arc::new(|p: Point| p.x + 1.0),
        Arc::new(|_| 0.0),
    )
    .unwrap();
    let disc = discretize(&mesh, &pd, 2, Method::StabilizationFree, &EllPolicy::default(), &mut ProbeCache::default()).unwrap();
    let sys = assemble(&mesh, &disc, &pd).unwrap();
    let red = apply_dirichlet(&sys);
    assert!(red.free.iter().all(|&g| sys.dirichlet[g].is_none()));
    for (r, &g) in red.free.iter().enumerate() {
        assert_eq!(red.rhs[r], sys.rhs[g]);
    }
    // 4x4 boundary vertices + 12 boundary edges with one node each
    assert_eq!(sys.dirichlet.iter().filter(|d| d.is_some()).count(), 12 + 12);
}

#[test]
fn label_priority_decides_corner_values() {
    let mesh = generate_cartesian(2, 2).unwrap();
    let mut pd = ProblemData::new("bc", 1.0, Arc::new(|_| Point::zeros()), Arc::new(|_| 0.0), Arc::new(|_| 0.0)).unwrap();
    pd.dirichlet = Arc::new(|label: &str, _| if label == "hot" { 1.0 } else { 0.0 });
    pd.relabel = Some(Arc::new(|mid: Point, _: &str| if mid.x < 1e-12 { "hot".into() } else { "cold".into() }));
    let dm = DofMap::new(&mesh, 1);
    let corner = |x: f64, y: f64| mesh.vertices().iter().position(|p| *p == Point::new(x, y)).unwrap();
    pd.label_priority = vec!["hot".into(), "cold".into()];
    let v = dirichlet_values(&mesh, &dm, &pd).unwrap();
    assert_eq!(v[corner(0.0, 0.0)], Some(1.0));
    assert_eq!(v[corner(0.0, 1.0)], Some(1.0));
    assert_eq!(v[corner(1.0, 0.0)], Some(0.0));
    pd.label_priority = vec!["cold".into(), "hot".into()];
    let v = dirichlet_values(&mesh, &dm, &pd).unwrap();
    assert_eq!(v[corner(0.0, 0.0)], Some(0.0));
    assert_eq!(v[corner(0.0, 0.5)], Some(1.0));
}

#[test]
fn unlabeled_boundary_is_rejected() {
    let base = generate_cartesian(1, 1).unwrap();
    let tags: Vec<BoundaryTag> = base.boundary_tags().iter().filter(|t| t.edge != 2).cloned().collect();
    let mesh = PolyMesh::new(base.vertices().to_vec(), base.cells().to_vec(), tags).unwrap();
    let pd = patch_problem(vec![(0, 0, 1.0)], 1.0, Point::new(1.0, 0.0));
    let dm = DofMap::new(&mesh, 1);
    assert!(matches!(
        dirichlet_values(&mesh, &dm, &pd),
        Err(VemError::UnlabeledBoundary { cell: 0, edge: 2 })
    ));
}

#[test]
fn patch_test_small_meshes() {
    let beta = Point::new(1.0, 0.545);
    let meshes = [
        generate_cartesian(3, 3).unwrap(),
        generate_concave_pentagons(2).unwrap(),
        generate_voronoi(12, 10, 7).unwrap(),
    ];
    for mesh in &meshes {
        for k in 1..=3 {
            for kappa in [1.0, 1e-9] {
                let pd = patch_problem(degree_k_terms(k), kappa, beta);
                let (disc, sol) = solve_sf(mesh, &pd, k);
                let ex = pd.exact.as_ref().unwrap();
                let err = energy_error(&disc, &sol, &pd, &*ex.grad).unwrap();
                assert!(err < 1e-8, "family {:?} k={k} kappa={kappa}: {err:e}", mesh.family);
                assert!(sol.report.residual <= SOLVE_TOL);
                for (v, p) in mesh.vertices().iter().enumerate() {
                    assert!((sol.dofs[v] - (ex.u)(*p)).abs() < 1e-8);
                }
            }
        }
    }
}

#[test]
fn energy_two_ways() {
    let mesh = generate_concave_pentagons(2).unwrap();
    let beta = Point::new(0.8, -0.4);
    let pd = ProblemData::new(
        "e",
        0.05,
        Arc::new(move |_| beta),
        Arc::new(|p: Point| (p.x * 3.0).sin() + p.y),
        Arc::new(|p: Point| p.x * p.y),
    )
    .unwrap();
    for k in 1..=3 {
        let (disc, sol) = solve_sf(&mesh, &pd, k);
        let quad: f64 = disc
            .elements
            .iter()
            .enumerate()
            .map(|(c, el)| {
                let g = &el.space.pi_zero_grad * sol.local_dofs(&disc, c);
                let b = el.space.monomials(k + el.space.ell - 1);
                let d = b.dim();
                el.geom
                    .quad_points
                    .iter()
                    .zip(&el.geom.quad_weights)
                    .map(|(&p, &w)| {
                        let m = b.eval(p);
                        let gv = Point::new(m.dot(&g.rows(0, d)), m.dot(&g.rows(d, d)));
                        w * (el.coeffs.kappa * gv.norm_squared() + el.coeffs.tau * beta.dot(&gv).powi(2))
                    })
                    .sum::<f64>()
            })
            .sum();
        let mat = sol.discrete_energy(&disc);
        assert!((quad - mat).abs() < 1e-11 * mat.max(1.0), "k={k}: {quad} vs {mat}");
        assert!(mat > 0.0);
    }
}

#[test]
fn zero_discrete_solution_has_unit_error() {
    let mesh = generate_cartesian(4, 4).unwrap();
    let pd = patch_problem(degree_k_terms(2), 1e-3, Point::new(1.0, 0.545));
    let disc = discretize(&mesh, &pd, 2, Method::StabilizationFree, &EllPolicy::default(), &mut ProbeCache::default()).unwrap();
    let zero = DiscreteSolution::from_dofs(&disc, vec![0.0; disc.dofmap.n_dofs()], SolveReport { n: 0, residual: 0.0, refinement_steps: 0 });
    let ex = pd.exact.as_ref().unwrap();
    assert!((energy_error(&disc, &zero, &pd, &*ex.grad).unwrap() - 1.0).abs() < 1e-14);
    assert!(matches!(
        energy_error(&disc, &zero, &pd, &|_| Point::zeros()),
        Err(VemError::UndefinedNorm(_))
    ));
}

#[test]
fn singular_system_is_reported() {
    let mesh = generate_cartesian(2, 2).unwrap();
    let pd = patch_problem(degree_k_terms(1), 1.0, Point::new(1.0, 0.545));
    let disc = discretize(&mesh, &pd, 1, Method::StabilizationFree, &EllPolicy::default(), &mut ProbeCache::default()).unwrap();
    let mut sys = assemble(&mesh, &disc, &pd).unwrap();
    // no boundary conditions: constants are in the kernel
    sys.dirichlet = vec![None; sys.n];
    assert!(matches!(solve(&sys, &disc), Err(VemError::Solver { .. })));
}

#[test]
fn single_free_dof_is_exact() {
    let red = ReducedSystem {
        free: vec![4],
        triplets: vec![(0, 0, 1.0)],
        rhs: vec![2.5],
        lifted: vec![0.0; 5],
    };
    let (x, rep) = solve_reduced(&red).unwrap();
    assert_eq!(x, vec![2.5]);
    assert_eq!(rep.residual, 0.0);
    assert_eq!(rep.line(), "solve: n=1 residual=0.000e0");
}

#[test]
fn baseline_shares_numbering_and_boundary_path() {
    let mesh = generate_concave_pentagons(2).unwrap();
    let pd = patch_problem(degree_k_terms(2), 1e-4, Point::new(1.0, 0.545));
    let mut cache = ProbeCache::default();
    let sf = discretize(&mesh, &pd, 2, Method::StabilizationFree, &EllPolicy::default(), &mut cache).unwrap();
    let bl = discretize(&mesh, &pd, 2, Method::Baseline(StabilizationScale::default()), &EllPolicy::default(), &mut cache).unwrap();
    assert_eq!(sf.dofmap, bl.dofmap);
    for (a, b) in sf.elements.iter().zip(&bl.elements) {
        assert_eq!(a.coeffs, b.coeffs);
        assert_eq!(b.space.ell, 0);
        assert!(b.forms.stabilization.is_some() && a.forms.stabilization.is_none());
    }
    let s1 = assemble(&mesh, &sf, &pd).unwrap();
    let s2 = assemble(&mesh, &bl, &pd).unwrap();
    assert_eq!(s1.dirichlet, s2.dirichlet);
    // baseline passes the patch test as well
    let sol = solve(&s2, &bl).unwrap();
    let err = energy_error(&bl, &sol, &pd, &*pd.exact.as_ref().unwrap().grad).unwrap();
    assert!(err < 1e-8, "{err:e}");
}

#[test]
fn probe_cache_reuses_equal_shapes() {
    let mesh = generate_cartesian(4, 4).unwrap();
    let pd = patch_problem(degree_k_terms(1), 1.0, Point::new(1.0, 0.0));
    let mut cache = ProbeCache::default();
    let disc = discretize(&mesh, &pd, 2, Method::StabilizationFree, &EllPolicy::default(), &mut cache).unwrap();
    assert_eq!((cache.misses, cache.hits), (1, 15));
    assert!(disc.ells().iter().all(|&l| l == 2));
    let table = EllPolicy::ByVertexCount([(4, 3)].into_iter().collect());
    let disc = discretize(&mesh, &pd, 2, Method::StabilizationFree, &table, &mut cache).unwrap();
    assert!(disc.ells().iter().all(|&l| l == 3));
    let missing = EllPolicy::ByVertexCount([(5, 1)].into_iter().collect());
    assert!(discretize(&mesh, &pd, 2, Method::StabilizationFree, &missing, &mut cache).is_err());
}

#[test]
fn vtk_layout_and_determinism() {
    let mesh = generate_cartesian(1, 1).unwrap();
    let pd = patch_problem(degree_k_terms(1), 1.0, Point::new(1.0, 0.0));
    let (disc, sol) = solve_sf(&mesh, &pd, 1);
    let s = vtk_string(&mesh, &disc, &sol);
    assert!(s.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(s.contains("POINTS 4 double\n"));
    let cell: Vec<String> = mesh.cell(0).iter().map(|v| v.to_string()).collect();
    assert!(s.contains(&format!("CELLS 1 5\n4 {}\n", cell.join(" "))));
    assert!(s.contains("CELL_TYPES 1\n7\n"));
    for field in ["u_vertex", "u_pi_center", "ell", "peclet"] {
        assert!(s.contains(&format!("SCALARS {field} ")), "{field}");
    }
    let again = DiscreteSolution::from_dofs(&disc, sol.dofs.clone(), sol.report.clone());
    assert_eq!(vtk_string(&mesh, &disc, &again), s);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.vtk");
    export_vtk(&mesh, &disc, &sol, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), s);
    assert!(export_vtk(&mesh, &disc, &sol, &dir.path().join("missing/u.vtk")).is_err());
}
