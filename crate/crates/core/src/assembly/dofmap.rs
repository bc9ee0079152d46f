use crate::polybasis::dim_or_zero;
use crate::polymesh::PolyMesh;

/// Global numbering: vertex values first, then the `k-1` interior nodes of
/// every edge (ordered from its lower-index vertex to the higher one), then
/// `dim P_{k-2}` moments per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub k: usize,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_cells: usize,
    pub moments_per_cell: usize,
    cell_dofs: Vec<Vec<usize>>,
}

impl DofMap {
    pub fn new(mesh: &PolyMesh, k: usize) -> Self {
        assert!(k >= 1, "order k must be at least 1");
        let nm = dim_or_zero(k as isize - 2);
        let ni = k - 1;
        let edge_base = mesh.n_vertices();
        let cell_base = edge_base + mesh.n_edges() * ni;
        let cell_dofs = (0..mesh.n_cells())
            .map(|c| {
                let verts = mesh.cell(c);
                let mut dofs = verts.to_vec();
                for (le, &e) in mesh.cell_edges(c).iter().enumerate() {
                    let forward = verts[le] == mesh.edges()[e][0];
                    for j in 0..ni {
                        let gj = if forward { j } else { ni - 1 - j };
                        dofs.push(edge_base + e * ni + gj);
                    }
                }
                dofs.extend((0..nm).map(|a| cell_base + c * nm + a));
                dofs
            })
            .collect();
        Self {
            k,
            n_vertices: mesh.n_vertices(),
            n_edges: mesh.n_edges(),
            n_cells: mesh.n_cells(),
            moments_per_cell: nm,
            cell_dofs,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_vertices + self.n_edges * (self.k - 1) + self.n_cells * self.moments_per_cell
    }

    /// Global indices of the local DOFs of cell `c`, in local order.
    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        &self.cell_dofs[c]
    }

    pub fn edge_dof(&self, e: usize, j: usize) -> usize {
        self.n_vertices + e * (self.k - 1) + j
    }

    pub fn moment_dof(&self, c: usize, a: usize) -> usize {
        self.n_vertices + self.n_edges * (self.k - 1) + c * self.moments_per_cell + a
    }
}
