//! Overlapping subdomains, their DOF sets and restrictions, the algebraic
//! partition of unity, and the coarse-to-fine link between nested edge spaces.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::EdgeSpace;
use crate::linalg::CsrMatrix;
use crate::mesh::{nesting_map, Mesh, LOCAL_EDGES};

/// Non-overlapping partition into `p_axis³` boxes of side `1/p_axis`.
pub fn box_partition(mesh: &Mesh, p_axis: usize) -> Result<Vec<Vec<usize>>> {
    let n = mesh.cells_per_axis;
    if p_axis == 0 || n % p_axis != 0 {
        return Err(Error::NotDivisible { fine: n, coarse: p_axis });
    }
    let mut parts = vec![Vec::new(); p_axis * p_axis * p_axis];
    let pf = p_axis as f64;
    for t in 0..mesh.num_tets() {
        let c = mesh.barycenter(t);
        let b: Vec<usize> = c.iter().map(|&x| ((x * pf).floor() as usize).min(p_axis - 1)).collect();
        parts[b[0] + p_axis * (b[1] + p_axis * b[2])].push(t);
    }
    Ok(parts)
}

/// Grows every set by `layers` rounds of "add all tetrahedra sharing a vertex".
pub fn extend_overlap(mesh: &Mesh, sets: &[Vec<usize>], layers: usize) -> Vec<Vec<usize>> {
    let mut vertex_tets = vec![Vec::new(); mesh.num_vertices()];
    for (t, tet) in mesh.tets.iter().enumerate() {
        for &v in tet {
            vertex_tets[v].push(t);
        }
    }
    sets.iter()
        .map(|set| {
            let mut inside = vec![false; mesh.num_tets()];
            for &t in set {
                inside[t] = true;
            }
            for _ in 0..layers {
                let mut touched = vec![false; mesh.num_vertices()];
                for t in 0..mesh.num_tets() {
                    if inside[t] {
                        for &v in &mesh.tets[t] {
                            touched[v] = true;
                        }
                    }
                }
                let before = inside.iter().filter(|&&b| b).count();
                for (v, _) in touched.iter().enumerate().filter(|(_, &b)| b) {
                    for &t in &vertex_tets[v] {
                        inside[t] = true;
                    }
                }
                if inside.iter().filter(|&&b| b).count() == before {
                    break;
                }
            }
            (0..mesh.num_tets()).filter(|&t| inside[t]).collect()
        })
        .collect()
}

fn membership(mesh: &Mesh, set: &[usize]) -> Vec<bool> {
    let mut inside = vec![false; mesh.num_tets()];
    for &t in set {
        inside[t] = true;
    }
    inside
}

/// Global DOFs whose basis function is supported inside each subdomain, i.e.
/// every tetrahedron around the edge belongs to the subdomain. Sorted ascending.
pub fn subdomain_dof_sets(space: &EdgeSpace, elements: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mesh = space.mesh();
    elements
        .iter()
        .map(|set| {
            let inside = membership(mesh, set);
            let mut dofs: Vec<usize> = set
                .iter()
                .flat_map(|&t| mesh.tet_edges[t].iter().map(|r| r.edge))
                .filter(|&e| mesh.edge_tets[e].iter().all(|&t| inside[t]))
                .filter_map(|e| space.dof_of_edge(e))
                .collect();
            dofs.sort_unstable();
            dofs.dedup();
            dofs
        })
        .collect()
}

/// Every global DOF touched by the subdomain's elements (interface edges included).
pub fn subdomain_edge_dofs(space: &EdgeSpace, set: &[usize]) -> Vec<usize> {
    let mesh = space.mesh();
    let mut dofs: Vec<usize> = set
        .iter()
        .flat_map(|&t| mesh.tet_edges[t].iter().map(|r| r.edge))
        .filter_map(|e| space.dof_of_edge(e))
        .collect();
    dofs.sort_unstable();
    dofs.dedup();
    dofs
}

/// Faces separating the subdomain from the rest of Ω (∂Ω_ℓ ∖ ∂Ω).
pub fn internal_boundary_faces(mesh: &Mesh, set: &[usize]) -> Vec<[usize; 3]> {
    let inside = membership(mesh, set);
    let mut faces: Vec<usize> = set
        .iter()
        .flat_map(|&t| mesh.tet_faces[t])
        .filter(|&f| match mesh.face_tets[f] {
            (a, Some(b)) => inside[a] != inside[b],
            (_, None) => false,
        })
        .collect();
    faces.sort_unstable();
    faces.dedup();
    faces.into_iter().map(|f| mesh.faces[f]).collect()
}

/// Faces of ∂Ω belonging to the subdomain.
pub fn global_boundary_faces(mesh: &Mesh, set: &[usize]) -> Vec<[usize; 3]> {
    let inside = membership(mesh, set);
    mesh.boundary_faces.iter().filter(|f| inside[f.tet]).map(|f| f.vertices).collect()
}

/// Multiplicity weights on each DOF set, so that `Σ Rᵀ D R = I` exactly when
/// summed in set order.
pub fn build_pou(dof_sets: &[Vec<usize>], ndofs: usize) -> Result<Vec<Vec<f64>>> {
    let mut mult = vec![0usize; ndofs];
    for set in dof_sets {
        for &j in set {
            mult[j] += 1;
        }
    }
    if let Some(dof) = mult.iter().position(|&m| m == 0) {
        return Err(Error::UncoveredDof { dof });
    }
    // 1/m_j, except that the last set containing j takes 1 − (running sum), which
    // makes the in-order sum exactly 1
    let mut seen = vec![0usize; ndofs];
    let mut partial = vec![0.0f64; ndofs];
    Ok(dof_sets
        .iter()
        .map(|set| {
            set.iter()
                .map(|&j| {
                    seen[j] += 1;
                    let w = if seen[j] == mult[j] { 1.0 - partial[j] } else { 1.0 / mult[j] as f64 };
                    partial[j] += w;
                    w
                })
                .collect()
        })
        .collect())
}

/// `(R0)_{pj}` = tangential line integral of coarse basis function `p` along
/// fine edge `j` (two-point Gauss, exact for the affine integrand).
pub fn coarse_restriction(fine: &EdgeSpace, coarse: &EdgeSpace, nesting: &[usize]) -> Result<CsrMatrix<f64>> {
    let fm = fine.mesh();
    let cm = coarse.mesh();
    if nesting.len() != fm.num_tets() {
        return Err(Error::DimensionMismatch { op: "coarse_restriction", expected: fm.num_tets(), got: nesting.len() });
    }
    let gauss = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    let mut triplets = Vec::new();
    for (j, &e) in fine.kept_edges().iter().enumerate() {
        let [va, vb] = fm.edges[e];
        let (xa, xb) = (fm.vertices[va], fm.vertices[vb]);
        let tangent: [f64; 3] = std::array::from_fn(|d| xb[d] - xa[d]);
        let mut reference: Option<Vec<(usize, f64)>> = None;
        for &t in &fm.edge_tets[e] {
            let ct = nesting[t];
            let pts = cm.tet_points(ct);
            let (g, _) = crate::fem::element::barycentric_gradients(&pts)?;
            let refs = &cm.tet_edges[ct];
            let mut row = Vec::with_capacity(6);
            for (slot, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
                let Some(p) = coarse.dof_of_edge(refs[slot].edge) else { continue };
                let mut val = 0.0;
                for &s in &gauss {
                    let x = std::array::from_fn(|d| xa[d] + s * tangent[d]);
                    let lam = cm.barycentric(ct, x);
                    let w = crate::fem::element::whitney_value(&g, a, b, &lam);
                    val += 0.5 * (w[0] * tangent[0] + w[1] * tangent[1] + w[2] * tangent[2]);
                }
                row.push((p, f64::from(refs[slot].sign) * val));
            }
            row.sort_by_key(|&(p, _)| p);
            match &reference {
                None => reference = Some(row),
                Some(r0) => check_trace_continuity(r0, &row, e)?,
            }
        }
        for (p, v) in reference.unwrap_or_default() {
            if v.abs() > 1e-14 {
                triplets.push((p, j, v));
            }
        }
    }
    CsrMatrix::from_triplets(coarse.ndofs(), fine.ndofs(), triplets)
}

fn check_trace_continuity(a: &[(usize, f64)], b: &[(usize, f64)], edge: usize) -> Result<()> {
    let lookup = |row: &[(usize, f64)], p: usize| row.iter().find(|&&(q, _)| q == p).map_or(0.0, |&(_, v)| v);
    for &(p, _) in a.iter().chain(b) {
        let jump = (lookup(a, p) - lookup(b, p)).abs();
        if jump > 1e-10 {
            return Err(Error::TraceDiscontinuity { coarse_dof: p, edge, jump });
        }
    }
    Ok(())
}

/// Coarse space and its restriction onto the fine space.
#[derive(Clone, Debug)]
pub struct CoarseLink {
    pub space: EdgeSpace,
    pub r0: CsrMatrix<f64>,
}

impl CoarseLink {
    /// Nested coarse space with `coarse_n` cells per axis and the fine space's
    /// boundary condition.
    pub fn new(fine: &EdgeSpace, coarse_n: usize) -> Result<Self> {
        let cm = Arc::new(Mesh::cube(coarse_n)?);
        let nest = nesting_map(&cm, fine.mesh())?;
        let space = EdgeSpace::new(cm, fine.bc());
        let r0 = coarse_restriction(fine, &space, &nest)?;
        Ok(Self { space, r0 })
    }

    pub fn ndofs(&self) -> usize {
        self.space.ndofs()
    }
}

/// Overlapping decomposition with restrictions, partition of unity and an
/// optional coarse space.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub subdomain_elements: Vec<Vec<usize>>,
    pub subdomain_dofs: Vec<Vec<usize>>,
    pub overlap_layers: usize,
    pub pou: Vec<Vec<f64>>,
    /// Largest subdomain diameter before overlap.
    pub h_sub: f64,
    pub coarse: Option<CoarseLink>,
}

impl Decomposition {
    /// `p_axis³` boxes grown by `layers` vertex-adjacency rounds.
    pub fn boxes(space: &EdgeSpace, p_axis: usize, layers: usize) -> Result<Self> {
        let parts = box_partition(space.mesh(), p_axis)?;
        let h_sub = 3f64.sqrt() / p_axis as f64;
        Self::from_partition(space, &parts, layers, h_sub)
    }

    /// Any non-overlapping element partition grown by `layers`.
    pub fn from_partition(space: &EdgeSpace, parts: &[Vec<usize>], layers: usize, h_sub: f64) -> Result<Self> {
        let elements = extend_overlap(space.mesh(), parts, layers);
        let dofs = subdomain_dof_sets(space, &elements);
        let pou = build_pou(&dofs, space.ndofs())?;
        Ok(Self { subdomain_elements: elements, subdomain_dofs: dofs, overlap_layers: layers, pou, h_sub, coarse: None })
    }

    pub fn with_coarse(mut self, fine: &EdgeSpace, coarse_n: usize) -> Result<Self> {
        self.coarse = Some(CoarseLink::new(fine, coarse_n)?);
        Ok(self)
    }

    pub fn num_subdomains(&self) -> usize {
        self.subdomain_dofs.len()
    }

    /// Boolean restriction `R^ℓ` (rows: subdomain DOFs, columns: global DOFs).
    pub fn restriction(&self, l: usize, ndofs: usize) -> Result<CsrMatrix<f64>> {
        CsrMatrix::selection(&self.subdomain_dofs[l], ndofs)
    }

    /// `Σ_ℓ (R^ℓ)ᵀ D^ℓ R^ℓ` as a sparse matrix (diagonal by construction).
    pub fn pou_sum(&self, ndofs: usize) -> Result<CsrMatrix<f64>> {
        let mut trips = Vec::new();
        for (dofs, w) in self.subdomain_dofs.iter().zip(&self.pou) {
            trips.extend(dofs.iter().zip(w).map(|(&j, &v)| (j, j, v)));
        }
        CsrMatrix::from_triplets(ndofs, ndofs, trips)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::BoundaryCondition;

    fn space(n: usize, bc: BoundaryCondition) -> EdgeSpace {
        EdgeSpace::new(Arc::new(Mesh::cube(n).unwrap()), bc)
    }

    #[test]
    fn single_box_holds_everything() {
        let sp = space(2, BoundaryCondition::Pec);
        let parts = box_partition(sp.mesh(), 1).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].len(), 48);
        let d = Decomposition::boxes(&sp, 1, 2).unwrap();
        assert_eq!(d.subdomain_dofs[0], (0..sp.ndofs()).collect::<Vec<_>>());
        assert!(d.pou[0].iter().all(|&w| w == 1.0));
    }

    #[test]
    fn non_divisible_partition_rejected() {
        let m = Mesh::cube(3).unwrap();
        assert!(box_partition(&m, 2).is_err());
    }

    #[test]
    fn covering_set_is_a_fixed_point() {
        let m = Mesh::cube(2).unwrap();
        let all: Vec<usize> = (0..m.num_tets()).collect();
        assert_eq!(extend_overlap(&m, &[all.clone()], 3)[0], all);
    }

    #[test]
    fn zero_overlap_pec_halves_leave_interface_uncovered() {
        let sp = space(2, BoundaryCondition::Pec);
        let m = sp.mesh();
        let (left, right): (Vec<usize>, Vec<usize>) = (0..m.num_tets()).partition(|&t| m.barycenter(t)[0] < 0.5);
        let dofs = subdomain_dof_sets(&sp, &[left, right]);
        assert!(matches!(build_pou(&dofs, sp.ndofs()), Err(Error::UncoveredDof { .. })));
    }

    #[test]
    fn shared_dof_weights_sum_to_one() {
        let w = build_pou(&[vec![0, 1], vec![1, 2]], 3).unwrap();
        assert_eq!(w, vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
    }

    #[test]
    fn identical_meshes_give_identity_restriction() {
        let fine = space(2, BoundaryCondition::Pec);
        let link = CoarseLink::new(&fine, 2).unwrap();
        let r0 = &link.r0;
        assert_eq!(r0.nrows(), fine.ndofs());
        for i in 0..r0.nrows() {
            let (cols, vals) = r0.row(i);
            assert_eq!(cols, &[i]);
            assert!((vals[0] - 1.0).abs() < 1e-14);
        }
    }
}
