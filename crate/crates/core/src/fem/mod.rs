//! Lowest-order edge-element discretization of the absorptive curl-curl problem
//!
//! ```text
//! a(E, v) = ∫ (1/μ) curl E · curl v̄ − ∫ (k²ε + iξε + ikσ) E · v̄ − i s k ∫_∂Ω E_T · v̄_T
//! ```
//!
//! where the boundary term is present only for impedance conditions and
//! `s = sign(ξ)` (taken as `+1` for `ξ = 0`). In the homogeneous case
//! (`ε = μ = 1`, `σ = 0`) the Galerkin matrix is exactly `S − (k² + iξ) M`
//! (plus the boundary term).

pub mod element;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, SparseComplexMatrix, C64};
use crate::mesh::{Mesh, Point, LOCAL_EDGES};

pub use element::{element_matrices, face_mass};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Perfect conductor: tangential trace vanishes; boundary edges are eliminated.
    Pec,
    /// First-order absorbing condition; all edges are unknowns.
    Impedance,
}

/// Edge-element DOF map over a mesh.
#[derive(Clone, Debug)]
pub struct EdgeSpace {
    mesh: Arc<Mesh>,
    bc: BoundaryCondition,
    kept_edges: Vec<usize>,
    edge_to_dof: Vec<Option<usize>>,
}

impl EdgeSpace {
    pub fn new(mesh: Arc<Mesh>, bc: BoundaryCondition) -> Self {
        let mut edge_to_dof = vec![None; mesh.num_edges()];
        let mut kept_edges = Vec::new();
        for e in 0..mesh.num_edges() {
            if bc == BoundaryCondition::Impedance || !mesh.boundary_edge_flags[e] {
                edge_to_dof[e] = Some(kept_edges.len());
                kept_edges.push(e);
            }
        }
        Self { mesh, bc, kept_edges, edge_to_dof }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn ndofs(&self) -> usize {
        self.kept_edges.len()
    }

    pub fn kept_edges(&self) -> &[usize] {
        &self.kept_edges
    }

    pub fn edge_to_dof(&self) -> &[Option<usize>] {
        &self.edge_to_dof
    }

    pub fn dof_of_edge(&self, e: usize) -> Option<usize> {
        self.edge_to_dof[e]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material {
    pub eps: f64,
    pub mu: f64,
    /// Dimensionless absorption density; contributes `i k σ` to the mass weight.
    pub sigma: f64,
}

impl Material {
    pub const VACUUM: Material = Material { eps: 1.0, mu: 1.0, sigma: 0.0 };
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub lo: Point,
    pub hi: Point,
}

impl Aabb {
    pub fn contains(&self, x: Point) -> bool {
        (0..3).all(|d| x[d] >= self.lo[d] && x[d] <= self.hi[d])
    }
}

/// Per-tetrahedron material data plus the global wavenumber and absorption.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients {
    pub k: f64,
    pub xi: f64,
    pub eps: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Coefficients {
    pub fn homogeneous(ntets: usize, k: f64, xi: f64) -> Self {
        Self { k, xi, eps: vec![1.0; ntets], mu: vec![1.0; ntets], sigma: vec![0.0; ntets] }
    }

    /// `inside` on tetrahedra whose barycenter lies in `region`, `outside` elsewhere.
    pub fn with_inclusion(mesh: &Mesh, k: f64, xi: f64, region: Aabb, inside: Material, outside: Material) -> Self {
        let mut c = Self::homogeneous(mesh.num_tets(), k, xi);
        for t in 0..mesh.num_tets() {
            let mat = if region.contains(mesh.barycenter(t)) { inside } else { outside };
            c.eps[t] = mat.eps;
            c.mu[t] = mat.mu;
            c.sigma[t] = mat.sigma;
        }
        c
    }

    /// Same materials, different absorption.
    pub fn with_xi(&self, xi: f64) -> Self {
        Self { xi, ..self.clone() }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.eps.iter().all(|&v| v == 1.0) && self.mu.iter().all(|&v| v == 1.0) && self.sigma.iter().all(|&v| v == 0.0)
    }

    pub fn validate(&self, ntets: usize) -> Result<()> {
        for (name, v) in [("eps", &self.eps), ("mu", &self.mu), ("sigma", &self.sigma)] {
            if v.len() != ntets {
                return Err(Error::DimensionMismatch { op: name, expected: ntets, got: v.len() });
            }
        }
        if let Some(t) = (0..ntets).find(|&t| !(self.eps[t] > 0.0) || !(self.mu[t] > 0.0)) {
            return Err(Error::InvalidArgument(format!("nonpositive eps or mu on tetrahedron {t}")));
        }
        if let Some(t) = (0..ntets).find(|&t| !(self.sigma[t] >= 0.0)) {
            return Err(Error::InvalidArgument(format!("negative sigma on tetrahedron {t}")));
        }
        if !(self.k > 0.0) {
            return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {}", self.k)));
        }
        Ok(())
    }
}

/// `sign(ξ)` with the convention `sign(0) = +1`.
pub fn impedance_sign(xi: f64) -> f64 {
    if xi < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Real matrices making up a Galerkin matrix over some DOF numbering.
#[derive(Clone, Debug)]
pub struct FormParts {
    /// `∫ (1/μ) curl u · curl v`
    pub s: CsrMatrix<f64>,
    /// `∫ ε u · v`
    pub m: CsrMatrix<f64>,
    /// `∫ σ u · v`; `None` when σ vanishes on every assembled element.
    pub msigma: Option<CsrMatrix<f64>>,
    /// Tangential-trace mass over the impedance faces, if any.
    pub mb: Option<CsrMatrix<f64>>,
}

impl FormParts {
    /// `S − (k²+iξ)M − ikM_σ − i·s·k·M_b` on the shared sparsity pattern.
    pub fn galerkin(&self, k: f64, xi: f64, s_sign: f64) -> Result<SparseComplexMatrix> {
        let shift = C64::new(k * k, xi);
        let mut values: Vec<C64> = self
            .s
            .values()
            .iter()
            .zip(self.m.values())
            .map(|(&s, &m)| C64::new(s, 0.0) - shift * m)
            .collect();
        if let Some(ms) = &self.msigma {
            for (v, &w) in values.iter_mut().zip(ms.values()) {
                *v -= C64::new(0.0, k * w);
            }
        }
        if let Some(mb) = &self.mb {
            let scale = s_sign * k;
            for i in 0..mb.nrows() {
                let (cols, vals) = mb.row(i);
                let (scols, _) = self.s.row(i);
                let base = self.s.row_ptr()[i];
                for (&j, &w) in cols.iter().zip(vals) {
                    let pos = scols.binary_search(&j).map_err(|_| {
                        Error::InvalidArgument(format!("boundary entry ({i}, {j}) outside the volume pattern"))
                    })?;
                    values[base + pos] -= C64::new(0.0, scale * w);
                }
            }
        }
        Ok(CsrMatrix::from_parts(
            self.s.nrows(),
            self.s.ncols(),
            self.s.row_ptr().to_vec(),
            self.s.col_idx().to_vec(),
            values,
        ))
    }

    /// `S + k² M`, the weight of the (curl, k) inner product.
    pub fn energy_weight(&self, k: f64) -> CsrMatrix<f64> {
        let values = self.s.values().iter().zip(self.m.values()).map(|(&s, &m)| s + k * k * m).collect();
        CsrMatrix::from_parts(self.s.nrows(), self.s.ncols(), self.s.row_ptr().to_vec(), self.s.col_idx().to_vec(), values)
    }
}

/// Assembles the volume and boundary parts over the elements `tets`, with
/// `edge_to_dof` mapping global edges to local unknowns (`None` = eliminated).
/// `faces` lists triangles (sorted vertex triples) carrying the tangential mass.
pub fn assemble_parts(
    mesh: &Mesh,
    tets: &[usize],
    edge_to_dof: &[Option<usize>],
    ndof: usize,
    coeffs: &Coefficients,
    faces: &[[usize; 3]],
) -> Result<FormParts> {
    coeffs.validate(mesh.num_tets())?;
    let has_sigma = tets.iter().any(|&t| coeffs.sigma[t] != 0.0);
    let cap = tets.len() * 36;
    let mut ts = Vec::with_capacity(cap);
    let mut tm = Vec::with_capacity(cap);
    let mut tsig = Vec::with_capacity(if has_sigma { cap } else { 0 });
    for &t in tets {
        let (se, me) = element_matrices(&mesh.tet_points(t)).map_err(|e| match e {
            Error::DegenerateElement { volume, .. } => Error::DegenerateElement { tet: t, volume },
            other => other,
        })?;
        let refs = &mesh.tet_edges[t];
        let (inv_mu, eps, sig) = (1.0 / coeffs.mu[t], coeffs.eps[t], coeffs.sigma[t]);
        for a in 0..6 {
            let Some(i) = edge_to_dof[refs[a].edge] else { continue };
            for b in 0..6 {
                let Some(j) = edge_to_dof[refs[b].edge] else { continue };
                let sgn = f64::from(refs[a].sign * refs[b].sign);
                ts.push((i, j, sgn * inv_mu * se[a][b]));
                tm.push((i, j, sgn * eps * me[a][b]));
                if has_sigma {
                    tsig.push((i, j, sgn * sig * me[a][b]));
                }
            }
        }
    }
    let s = CsrMatrix::from_triplets(ndof, ndof, ts)?;
    let m = CsrMatrix::from_triplets(ndof, ndof, tm)?;
    let msigma = if has_sigma { Some(CsrMatrix::from_triplets(ndof, ndof, tsig)?) } else { None };
    let mb = if faces.is_empty() { None } else { Some(boundary_mass(mesh, faces, edge_to_dof, ndof)?) };
    Ok(FormParts { s, m, msigma, mb })
}

/// Tangential mass over the listed triangles.
pub fn boundary_mass(mesh: &Mesh, faces: &[[usize; 3]], edge_to_dof: &[Option<usize>], ndof: usize) -> Result<CsrMatrix<f64>> {
    let mut trips = Vec::with_capacity(faces.len() * 9);
    for f in faces {
        let mut v = *f;
        v.sort_unstable();
        let q = [mesh.vertices[v[0]], mesh.vertices[v[1]], mesh.vertices[v[2]]];
        let local = face_mass(&q);
        // sorted vertices: every local edge (a, b), a < b, runs low → high globally
        let dofs: Vec<Option<usize>> = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(a, b)| {
                let e = mesh
                    .edges
                    .binary_search(&[v[a], v[b]])
                    .map_err(|_| Error::InvalidArgument(format!("face {v:?} is not a mesh face")))?;
                Ok(edge_to_dof[e])
            })
            .collect::<Result<_>>()?;
        for a in 0..3 {
            let Some(i) = dofs[a] else { continue };
            for b in 0..3 {
                let Some(j) = dofs[b] else { continue };
                trips.push((i, j, local[a][b]));
            }
        }
    }
    CsrMatrix::from_triplets(ndof, ndof, trips)
}

/// Matrices and load vector of one discrete problem.
#[derive(Clone, Debug)]
pub struct SystemBundle {
    pub a: SparseComplexMatrix,
    pub s: CsrMatrix<f64>,
    pub m: CsrMatrix<f64>,
    pub msigma: Option<CsrMatrix<f64>>,
    pub mb: Option<CsrMatrix<f64>>,
    pub dk: CsrMatrix<f64>,
    pub rhs: Vec<C64>,
    pub space: EdgeSpace,
    pub coefficients: Coefficients,
}

impl SystemBundle {
    pub fn ndofs(&self) -> usize {
        self.space.ndofs()
    }

    pub fn k(&self) -> f64 {
        self.coefficients.k
    }

    pub fn xi(&self) -> f64 {
        self.coefficients.xi
    }
}

/// Assembles the Galerkin system with the Gaussian point-source load.
pub fn assemble(space: &EdgeSpace, coeffs: &Coefficients) -> Result<SystemBundle> {
    assemble_with_source(space, coeffs, &point_source)
}

pub fn assemble_with_source(
    space: &EdgeSpace,
    coeffs: &Coefficients,
    source: &dyn Fn(Point) -> Point,
) -> Result<SystemBundle> {
    let mesh = space.mesh();
    let tets: Vec<usize> = (0..mesh.num_tets()).collect();
    let faces: Vec<[usize; 3]> = match space.bc() {
        BoundaryCondition::Pec => Vec::new(),
        BoundaryCondition::Impedance => mesh.boundary_faces.iter().map(|f| f.vertices).collect(),
    };
    let parts = assemble_parts(mesh, &tets, space.edge_to_dof(), space.ndofs(), coeffs, &faces)?;
    let a = parts.galerkin(coeffs.k, coeffs.xi, impedance_sign(coeffs.xi))?;
    let dk = parts.energy_weight(coeffs.k);
    let rhs = assemble_rhs(space, source);
    let FormParts { s, m, msigma, mb } = parts;
    Ok(SystemBundle { a, s, m, msigma, mb, dk, rhs, space: space.clone(), coefficients: coeffs.clone() })
}

/// Tangential boundary mass of the whole of ∂Ω; only defined for impedance spaces.
pub fn assemble_boundary_mass(space: &EdgeSpace) -> Result<CsrMatrix<f64>> {
    if space.bc() != BoundaryCondition::Impedance {
        return Err(Error::InvalidArgument("boundary mass requires an impedance space".into()));
    }
    let faces: Vec<[usize; 3]> = space.mesh().boundary_faces.iter().map(|f| f.vertices).collect();
    boundary_mass(space.mesh(), &faces, space.edge_to_dof(), space.ndofs())
}

/// `F = (f, f, f)` with `f = −exp(−400 |x − c|²)`, `c` the cube center.
pub fn point_source(x: Point) -> Point {
    let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) + (x[2] - 0.5).powi(2);
    let f = -(-400.0 * r2).exp();
    [f, f, f]
}

/// `rhs_i = ∫ F · w_i` with the 4-point degree-2 rule on every element.
pub fn assemble_rhs(space: &EdgeSpace, source: &dyn Fn(Point) -> Point) -> Vec<C64> {
    let mesh = space.mesh();
    let rule = element::tet_rule_degree2();
    let mut rhs = vec![0.0f64; space.ndofs()];
    for t in 0..mesh.num_tets() {
        let p = mesh.tet_points(t);
        let (g, vol) = element::barycentric_gradients(&p).expect("mesh tetrahedra have positive volume");
        let refs = &mesh.tet_edges[t];
        for (lam, w) in &rule {
            let x: Point = std::array::from_fn(|d| (0..4).map(|i| lam[i] * p[i][d]).sum());
            let fx = source(x);
            for (slot, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
                let Some(i) = space.dof_of_edge(refs[slot].edge) else { continue };
                let wv = element::whitney_value(&g, a, b, lam);
                let val = fx[0] * wv[0] + fx[1] * wv[1] + fx[2] * wv[2];
                rhs[i] += f64::from(refs[slot].sign) * w * vol * val;
            }
        }
    }
    rhs.into_iter().map(|v| C64::new(v, 0.0)).collect()
}

/// Edge coefficients of the gradient of the piecewise-linear function with
/// vertex values `phi`, restricted to the kept DOFs.
pub fn gradient_coefficients(space: &EdgeSpace, phi: &[f64]) -> Vec<f64> {
    let mesh = space.mesh();
    space.kept_edges().iter().map(|&e| phi[mesh.edges[e][1]] - phi[mesh.edges[e][0]]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: usize, bc: BoundaryCondition) -> EdgeSpace {
        EdgeSpace::new(Arc::new(Mesh::cube(n).unwrap()), bc)
    }

    #[test]
    fn pec_space_drops_boundary_edges() {
        let sp = space(2, BoundaryCondition::Pec);
        assert!(sp.kept_edges().iter().all(|&e| !sp.mesh().boundary_edge_flags[e]));
        let imp = space(2, BoundaryCondition::Impedance);
        assert_eq!(imp.ndofs(), imp.mesh().num_edges());
    }

    #[test]
    fn homogeneous_pec_matrix_is_s_minus_m() {
        let sp = space(2, BoundaryCondition::Pec);
        let sys = assemble(&sp, &Coefficients::homogeneous(sp.mesh().num_tets(), 1.0, 0.0)).unwrap();
        for (i, (a, (s, m))) in sys.a.values().iter().zip(sys.s.values().iter().zip(sys.m.values())).enumerate() {
            let expect = s - m;
            assert!((a.re - expect).abs() <= 1e-14 * expect.abs().max(1e-300), "entry {i}");
            assert_eq!(a.im, 0.0);
        }
        assert!(sys.a.is_symmetric());
    }

    #[test]
    fn impedance_row_of_interior_edge_is_zero_in_mb() {
        let sp = space(2, BoundaryCondition::Impedance);
        let mb = assemble_boundary_mass(&sp).unwrap();
        for e in 0..sp.mesh().num_edges() {
            if !sp.mesh().boundary_edge_flags[e] {
                let i = sp.dof_of_edge(e).unwrap();
                assert!(mb.row(i).1.iter().all(|&v| v == 0.0));
            }
        }
        assert!(assemble_boundary_mass(&space(2, BoundaryCondition::Pec)).is_err());
    }

    #[test]
    fn rejects_bad_coefficients() {
        let sp = space(1, BoundaryCondition::Pec);
        let mut c = Coefficients::homogeneous(6, 1.0, 0.0);
        c.mu[3] = 0.0;
        assert!(assemble(&sp, &c).is_err());
        let short = Coefficients::homogeneous(5, 1.0, 0.0);
        assert!(matches!(assemble(&sp, &short), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_source_gives_zero_rhs() {
        let sp = space(2, BoundaryCondition::Pec);
        let rhs = assemble_rhs(&sp, &|_| [0.0; 3]);
        assert!(rhs.iter().all(|v| *v == C64::new(0.0, 0.0)));
    }

    #[test]
    fn impedance_sign_convention() {
        assert_eq!(impedance_sign(0.0), 1.0);
        assert_eq!(impedance_sign(2.0), 1.0);
        assert_eq!(impedance_sign(-2.0), -1.0);
    }
}
