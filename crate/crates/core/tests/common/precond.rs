//! Dense preconditioner oracle assembled directly from the defining formulas.

use std::sync::Arc;

use maxwell_dd::decomp::{subdomain_edge_dofs, Decomposition};
use maxwell_dd::fem::{assemble, BoundaryCondition, Coefficients, EdgeSpace};
use maxwell_dd::linalg::{SparseComplexMatrix, C64};
use maxwell_dd::mesh::Mesh;
use maxwell_dd::precond::{impedance_local_matrix, CoarseCorrection, CorrectionMatrix, Family, PreconditionerSpec};
use nalgebra::DMatrix;

pub type M = DMatrix<C64>;

pub struct Fixture {
    pub space: EdgeSpace,
    pub coeffs: Coefficients,
    pub a: Arc<SparseComplexMatrix>,
    pub decomp: Decomposition,
}

/// Cube of `n³` cells split into `p³` boxes with `layers` of overlap and a
/// coarse grid of `nc³` cells.
pub fn fixture_with(n: usize, p: usize, layers: usize, nc: usize, bc: BoundaryCondition, k: f64, xi: f64) -> Fixture {
    let space = EdgeSpace::new(Arc::new(Mesh::cube(n).unwrap()), bc);
    let coeffs = Coefficients::homogeneous(space.mesh().num_tets(), k, xi);
    let a = Arc::new(assemble(&space, &coeffs).unwrap().a);
    let decomp = Decomposition::boxes(&space, p, layers).unwrap().with_coarse(&space, nc).unwrap();
    Fixture { space, coeffs, a, decomp }
}

pub fn fixture(bc: BoundaryCondition, xi: f64) -> Fixture {
    fixture_with(4, 2, 1, 2, bc, 2.0, xi)
}

pub fn dense(a: &SparseComplexMatrix) -> M {
    let d = a.to_dense();
    M::from_fn(d.nrows(), d.ncols(), |i, j| d.column(j)[i])
}

pub fn selection(rows: &[usize], n: usize) -> M {
    let mut r = M::zeros(rows.len(), n);
    for (i, &j) in rows.iter().enumerate() {
        r[(i, j)] = C64::new(1.0, 0.0);
    }
    r
}

/// Dense assembly of the preconditioner straight from its defining formulas.
pub fn oracle(fx: &Fixture, spec: &PreconditionerSpec) -> M {
    let n = fx.space.ndofs();
    let prec_coeffs = fx.coeffs.with_xi(spec.xi_prec);
    let ap = dense(&assemble(&fx.space, &prec_coeffs).unwrap().a);
    let mut b1 = M::zeros(n, n);
    for l in 0..fx.decomp.num_subdomains() {
        let interior = &fx.decomp.subdomain_dofs[l];
        let (dofs, local) = match spec.family {
            Family::ImpRas => {
                let (dofs, a) = impedance_local_matrix(&fx.space, &prec_coeffs, &fx.decomp.subdomain_elements[l]).unwrap();
                assert_eq!(dofs, subdomain_edge_dofs(&fx.space, &fx.decomp.subdomain_elements[l]));
                (dofs, dense(&a))
            }
            _ => {
                let r = selection(interior, n);
                (interior.clone(), &r * &ap * r.transpose())
            }
        };
        let r = selection(&dofs, n);
        let w = M::from_diagonal(&nalgebra::DVector::from_iterator(
            dofs.len(),
            dofs.iter().map(|j| match spec.family {
                Family::As => C64::new(1.0, 0.0),
                _ => interior.binary_search(j).map_or(C64::new(0.0, 0.0), |p| C64::new(fx.decomp.pou[l][p], 0.0)),
            }),
        ));
        b1 += r.transpose() * w * local.try_inverse().unwrap() * r;
    }
    let Some(kind) = spec.coarse else { return b1 };
    let r0d = fx.decomp.coarse.as_ref().unwrap().r0.to_dense();
    let r0 = M::from_fn(r0d.nrows(), r0d.ncols(), |i, j| C64::new(r0d.column(j)[i], 0.0));
    let g = r0.transpose() * (&r0 * &ap * r0.transpose()).try_inverse().unwrap() * &r0;
    let a = match spec.correction_matrix {
        CorrectionMatrix::Problem => dense(&fx.a),
        CorrectionMatrix::Preconditioner => ap,
    };
    let id = M::identity(n, n);
    match kind {
        CoarseCorrection::Additive => b1 + g,
        CoarseCorrection::Hybrid => (&id - &g * &a) * b1 * (&id - &a * &g) + g,
        CoarseCorrection::Adef1 => b1 * (&id - &a * &g) + g,
    }
}
