//! Assembles the edge-element system for both boundary conditions and reports
//! sizes, sparsity and a few structural checks.

use std::sync::Arc;

use maxwell_dd::fem::{assemble, gradient_coefficients, BoundaryCondition, Coefficients, EdgeSpace};
use maxwell_dd::linalg::norm2;
use maxwell_dd::mesh::Mesh;

fn main() -> maxwell_dd::Result<()> {
    let (n, k) = (6, 3.0);
    let mesh = Arc::new(Mesh::cube(n)?);
    for bc in [BoundaryCondition::Pec, BoundaryCondition::Impedance] {
        let space = EdgeSpace::new(mesh.clone(), bc);
        let sys = assemble(&space, &Coefficients::homogeneous(mesh.num_tets(), k, k * k))?;
        let phi: Vec<f64> = mesh
            .vertices
            .iter()
            .map(|x| if bc == BoundaryCondition::Pec && x.iter().any(|&c| c == 0.0 || c == 1.0) { 0.0 } else { x[0] * x[1] })
            .collect();
        let g = gradient_coefficients(&space, &phi);
        let sg = sys.s.mul_vec(&g)?;
        println!(
            "{bc:?}: dofs={} nnz={} symmetric={} |rhs|={:.3e} |S grad|={:.1e}",
            sys.ndofs(),
            sys.a.nnz(),
            sys.a.is_symmetric(),
            norm2(&sys.rhs),
            sg.iter().map(|v| v * v).sum::<f64>().sqrt()
        );
    }
    Ok(())
}
