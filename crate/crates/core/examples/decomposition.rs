//! Box decomposition with vertex-layer overlap: subdomain sizes, partition of
//! unity and the coarse restriction.

use std::sync::Arc;

use maxwell_dd::decomp::Decomposition;
use maxwell_dd::fem::{BoundaryCondition, EdgeSpace};
use maxwell_dd::mesh::Mesh;

fn main() -> maxwell_dd::Result<()> {
    let space = EdgeSpace::new(Arc::new(Mesh::cube(8)?), BoundaryCondition::Pec);
    for layers in [1, 2, 4] {
        let d = Decomposition::boxes(&space, 4, layers)?.with_coarse(&space, 4)?;
        let sizes: Vec<usize> = d.subdomain_dofs.iter().map(Vec::len).collect();
        let pou = d.pou_sum(space.ndofs())?;
        let worst = (0..space.ndofs()).map(|i| (pou.get(i, i) - 1.0).abs()).fold(0.0, f64::max);
        let r0 = &d.coarse.as_ref().expect("coarse space requested").r0;
        println!(
            "layers={layers}: dofs per subdomain {}..{}, |sum D - I|={worst:.1e}, R0 {}x{} nnz={}",
            sizes.iter().min().unwrap(),
            sizes.iter().max().unwrap(),
            r0.nrows(),
            r0.ncols(),
            r0.nnz()
        );
    }
    Ok(())
}
