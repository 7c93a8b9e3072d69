//! The rotated form `Im(Θ v*Av)` against `(Im z/|z|)(v*Sv + |z|² v*Mv)` for a
//! range of absorptions.

use std::sync::Arc;

use maxwell_dd::analysis::{absorption_ratios, coercivity_check, random_probes, z_theta};
use maxwell_dd::fem::{assemble, BoundaryCondition, Coefficients, EdgeSpace};
use maxwell_dd::mesh::Mesh;

fn main() -> maxwell_dd::Result<()> {
    let space = EdgeSpace::new(Arc::new(Mesh::cube(3)?), BoundaryCondition::Pec);
    let k = 4.0;
    println!("xi        z                      |z|/k   ratio   max deviation");
    for xi in [0.5, k, k * k, -k * k] {
        let sys = assemble(&space, &Coefficients::homogeneous(space.mesh().num_tets(), k, xi))?;
        let probes = random_probes(sys.ndofs(), 100, 1);
        let dev = coercivity_check(&sys.a, &sys.s, &sys.m, k, xi, &probes)?;
        let z = z_theta(k, xi)?.z;
        let (r1, r2) = absorption_ratios(k, xi)?;
        println!("{xi:<9} {:>9.5}{:+.5}i  {r1:.4}  {r2:.4}  {dev:.2e}", z.re, z.im);
    }
    Ok(())
}
