//! Standard versus weighted GMRES (inner product `S + k²M`) with left and right
//! preconditioning.

use std::sync::Arc;

use maxwell_dd::experiment::{Cell, ExperimentConfig, MaterialCase};
use maxwell_dd::krylov::{gmres, KrylovConfig, Side, Weight};
use maxwell_dd::precond::PreconditionerSpec;

fn main() -> maxwell_dd::Result<()> {
    let k = 3.0;
    let cfg = ExperimentConfig::preset("table1")?;
    let mut cell = Cell::new(&cfg, k, MaterialCase::Homogeneous)?;
    let prec = cell.preconditioner(&PreconditionerSpec::parse_id("as2", k * k)?)?;
    for side in [Side::Right, Side::Left] {
        for weighted in [false, true] {
            let config = KrylovConfig {
                side,
                weight: if weighted { Weight::Matrix(Arc::clone(&cell.dk)) } else { Weight::Identity },
                ..Default::default()
            };
            let rep = gmres(cell.a.as_ref(), &cell.system.rhs, Some(&prec), &config)?;
            println!("{side:?} weighted={weighted}: {} iterations", rep.iterations);
        }
    }
    Ok(())
}
