//! Weighted field of values of the two-level preconditioned operator and the
//! GMRES bound it implies, compared with the observed weighted residuals.

use std::sync::Arc;

use maxwell_dd::analysis::{elman, fov, DEFAULT_FOV_CAP};
use maxwell_dd::experiment::{preconditioned_dense, Cell, ExperimentConfig, MaterialCase};
use maxwell_dd::krylov::{gmres, KrylovConfig, Side, Weight};
use maxwell_dd::precond::PreconditionerSpec;

fn main() -> maxwell_dd::Result<()> {
    let k = 2.0;
    let mut cfg = ExperimentConfig::preset("table1")?;
    cfg.set("layers", "1")?;
    let mut cell = Cell::new(&cfg, k, MaterialCase::Homogeneous)?;
    let prec = cell.preconditioner(&PreconditionerSpec::parse_id("as2", k * k)?)?;
    let c = preconditioned_dense(&cell.a, &prec)?;
    let w = fov(&c, &cell.system.dk.to_dense(), 64, DEFAULT_FOV_CAP)?;
    println!("dofs={} dist={:.4} (≥ {:.4}) norm={:.4}", c.nrows(), w.dist_to_origin, w.dist_lower_bound, w.norm_d);
    let bound = elman(w.norm_d, w.dist_lower_bound)?;
    let config = KrylovConfig { side: Side::Left, weight: Weight::Matrix(Arc::clone(&cell.dk)), ..Default::default() };
    let rep = gmres(cell.a.as_ref(), &cell.system.rhs, Some(&prec), &config)?;
    println!("gamma_beta={:.4}", bound.gamma_beta);
    for (m, r) in rep.residual_history.iter().enumerate() {
        println!("m={m:>3} residual={r:.3e} bound={:.3e}", bound.bound(m));
    }
    Ok(())
}
