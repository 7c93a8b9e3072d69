//! Solves a PEC problem with every Schwarz variant and GMRES, sharing one
//! setup across the variants.

use maxwell_dd::experiment::{Cell, ExperimentConfig, MaterialCase};

fn main() -> maxwell_dd::Result<()> {
    let k: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4.0);
    let mut cfg = ExperimentConfig::preset("table1")?;
    cfg.set("k_list", &k.to_string())?;
    let mut cell = Cell::new(&cfg, k, MaterialCase::Homogeneous)?;
    println!(
        "k={k} n={} subdomains={} coarse dofs={}",
        cell.system.ndofs(),
        cell.decomposition.num_subdomains(),
        cell.decomposition.coarse.as_ref().map_or(0, |c| c.ndofs())
    );
    for id in ["as1", "as2", "has", "adef1-as", "ras1", "ras2", "hras", "adef1-ras"] {
        let (rec, rep) = cell.solve(&cfg, id)?;
        println!("{id:>10}: {:>3} iterations, final residual {:.2e}", rec.iterations, rep.final_relative_residual);
    }
    Ok(())
}
