//! Impedance cube with conductive background and three inclusion cases, solved
//! with one- and two-level impedance Schwarz methods.

use maxwell_dd::experiment::{run_table, summary, ExperimentConfig};

fn main() -> maxwell_dd::Result<()> {
    let mut cfg = ExperimentConfig::preset("medimax-cube")?;
    cfg.set("k_list", "3")?;
    let records = run_table(&cfg, |r| eprintln!("{} {}: {}", r.material, r.preconditioner, r.iterations))?;
    println!("{}", summary(&records));
    Ok(())
}
