//! Runs one of the built-in experiment presets and prints the table.
//!
//! `cargo run --release --example run_preset -- table1 [key=value ...]`

use maxwell_dd::experiment::{run_table, summary, write_csv, ExperimentConfig};

fn main() -> maxwell_dd::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "table1".into());
    let mut cfg = ExperimentConfig::preset(&preset)?;
    cfg.timings = true;
    for kv in args {
        if let Some((k, v)) = kv.split_once('=') {
            cfg.set(k.trim(), v.trim())?;
        }
    }
    print!("{}", cfg.render());
    let records = run_table(&cfg, |r| eprintln!("{}", r.csv_line()))?;
    println!("{}", summary(&records));
    write_csv(std::io::stdout().lock(), &records)
}
