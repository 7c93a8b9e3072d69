use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use maxwell_dd::analysis::{coercivity_check, fov, random_probes, relative_error_sweep, DEFAULT_FOV_CAP};
use maxwell_dd::experiment::{abs_error_table, preconditioned_dense, run_table, summary, write_csv, Cell, ExperimentConfig};
use maxwell_dd::fem::{assemble, BoundaryCondition, Coefficients, EdgeSpace};
use maxwell_dd::linalg::{DenseMatrix, C64};
use maxwell_dd::mesh::Mesh;
use maxwell_dd::precond::PreconditionerSpec;
use maxwell_dd::Result;

#[derive(Parser)]
#[command(name = "maxwell-dd", version, about = "Schwarz preconditioners for absorptive Maxwell problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment table and write one CSV row per (k, preconditioner).
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Extra `key=value` overrides, applied last.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Mesh entity counts.
    MeshInfo {
        #[arg(long)]
        n: usize,
        /// Also write a plain-text dump of the mesh.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Check the coercivity identity on random probes.
    Coercivity {
        #[arg(long)]
        k: f64,
        #[arg(long)]
        xi: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        probes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Field of values of the left-preconditioned operator in the energy inner product.
    Fov {
        /// Use the identity of this size instead of a preconditioned operator.
        #[arg(long)]
        identity: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        /// Absorption; defaults to k².
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        subdomains: Option<usize>,
        #[arg(long)]
        layers: Option<usize>,
        #[arg(long)]
        coarse: Option<usize>,
        #[arg(long, default_value = "as2")]
        preconditioner: String,
        #[arg(long, default_value_t = 32)]
        angles: usize,
    },
    /// Relative error caused by absorption, for ξ ∈ {k/8, k/4, k/2}.
    AbsError {
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 6)]
        n: usize,
    },
}

fn run_command(
    config: Option<PathBuf>,
    preset: Option<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    overrides: Vec<String>,
) -> Result<()> {
    let mut cfg = match &preset {
        Some(p) => ExperimentConfig::preset(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(path) = &config {
        let text = fs::read_to_string(path)?;
        cfg = match preset {
            Some(_) => cfg.apply_text(&text)?,
            None => ExperimentConfig::parse(&text)?,
        };
    }
    for kv in &overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| maxwell_dd::Error::Config(format!("override `{kv}` is not key=value")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output = Some(o);
    }
    cfg.validate()?;
    let echo = cfg.render();
    println!("# effective configuration\n{echo}");
    if let Some(o) = &cfg.output {
        let mut side = o.clone().into_os_string();
        side.push(".config");
        fs::write(side, &echo)?;
    }

    if cfg.name == "abs-error" {
        let rows = abs_error_table(&cfg)?;
        let mut text = String::from("k,xi,ratio,ratio_over_xi_per_k\n");
        for (k, xi, r) in &rows {
            text.push_str(&format!("{k},{xi},{r:.6e},{:.6e}\n", r / (xi / k)));
        }
        print!("{text}");
        if let Some(o) = &cfg.output {
            fs::write(o, text)?;
        }
        return Ok(());
    }

    let records = run_table(&cfg, |r| eprintln!("{}", r.csv_line()))?;
    println!("{}", summary(&records));
    if let Some(o) = &cfg.output {
        write_csv(fs::File::create(o)?, &records)?;
        println!("wrote {}", o.display());
    } else {
        write_csv(std::io::stdout().lock(), &records)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<()> = (|| match cli.command {
        Command::Run { config, preset, out, seed, overrides } => run_command(config, preset, out, seed, overrides),
        Command::MeshInfo { n, dump } => {
            let m = Mesh::cube(n)?;
            println!(
                "vertices={} tets={} edges={} faces={} boundary_faces={} euler={} h={:.6}",
                m.num_vertices(),
                m.num_tets(),
                m.num_edges(),
                m.num_faces(),
                m.boundary_faces.len(),
                m.euler_characteristic(),
                m.diameter()
            );
            if let Some(path) = dump {
                m.write_dump(fs::File::create(path)?)?;
            }
            Ok(())
        }
        Command::Coercivity { k, xi, n, probes, seed } => {
            let space = EdgeSpace::new(Arc::new(Mesh::cube(n)?), BoundaryCondition::Pec);
            let sys = assemble(&space, &Coefficients::homogeneous(space.mesh().num_tets(), k, xi))?;
            let p = random_probes(sys.ndofs(), probes, seed);
            let dev = coercivity_check(&sys.a, &sys.s, &sys.m, k, xi, &p)?;
            println!("dofs={} probes={probes} max_relative_deviation={dev:.3e}", sys.ndofs());
            Ok(())
        }
        Command::Fov { identity, k, xi, n, subdomains, layers, coarse, preconditioner, angles } => {
            let (c, d) = match identity {
                Some(size) => (DenseMatrix::<C64>::identity(size), DenseMatrix::<f64>::identity(size)),
                None => {
                    let xi = xi.unwrap_or(k * k);
                    let kr = k.round().max(1.0) as usize;
                    let n = n.unwrap_or(2 * kr);
                    let p = subdomains.unwrap_or(kr);
                    let nc = coarse.unwrap_or(kr);
                    let text = format!(
                        "k_list = {k}\nxi_prob = {xi}\nxi_prec = {xi}\nfine = n:{n}\nsubdomains = fixed:{p}\ncoarse = fixed:{nc}\nlayers = {}\npreconditioners = {preconditioner}",
                        layers.map_or("generous".to_string(), |l| l.to_string())
                    );
                    let cfg = ExperimentConfig::parse(&text)?;
                    let mut cell = Cell::new(&cfg, k, maxwell_dd::experiment::MaterialCase::Homogeneous)?;
                    let spec = PreconditionerSpec::parse_id(&preconditioner, xi)?;
                    let prec = cell.preconditioner(&spec)?;
                    (preconditioned_dense(&cell.a, &prec)?, cell.system.dk.to_dense())
                }
            };
            let r = fov(&c, &d, angles, DEFAULT_FOV_CAP)?;
            println!("# theta,re,im");
            for (j, p) in r.boundary_points.iter().enumerate() {
                println!("{:.6},{:.12},{:.12}", 2.0 * std::f64::consts::PI * j as f64 / angles as f64, p.re, p.im);
            }
            println!(
                "dist={:.6} dist_lower_bound={:.6} norm={:.6} angles={}",
                r.dist_to_origin, r.dist_lower_bound, r.norm_d, r.n_angles
            );
            Ok(())
        }
        Command::AbsError { k, n } => {
            let xis = [k / 8.0, k / 4.0, k / 2.0];
            println!("k,xi,ratio,ratio_over_xi_per_k");
            for (xi, r) in relative_error_sweep(k, &xis, n, maxwell_dd::precond::DEFAULT_DENSE_CAP)? {
                println!("{k},{xi},{r:.6e},{:.6e}", r / (xi / k));
            }
            Ok(())
        }
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
