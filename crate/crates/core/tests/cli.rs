use std::fs;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxwell-dd")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn mesh_info_single_cube() {
    let o = bin(&["mesh-info", "--n", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("vertices=8 tets=6 edges=19"), "{}", stdout(&o));
}

#[test]
fn mesh_info_dump_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mesh.txt");
    let o = bin(&["mesh-info", "--n", "2", "--dump", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(!fs::read_to_string(path).unwrap().is_empty());
}

#[test]
fn coercivity_reports_tiny_deviation() {
    let o = bin(&["coercivity", "--k", "2", "--xi", "4", "--n", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let dev: f64 = text.split("max_relative_deviation=").nth(1).unwrap().trim().parse().unwrap();
    assert!(dev <= 1e-12, "{text}");
}

#[test]
fn fov_of_identity_has_unit_distance() {
    let o = bin(&["fov", "--identity", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("dist=1.000000"), "{text}");
}

#[test]
fn fov_of_small_preconditioned_operator() {
    let o = bin(&["fov", "--k", "1", "--n", "2", "--subdomains", "2", "--coarse", "1", "--layers", "1", "--angles", "16"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let last = stdout(&o).lines().last().unwrap().to_string();
    let dist: f64 = last.split_whitespace().next().unwrap().trim_start_matches("dist=").parse().unwrap();
    assert!(dist > 0.0, "{last}");
}

#[test]
fn abs_error_prints_three_rows() {
    let o = bin(&["abs-error", "--k", "2", "--n", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4, "{text}");
    assert!(text.starts_with("k,xi,ratio"));
}

const DEGENERATE: &str = "k_list = 1,2\nxi_prob = k2\nxi_prec = k2\nfine = n:2\nsubdomains = fixed:1\ncoarse = none\nlayers = 0\npreconditioners = as1,ras1\n";

#[test]
fn degenerate_run_takes_one_iteration_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, DEGENERATE).unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        let o = bin(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "7"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("seed = 7"));
    }
    let a = fs::read(&out1).unwrap();
    assert_eq!(a, fs::read(&out2).unwrap());
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let it = header.iter().position(|&h| h == "iterations").unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[it] == "1"));
    let echoed = fs::read_to_string(dir.path().join("a.csv.config")).unwrap();
    assert!(echoed.contains("subdomains = fixed:1"));
}

#[test]
fn unknown_config_key_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "k_list = 1\nmaxiter = 5\n").unwrap();
    let o = bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error:"));
}

#[test]
fn unknown_preset_fails() {
    let o = bin(&["run", "--preset", "table99"]);
    assert!(!o.status.success());
}
