use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn eberhard(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_eberhard"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("RAYON_NUM_THREADS", n.to_string());
    }
    cmd.output().unwrap()
}

fn run_to_file(dir: &Path, sub: &str, config: &Path, out: &str) -> (i32, String) {
    let out = dir.join(out);
    let o = eberhard(&[sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    let text = std::fs::read_to_string(&out).unwrap_or_default();
    (o.status.code().unwrap(), text)
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn ideal_detectors_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[sweep_eta]\netas = [1.0]\n");
    let (code, text) = run_to_file(dir.path(), "sweep-eta", &cfg, "t.csv");
    assert_eq!(code, 0);
    let rows = csv_rows(&text);
    assert_eq!(rows[0], ["eta", "r", "omega_deg", "theta_deg", "j_per_n"]);
    assert_eq!(rows[1][4], "-0.207107");
}

#[test]
fn stdout_when_no_output_path() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[sweep_eta]\netas = [0.8]\n");
    let o = eberhard(&["sweep-eta", "--config", cfg.to_str().unwrap()], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("eta,r,omega_deg,theta_deg,j_per_n\n0.8,"), "{text}");
    assert!(text.contains("-0.02191"));
}

#[test]
fn empty_grid_is_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[sweep_eta]\netas = []\n");
    assert_eq!(run_to_file(dir.path(), "sweep-eta", &cfg, "t.csv").0, 2);
}

#[test]
fn unknown_key_is_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[sweep_eta]\netas = [0.8]\ntypo = 1\n");
    assert_eq!(run_to_file(dir.path(), "sweep-eta", &cfg, "t.csv").0, 2);
}

#[test]
fn missing_config_flag_is_config_error() {
    assert_eq!(eberhard(&["sweep-eta"], None).status.code(), Some(2));
}

#[test]
fn unreadable_config_is_config_error() {
    let o = eberhard(&["sweep-eta", "--config", "/nonexistent/c.toml"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn vienna_missing_fields_are_all_listed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[vienna]\neta1 = 0.7377\neta2 = 0.7859\n");
    let o = eberhard(&["vienna", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    for f in ["r", "v", "n_pairs", "t_run", "tau_c", "zeta", "reference_angles"] {
        assert!(err.contains(f), "{err}");
    }
}

#[test]
fn below_threshold_cell_prints_missing_marker() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[sweep_eta_pair]\neta1 = [0.65]\neta2 = [0.65, 0.7]\n");
    let (code, text) = run_to_file(dir.path(), "sweep-eta-pair", &cfg, "t.csv");
    assert_eq!(code, 0);
    let rows = csv_rows(&text);
    assert_eq!(rows[0].last().unwrap(), "zeta_max");
    assert_eq!(rows[1].last().unwrap(), "--");
    let z: f64 = rows[2].last().unwrap().parse().unwrap();
    assert!((z - 2.68726e-06).abs() < 1e-10);
}

#[test]
fn perturbed_state_fails_verification() {
    let dir = TempDir::new().unwrap();
    let good = write_config(dir.path(), "g.toml", "[verify_eigen]\netas = [0.8, 1.0]\n");
    assert_eq!(run_to_file(dir.path(), "verify-eigen", &good, "g.csv").0, 0);
    let bad = write_config(dir.path(), "b.toml", "[verify_eigen]\netas = [0.8]\nr_offset = 0.2\n");
    let (code, text) = run_to_file(dir.path(), "verify-eigen", &bad, "b.csv");
    assert_eq!(code, 1);
    let gap: f64 = csv_rows(&text)[1][3].parse().unwrap();
    assert!(gap > 1e-6);
}

#[test]
fn zero_width_fluctuation_keeps_nominal_value() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[fluctuation]\netas = [0.9]\ndeltas = [0.0]\n");
    let (code, text) = run_to_file(dir.path(), "fluctuation", &cfg, "t.csv");
    assert_eq!(code, 0);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4);
    for row in &rows[1..] {
        assert_eq!(row[5], row[6]);
    }
}

#[test]
fn vienna_rows_and_dominance() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[vienna]\nr = 0.3\nv = 0.98\neta1 = 0.7377\neta2 = 0.7859\nn_pairs = 1e6\nt_run = 10.0\n\
         tau_c = 0.0\nzeta = 0.0\nreference_angles = [85.6, 118.0, -5.4, 25.9]\n",
    );
    let (code, text) = run_to_file(dir.path(), "vienna", &cfg, "t.csv");
    assert_eq!(code, 0);
    let rows = csv_rows(&text);
    assert_eq!(rows[0], ["alpha1", "alpha2", "beta1", "beta2", "J"]);
    assert_eq!(rows.len(), 4);
    let j: Vec<f64> = rows[1..].iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(j[1] <= j[0]);
}

#[test]
fn precision_flag_controls_digits() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[sweep_eta]\netas = [1.0]\n");
    let out = dir.path().join("t.csv");
    let o = eberhard(
        &["sweep-eta", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--precision", "10"],
        None,
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.contains("-0.2071067812"), "{text}");
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "seed = 7\n[fluctuation]\netas = [0.75, 0.9]\ndeltas = [0.25]\nquad_order = 4\n",
    );
    let mut outputs = Vec::new();
    for (i, threads) in [1, 4, 4].into_iter().enumerate() {
        let out = dir.path().join(format!("t{i}.csv"));
        let plot = dir.path().join(format!("p{i}.csv"));
        let o = eberhard(
            &[
                "fluctuation",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--plot-data",
                plot.to_str().unwrap(),
            ],
            Some(threads),
        );
        assert!(o.status.success());
        outputs.push((std::fs::read(out).unwrap(), std::fs::read(plot).unwrap()));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn shipped_configs_validate() {
    use eberhard_cli::{RunConfig, Scenario};
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let cases = [
        ("sweep_eta.toml", Scenario::SweepEta),
        ("sweep_eta_pair.toml", Scenario::SweepEtaPair),
        ("fluctuation.toml", Scenario::Fluctuation),
        ("verify_eigen.toml", Scenario::VerifyEigen),
        ("vienna_demo.toml", Scenario::Vienna),
    ];
    for (file, scenario) in cases {
        RunConfig::load(&root.join(file)).unwrap().validate(scenario).unwrap();
    }
    let partial = RunConfig::load(&root.join("vienna.toml")).unwrap();
    assert!(partial.validate(Scenario::Vienna).is_err());
}
