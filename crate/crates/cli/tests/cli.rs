use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use islands_core::harness::ExperimentConfig;

fn islands(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_islands")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn help_lists_every_subcommand() {
    let out = islands(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["solve", "expand", "sweep", "genericity", "appendix-a", "fixed-point", "oracle"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
    for flag in ["--config", "--out", "--seed", "--jobs"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn oracle_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"oracle\"\n[shape]\npert_top = [[1, 1.0, 0.0]]\n[grid]\nnx = 32\nns = 33\nresolutions = [16, 32]\n");
    let out_dir = dir.path().join("out");
    let out = islands(&["oracle", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("nx,ns,relative_error,order"));
    assert_eq!(csv.lines().count(), 3);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert!(summary["lambda1"].as_f64().unwrap() > 2.4);
}

#[test]
fn config_kind_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"sweep\"\n");
    let out = islands(&["oracle", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn missing_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = islands(&["solve", "--config", dir.path().join("absent.toml").to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn small_sweep_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "kind = \"sweep\"\n[shape]\npert_top = [[1, 1.0, 0.0]]\n[grid]\nnx = 48\nns = 49\n[sweep]\nepsilons = [0.04, 0.02, 0.01, 0.005]\n",
    );
    let out_dir = dir.path().join("sweep");
    let out = islands(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    for eps in ["0.04", "0.02", "0.01", "0.005"] {
        assert!(out_dir.join(format!("plots/psi_eps{eps}.svg")).is_file());
        assert!(out_dir.join(format!("fields/psi_eps{eps}.bin")).is_file());
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    let slope = summary["height_fit"]["slope"].as_f64().unwrap();
    assert!((0.4..0.6).contains(&slope), "slope {slope}");
}

#[test]
fn genericity_seed_flag_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"genericity\"\n[grid]\nnx = 32\nns = 33\n[sweep]\nsamples = 3\ncomplement_samples = 1\n");
    let run = |name: &str, seed: &str| {
        let out_dir = dir.path().join(name);
        let out = islands(&["genericity", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--seed", seed]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(out_dir.join("summary.json")).unwrap()
    };
    let a = run("a", "5");
    assert_eq!(a, run("b", "5"));
    assert_ne!(a, run("c", "6"));
}

#[test]
fn shipped_configs_parse() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(cfg.kind.is_some(), "{} names no kind", path.display());
            seen += 1;
        }
    }
    assert!(seen >= 7);
}
