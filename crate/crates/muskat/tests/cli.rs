//! Command-line smoke tests: exit codes and emitted files.

use std::path::{Path, PathBuf};
use std::process::Command;

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_muskat"))
}

/// A scratch directory that is removed when dropped.
struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("muskat-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).expect("can create a scratch directory");
        Scratch(dir)
    }

    fn path(&self) -> &Path {
        &self.0
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

#[test]
fn evolve_run_writes_its_tables() {
    let out = Scratch::new("evolve");
    let output = binary()
        .arg("evolve")
        .arg("--config")
        .arg(scenario_path("pe1_evolve.toml"))
        .arg("--out")
        .arg(out.path())
        .output()
        .expect("binary runs");
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("wrote"), "the run lists what it wrote");
    for name in ["result.json", "norms.csv", "final_state.csv"] {
        assert!(out.path().join(name).is_file(), "{name} should be written");
    }
}

#[test]
fn subcommand_must_match_the_configured_experiment() {
    let output = binary()
        .arg("decay")
        .arg("--config")
        .arg(scenario_path("pe1_evolve.toml"))
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("decay"), "the mismatch message names the invoked experiment");
}

#[test]
fn invalid_overrides_exit_with_the_config_code() {
    let output = binary()
        .arg("evolve")
        .arg("--config")
        .arg(scenario_path("pe1_evolve.toml"))
        .arg("--set")
        .arg("grid.n=7")
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("grid.n"), "the violation message names the offending field");
}
