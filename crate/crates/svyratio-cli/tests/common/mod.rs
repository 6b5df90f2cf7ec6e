//! Helpers shared by the CLI integration and acceptance suites: run the
//! binary, capture output, and manage scratch files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};

pub struct CliResult {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub fn run_cli(args: &[&str]) -> CliResult {
    let output: Output = Command::new(env!("CARGO_BIN_EXE_svyratio"))
        .args(args)
        .output()
        .expect("binary runs");
    CliResult {
        stdout: String::from_utf8(output.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(output.stderr).expect("utf-8 stderr"),
        code: output.status.code().unwrap_or(-1),
    }
}

static COUNTER: AtomicU64 = AtomicU64::new(0);

/// Write a scratch file with a collision-free name; the file lives for the
/// whole test process, which is fine for test-sized inputs.
pub fn scratch_file(name: &str, contents: &str) -> PathBuf {
    let unique = COUNTER.fetch_add(1, Ordering::Relaxed);
    let path = std::env::temp_dir().join(format!(
        "svyratio-test-{}-{}-{}",
        std::process::id(),
        unique,
        name
    ));
    std::fs::write(&path, contents).expect("scratch file written");
    path
}

pub fn wheat_summary_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/wheat34_summary.json")
}

pub const FOUR_UNIT_CSV: &str = "y,phi1\n1,0\n2,1\n3,0\n4,1\n";

/// Deterministic two-attribute population used across tests: both
/// attributes lift the study value, and each column has only two zeros so
/// samples of size three or more always carry both attributes.
pub fn trend_population_csv(size: usize) -> String {
    let mut text = String::from("y,phi1,phi2\n");
    for unit in 0..size {
        let first = u8::from(!(unit == 0 || unit == 1));
        let second = u8::from(!(unit == 2 || unit == 3));
        let wiggle = (unit * 7) % 5;
        let y = 20.0 + 8.0 * f64::from(first) + 6.0 * f64::from(second) + wiggle as f64;
        text.push_str(&format!("{y},{first},{second}\n"));
    }
    text
}
