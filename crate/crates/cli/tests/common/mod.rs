//! Helpers shared by the command-layer integration tests. Each test binary
//! compiles its own copy and uses a different subset, hence the allow.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

/// Runs a command line in-process and returns its exit code.
pub fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["prooftrace".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    prooftrace_cli::main_entry(argv)
}

pub fn ok(args: &[&str]) {
    let code = run(args);
    assert_eq!(code, 0, "command {args:?} exited {code}");
}

/// Fresh scratch directory per test, unique per process.
pub fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("prooftrace-cli-{}-{tag}", std::process::id()));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

pub fn read(path: &Path) -> String {
    match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => panic!("reading {}: {e}", path.display()),
    }
}

pub fn s(path: &Path) -> String {
    path.display().to_string()
}

/// Drops the trailing elapsed-milliseconds column of a stats CSV, leaving
/// the deterministic part.
pub fn strip_elapsed(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map(|(head, _)| head).unwrap_or(l))
        .collect::<Vec<_>>()
        .join("\n")
}
