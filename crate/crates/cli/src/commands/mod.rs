//! Subcommand implementations. Each `run` function is a deterministic
//! wrapper: read artifacts, call into the core pipeline, write artifacts.

pub mod corpus;
pub mod eval;
pub mod gen;
pub mod model;
pub mod prove;
pub mod stats;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use prooftrace_core::fol::{parse_tptp_cnf, Matrix};
use prooftrace_core::tableau::{read_proof, ProofTree};

use crate::io::{self, data_err};
use crate::CliError;

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| data_err(dir, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| data_err(path, e))
}

/// Appends `suffix` to the full file name: `model.ckpt` -> `model.ckpt.loss.csv`.
pub(crate) fn path_with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(suffix);
    PathBuf::from(os)
}

/// Data error pointing at the command that produces the missing artifact.
pub(crate) fn missing_artifact(path: &Path, e: std::io::Error, producer: &str) -> CliError {
    if e.kind() == std::io::ErrorKind::NotFound {
        CliError::Data(format!(
            "{}: not found; run `prooftrace {producer}` first",
            path.display()
        ))
    } else {
        data_err(path, e)
    }
}

pub(crate) fn read_artifact(path: &Path, producer: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| missing_artifact(path, e, producer))
}

/// Lists `*.{ext}` files, attributing a missing directory to its producer.
pub(crate) fn list_artifacts(
    dir: &Path,
    ext: &str,
    producer: &str,
) -> Result<Vec<PathBuf>, CliError> {
    match fs::read_dir(dir) {
        Err(e) => Err(missing_artifact(dir, e, producer)),
        Ok(_) => io::list_files(dir, ext),
    }
}

pub(crate) struct Problem {
    pub id: String,
    pub matrix: Matrix,
}

/// Parses every problem file, turning parse failures into messages so a
/// batch can continue past a bad file.
pub(crate) fn load_problems_lenient(
    dir: &Path,
) -> Result<(Vec<Problem>, Vec<String>), CliError> {
    let files = list_artifacts(dir, "p", "gen-problems")?;
    let mut problems = Vec::new();
    let mut failures = Vec::new();
    for path in files {
        let text = fs::read_to_string(&path).map_err(|e| data_err(&path, e))?;
        match parse_tptp_cnf(&text) {
            Ok(matrix) => problems.push(Problem {
                id: io::stem_of(&path),
                matrix,
            }),
            Err(e) => failures.push(format!("{}: {e}", path.display())),
        }
    }
    Ok((problems, failures))
}

pub(crate) fn load_problems_strict(dir: &Path) -> Result<Vec<Problem>, CliError> {
    let (problems, failures) = load_problems_lenient(dir)?;
    if let Some(first) = failures.into_iter().next() {
        return Err(CliError::Data(first));
    }
    Ok(problems)
}

/// Reads a proof against its problem. The returned matrix is the problem
/// matrix with its symbol table extended by whatever the proof interned, so
/// symbol ids stay aligned for checking and extraction.
pub(crate) fn load_proof(path: &Path, matrix: &Matrix) -> Result<(Matrix, ProofTree), CliError> {
    let text = read_artifact(path, "prove")?;
    let mut symbols = matrix.symbols.clone();
    let proof = read_proof(&text, &mut symbols).map_err(|e| data_err(path, e))?;
    let matrix = Matrix::build(symbols, matrix.clauses.clone()).map_err(|e| {
        CliError::Internal(format!("rebuilding matrix for {}: {e}", path.display()))
    })?;
    Ok((matrix, proof))
}

/// Maps `f` over `items` on `jobs` threads, preserving input order so the
/// merged result is independent of scheduling.
pub(crate) fn run_jobs<T, R, F>(jobs: usize, items: Vec<T>, f: F) -> Result<Vec<R>, CliError>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    if jobs == 1 || items.len() <= 1 {
        return Ok(items.into_iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.into_par_iter().map(f).collect()))
}
