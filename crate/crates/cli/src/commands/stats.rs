//! data-stats: statistics of an externally supplied proof corpus.
//!
//! Expected layout under `--root`:
//!
//! ```text
//! <root>/proofs/        one file per proof
//! <root>/literals.src   aligned pair files, one example per line
//! <root>/literals.tgt
//! <root>/clauses.src    optional second representation
//! <root>/clauses.tgt
//! ```

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::io::data_err;
use crate::{CliError, DataStatsArgs};

/// Reference sizes of the published corpus, used for cross-checking.
pub const EXPECTED_PROOFS: usize = 13822;
pub const EXPECTED_PAIRS: usize = 567273;

fn line_count(path: &Path) -> Result<usize, CliError> {
    let file = fs::File::open(path).map_err(|e| data_err(path, e))?;
    let mut n = 0usize;
    for line in BufReader::new(file).lines() {
        line.map_err(|e| data_err(path, e))?;
        n += 1;
    }
    Ok(n)
}

fn aligned_pair_count(root: &Path, stem: &str) -> Result<usize, CliError> {
    let src = root.join(format!("{stem}.src"));
    let tgt = root.join(format!("{stem}.tgt"));
    let n_src = line_count(&src)?;
    let n_tgt = line_count(&tgt)?;
    if n_src != n_tgt {
        return Err(CliError::Data(format!(
            "{} has {n_src} lines but {} has {n_tgt}",
            src.display(),
            tgt.display()
        )));
    }
    Ok(n_src)
}

fn check_line(label: &str, found: usize, expected: usize) {
    let verdict = if found == expected { "match" } else { "MISMATCH" };
    println!("{label}: {found} (expected {expected}: {verdict})");
}

pub fn run(args: DataStatsArgs) -> Result<(), CliError> {
    let root = match &args.root {
        Some(r) => r,
        None => {
            println!("external corpus not supplied; skipping statistics");
            return Ok(());
        }
    };
    let proofs_dir = root.join("proofs");
    let entries = fs::read_dir(&proofs_dir).map_err(|e| data_err(&proofs_dir, e))?;
    let mut proofs = 0usize;
    for entry in entries {
        let entry = entry.map_err(|e| data_err(&proofs_dir, e))?;
        if entry.path().is_file() {
            proofs += 1;
        }
    }
    check_line("proofs", proofs, EXPECTED_PROOFS);

    let literal_pairs = aligned_pair_count(root, "literals")?;
    check_line("literal pairs", literal_pairs, EXPECTED_PAIRS);

    if root.join("clauses.src").exists() {
        let clause_pairs = aligned_pair_count(root, "clauses")?;
        println!("clause pairs: {clause_pairs} (src/tgt aligned)");
    }
    Ok(())
}
