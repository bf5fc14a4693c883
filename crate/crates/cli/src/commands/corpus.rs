//! extract and split: proofs to a corpus, corpus to proof-level parts.

use std::collections::HashMap;

use prooftrace_core::datagen::{
    extract_clause_choice_examples, extract_conjecturing_examples, read_corpus, split_by_proofs,
    write_corpus, Corpus, CorpusPaths, ExtractError, Part, PathExample, SourceKind,
};
use prooftrace_core::fol::SkolemDetector;

use super::{ensure_dir, list_artifacts, load_problems_strict, load_proof, run_jobs, Problem};
use crate::io::{data_err, stem_of};
use crate::{CliError, ExtractArgs, KindArg, SplitArgs, TaskArg};

pub(crate) fn source_kind(kind: KindArg) -> SourceKind {
    match kind {
        KindArg::Literals => SourceKind::Literals,
        KindArg::Clauses => SourceKind::Clauses,
    }
}

/// Reads the corpus at `dir/stem`, attributing a missing file to the
/// command that would have produced it.
pub(crate) fn read_corpus_artifact(
    dir: &std::path::Path,
    stem: &str,
    producer: &str,
) -> Result<Corpus, CliError> {
    let paths = CorpusPaths::with_stem(dir, stem);
    match read_corpus(&paths) {
        Ok(c) => Ok(c),
        Err(prooftrace_core::datagen::CorpusError::Io(e))
            if e.kind() == std::io::ErrorKind::NotFound =>
        {
            Err(CliError::Data(format!(
                "corpus {} not found in {}; run `prooftrace {producer}` first",
                stem,
                dir.display()
            )))
        }
        Err(e) => Err(data_err(&paths.src, e)),
    }
}

pub fn run_extract(args: ExtractArgs) -> Result<(), CliError> {
    let (kind, steps) = match args.task {
        TaskArg::ClauseChoice => {
            if !(1..=3).contains(&args.steps) {
                return Err(CliError::Usage(format!(
                    "--steps must be 1, 2, or 3, got {}",
                    args.steps
                )));
            }
            (source_kind(args.kind), args.steps)
        }
        TaskArg::Conjecturing => (SourceKind::Literals, 0),
    };
    let stem = args.stem.clone().unwrap_or_else(|| match args.task {
        TaskArg::ClauseChoice => format!("{kind}_{steps}"),
        TaskArg::Conjecturing => "conjecture".into(),
    });

    let problems = load_problems_strict(&args.problems)?;
    let by_id: HashMap<&str, &Problem> = problems.iter().map(|p| (p.id.as_str(), p)).collect();
    let proof_files = list_artifacts(&args.proofs, "proof", "prove")?;
    if proof_files.is_empty() {
        eprintln!("warning: no proof files in {}", args.proofs.display());
    }

    let det = SkolemDetector::default();
    let per_proof = run_jobs(args.jobs, proof_files, |path| {
        let stem = stem_of(&path);
        let problem = match by_id.get(stem.as_str()) {
            Some(p) => p,
            None => {
                return Err(CliError::Data(format!(
                    "{}: no matching problem file",
                    path.display()
                )))
            }
        };
        let (matrix, proof) = load_proof(&path, &problem.matrix)?;
        let extracted = match args.task {
            TaskArg::ClauseChoice => {
                extract_clause_choice_examples(&matrix, &proof, kind, steps, &det)
            }
            TaskArg::Conjecturing => extract_conjecturing_examples(&matrix, &proof, &det),
        };
        extracted.map_err(|e| match e {
            ExtractError::InvalidSteps(_) => CliError::Usage(e.to_string()),
            ExtractError::Unchecked(v) => {
                CliError::Data(format!("{}: proof rejected: {v}", path.display()))
            }
        })
    })?;

    let mut examples: Vec<PathExample> = Vec::new();
    let mut proofs_used = 0usize;
    for batch in per_proof {
        examples.extend(batch?);
        proofs_used += 1;
    }
    let corpus = Corpus {
        kind,
        steps,
        examples,
    };
    ensure_dir(&args.out)?;
    let paths = CorpusPaths::with_stem(&args.out, &stem);
    write_corpus(&corpus, &paths).map_err(|e| data_err(&paths.src, e))?;
    println!(
        "extracted {} examples from {proofs_used} proofs into {}",
        corpus.examples.len(),
        paths.src.display()
    );
    Ok(())
}

pub fn run_split(args: SplitArgs) -> Result<(), CliError> {
    let corpus = read_corpus_artifact(&args.corpus, &args.stem, "extract")?;
    let out_dir = args.out.clone().unwrap_or_else(|| args.corpus.clone());
    ensure_dir(&out_dir)?;

    let proof_ids: Vec<String> = corpus
        .examples
        .iter()
        .map(|e| e.proof_id.clone())
        .collect();
    let split = split_by_proofs(&proof_ids, args.seed);

    let mut parts: [Corpus; 3] = [
        Corpus {
            kind: corpus.kind,
            steps: corpus.steps,
            examples: Vec::new(),
        },
        Corpus {
            kind: corpus.kind,
            steps: corpus.steps,
            examples: Vec::new(),
        },
        Corpus {
            kind: corpus.kind,
            steps: corpus.steps,
            examples: Vec::new(),
        },
    ];
    for e in corpus.examples {
        let part = split.part_of(&e.proof_id).ok_or_else(|| {
            CliError::Internal(format!("proof {} missing from its own split", e.proof_id))
        })?;
        let idx = match part {
            Part::Train => 0,
            Part::Valid => 1,
            Part::Test => 2,
        };
        parts[idx].examples.push(e);
    }

    let names = ["train", "valid", "test"];
    let counts = [split.train.len(), split.valid.len(), split.test.len()];
    for ((part, name), proofs) in parts.iter().zip(names).zip(counts) {
        let paths = CorpusPaths::with_stem(&out_dir, &format!("{}_{name}", args.stem));
        write_corpus(part, &paths).map_err(|e| data_err(&paths.src, e))?;
        println!(
            "{name}: {proofs} proofs, {} examples -> {}",
            part.examples.len(),
            paths.src.display()
        );
    }
    Ok(())
}
