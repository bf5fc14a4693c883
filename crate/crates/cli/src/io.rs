//! On-disk artifact formats owned by the command layer: vocabulary files,
//! prediction files, and the baseline model file. Proof and corpus formats
//! live with their data structures in the core crate. All writers are
//! deterministic; all readers validate.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use prooftrace_core::baseline::MultilabelModel;
use prooftrace_core::datagen::Vocabulary;

use crate::CliError;

pub fn data_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {msg}", path.display()))
}

/// One token per line, reserved block first; rejects reordered files.
pub fn write_vocab(vocab: &Vocabulary, path: &Path) -> Result<(), CliError> {
    let mut out = String::new();
    for t in vocab.tokens() {
        out.push_str(t);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| data_err(path, e))
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary, CliError> {
    let text = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    if text.lines().count() < Vocabulary::RESERVED.len() {
        return Err(data_err(path, "vocabulary shorter than the reserved block"));
    }
    let mut vocab = Vocabulary::new();
    for (i, line) in text.lines().enumerate() {
        if i < Vocabulary::RESERVED.len() {
            if line != Vocabulary::RESERVED[i] {
                return Err(data_err(
                    path,
                    format!(
                        "line {}: expected reserved token {:?}, found {line:?}",
                        i + 1,
                        Vocabulary::RESERVED[i]
                    ),
                ));
            }
            continue;
        }
        if vocab.id(line).is_some() {
            return Err(data_err(
                path,
                format!("line {}: duplicate token {line:?}", i + 1),
            ));
        }
        vocab.add(line);
    }
    Ok(vocab)
}

/// Decoded hypotheses per example of one corpus, rank order preserved.
pub struct Predictions {
    pub by_example: Vec<Vec<(f64, Vec<String>)>>,
}

/// `example<TAB>rank<TAB>score<TAB>tokens`, one line per hypothesis.
pub fn write_predictions(rows: &[Vec<(f64, Vec<String>)>], path: &Path) -> Result<(), CliError> {
    let mut out = String::from("example\trank\tscore\ttokens\n");
    for (i, hyps) in rows.iter().enumerate() {
        for (rank, (score, tokens)) in hyps.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{rank}\t{score:?}\t{}", tokens.join(" "));
        }
    }
    fs::write(path, out).map_err(|e| data_err(path, e))
}

pub fn read_predictions(path: &Path, examples: usize) -> Result<Predictions, CliError> {
    let text = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some("example\trank\tscore\ttokens") => {}
        _ => return Err(data_err(path, "missing predictions header")),
    }
    let mut by_example: Vec<Vec<(f64, Vec<String>)>> = vec![Vec::new(); examples];
    for (lineno, line) in lines.enumerate() {
        let err = |msg: String| data_err(path, format!("line {}: {msg}", lineno + 2));
        let mut cols = line.splitn(4, '\t');
        let idx: usize = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad example index".into()))?;
        let rank: usize = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad rank".into()))?;
        let score: f64 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad score".into()))?;
        let tokens = cols.next().ok_or_else(|| err("missing tokens".into()))?;
        if idx >= examples {
            return Err(err(format!(
                "example index {idx} outside the corpus of {examples}"
            )));
        }
        let hyps = &mut by_example[idx];
        if rank != hyps.len() {
            return Err(err(format!("rank {rank} out of order")));
        }
        let tokens: Vec<String> = if tokens.is_empty() {
            Vec::new()
        } else {
            tokens.split(' ').map(|t| t.to_string()).collect()
        };
        hyps.push((score, tokens));
    }
    Ok(Predictions { by_example })
}

/// Baseline model file: a `v1` header with the hyperparameters, the label
/// list, then per-label bias and sparse weights. Floats use the shortest
/// round-trip decimal form.
pub fn write_baseline_model(
    model: &MultilabelModel,
    gamma: f64,
    path: &Path,
) -> Result<(), CliError> {
    let labels = model.labels();
    let mut out = format!("v1 gamma={gamma:?} labels={}\n", labels.len());
    for label in labels {
        let _ = writeln!(out, "{label}");
    }
    for label in labels {
        let (bias, weights) = model.label_parameters(label).expect("own label");
        let _ = write!(out, "{bias:?}");
        for (bucket, w) in weights {
            let _ = write!(out, " {bucket}:{w:?}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| data_err(path, e))
}

pub fn read_baseline_model(path: &Path) -> Result<(MultilabelModel, f64), CliError> {
    let text = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| data_err(path, "empty model file"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("v1") {
        return Err(data_err(path, "model header must begin with v1"));
    }
    let mut gamma = None;
    let mut label_count = None;
    for field in fields {
        match field.split_once('=') {
            Some(("gamma", v)) => gamma = v.parse::<f64>().ok(),
            Some(("labels", v)) => label_count = v.parse::<usize>().ok(),
            _ => return Err(data_err(path, format!("unknown header field {field:?}"))),
        }
    }
    let gamma = gamma.ok_or_else(|| data_err(path, "header lacks a valid gamma="))?;
    let label_count = label_count.ok_or_else(|| data_err(path, "header lacks labels="))?;
    let labels: Vec<String> = (&mut lines)
        .take(label_count)
        .map(|l| l.to_string())
        .collect();
    if labels.len() != label_count {
        return Err(data_err(path, "model file ends inside the label list"));
    }
    let mut rows = Vec::with_capacity(label_count);
    for (i, line) in (&mut lines).take(label_count).enumerate() {
        let err = |msg: String| data_err(path, format!("label {:?}: {msg}", labels[i]));
        let mut parts = line.split(' ');
        let bias: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad bias".into()))?;
        let mut weights = Vec::new();
        for part in parts {
            let (bucket, w) = part
                .split_once(':')
                .ok_or_else(|| err(format!("bad weight entry {part:?}")))?;
            let bucket: u32 = bucket
                .parse()
                .map_err(|_| err(format!("bad bucket {bucket:?}")))?;
            let w: f64 = w.parse().map_err(|_| err(format!("bad weight {w:?}")))?;
            weights.push((bucket, w));
        }
        rows.push((bias, weights));
    }
    if rows.len() != label_count {
        return Err(data_err(path, "model file ends inside the weight rows"));
    }
    if lines.next().is_some() {
        return Err(data_err(path, "trailing lines after the weight rows"));
    }
    let model = MultilabelModel::from_parts(labels, rows).map_err(|e| data_err(path, e))?;
    Ok((model, gamma))
}

/// Lists `*.{ext}` files in a directory, sorted by path.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| data_err(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| data_err(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
