//! evaluate and baseline: predictions against reference continuations, and
//! the feature-hashing logistic baseline over the same metric.

use std::path::Path;

use prooftrace_core::baseline::{
    featurize_source, predict_topk, train_multilabel, TrainConfig as BaselineConfig,
};
use prooftrace_core::datagen::{detokenize, Corpus, SourceKind};
use prooftrace_core::evalkit::{
    accuracy_by_config_csv, accuracy_by_length_csv, accuracy_grid_text, classify_conjecture,
    conjecture_validity_csv, evaluate_example, predictive_accuracy, AccuracySummary,
    PredictionRecord, ReferenceIndex, ValidityVerdict,
};
use prooftrace_core::fol::SymbolTable;

use super::{ensure_dir, write_text};
use crate::commands::corpus::read_corpus_artifact;
use crate::io::{read_predictions, write_baseline_model, Predictions};
use crate::{BaselineArgs, CliError, EvaluateArgs};

fn check_same_slice(eval: &Corpus, reference: &Corpus) -> Result<(), CliError> {
    if eval.kind != reference.kind || eval.steps != reference.steps {
        return Err(CliError::Data(format!(
            "reference corpus is {}/{} steps but the evaluated corpus is {}/{} steps",
            reference.kind, reference.steps, eval.kind, eval.steps
        )));
    }
    Ok(())
}

/// Clause-choice scoring shared by evaluate and baseline: build records
/// against the reference index, then write the two accuracy CSVs and the
/// aligned grid.
fn write_accuracy_reports(
    records: &[PredictionRecord],
    out: &Path,
) -> Result<AccuracySummary, CliError> {
    let summary = predictive_accuracy(records)
        .map_err(|_| CliError::Data("no examples to evaluate".into()))?;
    ensure_dir(out)?;
    write_text(&out.join("accuracy_by_config.csv"), &accuracy_by_config_csv(&summary))?;
    write_text(&out.join("accuracy_by_length.csv"), &accuracy_by_length_csv(&summary))?;
    let grid = accuracy_grid_text(&summary);
    write_text(&out.join("accuracy_grid.txt"), &grid)?;
    print!("{grid}");
    println!(
        "overall success rate {:.2} over {} examples",
        summary.overall.accuracy(),
        summary.overall.total
    );
    Ok(summary)
}

fn conjecture_reports(
    corpus: &Corpus,
    predictions: &Predictions,
    out: &Path,
) -> Result<(), CliError> {
    let mut symbols = SymbolTable::new();
    let mut verdicts = Vec::with_capacity(corpus.examples.len());
    for (e, hyps) in corpus.examples.iter().zip(&predictions.by_example) {
        let gold = detokenize(&e.target, &mut symbols).ok_or_else(|| {
            CliError::Data(format!(
                "target of example for proof {} does not read back as a ground literal",
                e.proof_id
            ))
        })?;
        let verdict = match hyps.first() {
            None => ValidityVerdict::Malformed,
            Some((_, tokens)) => classify_conjecture(tokens, &gold, &mut symbols),
        };
        verdicts.push(verdict);
    }
    ensure_dir(out)?;
    let csv = conjecture_validity_csv(&verdicts);
    write_text(&out.join("conjecture_validity.csv"), &csv)?;
    print!("{csv}");
    let well_formed = verdicts.iter().filter(|v| v.is_well_formed()).count();
    println!(
        "{well_formed}/{} conjectures are well-formed literals",
        verdicts.len()
    );
    Ok(())
}

pub fn run_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let corpus = read_corpus_artifact(&args.corpus, &args.stem, "extract")?;
    if !args.predictions.exists() {
        return Err(CliError::Data(format!(
            "{}: not found; run `prooftrace decode` first",
            args.predictions.display()
        )));
    }
    let mut predictions = read_predictions(&args.predictions, corpus.examples.len())?;
    for hyps in &mut predictions.by_example {
        hyps.truncate(args.k);
    }

    if corpus.steps == 0 {
        if args.reference_stem.is_some() {
            eprintln!("note: conjecture validity needs no reference corpus; --reference-stem ignored");
        }
        return conjecture_reports(&corpus, &predictions, &args.out);
    }

    let reference_stem = args.reference_stem.as_deref().ok_or_else(|| {
        CliError::Usage("clause-choice evaluation needs --reference-stem".into())
    })?;
    let reference_dir = args.reference_corpus.as_deref().unwrap_or(&args.corpus);
    let reference = read_corpus_artifact(reference_dir, reference_stem, "extract")?;
    check_same_slice(&corpus, &reference)?;
    let index = ReferenceIndex::build(reference.kind, reference.steps, &reference.examples);

    let records: Vec<PredictionRecord> = corpus
        .examples
        .iter()
        .zip(predictions.by_example)
        .map(|(e, hyps)| {
            let decoded = hyps.into_iter().map(|(_, tokens)| tokens).collect();
            evaluate_example(&index, e, decoded, args.k)
        })
        .collect();
    write_accuracy_reports(&records, &args.out)?;
    Ok(())
}

pub fn run_baseline(args: BaselineArgs) -> Result<(), CliError> {
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let train = read_corpus_artifact(&args.train_corpus, &args.train_stem, "extract")?;
    if train.steps == 0 || train.kind != SourceKind::Literals {
        return Err(CliError::Usage(
            "the baseline consumes clause-choice corpora with literal-path sources".into(),
        ));
    }

    let mut symbols = SymbolTable::new();
    let mut examples = Vec::with_capacity(train.examples.len());
    for (i, e) in train.examples.iter().enumerate() {
        let fv = featurize_source(&e.source, &mut symbols, args.gamma).ok_or_else(|| {
            CliError::Data(format!("training example {i}: source is not a literal path"))
        })?;
        examples.push((fv, e.target.join(" ")));
    }
    let training = train_multilabel(
        &examples,
        &BaselineConfig {
            learning_rate: args.learning_rate,
            epochs: args.epochs,
            l2: args.l2,
        },
    )
    .map_err(|e| CliError::Data(e.to_string()))?;
    println!(
        "baseline trained on {} examples, {} labels; train accuracy {:.2}, final loss {:.4}",
        examples.len(),
        training.model.labels().len(),
        training.train_accuracy,
        training.final_loss
    );

    if let Some(model_out) = &args.model_out {
        crate::commands::model::ensure_parent(model_out)?;
        write_baseline_model(&training.model, args.gamma, model_out)?;
        println!("model -> {}", model_out.display());
    }

    let eval_stem = match &args.eval_stem {
        Some(s) => s,
        None => return Ok(()),
    };
    let out = args.out.as_deref().ok_or_else(|| {
        CliError::Usage("baseline evaluation needs --out for its reports".into())
    })?;
    let reference_stem = args.reference_stem.as_deref().ok_or_else(|| {
        CliError::Usage("baseline evaluation needs --reference-stem".into())
    })?;
    let eval_dir = args.eval_corpus.as_deref().unwrap_or(&args.train_corpus);
    let eval = read_corpus_artifact(eval_dir, eval_stem, "extract")?;
    check_same_slice(&eval, &train)?;
    let reference = read_corpus_artifact(eval_dir, reference_stem, "extract")?;
    check_same_slice(&eval, &reference)?;
    let index = ReferenceIndex::build(reference.kind, reference.steps, &reference.examples);

    let mut records = Vec::with_capacity(eval.examples.len());
    for (i, e) in eval.examples.iter().enumerate() {
        let fv = featurize_source(&e.source, &mut symbols, args.gamma).ok_or_else(|| {
            CliError::Data(format!("eval example {i}: source is not a literal path"))
        })?;
        let decoded = predict_topk(&training.model, &fv, args.k)
            .into_iter()
            .map(|(label, _)| label.split(' ').map(str::to_string).collect())
            .collect();
        records.push(evaluate_example(&index, e, decoded, args.k));
    }
    write_accuracy_reports(&records, out)?;
    Ok(())
}
