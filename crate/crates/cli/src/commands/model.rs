//! train and decode: corpus to checkpoint, checkpoint to predictions.

use std::path::Path;

use prooftrace_core::datagen::Vocabulary;
use prooftrace_seq::{
    beam_decode, init_model, load_checkpoint, save_checkpoint, Attention, CheckpointError,
    ModelConfig, ModelError, Optimizer, SeqModel, TrainConfig, TrainError,
};

use super::{ensure_dir, path_with_suffix, run_jobs, write_text};
use crate::commands::corpus::read_corpus_artifact;
use crate::io::{data_err, read_vocab, write_predictions, write_vocab};
use crate::{AttentionArg, CliError, DecodeArgs, OptimizerArg, TrainArgs};

pub(crate) fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    Ok(())
}

pub fn run_train(args: TrainArgs) -> Result<(), CliError> {
    if args.jobs != 1 {
        eprintln!("note: training is single-threaded for reproducibility; --jobs ignored");
    }
    let corpus = read_corpus_artifact(&args.corpus, &args.stem, "extract")?;
    if corpus.examples.is_empty() {
        return Err(CliError::Data(format!(
            "corpus {} in {} has no examples",
            args.stem,
            args.corpus.display()
        )));
    }

    let src_vocab = Vocabulary::build(corpus.examples.iter().map(|e| e.source.as_slice()));
    let tgt_vocab = Vocabulary::build(corpus.examples.iter().map(|e| e.target.as_slice()));
    let data: Vec<(Vec<u32>, Vec<u32>)> = corpus
        .examples
        .iter()
        .map(|e| {
            (
                src_vocab.encode_sequence(&e.source),
                tgt_vocab.encode_sequence(&e.target),
            )
        })
        .collect();

    let config = ModelConfig {
        src_vocab: src_vocab.len(),
        tgt_vocab: tgt_vocab.len(),
        embed: args.embed,
        hidden: args.hidden,
        enc_layers: args.enc_layers,
        dec_layers: args.dec_layers,
        attention: match args.attention {
            AttentionArg::None => Attention::None,
            AttentionArg::Multiplicative => Attention::Multiplicative,
        },
        seed: args.init_seed,
    };
    let mut model = init_model(config, src_vocab, tgt_vocab).map_err(|e| match e {
        ModelError::Config(_) => CliError::Usage(e.to_string()),
        other => CliError::Internal(other.to_string()),
    })?;

    let tcfg = TrainConfig {
        optimizer: match args.optimizer {
            OptimizerArg::Sgd => Optimizer::Sgd,
            OptimizerArg::Adam => Optimizer::Adam,
        },
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        epochs: args.epochs,
        clip_norm: args.clip_norm,
        shuffle_seed: args.shuffle_seed,
    };
    let report = prooftrace_seq::train(&mut model, &data, &tcfg).map_err(|e| match e {
        TrainError::ZeroBatchSize => CliError::Usage(e.to_string()),
        TrainError::Diverged { .. } => CliError::Data(format!(
            "{e}; lower --learning-rate or enable --clip-norm"
        )),
        TrainError::Model(m) => CliError::Internal(m.to_string()),
    })?;

    ensure_parent(&args.model_out)?;
    save_checkpoint(&model, &args.model_out).map_err(|e| data_err(&args.model_out, e))?;
    write_vocab(&model.src_vocab, &path_with_suffix(&args.model_out, ".src_vocab"))?;
    write_vocab(&model.tgt_vocab, &path_with_suffix(&args.model_out, ".tgt_vocab"))?;
    let mut curve = String::from("epoch,loss\n");
    for (i, loss) in report.loss_curve.iter().enumerate() {
        curve.push_str(&format!("{},{loss:?}\n", i + 1));
    }
    write_text(&path_with_suffix(&args.model_out, ".loss.csv"), &curve)?;

    println!(
        "trained on {} examples for {} epochs; final loss {:.6}; checkpoint -> {}",
        data.len(),
        args.epochs,
        report.loss_curve.last().copied().unwrap_or(f64::NAN),
        args.model_out.display()
    );
    Ok(())
}

fn vocab_artifact(path: &Path) -> Result<Vocabulary, CliError> {
    if !path.exists() {
        return Err(CliError::Data(format!(
            "{}: not found; run `prooftrace train` first",
            path.display()
        )));
    }
    read_vocab(path)
}

/// Loads a checkpoint together with its sidecar vocabularies.
pub(crate) fn load_model_bundle(
    path: &Path,
) -> Result<(SeqModel, Vocabulary, Vocabulary), CliError> {
    let src_vocab = vocab_artifact(&path_with_suffix(path, ".src_vocab"))?;
    let tgt_vocab = vocab_artifact(&path_with_suffix(path, ".tgt_vocab"))?;
    let model = load_checkpoint(path, &src_vocab, &tgt_vocab).map_err(|e| match e {
        CheckpointError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
            CliError::Data(format!(
                "{}: not found; run `prooftrace train` first",
                path.display()
            ))
        }
        other => data_err(path, other),
    })?;
    Ok((model, src_vocab, tgt_vocab))
}

pub fn run_decode(args: DecodeArgs) -> Result<(), CliError> {
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    if args.max_len == 0 {
        return Err(CliError::Usage("--max-len must be at least 1".into()));
    }
    let corpus = read_corpus_artifact(&args.corpus, &args.stem, "extract")?;
    let (model, src_vocab, tgt_vocab) = load_model_bundle(&args.model)?;

    let sources: Vec<(usize, Vec<u32>)> = corpus
        .examples
        .iter()
        .enumerate()
        .map(|(i, e)| (i, src_vocab.encode_sequence(&e.source)))
        .collect();
    let decoded = run_jobs(args.jobs, sources, |(i, src)| {
        beam_decode(&model, &src, args.k, args.max_len)
            .map(|hyps| {
                hyps.into_iter()
                    .map(|h| (h.score, tgt_vocab.decode_sequence(&h.tokens)))
                    .collect::<Vec<_>>()
            })
            .map_err(|e| CliError::Data(format!("example {i}: {e}")))
    })?;
    let rows: Vec<Vec<(f64, Vec<String>)>> =
        decoded.into_iter().collect::<Result<_, _>>()?;

    ensure_parent(&args.out)?;
    write_predictions(&rows, &args.out)?;
    println!(
        "decoded {} examples (beam {}, max length {}) -> {}",
        rows.len(),
        args.k,
        args.max_len,
        args.out.display()
    );
    Ok(())
}
