//! Checkpoint round trips and failure modes: bitwise save/load equality,
//! truncation, version and vocabulary mismatches, and corrupted records.

use std::fs;
use std::path::PathBuf;

use prooftrace_core::datagen::Vocabulary;
use prooftrace_seq::{
    forward_loss, init_model, load_checkpoint, save_checkpoint, Attention, CheckpointError,
    ModelConfig, SeqModel,
};

fn vocab(n: usize) -> Vocabulary {
    let mut v = Vocabulary::new();
    let mut i = 0;
    while v.len() < n {
        v.add(&format!("tok{i}"));
        i += 1;
    }
    v
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ckpt-{}-{}", std::process::id(), tag));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn sample_model() -> SeqModel {
    let config = ModelConfig {
        src_vocab: 11,
        tgt_vocab: 9,
        embed: 3,
        hidden: 4,
        enc_layers: 2,
        dec_layers: 2,
        attention: Attention::Multiplicative,
        seed: 42,
    };
    init_model(config, vocab(11), vocab(9)).unwrap()
}

#[test]
fn round_trips_are_bitwise_exact() {
    let dir = scratch_dir("roundtrip");
    let path = dir.join("model.ckpt");
    let model = sample_model();
    save_checkpoint(&model, &path).unwrap();
    let loaded = load_checkpoint(&path, &model.src_vocab, &model.tgt_vocab).unwrap();
    assert_eq!(loaded.config, model.config);
    assert_eq!(loaded.params, model.params);

    let batch = vec![(vec![7, 8, 9], vec![8, 7])];
    let (la, _) = forward_loss(&model, &batch).unwrap();
    let (lb, _) = forward_loss(&loaded, &batch).unwrap();
    assert_eq!(la.to_bits(), lb.to_bits());
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn plain_models_round_trip_too() {
    let dir = scratch_dir("plain");
    let path = dir.join("model.ckpt");
    let config = ModelConfig {
        src_vocab: 9,
        tgt_vocab: 9,
        embed: 2,
        hidden: 3,
        enc_layers: 1,
        dec_layers: 1,
        attention: Attention::None,
        seed: 7,
    };
    let model = init_model(config, vocab(9), vocab(9)).unwrap();
    save_checkpoint(&model, &path).unwrap();
    let loaded = load_checkpoint(&path, &model.src_vocab, &model.tgt_vocab).unwrap();
    assert_eq!(loaded.params, model.params);
    assert!(loaded.params.attention.is_none());
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn truncated_checkpoints_error_at_every_cut() {
    let dir = scratch_dir("truncated");
    let path = dir.join("model.ckpt");
    let model = sample_model();
    save_checkpoint(&model, &path).unwrap();
    let bytes = fs::read(&path).unwrap();
    let header_end = bytes.iter().position(|&b| b == b'\n').unwrap() + 1;
    let cut_path = dir.join("cut.ckpt");
    for cut in [
        header_end / 2,
        header_end,
        header_end + 3,
        header_end + 40,
        bytes.len() / 2,
        bytes.len() - 1,
    ] {
        fs::write(&cut_path, &bytes[..cut]).unwrap();
        let err = load_checkpoint(&cut_path, &model.src_vocab, &model.tgt_vocab).unwrap_err();
        assert!(
            matches!(err, CheckpointError::Truncated),
            "cut at {cut}: {err:?}"
        );
    }
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn foreign_vocabularies_are_rejected_by_fingerprint() {
    let dir = scratch_dir("vocab");
    let path = dir.join("model.ckpt");
    let model = sample_model();
    save_checkpoint(&model, &path).unwrap();

    let mut other_src = vocab(10);
    other_src.add("extra");
    let err = load_checkpoint(&path, &other_src, &model.tgt_vocab).unwrap_err();
    assert!(
        matches!(err, CheckpointError::VocabHashMismatch { side: "source", .. }),
        "{err:?}"
    );

    // Same size as the saved target vocabulary, different tokens.
    let mut other_tgt = vocab(8);
    other_tgt.add("zz");
    assert_eq!(other_tgt.len(), model.tgt_vocab.len());
    let err = load_checkpoint(&path, &model.src_vocab, &other_tgt).unwrap_err();
    assert!(
        matches!(err, CheckpointError::VocabHashMismatch { side: "target", .. }),
        "{err:?}"
    );
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn alien_versions_and_corrupt_records_error() {
    let dir = scratch_dir("corrupt");
    let path = dir.join("model.ckpt");
    let model = sample_model();
    save_checkpoint(&model, &path).unwrap();
    let bytes = fs::read(&path).unwrap();
    let header_end = bytes.iter().position(|&b| b == b'\n').unwrap() + 1;

    let v2_path = dir.join("v2.ckpt");
    let mut v2 = bytes.clone();
    v2[1] = b'2';
    fs::write(&v2_path, &v2).unwrap();
    let err = load_checkpoint(&v2_path, &model.src_vocab, &model.tgt_vocab).unwrap_err();
    assert!(matches!(err, CheckpointError::UnsupportedVersion(v) if v == "v2"));

    // First record name starts right after its u32 length; flip a byte.
    let renamed_path = dir.join("renamed.ckpt");
    let mut renamed = bytes.clone();
    renamed[header_end + 4] = b'x';
    fs::write(&renamed_path, &renamed).unwrap();
    let err = load_checkpoint(&renamed_path, &model.src_vocab, &model.tgt_vocab).unwrap_err();
    assert!(matches!(err, CheckpointError::TensorMismatch { .. }), "{err:?}");

    let trailing_path = dir.join("trailing.ckpt");
    let mut trailing = bytes.clone();
    trailing.push(0);
    fs::write(&trailing_path, &trailing).unwrap();
    let err = load_checkpoint(&trailing_path, &model.src_vocab, &model.tgt_vocab).unwrap_err();
    assert!(matches!(err, CheckpointError::TrailingData), "{err:?}");
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn values_survive_training_then_reloading() {
    use prooftrace_seq::{train, Optimizer, TrainConfig};
    let dir = scratch_dir("trained");
    let path = dir.join("model.ckpt");
    let mut model = sample_model();
    let data = vec![(vec![7, 8], vec![8]), (vec![9], vec![7, 8])];
    train(
        &mut model,
        &data,
        &TrainConfig {
            optimizer: Optimizer::Adam,
            learning_rate: 1e-3,
            batch_size: 2,
            epochs: 3,
            clip_norm: 5.0,
            shuffle_seed: 0,
        },
    )
    .unwrap();
    save_checkpoint(&model, &path).unwrap();
    let loaded = load_checkpoint(&path, &model.src_vocab, &model.tgt_vocab).unwrap();
    assert_eq!(loaded.params, model.params);
    fs::remove_dir_all(dir).unwrap();
}
