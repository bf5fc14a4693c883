//! End-to-end training behaviour: untrained models score near the uniform
//! distribution, and a small corpus is memorized to high accuracy within a
//! bounded number of epochs.

use prooftrace_core::datagen::Vocabulary;
use prooftrace_seq::{
    beam_decode, forward_loss, init_model, train, Attention, ModelConfig, Optimizer, SeqModel,
    TrainConfig,
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

#[test]
fn untrained_loss_matches_uniform_entropy_at_default_widths() {
    let config = ModelConfig {
        src_vocab: 50,
        tgt_vocab: 50,
        embed: 64,
        hidden: 128,
        enc_layers: 1,
        dec_layers: 1,
        attention: Attention::Multiplicative,
        seed: 17,
    };
    let model = init_model(config, vocab(50), vocab(50)).unwrap();
    let batch: Vec<(Vec<u32>, Vec<u32>)> = (0..10)
        .map(|i| {
            let a = 7 + (i * 3) % 43;
            let b = 7 + (i * 5) % 43;
            (vec![a, b, 7 + i], vec![b, a])
        })
        .collect();
    let (loss, _) = forward_loss(&model, &batch).unwrap();
    let uniform = (50.0f64).ln();
    assert!(
        (loss - uniform).abs() < 0.1 * uniform,
        "untrained loss {loss} vs ln(50) = {uniform}"
    );
}

/// 100 distinct examples with a deterministic source-to-target rule.
fn toy_corpus() -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut data = Vec::new();
    for i in 0..100u32 {
        let a = 7 + i % 10;
        let b = 7 + (i / 10) % 10;
        // Reverse the pair and tag it with a derived third token.
        data.push((vec![a, b], vec![b, a, 7 + (a + b) % 10]));
    }
    data
}

fn sequence_accuracy(model: &SeqModel, data: &[(Vec<u32>, Vec<u32>)]) -> f64 {
    let hits = data
        .iter()
        .filter(|(src, tgt)| {
            let out = beam_decode(model, src, 1, tgt.len() + 2).unwrap();
            out[0].tokens == *tgt && out[0].completed
        })
        .count();
    hits as f64 / data.len() as f64
}

#[test]
fn a_hundred_examples_are_memorized_within_two_hundred_epochs() {
    let config = ModelConfig {
        src_vocab: 17,
        tgt_vocab: 17,
        embed: 24,
        hidden: 64,
        enc_layers: 1,
        dec_layers: 1,
        attention: Attention::Multiplicative,
        seed: 1,
    };
    let mut model = init_model(config, vocab(17), vocab(17)).unwrap();
    let data = toy_corpus();
    let mut epochs_used = 0;
    let mut accuracy = 0.0;
    for round in 0..10 {
        let report = train(
            &mut model,
            &data,
            &TrainConfig {
                optimizer: Optimizer::Adam,
                learning_rate: 5e-3,
                batch_size: 16,
                epochs: 20,
                clip_norm: 5.0,
                shuffle_seed: round,
            },
        )
        .unwrap();
        assert_eq!(report.loss_curve.len(), 20);
        epochs_used += 20;
        accuracy = sequence_accuracy(&model, &data);
        if accuracy >= 0.95 {
            break;
        }
    }
    assert!(
        accuracy >= 0.95,
        "top-1 accuracy {accuracy} after {epochs_used} epochs"
    );
    assert!(epochs_used <= 200);
}

#[test]
fn loose_clipping_matches_no_clipping_when_gradients_are_small() {
    let config = ModelConfig {
        src_vocab: 9,
        tgt_vocab: 9,
        embed: 4,
        hidden: 6,
        enc_layers: 1,
        dec_layers: 1,
        attention: Attention::None,
        seed: 2,
    };
    let data = vec![(vec![7], vec![8]), (vec![8], vec![7])];
    let train_with = |clip: f64| {
        let mut m = init_model(config.clone(), vocab(9), vocab(9)).unwrap();
        train(
            &mut m,
            &data,
            &TrainConfig {
                optimizer: Optimizer::Sgd,
                learning_rate: 0.1,
                batch_size: 2,
                epochs: 5,
                clip_norm: clip,
                shuffle_seed: 0,
            },
        )
        .unwrap();
        m.params
    };
    assert_eq!(train_with(1e9), train_with(0.0));
}
