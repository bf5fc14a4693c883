//! Beam search over the decoder. Hypothesis scores are exact sums of the
//! emitted token log-probabilities, including the terminating `</s>`;
//! nothing is length-normalized. The padding and start markers are never
//! emitted; every other id competes.

use prooftrace_core::datagen::Vocabulary;

use crate::model::{decode_step, decoder_init, run_encoder, ModelError, SeqModel};

#[derive(Clone, Debug, PartialEq)]
pub struct BeamHypothesis {
    /// Emitted content tokens, markers excluded.
    pub tokens: Vec<u32>,
    /// Sum of log-probabilities of every emitted token and, unless the
    /// hypothesis was cut off at `max_len`, the closing `</s>`.
    pub score: f64,
    /// False only for hypotheses cut off at `max_len` without `</s>`.
    pub completed: bool,
}

/// Candidate ordering: higher score first, then lexicographically smaller
/// token sequence, finished before unfinished.
fn candidate_order(a: &(BeamHypothesis, Option<LiveState>), b: &(BeamHypothesis, Option<LiveState>)) -> std::cmp::Ordering {
    b.0.score
        .partial_cmp(&a.0.score)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then_with(|| a.0.tokens.cmp(&b.0.tokens))
        .then_with(|| a.0.completed.cmp(&b.0.completed).reverse())
}

struct LiveState {
    hidden: Vec<Vec<f64>>,
    next_input: u32,
}

/// Log-probabilities of the next token after feeding `prefix` (teacher
/// forced, `<s>`-initiated) through the decoder. One entry per target id.
pub fn next_token_log_probs(
    model: &SeqModel,
    src: &[u32],
    prefix: &[u32],
) -> Result<Vec<f64>, ModelError> {
    check(model, src, prefix)?;
    let cache = run_encoder(model, src);
    let mut hidden = decoder_init(&cache, model.config.dec_layers, model.config.hidden);
    let mut input = Vocabulary::BOS;
    let mut last = None;
    for step in 0..=prefix.len() {
        let out = decode_step(model, &cache, &mut hidden, input);
        if step < prefix.len() {
            input = prefix[step];
        }
        last = Some(out);
    }
    Ok(last.unwrap().probs.iter().map(|p| p.ln()).collect())
}

fn check(model: &SeqModel, src: &[u32], tgt_side: &[u32]) -> Result<(), ModelError> {
    if src.is_empty() {
        return Err(ModelError::EmptySource);
    }
    for &id in src {
        if id as usize >= model.config.src_vocab {
            return Err(ModelError::TokenOutOfRange {
                side: "source",
                id,
                size: model.config.src_vocab,
            });
        }
    }
    for &id in tgt_side {
        if id as usize >= model.config.tgt_vocab {
            return Err(ModelError::TokenOutOfRange {
                side: "target",
                id,
                size: model.config.tgt_vocab,
            });
        }
    }
    Ok(())
}

/// Width-`k` beam search, at most `max_len` content tokens per hypothesis.
/// Finished hypotheses stay in the beam and compete on their final scores.
/// Returns up to `k` results, best first; `k = 1` reproduces greedy search.
pub fn beam_decode(
    model: &SeqModel,
    src: &[u32],
    k: usize,
    max_len: usize,
) -> Result<Vec<BeamHypothesis>, ModelError> {
    if k == 0 {
        return Err(ModelError::ZeroBeamWidth);
    }
    check(model, src, &[])?;
    let cache = run_encoder(model, src);
    let hidden = decoder_init(&cache, model.config.dec_layers, model.config.hidden);

    let mut beam: Vec<(BeamHypothesis, Option<LiveState>)> = vec![(
        BeamHypothesis {
            tokens: Vec::new(),
            score: 0.0,
            completed: false,
        },
        Some(LiveState {
            hidden,
            next_input: Vocabulary::BOS,
        }),
    )];

    while beam.iter().any(|(_, live)| live.is_some()) {
        let mut candidates: Vec<(BeamHypothesis, Option<LiveState>)> = Vec::new();
        for (hyp, live) in beam {
            let Some(live) = live else {
                candidates.push((hyp, None));
                continue;
            };
            let mut hidden = live.hidden;
            let step = decode_step(model, &cache, &mut hidden, live.next_input);
            for (id, &p) in step.probs.iter().enumerate() {
                let id = id as u32;
                if id == Vocabulary::PAD || id == Vocabulary::BOS {
                    continue;
                }
                let score = hyp.score + p.ln();
                if id == Vocabulary::EOS {
                    candidates.push((
                        BeamHypothesis {
                            tokens: hyp.tokens.clone(),
                            score,
                            completed: true,
                        },
                        None,
                    ));
                    continue;
                }
                let mut tokens = hyp.tokens.clone();
                tokens.push(id);
                if tokens.len() >= max_len {
                    candidates.push((
                        BeamHypothesis {
                            tokens,
                            score,
                            completed: false,
                        },
                        None,
                    ));
                } else {
                    candidates.push((
                        BeamHypothesis {
                            tokens,
                            score,
                            completed: false,
                        },
                        Some(LiveState {
                            hidden: hidden.clone(),
                            next_input: id,
                        }),
                    ));
                }
            }
        }
        candidates.sort_by(candidate_order);
        candidates.truncate(k);
        beam = candidates;
    }

    Ok(beam.into_iter().map(|(hyp, _)| hyp).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, Attention, ModelConfig};

    fn vocab(n: usize) -> Vocabulary {
        let mut v = Vocabulary::new();
        let mut i = 0;
        while v.len() < n {
            v.add(&format!("tok{i}"));
            i += 1;
        }
        v
    }

    fn model(seed: u64) -> SeqModel {
        let config = ModelConfig {
            src_vocab: 9,
            tgt_vocab: 9,
            embed: 3,
            hidden: 4,
            enc_layers: 1,
            dec_layers: 1,
            attention: Attention::Multiplicative,
            seed,
        };
        init_model(config, vocab(9), vocab(9)).unwrap()
    }

    #[test]
    fn next_token_log_probs_normalize() {
        let m = model(5);
        let lp = next_token_log_probs(&m, &[7, 8], &[8]).unwrap();
        assert_eq!(lp.len(), 9);
        let sum: f64 = lp.iter().map(|v| v.exp()).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beam_results_come_back_best_first() {
        let m = model(6);
        let out = beam_decode(&m, &[7, 8], 4, 5).unwrap();
        assert!(!out.is_empty() && out.len() <= 4);
        for w in out.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
        for h in &out {
            assert!(h.tokens.len() <= 5);
            assert!(!h.tokens.contains(&Vocabulary::PAD));
            assert!(!h.tokens.contains(&Vocabulary::BOS));
            assert!(!h.tokens.contains(&Vocabulary::EOS));
        }
    }

    #[test]
    fn zero_width_beams_are_rejected() {
        let m = model(7);
        assert!(matches!(
            beam_decode(&m, &[7], 0, 3),
            Err(ModelError::ZeroBeamWidth)
        ));
        assert!(matches!(
            beam_decode(&m, &[], 2, 3),
            Err(ModelError::EmptySource)
        ));
    }

    #[test]
    fn decoding_is_deterministic() {
        let m = model(8);
        let a = beam_decode(&m, &[8, 7, 8], 3, 4).unwrap();
        let b = beam_decode(&m, &[8, 7, 8], 3, 4).unwrap();
        assert_eq!(a, b);
    }
}
