//! Clause scoring backed by a trained sequence model: the open branch is
//! tokenized exactly like the literal-path training sources, and the
//! model's next-token distribution over clause names ranks the candidates.

use std::collections::HashMap;

use prooftrace_core::datagen::{literal_path_tokens, Vocabulary};
use prooftrace_core::fol::{Literal, SkolemDetector, SymbolTable};
use prooftrace_core::tableau::{ClauseScorer, ScorerError};
use prooftrace_seq::{next_token_log_probs, SeqModel};

pub struct ModelScorer {
    model: SeqModel,
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
    det: SkolemDetector,
}

impl ModelScorer {
    pub fn new(model: SeqModel, src_vocab: Vocabulary, tgt_vocab: Vocabulary) -> ModelScorer {
        ModelScorer {
            model,
            src_vocab,
            tgt_vocab,
            det: SkolemDetector::default(),
        }
    }
}

impl ClauseScorer for ModelScorer {
    fn score(
        &self,
        path: &[Literal],
        symbols: &SymbolTable,
    ) -> Result<HashMap<String, f64>, ScorerError> {
        let tokens = literal_path_tokens(path, symbols, &self.det);
        let src: Vec<u32> = tokens.iter().map(|t| self.src_vocab.encode(t)).collect();
        let log_probs = next_token_log_probs(&self.model, &src, &[])
            .map_err(|e| ScorerError(e.to_string()))?;
        let reserved = Vocabulary::RESERVED.len();
        let mut out = HashMap::new();
        for (id, lp) in log_probs.iter().enumerate().skip(reserved) {
            out.insert(self.tgt_vocab.token(id as u32).to_string(), *lp);
        }
        Ok(out)
    }
}
