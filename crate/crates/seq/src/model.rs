//! Recurrent encoder-decoder: gated recurrent layers, optional bilinear
//! attention over encoder states, softmax output, and exact backpropagation
//! through time. Everything is f64 and deterministic.

use prooftrace_core::datagen::Vocabulary;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::tensor::{add_slice, dot, sigmoid, softmax, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Attention {
    None,
    Multiplicative,
}

impl Attention {
    pub fn as_str(self) -> &'static str {
        match self {
            Attention::None => "none",
            Attention::Multiplicative => "multiplicative",
        }
    }

    pub fn parse(s: &str) -> Option<Attention> {
        match s {
            "none" => Some(Attention::None),
            "multiplicative" => Some(Attention::Multiplicative),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub attention: Attention,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            src_vocab: Vocabulary::RESERVED.len(),
            tgt_vocab: Vocabulary::RESERVED.len(),
            embed: 64,
            hidden: 128,
            enc_layers: 1,
            dec_layers: 1,
            attention: Attention::Multiplicative,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{0} must be at least 1")]
    ZeroDimension(&'static str),
    #[error("vocabulary size {0} is below the {1} reserved tokens")]
    VocabTooSmall(usize, usize),
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("embed", self.embed),
            ("hidden", self.hidden),
            ("enc_layers", self.enc_layers),
            ("dec_layers", self.dec_layers),
        ] {
            if v == 0 {
                return Err(ConfigError::ZeroDimension(name));
            }
        }
        let reserved = Vocabulary::RESERVED.len();
        for v in [self.src_vocab, self.tgt_vocab] {
            if v < reserved {
                return Err(ConfigError::VocabTooSmall(v, reserved));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GruWeights {
    pub w_z: Tensor,
    pub u_z: Tensor,
    pub b_z: Tensor,
    pub w_r: Tensor,
    pub u_r: Tensor,
    pub b_r: Tensor,
    pub w_c: Tensor,
    pub u_c: Tensor,
    pub b_c: Tensor,
}

impl GruWeights {
    fn zeros(input: usize, hidden: usize) -> GruWeights {
        GruWeights {
            w_z: Tensor::zeros(&[hidden, input]),
            u_z: Tensor::zeros(&[hidden, hidden]),
            b_z: Tensor::zeros(&[hidden]),
            w_r: Tensor::zeros(&[hidden, input]),
            u_r: Tensor::zeros(&[hidden, hidden]),
            b_r: Tensor::zeros(&[hidden]),
            w_c: Tensor::zeros(&[hidden, input]),
            u_c: Tensor::zeros(&[hidden, hidden]),
            b_c: Tensor::zeros(&[hidden]),
        }
    }

    fn tensors(&self) -> [&Tensor; 9] {
        [
            &self.w_z, &self.u_z, &self.b_z, &self.w_r, &self.u_r, &self.b_r, &self.w_c,
            &self.u_c, &self.b_c,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Tensor; 9] {
        [
            &mut self.w_z, &mut self.u_z, &mut self.b_z, &mut self.w_r, &mut self.u_r,
            &mut self.b_r, &mut self.w_c, &mut self.u_c, &mut self.b_c,
        ]
    }

    const NAMES: [&'static str; 9] = [
        "w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_c", "u_c", "b_c",
    ];
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionWeights {
    /// Bilinear score matrix [H, H].
    pub w_att: Tensor,
    /// Combines [decoder state; context] into the attentional state [H, 2H].
    pub w_comb: Tensor,
    pub b_comb: Tensor,
}

/// All trainable tensors. Construction order fixes both the init draw order
/// and the checkpoint record order.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters {
    pub src_embed: Tensor,
    pub tgt_embed: Tensor,
    pub encoder: Vec<GruWeights>,
    pub decoder: Vec<GruWeights>,
    pub attention: Option<AttentionWeights>,
    pub w_out: Tensor,
    pub b_out: Tensor,
}

impl Parameters {
    pub fn zeros(config: &ModelConfig) -> Parameters {
        let (e, h) = (config.embed, config.hidden);
        let layer_input = |l: usize| if l == 0 { e } else { h };
        Parameters {
            src_embed: Tensor::zeros(&[config.src_vocab, e]),
            tgt_embed: Tensor::zeros(&[config.tgt_vocab, e]),
            encoder: (0..config.enc_layers)
                .map(|l| GruWeights::zeros(layer_input(l), h))
                .collect(),
            decoder: (0..config.dec_layers)
                .map(|l| GruWeights::zeros(layer_input(l), h))
                .collect(),
            attention: match config.attention {
                Attention::None => None,
                Attention::Multiplicative => Some(AttentionWeights {
                    w_att: Tensor::zeros(&[h, h]),
                    w_comb: Tensor::zeros(&[h, 2 * h]),
                    b_comb: Tensor::zeros(&[h]),
                }),
            },
            w_out: Tensor::zeros(&[config.tgt_vocab, h]),
            b_out: Tensor::zeros(&[config.tgt_vocab]),
        }
    }

    /// Every tensor with its checkpoint name, in the fixed order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = vec![
            ("src_embed".into(), &self.src_embed),
            ("tgt_embed".into(), &self.tgt_embed),
        ];
        for (side, layers) in [("enc", &self.encoder), ("dec", &self.decoder)] {
            for (l, g) in layers.iter().enumerate() {
                for (name, t) in GruWeights::NAMES.iter().zip(g.tensors()) {
                    out.push((format!("{side}{l}.{name}"), t));
                }
            }
        }
        if let Some(a) = &self.attention {
            out.push(("att.w_att".into(), &a.w_att));
            out.push(("att.w_comb".into(), &a.w_comb));
            out.push(("att.b_comb".into(), &a.b_comb));
        }
        out.push(("out.w".into(), &self.w_out));
        out.push(("out.b".into(), &self.b_out));
        out
    }

    /// Same order as [`Parameters::named_tensors`], mutable and unnamed.
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = vec![&mut self.src_embed, &mut self.tgt_embed];
        for layers in [&mut self.encoder, &mut self.decoder] {
            for g in layers.iter_mut() {
                out.extend(g.tensors_mut());
            }
        }
        if let Some(a) = &mut self.attention {
            out.push(&mut a.w_att);
            out.push(&mut a.w_comb);
            out.push(&mut a.b_comb);
        }
        out.push(&mut self.w_out);
        out.push(&mut self.b_out);
        out
    }

    pub fn param_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn add_assign(&mut self, other: &Parameters) {
        let mut mine = self.tensors_mut();
        let theirs: Vec<&Tensor> = {
            let named = other.named_tensors();
            named.into_iter().map(|(_, t)| t).collect()
        };
        assert_eq!(mine.len(), theirs.len());
        for (a, b) in mine.iter_mut().zip(theirs) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.scale(s);
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.named_tensors()
            .iter()
            .map(|(_, t)| t.sq_norm())
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeqModel {
    pub config: ModelConfig,
    pub params: Parameters,
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("config expects vocabularies of {expected_src}/{expected_tgt} tokens, got {got_src}/{got_tgt}")]
    VocabMismatch {
        expected_src: usize,
        expected_tgt: usize,
        got_src: usize,
        got_tgt: usize,
    },
    #[error("token id {id} is outside the {side} vocabulary of {size}")]
    TokenOutOfRange {
        side: &'static str,
        id: u32,
        size: usize,
    },
    #[error("source sequence is empty")]
    EmptySource,
    #[error("batch is empty")]
    EmptyBatch,
    #[error("batch has no target tokens to score")]
    NoTargetTokens,
    #[error("beam width must be at least 1")]
    ZeroBeamWidth,
}

/// Uniform(-s, s) with s = 1/sqrt(hidden), drawn tensor by tensor in the
/// fixed order; bitwise reproducible per seed.
pub fn init_model(
    config: ModelConfig,
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
) -> Result<SeqModel, ModelError> {
    config.validate()?;
    if src_vocab.len() != config.src_vocab || tgt_vocab.len() != config.tgt_vocab {
        return Err(ModelError::VocabMismatch {
            expected_src: config.src_vocab,
            expected_tgt: config.tgt_vocab,
            got_src: src_vocab.len(),
            got_tgt: tgt_vocab.len(),
        });
    }
    let mut params = Parameters::zeros(&config);
    let scale = 1.0 / (config.hidden as f64).sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    for t in params.tensors_mut() {
        let dims = t.dims().to_vec();
        *t = Tensor::uniform(&dims, scale, &mut rng);
    }
    Ok(SeqModel {
        config,
        params,
        src_vocab,
        tgt_vocab,
    })
}

struct GruStep {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
}

fn gru_forward(g: &GruWeights, x: Vec<f64>, h_prev: Vec<f64>) -> GruStep {
    let mut z = g.w_z.matvec(&x);
    add_slice(&mut z, &g.u_z.matvec(&h_prev));
    add_slice(&mut z, g.b_z.data());
    for v in &mut z {
        *v = sigmoid(*v);
    }
    let mut r = g.w_r.matvec(&x);
    add_slice(&mut r, &g.u_r.matvec(&h_prev));
    add_slice(&mut r, g.b_r.data());
    for v in &mut r {
        *v = sigmoid(*v);
    }
    let rh: Vec<f64> = r.iter().zip(&h_prev).map(|(a, b)| a * b).collect();
    let mut c = g.w_c.matvec(&x);
    add_slice(&mut c, &g.u_c.matvec(&rh));
    add_slice(&mut c, g.b_c.data());
    for v in &mut c {
        *v = v.tanh();
    }
    let h: Vec<f64> = z
        .iter()
        .zip(&h_prev)
        .zip(&c)
        .map(|((z, hp), c)| z * hp + (1.0 - z) * c)
        .collect();
    GruStep { x, h_prev, z, r, c, h }
}

/// Returns (d input, d h_prev) and accumulates weight gradients.
fn gru_backward(g: &GruWeights, grads: &mut GruWeights, step: &GruStep, dh: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h = dh.len();
    let mut dz = vec![0.0; h];
    let mut dc = vec![0.0; h];
    let mut dh_prev = vec![0.0; h];
    for i in 0..h {
        dz[i] = dh[i] * (step.h_prev[i] - step.c[i]);
        dc[i] = dh[i] * (1.0 - step.z[i]);
        dh_prev[i] = dh[i] * step.z[i];
    }

    let dc_pre: Vec<f64> = dc.iter().zip(&step.c).map(|(d, c)| d * (1.0 - c * c)).collect();
    let rh: Vec<f64> = step.r.iter().zip(&step.h_prev).map(|(a, b)| a * b).collect();
    grads.w_c.add_outer(&dc_pre, &step.x);
    grads.u_c.add_outer(&dc_pre, &rh);
    add_slice(grads.b_c.data_mut(), &dc_pre);
    let drh = g.u_c.matvec_t(&dc_pre);
    let mut dr = vec![0.0; h];
    for i in 0..h {
        dr[i] = drh[i] * step.h_prev[i];
        dh_prev[i] += drh[i] * step.r[i];
    }
    let mut dx = g.w_c.matvec_t(&dc_pre);

    let dz_pre: Vec<f64> = dz
        .iter()
        .zip(&step.z)
        .map(|(d, z)| d * z * (1.0 - z))
        .collect();
    grads.w_z.add_outer(&dz_pre, &step.x);
    grads.u_z.add_outer(&dz_pre, &step.h_prev);
    add_slice(grads.b_z.data_mut(), &dz_pre);
    add_slice(&mut dh_prev, &g.u_z.matvec_t(&dz_pre));
    add_slice(&mut dx, &g.w_z.matvec_t(&dz_pre));

    let dr_pre: Vec<f64> = dr
        .iter()
        .zip(&step.r)
        .map(|(d, r)| d * r * (1.0 - r))
        .collect();
    grads.w_r.add_outer(&dr_pre, &step.x);
    grads.u_r.add_outer(&dr_pre, &step.h_prev);
    add_slice(grads.b_r.data_mut(), &dr_pre);
    add_slice(&mut dh_prev, &g.u_r.matvec_t(&dr_pre));
    add_slice(&mut dx, &g.w_r.matvec_t(&dr_pre));

    (dx, dh_prev)
}

struct AttnStep {
    alpha: Vec<f64>,
    ctx: Vec<f64>,
    htilde: Vec<f64>,
}

pub(crate) struct DecoderStep {
    input: u32,
    layers: Vec<GruStep>,
    attn: Option<AttnStep>,
    pub(crate) probs: Vec<f64>,
    /// Gold id, or `None` for an excluded padding position.
    gold: Option<u32>,
}

pub(crate) struct ExampleCache {
    src: Vec<u32>,
    enc: Vec<Vec<GruStep>>,
    /// Top-layer encoder state per source position.
    enc_states: Vec<Vec<f64>>,
    /// W_att · enc_state, precomputed per position.
    watt_enc: Vec<Vec<f64>>,
    dec: Vec<DecoderStep>,
}

/// Activations of one forward pass; consumed by [`backward`].
pub struct ForwardCache {
    examples: Vec<ExampleCache>,
    total_tokens: usize,
}

impl ForwardCache {
    pub fn total_tokens(&self) -> usize {
        self.total_tokens
    }
}

fn check_ids(ids: &[u32], size: usize, side: &'static str) -> Result<(), ModelError> {
    for &id in ids {
        if id as usize >= size {
            return Err(ModelError::TokenOutOfRange { side, id, size });
        }
    }
    Ok(())
}

pub(crate) fn run_encoder(model: &SeqModel, src: &[u32]) -> ExampleCache {
    let p = &model.params;
    let h = model.config.hidden;
    let mut enc: Vec<Vec<GruStep>> = Vec::with_capacity(p.encoder.len());
    let mut inputs: Vec<Vec<f64>> = src.iter().map(|&id| p.src_embed.row(id as usize).to_vec()).collect();
    for g in &p.encoder {
        let mut steps = Vec::with_capacity(inputs.len());
        let mut hidden = vec![0.0; h];
        for x in inputs {
            let step = gru_forward(g, x, hidden);
            hidden = step.h.clone();
            steps.push(step);
        }
        inputs = steps.iter().map(|s| s.h.clone()).collect();
        enc.push(steps);
    }
    let enc_states = inputs;
    let watt_enc = match &p.attention {
        Some(a) => enc_states.iter().map(|s| a.w_att.matvec(s)).collect(),
        None => Vec::new(),
    };
    ExampleCache {
        src: src.to_vec(),
        enc,
        enc_states,
        watt_enc,
        dec: Vec::new(),
    }
}

/// Decoder hidden state per layer, seeded from the encoder's final states.
pub(crate) fn decoder_init(cache: &ExampleCache, dec_layers: usize, hidden: usize) -> Vec<Vec<f64>> {
    (0..dec_layers)
        .map(|l| match cache.enc.get(l) {
            Some(steps) => steps.last().map(|s| s.h.clone()).unwrap(),
            None => vec![0.0; hidden],
        })
        .collect()
}

/// One decoder step on top of existing per-layer hidden states. Returns the
/// populated caches and leaves `hidden` advanced.
pub(crate) fn decode_step(
    model: &SeqModel,
    cache: &ExampleCache,
    hidden: &mut [Vec<f64>],
    input: u32,
) -> DecoderStep {
    let p = &model.params;
    let mut x = p.tgt_embed.row(input as usize).to_vec();
    let mut layers = Vec::with_capacity(p.decoder.len());
    for (l, g) in p.decoder.iter().enumerate() {
        let step = gru_forward(g, x, std::mem::take(&mut hidden[l]));
        hidden[l] = step.h.clone();
        x = step.h.clone();
        layers.push(step);
    }
    let h_top = &layers.last().unwrap().h;

    let (attn, htilde) = match &p.attention {
        Some(a) => {
            let mut scores: Vec<f64> = cache
                .watt_enc
                .iter()
                .map(|we| dot(h_top, we))
                .collect();
            softmax(&mut scores);
            let hdim = h_top.len();
            let mut ctx = vec![0.0; hdim];
            for (alpha, state) in scores.iter().zip(&cache.enc_states) {
                for (c, s) in ctx.iter_mut().zip(state) {
                    *c += alpha * s;
                }
            }
            let mut concat = h_top.clone();
            concat.extend_from_slice(&ctx);
            let mut pre = a.w_comb.matvec(&concat);
            add_slice(&mut pre, a.b_comb.data());
            for v in &mut pre {
                *v = v.tanh();
            }
            let htilde = pre;
            (
                Some(AttnStep {
                    alpha: scores,
                    ctx,
                    htilde: htilde.clone(),
                }),
                htilde,
            )
        }
        None => (None, h_top.clone()),
    };

    let mut logits = p.w_out.matvec(&htilde);
    add_slice(&mut logits, p.b_out.data());
    softmax(&mut logits);
    DecoderStep {
        input,
        layers,
        attn,
        probs: logits,
        gold: None,
    }
}

/// Teacher-forced forward pass over a batch. Returns the mean cross-entropy
/// per scored target token and the activations for [`backward`]. Targets
/// equal to the padding id are fed but not scored; examples with an empty
/// target are skipped entirely.
pub fn forward_loss(
    model: &SeqModel,
    batch: &[(Vec<u32>, Vec<u32>)],
) -> Result<(f64, ForwardCache), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut examples = Vec::with_capacity(batch.len());
    let mut total_tokens = 0usize;
    let mut nll = 0.0;
    for (src, tgt) in batch {
        check_ids(src, model.config.src_vocab, "source")?;
        check_ids(tgt, model.config.tgt_vocab, "target")?;
        if src.is_empty() {
            return Err(ModelError::EmptySource);
        }
        if tgt.is_empty() {
            continue;
        }
        let mut cache = run_encoder(model, src);
        let mut hidden = decoder_init(&cache, model.config.dec_layers, model.config.hidden);
        let mut input = Vocabulary::BOS;
        for s in 0..=tgt.len() {
            let gold = if s < tgt.len() { tgt[s] } else { Vocabulary::EOS };
            let mut step = decode_step(model, &cache, &mut hidden, input);
            if gold != Vocabulary::PAD {
                step.gold = Some(gold);
                nll -= step.probs[gold as usize].ln();
                total_tokens += 1;
            }
            cache.dec.push(step);
            input = gold;
        }
        examples.push(cache);
    }
    if total_tokens == 0 {
        return Err(ModelError::NoTargetTokens);
    }
    Ok((
        nll / total_tokens as f64,
        ForwardCache {
            examples,
            total_tokens,
        },
    ))
}

/// Exact gradients of the mean loss returned by [`forward_loss`], in the
/// same named-tensor structure as the parameters.
pub fn backward(model: &SeqModel, cache: &ForwardCache) -> Parameters {
    let p = &model.params;
    let h = model.config.hidden;
    let mut g = Parameters::zeros(&model.config);
    let scale = 1.0 / cache.total_tokens as f64;

    for ex in &cache.examples {
        let steps = ex.dec.len();
        // d loss / d top-layer decoder state, per step, plus accumulated
        // gradients on the top-layer encoder states from attention.
        let mut dh_top = vec![vec![0.0; h]; steps];
        let mut denc_states = vec![vec![0.0; h]; ex.enc_states.len()];

        for (s, step) in ex.dec.iter().enumerate() {
            let Some(gold) = step.gold else { continue };
            let mut dlogits = step.probs.clone();
            dlogits[gold as usize] -= 1.0;
            for v in &mut dlogits {
                *v *= scale;
            }
            let htilde = match &step.attn {
                Some(a) => &a.htilde,
                None => &step.layers.last().unwrap().h,
            };
            g.w_out.add_outer(&dlogits, htilde);
            add_slice(g.b_out.data_mut(), &dlogits);
            let dhtilde = p.w_out.matvec_t(&dlogits);

            match (&step.attn, p.attention.as_ref(), g.attention.as_mut()) {
                (Some(attn), Some(ap), Some(ag)) => {
                    let da: Vec<f64> = dhtilde
                        .iter()
                        .zip(&attn.htilde)
                        .map(|(d, t)| d * (1.0 - t * t))
                        .collect();
                    let h_top = &step.layers.last().unwrap().h;
                    let mut concat = h_top.clone();
                    concat.extend_from_slice(&attn.ctx);
                    ag.w_comb.add_outer(&da, &concat);
                    add_slice(ag.b_comb.data_mut(), &da);
                    let dconcat = ap.w_comb.matvec_t(&da);
                    let (dh_part, dctx) = dconcat.split_at(h);
                    add_slice(&mut dh_top[s], dh_part);

                    let dalpha: Vec<f64> = ex
                        .enc_states
                        .iter()
                        .map(|state| dot(dctx, state))
                        .collect();
                    for (denc, alpha) in denc_states.iter_mut().zip(&attn.alpha) {
                        for (d, c) in denc.iter_mut().zip(dctx) {
                            *d += alpha * c;
                        }
                    }
                    let inner: f64 = dalpha.iter().zip(&attn.alpha).map(|(d, a)| d * a).sum();
                    let dscore: Vec<f64> = dalpha
                        .iter()
                        .zip(&attn.alpha)
                        .map(|(d, a)| a * (d - inner))
                        .collect();
                    let wt_h = ap.w_att.matvec_t(h_top);
                    for ((&ds, we), (denc, state)) in dscore
                        .iter()
                        .zip(&ex.watt_enc)
                        .zip(denc_states.iter_mut().zip(&ex.enc_states))
                    {
                        for (d, w) in dh_top[s].iter_mut().zip(we) {
                            *d += ds * w;
                        }
                        let scaled: Vec<f64> = h_top.iter().map(|v| v * ds).collect();
                        ag.w_att.add_outer(&scaled, state);
                        for (d, w) in denc.iter_mut().zip(&wt_h) {
                            *d += ds * w;
                        }
                    }
                }
                _ => {
                    add_slice(&mut dh_top[s], &dhtilde);
                }
            }
        }

        // Decoder BPTT, top layer fed by dh_top, lower layers by the input
        // gradients of the layer above at the same step.
        let layers = p.decoder.len();
        let mut dh_time = vec![vec![0.0; h]; layers];
        for s in (0..steps).rev() {
            let mut dx_above: Option<Vec<f64>> = None;
            for l in (0..layers).rev() {
                let mut dh = std::mem::replace(&mut dh_time[l], Vec::new());
                if l + 1 == layers {
                    add_slice(&mut dh, &dh_top[s]);
                }
                if let Some(dx) = &dx_above {
                    add_slice(&mut dh, dx);
                }
                let (dx, dh_prev) =
                    gru_backward(&p.decoder[l], &mut g.decoder[l], &ex.dec[s].layers[l], &dh);
                dh_time[l] = dh_prev;
                if l == 0 {
                    let row = g.tgt_embed.row_mut(ex.dec[s].input as usize);
                    add_slice(row, &dx);
                } else {
                    dx_above = Some(dx);
                }
            }
        }

        // Encoder BPTT: final-state gradients flow back from the decoder
        // init, attention gradients land on the top layer at each position.
        let enc_layers = p.encoder.len();
        let src_len = ex.src.len();
        let mut denc_time = vec![vec![0.0; h]; enc_layers];
        for (l, dh) in dh_time.into_iter().enumerate() {
            if l < enc_layers {
                denc_time[l] = dh;
            }
        }
        for t in (0..src_len).rev() {
            let mut dx_above: Option<Vec<f64>> = None;
            for l in (0..enc_layers).rev() {
                let mut dh = std::mem::replace(&mut denc_time[l], Vec::new());
                if l + 1 == enc_layers {
                    add_slice(&mut dh, &denc_states[t]);
                }
                if let Some(dx) = &dx_above {
                    add_slice(&mut dh, dx);
                }
                let (dx, dh_prev) =
                    gru_backward(&p.encoder[l], &mut g.encoder[l], &ex.enc[l][t], &dh);
                denc_time[l] = dh_prev;
                if l == 0 {
                    let row = g.src_embed.row_mut(ex.src[t] as usize);
                    add_slice(row, &dx);
                } else {
                    dx_above = Some(dx);
                }
            }
        }
    }
    g
}
