//! Checkpoint format: one `v1` text header line carrying the model shape
//! and the vocabulary fingerprints, followed by binary tensor records in
//! the fixed parameter order. Values are little-endian f64, so a save/load
//! round trip is bitwise exact.
//!
//! Record layout per tensor: u32 name length, name bytes, u32 rank,
//! u32 per dimension, u64 value count, then the values row-major.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use prooftrace_core::datagen::Vocabulary;

use crate::model::{Attention, ConfigError, ModelConfig, Parameters, SeqModel};

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("checkpoint ends early; the file is truncated")]
    Truncated,
    #[error("unsupported checkpoint version {0:?}")]
    UnsupportedVersion(String),
    #[error("malformed checkpoint header: {0}")]
    MalformedHeader(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{side} vocabulary does not match the checkpoint (fingerprint {expected:016x} vs {got:016x})")]
    VocabHashMismatch {
        side: &'static str,
        expected: u64,
        got: u64,
    },
    #[error("tensor record mismatch: expected {expected:?}, found {found:?}")]
    TensorMismatch { expected: String, found: String },
    #[error("checkpoint has trailing bytes after the last tensor")]
    TrailingData,
}

pub fn save_checkpoint(model: &SeqModel, path: &Path) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    let c = &model.config;
    writeln!(
        w,
        "v1 src_vocab={} tgt_vocab={} embed={} hidden={} enc_layers={} dec_layers={} attention={} seed={} src_hash={:016x} tgt_hash={:016x}",
        c.src_vocab,
        c.tgt_vocab,
        c.embed,
        c.hidden,
        c.enc_layers,
        c.dec_layers,
        c.attention.as_str(),
        c.seed,
        model.src_vocab.fingerprint(),
        model.tgt_vocab.fingerprint(),
    )?;
    for (name, tensor) in model.params.named_tensors() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(tensor.dims().len() as u32).to_le_bytes())?;
        for &d in tensor.dims() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        w.write_all(&(tensor.len() as u64).to_le_bytes())?;
        for v in tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<(), CheckpointError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            CheckpointError::Truncated
        } else {
            CheckpointError::Io(e)
        }
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64, CheckpointError> {
    let mut buf = [0u8; 8];
    read_exact(r, &mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn header_fields(line: &str) -> Result<ModelConfig, CheckpointError> {
    let bad = |msg: &str| CheckpointError::MalformedHeader(msg.to_string());
    let mut parts = line.split_whitespace();
    let version = parts.next().ok_or_else(|| bad("empty header"))?;
    if version != "v1" {
        return Err(CheckpointError::UnsupportedVersion(version.to_string()));
    }
    let mut fields = std::collections::HashMap::new();
    for part in parts {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| bad(&format!("field {part:?} is not key=value")))?;
        if fields.insert(k.to_string(), v.to_string()).is_some() {
            return Err(bad(&format!("duplicate field {k:?}")));
        }
    }
    let mut take = |k: &str| {
        fields
            .remove(k)
            .ok_or_else(|| bad(&format!("missing field {k:?}")))
    };
    let usize_of = |k: &str, v: String| {
        v.parse::<usize>()
            .map_err(|_| bad(&format!("field {k:?} has non-numeric value {v:?}")))
    };
    let config = ModelConfig {
        src_vocab: usize_of("src_vocab", take("src_vocab")?)?,
        tgt_vocab: usize_of("tgt_vocab", take("tgt_vocab")?)?,
        embed: usize_of("embed", take("embed")?)?,
        hidden: usize_of("hidden", take("hidden")?)?,
        enc_layers: usize_of("enc_layers", take("enc_layers")?)?,
        dec_layers: usize_of("dec_layers", take("dec_layers")?)?,
        attention: {
            let v = take("attention")?;
            Attention::parse(&v).ok_or_else(|| bad(&format!("unknown attention kind {v:?}")))?
        },
        seed: {
            let v = take("seed")?;
            v.parse::<u64>()
                .map_err(|_| bad(&format!("field \"seed\" has non-numeric value {v:?}")))?
        },
    };
    // src_hash and tgt_hash are validated by the caller.
    for k in fields.keys() {
        if k != "src_hash" && k != "tgt_hash" {
            return Err(bad(&format!("unknown field {k:?}")));
        }
    }
    Ok(config)
}

fn header_hash(line: &str, key: &str) -> Result<u64, CheckpointError> {
    for part in line.split_whitespace().skip(1) {
        if let Some((k, v)) = part.split_once('=') {
            if k == key {
                return u64::from_str_radix(v, 16).map_err(|_| {
                    CheckpointError::MalformedHeader(format!("field {key:?} is not hex: {v:?}"))
                });
            }
        }
    }
    Err(CheckpointError::MalformedHeader(format!(
        "missing field {key:?}"
    )))
}

/// Loads a checkpoint and binds it to the given vocabularies; a fingerprint
/// mismatch is an explicit error, never a silently re-indexed model.
pub fn load_checkpoint(
    path: &Path,
    src_vocab: &Vocabulary,
    tgt_vocab: &Vocabulary,
) -> Result<SeqModel, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut line = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        read_exact(&mut r, &mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 4096 {
            return Err(CheckpointError::MalformedHeader(
                "header line exceeds 4096 bytes".to_string(),
            ));
        }
    }
    let line = String::from_utf8(line)
        .map_err(|_| CheckpointError::MalformedHeader("header is not UTF-8".to_string()))?;
    let config = header_fields(&line)?;
    config.validate()?;
    for (side, vocab, key) in [
        ("source", src_vocab, "src_hash"),
        ("target", tgt_vocab, "tgt_hash"),
    ] {
        let expected = header_hash(&line, key)?;
        let got = vocab.fingerprint();
        if expected != got {
            return Err(CheckpointError::VocabHashMismatch { side, expected, got });
        }
    }
    if src_vocab.len() != config.src_vocab || tgt_vocab.len() != config.tgt_vocab {
        return Err(CheckpointError::MalformedHeader(
            "vocabulary sizes disagree with the fingerprinted vocabularies".to_string(),
        ));
    }

    let mut params = Parameters::zeros(&config);
    let expected_names: Vec<String> = params
        .named_tensors()
        .into_iter()
        .map(|(name, _)| name)
        .collect();
    for (t, expected_name) in params.tensors_mut().into_iter().zip(&expected_names) {
        let name_len = read_u32(&mut r)? as usize;
        if name_len > 256 {
            return Err(CheckpointError::MalformedHeader(format!(
                "tensor name length {name_len} is implausible"
            )));
        }
        let mut name = vec![0u8; name_len];
        read_exact(&mut r, &mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| CheckpointError::MalformedHeader("tensor name is not UTF-8".into()))?;
        let rank = read_u32(&mut r)? as usize;
        let mut dims = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            dims.push(read_u32(&mut r)? as usize);
        }
        let count = read_u64(&mut r)? as usize;
        if name != *expected_name || dims != t.dims() || count != t.len() {
            return Err(CheckpointError::TensorMismatch {
                expected: format!("{expected_name} {:?} {}", t.dims(), t.len()),
                found: format!("{name} {dims:?} {count}"),
            });
        }
        for v in t.data_mut() {
            let mut buf = [0u8; 8];
            read_exact(&mut r, &mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
    }
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => {}
        _ => return Err(CheckpointError::TrailingData),
    }
    Ok(SeqModel {
        config,
        params,
        src_vocab: src_vocab.clone(),
        tgt_vocab: tgt_vocab.clone(),
    })
}
