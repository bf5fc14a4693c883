//! Turns checked proofs into token-sequence training data: literal-path and
//! clause-path sources with one-to-three-step clause-choice targets, a
//! next-literal conjecturing corpus, vocabulary construction, proof-level
//! splitting, and aligned corpus files.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::fol::{
    normalize_literal, parse_literal_text, Literal, Matrix, SkolemDetector, SymbolTable, Term,
};
use crate::tableau::{check_proof, Closure, NodePath, ProofTree, TableauNode, Violation};
use crate::util::fnv1a64;

/// Which path representation feeds the encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SourceKind {
    Literals,
    Clauses,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Literals => "literals",
            SourceKind::Clauses => "clauses",
        }
    }

    pub fn parse(s: &str) -> Option<SourceKind> {
        match s {
            "literals" => Some(SourceKind::Literals),
            "clauses" => Some(SourceKind::Clauses),
            _ => None,
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One training pair with its provenance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathExample {
    pub kind: SourceKind,
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub problem_id: String,
    pub proof_id: String,
    pub node_path: NodePath,
    /// Number of literals (or clauses) in the source path.
    pub input_length: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("steps must be 1, 2, or 3, got {0}")]
    InvalidSteps(usize),
    #[error("proof rejected: {0}")]
    Unchecked(#[from] Violation),
}

/// Literal separator in multi-literal sources.
pub const SEP_TOKEN: &str = "#";

/// Tokens of one literal: symbol names plus `(`, `)`, `,`, `=`, `~`. A
/// negative equality reads `~ lhs = rhs`; there is no `!=` token.
pub fn tokenize_literal(l: &Literal, symbols: &SymbolTable) -> Vec<String> {
    let mut out = Vec::new();
    if !l.positive {
        out.push("~".to_string());
    }
    if let Term::App(s, args) = &l.atom {
        if *s == symbols.equality() && args.len() == 2 {
            tokenize_term(&args[0], symbols, &mut out);
            out.push("=".to_string());
            tokenize_term(&args[1], symbols, &mut out);
            return out;
        }
    }
    tokenize_term(&l.atom, symbols, &mut out);
    out
}

fn tokenize_term(t: &Term, symbols: &SymbolTable, out: &mut Vec<String>) {
    match t {
        Term::Var(v) => out.push(symbols.var_name(*v)),
        Term::App(s, args) => {
            out.push(symbols.name(*s).to_string());
            if !args.is_empty() {
                out.push("(".to_string());
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(",".to_string());
                    }
                    tokenize_term(a, symbols, out);
                }
                out.push(")".to_string());
            }
        }
    }
}

/// Parses a token stream back into a literal, interning into `symbols`.
/// `None` on malformation: unbalanced or misplaced punctuation, arity
/// inconsistency, or a free variable (normalized literals are ground).
pub fn detokenize(tokens: &[String], symbols: &mut SymbolTable) -> Option<Literal> {
    if tokens.is_empty() || tokens.iter().any(|t| t.contains(char::is_whitespace)) {
        return None;
    }
    let text = tokens.join(" ");
    let mut scratch = symbols.clone();
    let lit = parse_literal_text(&text, &mut scratch).ok()?;
    if !lit.atom.vars().is_empty() {
        return None;
    }
    *symbols = scratch;
    Some(lit)
}

/// Normalized tokens of the literals root→node, `#`-separated.
pub fn literal_path_tokens(
    path: &[Literal],
    symbols: &SymbolTable,
    det: &SkolemDetector,
) -> Vec<String> {
    let mut out = Vec::new();
    for (i, lit) in path.iter().enumerate() {
        if i > 0 {
            out.push(SEP_TOKEN.to_string());
        }
        out.extend(tokenize_literal(&normalize_literal(lit, symbols, det), symbols));
    }
    out
}

struct Extractor<'a> {
    symbols: &'a SymbolTable,
    det: &'a SkolemDetector,
    problem_id: &'a str,
    start_clause: &'a str,
}

impl Extractor<'_> {
    fn example(
        &self,
        kind: SourceKind,
        source: Vec<String>,
        target: Vec<String>,
        node_path: &NodePath,
        input_length: usize,
    ) -> PathExample {
        PathExample {
            kind,
            source,
            target,
            problem_id: self.problem_id.to_string(),
            proof_id: self.problem_id.to_string(),
            node_path: node_path.clone(),
            input_length,
        }
    }
}

fn expansion_clause(node: &TableauNode) -> Option<&str> {
    match &node.closure {
        Closure::Extension { clause, .. } => Some(clause),
        _ => None,
    }
}

/// Clause-choice chains of exactly `steps` consecutive extension-closed
/// nodes starting at `node`, one target per chain, depth-first order.
fn choice_chains(node: &TableauNode, steps: usize, prefix: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    let clause = match expansion_clause(node) {
        Some(c) => c,
        None => return,
    };
    prefix.push(clause.to_string());
    if steps == 1 {
        out.push(prefix.clone());
    } else {
        for child in &node.children {
            choice_chains(child, steps - 1, prefix, out);
        }
    }
    prefix.pop();
}

/// One example per non-root extension-closed node (and, for `steps` > 1, per
/// extension-closed descendant chain of that length), in preorder. Sources
/// are the normalized literal path root→node (kind `Literals`) or the start
/// clause followed by the expansion choices strictly above the node (kind
/// `Clauses`).
pub fn extract_clause_choice_examples(
    matrix: &Matrix,
    proof: &ProofTree,
    kind: SourceKind,
    steps: usize,
    det: &SkolemDetector,
) -> Result<Vec<PathExample>, ExtractError> {
    if !(1..=3).contains(&steps) {
        return Err(ExtractError::InvalidSteps(steps));
    }
    check_proof(matrix, proof)?;
    let ex = Extractor {
        symbols: &matrix.symbols,
        det,
        problem_id: &proof.problem_id,
        start_clause: &proof.start_clause,
    };

    let mut out = Vec::new();
    let mut lit_tokens: Vec<String> = Vec::new();
    let mut clause_path: Vec<String> = vec![ex.start_clause.to_string()];
    let mut node_path: NodePath = Vec::new();

    fn walk(
        node: &TableauNode,
        depth: usize,
        ex: &Extractor,
        kind: SourceKind,
        steps: usize,
        lit_tokens: &mut Vec<String>,
        clause_path: &mut Vec<String>,
        node_path: &mut NodePath,
        out: &mut Vec<PathExample>,
    ) {
        let lit_mark = lit_tokens.len();
        if depth > 1 {
            lit_tokens.push(SEP_TOKEN.to_string());
        }
        lit_tokens.extend(tokenize_literal(
            &normalize_literal(&node.literal, ex.symbols, ex.det),
            ex.symbols,
        ));

        if depth > 1 && expansion_clause(node).is_some() {
            let mut chains = Vec::new();
            choice_chains(node, steps, &mut Vec::new(), &mut chains);
            for target in chains {
                let source = match kind {
                    SourceKind::Literals => lit_tokens.clone(),
                    SourceKind::Clauses => clause_path.clone(),
                };
                out.push(ex.example(kind, source, target, node_path, depth));
            }
        }

        if let Some(clause) = expansion_clause(node) {
            clause_path.push(clause.to_string());
            for (i, child) in node.children.iter().enumerate() {
                node_path.push(i);
                walk(child, depth + 1, ex, kind, steps, lit_tokens, clause_path, node_path, out);
                node_path.pop();
            }
            clause_path.pop();
        }
        lit_tokens.truncate(lit_mark);
    }

    for (i, root) in proof.roots.iter().enumerate() {
        node_path.push(i);
        walk(root, 1, &ex, kind, steps, &mut lit_tokens, &mut clause_path, &mut node_path, &mut out);
        node_path.pop();
    }
    Ok(out)
}

/// One example per non-root node: source is the normalized literal path to
/// the parent, target the node's own normalized literal tokens.
pub fn extract_conjecturing_examples(
    matrix: &Matrix,
    proof: &ProofTree,
    det: &SkolemDetector,
) -> Result<Vec<PathExample>, ExtractError> {
    check_proof(matrix, proof)?;
    let ex = Extractor {
        symbols: &matrix.symbols,
        det,
        problem_id: &proof.problem_id,
        start_clause: &proof.start_clause,
    };

    let mut out = Vec::new();
    let mut lit_tokens: Vec<String> = Vec::new();
    let mut node_path: NodePath = Vec::new();

    fn walk(
        node: &TableauNode,
        depth: usize,
        ex: &Extractor,
        lit_tokens: &mut Vec<String>,
        node_path: &mut NodePath,
        out: &mut Vec<PathExample>,
    ) {
        let tokens = tokenize_literal(
            &normalize_literal(&node.literal, ex.symbols, ex.det),
            ex.symbols,
        );
        if depth > 1 {
            out.push(ex.example(
                SourceKind::Literals,
                lit_tokens.clone(),
                tokens.clone(),
                node_path,
                depth - 1,
            ));
        }
        let mark = lit_tokens.len();
        if depth > 1 {
            lit_tokens.push(SEP_TOKEN.to_string());
        }
        lit_tokens.extend(tokens);
        for (i, child) in node.children.iter().enumerate() {
            node_path.push(i);
            walk(child, depth + 1, ex, lit_tokens, node_path, out);
            node_path.pop();
        }
        lit_tokens.truncate(mark);
    }

    for (i, root) in proof.roots.iter().enumerate() {
        node_path.push(i);
        walk(root, 1, &ex, &mut lit_tokens, &mut node_path, &mut out);
        node_path.pop();
    }
    Ok(out)
}

/// Token table with seven reserved entries at fixed ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub const PAD: u32 = 0;
    pub const BOS: u32 = 1;
    pub const EOS: u32 = 2;
    pub const UNK: u32 = 3;
    pub const VAR: u32 = 4;
    pub const SKLM: u32 = 5;
    pub const SEP: u32 = 6;

    pub const RESERVED: [&'static str; 7] = ["<pad>", "<s>", "</s>", "<unk>", "VAR", "SKLM", "#"];

    pub fn new() -> Vocabulary {
        let tokens: Vec<String> = Self::RESERVED.iter().map(|s| s.to_string()).collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { tokens, index }
    }

    /// Extends the reserved table with unseen tokens in first-occurrence
    /// order. Build from the training split only.
    pub fn build<'a>(sequences: impl IntoIterator<Item = &'a [String]>) -> Vocabulary {
        let mut v = Vocabulary::new();
        for seq in sequences {
            for tok in seq {
                v.add(tok);
            }
        }
        v
    }

    pub fn add(&mut self, token: &str) -> u32 {
        match self.index.get(token) {
            Some(&id) => id,
            None => {
                let id = self.tokens.len() as u32;
                self.tokens.push(token.to_string());
                self.index.insert(token.to_string(), id);
                id
            }
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Id of `token`, or the unknown id.
    pub fn encode(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(Self::UNK)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn encode_sequence(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.encode(t)).collect()
    }

    pub fn decode_sequence(&self, ids: &[u32]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Order-sensitive content hash, for checkpoint compatibility checks.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf29ce484222325;
        for t in &self.tokens {
            h = fnv1a64(h, t.as_bytes());
            h = fnv1a64(h, &[0]);
        }
        h
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::new()
    }
}

/// Proof-level split: all examples of one proof land in one part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Train,
    Valid,
    Test,
}

impl CorpusSplit {
    pub fn part_of(&self, proof_id: &str) -> Option<Part> {
        let has = |v: &[String]| v.binary_search_by(|x| x.as_str().cmp(proof_id)).is_ok();
        if has(&self.train) {
            Some(Part::Train)
        } else if has(&self.valid) {
            Some(Part::Valid)
        } else if has(&self.test) {
            Some(Part::Test)
        } else {
            None
        }
    }
}

/// 0.6/0.1/0.3 by proof count: train gets floor(0.6n), valid floor(0.1n),
/// test the rest. Deterministic per seed; input order is irrelevant.
pub fn split_by_proofs(proof_ids: &[String], seed: u64) -> CorpusSplit {
    let mut ids: Vec<String> = proof_ids.to_vec();
    ids.sort();
    ids.dedup();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let n = ids.len();
    let n_train = n * 6 / 10;
    let n_valid = n / 10;
    let mut train: Vec<String> = ids[..n_train].to_vec();
    let mut valid: Vec<String> = ids[n_train..n_train + n_valid].to_vec();
    let mut test: Vec<String> = ids[n_train + n_valid..].to_vec();
    train.sort();
    valid.sort();
    test.sort();
    CorpusSplit {
        train,
        valid,
        test,
        seed,
    }
}

/// A uniform bag of examples: every element shares `kind` and `steps`
/// (`steps` 0 marks the conjecturing task).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    pub kind: SourceKind,
    pub steps: usize,
    pub examples: Vec<PathExample>,
}

#[derive(Clone, Debug)]
pub struct CorpusPaths {
    pub src: PathBuf,
    pub tgt: PathBuf,
    pub meta: PathBuf,
}

impl CorpusPaths {
    pub fn with_stem(dir: &Path, stem: &str) -> CorpusPaths {
        CorpusPaths {
            src: dir.join(format!("{stem}.src")),
            tgt: dir.join(format!("{stem}.tgt")),
            meta: dir.join(format!("{stem}.meta")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: line {line}: {msg}")]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("aligned corpus files disagree: {src} has {src_lines} lines, {other} has {other_lines}")]
    LineMismatch {
        src: PathBuf,
        src_lines: usize,
        other: PathBuf,
        other_lines: usize,
    },
    #[error("token {0:?} cannot be written to a space-separated corpus")]
    BadToken(String),
    #[error("example kind/steps disagree with the corpus header")]
    MixedCorpus,
}

fn check_tokens(tokens: &[String]) -> Result<(), CorpusError> {
    for t in tokens {
        if t.is_empty() || t.contains(char::is_whitespace) {
            return Err(CorpusError::BadToken(t.clone()));
        }
    }
    Ok(())
}

/// Writes the three aligned corpus files: `.src` and `.tgt` hold one
/// space-joined token sequence per line, `.meta` a `v1` header plus
/// per-example provenance.
pub fn write_corpus(corpus: &Corpus, paths: &CorpusPaths) -> Result<(), CorpusError> {
    let mut src = std::io::BufWriter::new(std::fs::File::create(&paths.src)?);
    let mut tgt = std::io::BufWriter::new(std::fs::File::create(&paths.tgt)?);
    let mut meta = std::io::BufWriter::new(std::fs::File::create(&paths.meta)?);
    writeln!(meta, "v1 kind={} steps={}", corpus.kind.as_str(), corpus.steps)?;
    for e in &corpus.examples {
        if e.kind != corpus.kind {
            return Err(CorpusError::MixedCorpus);
        }
        check_tokens(&e.source)?;
        check_tokens(&e.target)?;
        writeln!(src, "{}", e.source.join(" "))?;
        writeln!(tgt, "{}", e.target.join(" "))?;
        let path: Vec<String> = e.node_path.iter().map(|i| i.to_string()).collect();
        writeln!(
            meta,
            "{} {} {} {}",
            e.problem_id,
            e.proof_id,
            e.input_length,
            path.join(",")
        )?;
    }
    src.flush()?;
    tgt.flush()?;
    meta.flush()?;
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        out.push(line?);
    }
    Ok(out)
}

pub fn read_corpus(paths: &CorpusPaths) -> Result<Corpus, CorpusError> {
    let src_lines = read_lines(&paths.src)?;
    let tgt_lines = read_lines(&paths.tgt)?;
    let meta_lines = read_lines(&paths.meta)?;

    let malformed = |path: &PathBuf, line: usize, msg: &str| CorpusError::Malformed {
        path: path.clone(),
        line,
        msg: msg.to_string(),
    };

    let header = meta_lines
        .first()
        .ok_or_else(|| malformed(&paths.meta, 1, "missing header"))?;
    let mut kind = None;
    let mut steps = None;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("v1") {
        return Err(malformed(&paths.meta, 1, "unsupported corpus version"));
    }
    for p in parts {
        match p.split_once('=') {
            Some(("kind", v)) => kind = SourceKind::parse(v),
            Some(("steps", v)) => steps = v.parse::<usize>().ok(),
            _ => return Err(malformed(&paths.meta, 1, "bad header field")),
        }
    }
    let kind = kind.ok_or_else(|| malformed(&paths.meta, 1, "missing or bad kind"))?;
    let steps = steps.ok_or_else(|| malformed(&paths.meta, 1, "missing or bad steps"))?;

    if src_lines.len() != tgt_lines.len() {
        return Err(CorpusError::LineMismatch {
            src: paths.src.clone(),
            src_lines: src_lines.len(),
            other: paths.tgt.clone(),
            other_lines: tgt_lines.len(),
        });
    }
    if meta_lines.len() != src_lines.len() + 1 {
        return Err(CorpusError::LineMismatch {
            src: paths.src.clone(),
            src_lines: src_lines.len(),
            other: paths.meta.clone(),
            other_lines: meta_lines.len().saturating_sub(1),
        });
    }

    let mut examples = Vec::with_capacity(src_lines.len());
    for (i, ((s, t), m)) in src_lines
        .iter()
        .zip(&tgt_lines)
        .zip(&meta_lines[1..])
        .enumerate()
    {
        let fields: Vec<&str> = m.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(malformed(&paths.meta, i + 2, "expected 4 fields"));
        }
        let input_length: usize = fields[2]
            .parse()
            .map_err(|_| malformed(&paths.meta, i + 2, "bad input length"))?;
        let node_path: NodePath = fields[3]
            .split(',')
            .map(|x| x.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| malformed(&paths.meta, i + 2, "bad node path"))?;
        examples.push(PathExample {
            kind,
            source: s.split_whitespace().map(str::to_string).collect(),
            target: t.split_whitespace().map(str::to_string).collect(),
            problem_id: fields[0].to_string(),
            proof_id: fields[1].to_string(),
            node_path,
            input_length,
        });
    }
    Ok(Corpus {
        kind,
        steps,
        examples,
    })
}
