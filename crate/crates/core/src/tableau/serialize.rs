//! Line-oriented proof files.
//!
//! ```text
//! v1
//! proof <problem-id> <start-clause-id>
//! <depth> <literal> [ext <clause-id> <lit-idx> | red <ancestor-depth>]
//! ```
//!
//! Nodes appear in depth-first preorder with 1-based branch depths; literals
//! are written in a compact spaceless form so lines split on whitespace.

use std::collections::HashMap;

use crate::fol::{parse_literal_in_scope, Literal, SymbolTable, Term, VarId};

use super::{Closure, ProofTree, TableauNode};

#[derive(Debug, thiserror::Error)]
#[error("proof line {line}: {msg}")]
pub struct ProofFormatError {
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> ProofFormatError {
    ProofFormatError {
        line,
        msg: msg.into(),
    }
}

fn compact_term(t: &Term, symbols: &SymbolTable, out: &mut String) {
    match t {
        Term::Var(v) => out.push_str(&symbols.var_name(*v)),
        Term::App(s, args) => {
            out.push_str(symbols.name(*s));
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    compact_term(a, symbols, out);
                }
                out.push(')');
            }
        }
    }
}

fn compact_literal(l: &Literal, symbols: &SymbolTable) -> String {
    let mut out = String::new();
    if let Term::App(s, args) = &l.atom {
        if *s == symbols.equality() && args.len() == 2 {
            compact_term(&args[0], symbols, &mut out);
            out.push_str(if l.positive { "=" } else { "!=" });
            compact_term(&args[1], symbols, &mut out);
            return out;
        }
    }
    if !l.positive {
        out.push('~');
    }
    compact_term(&l.atom, symbols, &mut out);
    out
}

pub fn write_proof(proof: &ProofTree, symbols: &SymbolTable) -> Result<String, ProofFormatError> {
    let mut out = format!("v1\nproof {} {}\n", proof.problem_id, proof.start_clause);
    let mut bad: Option<String> = None;
    proof.visit(|path, node| {
        let lit = compact_literal(&node.literal, symbols);
        if lit.contains(char::is_whitespace) && bad.is_none() {
            bad = Some(lit.clone());
        }
        out.push_str(&format!("{} {}", path.len(), lit));
        match &node.closure {
            Closure::Open => {}
            Closure::Reduction { ancestor_depth } => {
                out.push_str(&format!(" red {ancestor_depth}"));
            }
            Closure::Extension { clause, lit_idx } => {
                out.push_str(&format!(" ext {clause} {lit_idx}"));
            }
        }
        out.push('\n');
    });
    if let Some(lit) = bad {
        return Err(err(0, format!("literal '{lit}' contains whitespace and cannot be serialized")));
    }
    Ok(out)
}

/// Reads a proof, interning literal symbols into `symbols` (callers pass a
/// clone of the matrix table so shared names keep their ids).
pub fn read_proof(src: &str, symbols: &mut SymbolTable) -> Result<ProofTree, ProofFormatError> {
    let mut lines = src.lines().enumerate();
    let (_, version) = lines.next().ok_or_else(|| err(1, "empty proof file"))?;
    if version.trim() != "v1" {
        return Err(err(1, format!("unsupported proof format '{}'", version.trim())));
    }
    let (_, header) = lines.next().ok_or_else(|| err(2, "missing proof header"))?;
    let mut hp = header.split_whitespace();
    if hp.next() != Some("proof") {
        return Err(err(2, "header must start with 'proof'"));
    }
    let problem_id = hp.next().ok_or_else(|| err(2, "missing problem id"))?.to_string();
    let start_clause = hp.next().ok_or_else(|| err(2, "missing start clause id"))?.to_string();
    if hp.next().is_some() {
        return Err(err(2, "trailing tokens in header"));
    }

    let mut roots: Vec<TableauNode> = Vec::new();
    // Stack of (branch depth, node under construction).
    let mut stack: Vec<(usize, TableauNode)> = Vec::new();
    // One scope for the whole file: proofs share free variables across nodes.
    let mut scope: HashMap<String, VarId> = HashMap::new();

    fn pop_to(target: usize, stack: &mut Vec<(usize, TableauNode)>, roots: &mut Vec<TableauNode>) {
        while let Some(&(d, _)) = stack.last() {
            if d <= target {
                break;
            }
            let (_, done) = stack.pop().unwrap();
            match stack.last_mut() {
                Some((_, parent)) => parent.children.push(done),
                None => roots.push(done),
            }
        }
    }

    for (idx, raw) in lines {
        let lineno = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut parts = raw.split_whitespace();
        let depth: usize = parts
            .next()
            .unwrap()
            .parse()
            .map_err(|_| err(lineno, "node line must start with a depth"))?;
        if depth == 0 {
            return Err(err(lineno, "depths are 1-based"));
        }
        let lit_text = parts.next().ok_or_else(|| err(lineno, "missing literal"))?;
        let literal = parse_literal_in_scope(lit_text, symbols, &mut scope)
            .map_err(|e| err(lineno, format!("bad literal: {e}")))?;
        let closure = match parts.next() {
            None => Closure::Open,
            Some("red") => {
                let d: usize = parts
                    .next()
                    .ok_or_else(|| err(lineno, "red needs an ancestor depth"))?
                    .parse()
                    .map_err(|_| err(lineno, "bad ancestor depth"))?;
                Closure::Reduction { ancestor_depth: d }
            }
            Some("ext") => {
                let clause = parts
                    .next()
                    .ok_or_else(|| err(lineno, "ext needs a clause id"))?
                    .to_string();
                let lit_idx: usize = parts
                    .next()
                    .ok_or_else(|| err(lineno, "ext needs a literal index"))?
                    .parse()
                    .map_err(|_| err(lineno, "bad literal index"))?;
                Closure::Extension { clause, lit_idx }
            }
            Some(other) => return Err(err(lineno, format!("unknown closure '{other}'"))),
        };
        if parts.next().is_some() {
            return Err(err(lineno, "trailing tokens on node line"));
        }

        let max_ok = stack.last().map(|&(d, _)| d + 1).unwrap_or(1);
        if depth > max_ok {
            return Err(err(lineno, format!("depth {depth} skips levels (max here is {max_ok})")));
        }
        pop_to(depth - 1, &mut stack, &mut roots);
        stack.push((
            depth,
            TableauNode {
                literal,
                closure,
                children: Vec::new(),
            },
        ));
    }
    pop_to(0, &mut stack, &mut roots);
    if roots.is_empty() {
        return Err(err(0, "proof has no nodes"));
    }
    Ok(ProofTree {
        problem_id,
        start_clause,
        roots,
    })
}
