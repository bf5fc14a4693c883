//! Independent proof validation. Shares no state with the search: it only
//! needs the matrix and a candidate tableau whose literals carry the global
//! substitution already applied.

use std::collections::HashMap;

use crate::fol::{Clause, Literal, Matrix, Term, VarId};

use super::{Closure, NodePath, ProofTree, TableauNode};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("start clause {0} is not in the matrix")]
    UnknownStartClause(String),
    #[error("node {path:?} cites clause {name}, which is not in the matrix")]
    UnknownClause { path: NodePath, name: String },
    #[error("start clause has {expected} literals but the tableau has {found} roots")]
    RootCountMismatch { expected: usize, found: usize },
    #[error("roots are not an instance of the start clause")]
    StartClauseMismatch,
    #[error("node {path:?} cites literal index {idx}, out of range for its clause")]
    BadLiteralIndex { path: NodePath, idx: usize },
    #[error("node {path:?} does not connect to its cited clause literal")]
    ConnectionMismatch { path: NodePath },
    #[error("children of node {path:?} are not the remaining literals of its clause instance")]
    ChildrenMismatch { path: NodePath },
    #[error("node {path:?} cites ancestor depth {depth}, which is not a strict ancestor")]
    BadAncestor { path: NodePath, depth: usize },
    #[error("node {path:?} is not the exact complement of its cited ancestor")]
    ReductionNotComplementary { path: NodePath },
    #[error("node {path:?} is open")]
    OpenNode { path: NodePath },
}

/// One-way matching: pattern variables bind to instance subterms, instance
/// variables are rigid. Bindings accumulate in `map`.
fn match_term(pattern: &Term, instance: &Term, map: &mut HashMap<VarId, Term>) -> bool {
    match (pattern, instance) {
        (Term::Var(v), inst) => match map.get(v) {
            Some(bound) => bound == inst,
            None => {
                map.insert(*v, inst.clone());
                true
            }
        },
        (Term::App(f, fa), Term::App(g, ga)) => {
            f == g && fa.len() == ga.len() && fa.iter().zip(ga).all(|(p, i)| match_term(p, i, map))
        }
        (Term::App(..), Term::Var(_)) => false,
    }
}

fn match_literal(
    pattern: &Literal,
    same_polarity: bool,
    instance: &Literal,
    map: &mut HashMap<VarId, Term>,
) -> bool {
    (pattern.positive == instance.positive) == same_polarity
        && match_term(&pattern.atom, &instance.atom, map)
}

/// Matches a whole clause instance: `connect` is the (literal index, node
/// literal) closed by the connection, `children` are the remaining literals.
fn match_clause_instance(
    clause: &Clause,
    connect: Option<(usize, &Literal)>,
    children: &[&Literal],
) -> Result<(), MatchFail> {
    let mut map = HashMap::new();
    if let Some((idx, lit)) = connect {
        // The connecting literal is the complement of the node literal.
        if !match_literal(&clause.literals[idx], false, lit, &mut map) {
            return Err(MatchFail::Connection);
        }
    }
    let skip = connect.map(|(idx, _)| idx);
    let mut child_iter = children.iter();
    for (j, pat) in clause.literals.iter().enumerate() {
        if Some(j) == skip {
            continue;
        }
        let inst = match child_iter.next() {
            Some(i) => i,
            None => return Err(MatchFail::Children),
        };
        if !match_literal(pat, true, inst, &mut map) {
            return Err(MatchFail::Children);
        }
    }
    if child_iter.next().is_some() {
        return Err(MatchFail::Children);
    }
    Ok(())
}

enum MatchFail {
    Connection,
    Children,
}

/// Accepts a tableau iff (a) the roots and every extension are instances of
/// their cited matrix clauses, (b) extension children are exactly the
/// remaining instance literals in order, (c) every reduction cites a strict
/// ancestor holding the exact complement, and (d) no node is open.
pub fn check_proof(matrix: &Matrix, proof: &ProofTree) -> Result<(), Violation> {
    let start = matrix
        .clause_by_name(&proof.start_clause)
        .ok_or_else(|| Violation::UnknownStartClause(proof.start_clause.clone()))?;
    if start.literals.len() != proof.roots.len() {
        return Err(Violation::RootCountMismatch {
            expected: start.literals.len(),
            found: proof.roots.len(),
        });
    }
    let root_lits: Vec<&Literal> = proof.roots.iter().map(|n| &n.literal).collect();
    if match_clause_instance(start, None, &root_lits).is_err() {
        return Err(Violation::StartClauseMismatch);
    }

    let mut branch: Vec<Literal> = Vec::new();
    for (i, root) in proof.roots.iter().enumerate() {
        check_node(matrix, root, &mut vec![i], &mut branch)?;
        debug_assert!(branch.is_empty());
    }
    Ok(())
}

fn check_node(
    matrix: &Matrix,
    node: &TableauNode,
    path: &mut NodePath,
    branch: &mut Vec<Literal>,
) -> Result<(), Violation> {
    match &node.closure {
        Closure::Open => {
            return Err(Violation::OpenNode { path: path.clone() });
        }
        Closure::Reduction { ancestor_depth } => {
            let d = *ancestor_depth;
            if d == 0 || d > branch.len() {
                return Err(Violation::BadAncestor {
                    path: path.clone(),
                    depth: d,
                });
            }
            let anc = &branch[d - 1];
            if anc.positive == node.literal.positive || anc.atom != node.literal.atom {
                return Err(Violation::ReductionNotComplementary { path: path.clone() });
            }
            if !node.children.is_empty() {
                return Err(Violation::ChildrenMismatch { path: path.clone() });
            }
        }
        Closure::Extension { clause, lit_idx } => {
            let c = matrix.clause_by_name(clause).ok_or_else(|| Violation::UnknownClause {
                path: path.clone(),
                name: clause.clone(),
            })?;
            if *lit_idx >= c.literals.len() {
                return Err(Violation::BadLiteralIndex {
                    path: path.clone(),
                    idx: *lit_idx,
                });
            }
            let children: Vec<&Literal> = node.children.iter().map(|n| &n.literal).collect();
            match match_clause_instance(c, Some((*lit_idx, &node.literal)), &children) {
                Ok(()) => {}
                Err(MatchFail::Connection) => {
                    return Err(Violation::ConnectionMismatch { path: path.clone() })
                }
                Err(MatchFail::Children) => {
                    return Err(Violation::ChildrenMismatch { path: path.clone() })
                }
            }
            branch.push(node.literal.clone());
            for (i, child) in node.children.iter().enumerate() {
                path.push(i);
                check_node(matrix, child, path, branch)?;
                path.pop();
            }
            branch.pop();
        }
    }
    Ok(())
}
