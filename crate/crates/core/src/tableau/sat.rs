//! Ground satisfiability oracle used to cross-check the prover: a matrix
//! without variables is refutable exactly when it is unsatisfiable.

use std::collections::HashMap;

use crate::fol::{Matrix, Term};

/// DPLL over ground clauses. Returns `None` when the matrix contains a
/// variable (the propositional oracle does not apply).
pub fn ground_satisfiable(matrix: &Matrix) -> Option<bool> {
    let mut atom_ids: HashMap<&Term, usize> = HashMap::new();
    let mut clauses: Vec<Vec<(usize, bool)>> = Vec::new();
    for clause in &matrix.clauses {
        let mut lits = Vec::with_capacity(clause.literals.len());
        for lit in &clause.literals {
            if !lit.atom.vars().is_empty() {
                return None;
            }
            let next = atom_ids.len();
            let id = *atom_ids.entry(&lit.atom).or_insert(next);
            lits.push((id, lit.positive));
        }
        clauses.push(lits);
    }
    let mut assign = vec![None; atom_ids.len()];
    Some(dpll(&clauses, &mut assign))
}

fn dpll(clauses: &[Vec<(usize, bool)>], assign: &mut Vec<Option<bool>>) -> bool {
    // Unit propagation to a fixpoint.
    let mut trail: Vec<usize> = Vec::new();
    loop {
        let mut unit: Option<(usize, bool)> = None;
        for clause in clauses {
            let mut satisfied = false;
            let mut unassigned = None;
            let mut open = 0;
            for &(atom, positive) in clause {
                match assign[atom] {
                    Some(v) if v == positive => {
                        satisfied = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        open += 1;
                        unassigned = Some((atom, positive));
                    }
                }
            }
            if satisfied {
                continue;
            }
            match open {
                0 => {
                    for &a in &trail {
                        assign[a] = None;
                    }
                    return false;
                }
                1 => {
                    unit = unassigned;
                    break;
                }
                _ => {}
            }
        }
        match unit {
            Some((atom, positive)) => {
                assign[atom] = Some(positive);
                trail.push(atom);
            }
            None => break,
        }
    }

    let branch = assign.iter().position(|v| v.is_none());
    let result = match branch {
        None => true,
        Some(atom) => [true, false].iter().any(|&v| {
            assign[atom] = Some(v);
            let ok = dpll(clauses, assign);
            assign[atom] = None;
            ok
        }),
    };
    if !result {
        for &a in &trail {
            assign[a] = None;
        }
    }
    result
}
