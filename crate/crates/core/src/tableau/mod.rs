//! Connection tableau search over a clause matrix.
//!
//! Proving is refutational: a closed tableau for the matrix witnesses
//! unsatisfiability. Search starts from each all-positive clause (falling
//! back to every clause when none exists), closes goals depth-first with
//! chronological backtracking, and deepens the path-length bound iteratively.

mod checker;
mod sat;
mod serialize;

pub use checker::{check_proof, Violation};
pub use sat::ground_satisfiable;
pub use serialize::{read_proof, write_proof, ProofFormatError};

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::fol::{
    rename_apart, unify, Literal, Matrix, OccursCheck, Substitution, SymbolTable, VarGen,
};

/// Position of a node: root index, then child indices down the tree.
pub type NodePath = Vec<usize>;

/// How a tableau node was closed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Closure {
    Open,
    /// Closed against the complementary literal at 1-based `ancestor_depth`
    /// on its own branch.
    Reduction { ancestor_depth: usize },
    /// Expanded with clause `clause`, connecting through the literal at
    /// `lit_idx` in that clause. The children are exactly the remaining
    /// literals of the instance, in source order.
    Extension { clause: String, lit_idx: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableauNode {
    pub literal: Literal,
    pub closure: Closure,
    pub children: Vec<TableauNode>,
}

impl TableauNode {
    fn visit<'a>(&'a self, path: &mut NodePath, f: &mut impl FnMut(&NodePath, &'a TableauNode)) {
        f(path, self);
        for (i, c) in self.children.iter().enumerate() {
            path.push(i);
            c.visit(path, f);
            path.pop();
        }
    }
}

/// A closed tableau with the global substitution already applied to every
/// node literal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTree {
    pub problem_id: String,
    pub start_clause: String,
    pub roots: Vec<TableauNode>,
}

impl ProofTree {
    /// Depth-first preorder walk, handing each node its path.
    pub fn visit<'a>(&'a self, mut f: impl FnMut(&NodePath, &'a TableauNode)) {
        let mut path = Vec::new();
        for (i, r) in self.roots.iter().enumerate() {
            path.push(i);
            r.visit(&mut path, &mut f);
            path.pop();
        }
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.visit(|_, _| n += 1);
        n
    }
}

#[derive(Clone, Debug)]
pub struct SearchLimits {
    /// Largest path-length bound the deepening schedule may reach.
    pub max_depth: usize,
    pub depth_start: usize,
    pub depth_step: usize,
    /// Cap on goal visits across the whole search.
    pub node_budget: u64,
    pub time_budget: Option<Duration>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_depth: 32,
            depth_start: 1,
            depth_step: 1,
            node_budget: u64::MAX,
            time_budget: None,
        }
    }
}

/// Ranks candidate extensions at a choice point. Higher scores are tried
/// first; candidates missing from the map keep their input-order position
/// at the back. Scorers are shared across search threads, hence `Sync`.
pub trait ClauseScorer: Sync {
    fn score(
        &self,
        path: &[Literal],
        symbols: &SymbolTable,
    ) -> Result<HashMap<String, f64>, ScorerError>;
}

#[derive(Debug, thiserror::Error)]
#[error("clause scorer failed: {0}")]
pub struct ScorerError(pub String);

#[derive(Clone, Copy, Default)]
pub enum ClauseOrdering<'a> {
    #[default]
    InputOrder,
    /// Deterministic shuffle at every choice point, seeded once per search.
    Random(u64),
    /// Descending model score; falls back to input order when scoring fails.
    ModelGuided(&'a dyn ClauseScorer),
}

#[derive(Clone, Debug)]
pub struct SearchOptions<'a> {
    pub limits: SearchLimits,
    pub ordering: ClauseOrdering<'a>,
    pub regularity: bool,
    pub occurs: OccursCheck,
}

impl Default for SearchOptions<'_> {
    fn default() -> Self {
        SearchOptions {
            limits: SearchLimits::default(),
            ordering: ClauseOrdering::InputOrder,
            regularity: true,
            occurs: OccursCheck::On,
        }
    }
}

impl std::fmt::Debug for ClauseOrdering<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClauseOrdering::InputOrder => write!(f, "InputOrder"),
            ClauseOrdering::Random(s) => write!(f, "Random({s})"),
            ClauseOrdering::ModelGuided(_) => write!(f, "ModelGuided"),
        }
    }
}

/// Why the search stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Proved,
    /// The space below the deepest bound tried was exhausted: no closed
    /// tableau exists at any depth.
    Saturated,
    /// Every round up to `max_depth` failed with the bound still biting.
    DepthExhausted,
    NodeBudgetExhausted,
    TimeBudgetExhausted,
}

#[derive(Clone, Debug, Default)]
pub struct SearchStats {
    pub rounds: u32,
    pub nodes_visited: u64,
    pub extensions_tried: u64,
    pub reductions_tried: u64,
    pub scorer_fallbacks: u64,
    pub proof_depth: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub proof: Option<ProofTree>,
    pub outcome: Outcome,
    pub stats: SearchStats,
}

/// One admissible extension step: clause instance renamed apart, unifier
/// extending the current substitution, and the sibling literals it opens.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub clause_idx: usize,
    pub clause_name: String,
    pub lit_idx: usize,
    pub sub: Substitution,
    pub remaining: Vec<Literal>,
}

/// Enumerates every (clause, literal) pair whose literal unifies with the
/// complement of `goal` under `sub`, in input order. `sub` is untouched;
/// each candidate carries its own extension of it.
pub fn candidate_extensions(
    goal: &Literal,
    matrix: &Matrix,
    sub: &Substitution,
    gen: &mut VarGen,
    occurs: OccursCheck,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (ci, clause) in matrix.clauses.iter().enumerate() {
        for (li, lit) in clause.literals.iter().enumerate() {
            if lit.positive == goal.positive {
                continue;
            }
            if lit.atom.head() != goal.atom.head() {
                continue;
            }
            let fresh = rename_apart(clause, gen);
            if let Some(extended) = unify(&goal.atom, &fresh.literals[li].atom, sub, occurs) {
                let remaining = fresh
                    .literals
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != li)
                    .map(|(_, l)| l.clone())
                    .collect();
                out.push(Candidate {
                    clause_idx: ci,
                    clause_name: clause.name.clone(),
                    lit_idx: li,
                    sub: extended,
                    remaining,
                });
            }
        }
    }
    out
}

/// Clauses eligible to start the tableau: the all-positive ones, or every
/// clause when no all-positive clause exists.
pub fn start_clause_indices(matrix: &Matrix) -> Vec<usize> {
    let positive: Vec<usize> = matrix
        .clauses
        .iter()
        .enumerate()
        .filter(|(_, c)| c.literals.iter().all(|l| l.positive))
        .map(|(i, _)| i)
        .collect();
    if positive.is_empty() {
        (0..matrix.clauses.len()).collect()
    } else {
        positive
    }
}

struct Search<'a> {
    matrix: &'a Matrix,
    opts: &'a SearchOptions<'a>,
    gen: VarGen,
    rng: Option<ChaCha20Rng>,
    stats: SearchStats,
    depth_cut: bool,
    stop: Option<Outcome>,
    started: Instant,
}

/// Node under construction; literals are resolved against the final
/// substitution only once the whole tableau closes.
struct DraftNode {
    literal: Literal,
    closure: Closure,
    children: Vec<DraftNode>,
}

impl<'a> Search<'a> {
    fn check_budgets(&mut self) -> bool {
        if self.stop.is_some() {
            return false;
        }
        if self.stats.nodes_visited >= self.opts.limits.node_budget {
            self.stop = Some(Outcome::NodeBudgetExhausted);
            return false;
        }
        if let Some(t) = self.opts.limits.time_budget {
            // Clock reads are amortized; determinism tests use node budgets.
            if self.stats.nodes_visited % 1024 == 0 && self.started.elapsed() > t {
                self.stop = Some(Outcome::TimeBudgetExhausted);
                return false;
            }
        }
        true
    }

    fn order_candidates(
        &mut self,
        candidates: &mut Vec<Candidate>,
        path: &[Literal],
        goal: &Literal,
        sub: &Substitution,
    ) {
        match self.opts.ordering {
            ClauseOrdering::InputOrder => {}
            ClauseOrdering::Random(_) => {
                if let Some(rng) = self.rng.as_mut() {
                    candidates.shuffle(rng);
                }
            }
            ClauseOrdering::ModelGuided(scorer) => {
                // Scored path runs root to goal inclusive, matching the
                // source side of extracted training examples.
                let resolved: Vec<Literal> = path
                    .iter()
                    .chain(std::iter::once(goal))
                    .map(|l| sub.resolve_literal(l))
                    .collect();
                match scorer.score(&resolved, &self.matrix.symbols) {
                    Ok(scores) => {
                        // Stable sort: unscored candidates keep input order
                        // behind every scored one.
                        candidates.sort_by(|a, b| {
                            let sa = scores.get(&a.clause_name).copied();
                            let sb = scores.get(&b.clause_name).copied();
                            match (sa, sb) {
                                (Some(x), Some(y)) => {
                                    y.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Equal)
                                }
                                (Some(_), None) => std::cmp::Ordering::Less,
                                (None, Some(_)) => std::cmp::Ordering::Greater,
                                (None, None) => std::cmp::Ordering::Equal,
                            }
                        });
                    }
                    Err(_) => self.stats.scorer_fallbacks += 1,
                }
            }
        }
    }

    /// Closes `goals` (siblings sharing `path`) and then hands the extended
    /// substitution to the continuation implied by the caller's recursion.
    fn solve_all(
        &mut self,
        goals: &[Literal],
        path: &mut Vec<Literal>,
        sub: Substitution,
        limit: usize,
    ) -> Option<(Substitution, Vec<DraftNode>)> {
        let (first, rest) = match goals.split_first() {
            None => return Some((sub, Vec::new())),
            Some(x) => x,
        };
        self.stats.nodes_visited += 1;
        if !self.check_budgets() {
            return None;
        }

        if self.opts.regularity {
            let g = sub.resolve_literal(first);
            if path.iter().any(|p| sub.resolve_literal(p) == g) {
                return None;
            }
        }

        // Reductions first, nearest ancestor first.
        for anc_idx in (0..path.len()).rev() {
            let anc = &path[anc_idx];
            if anc.positive == first.positive {
                continue;
            }
            if anc.atom.head() != first.atom.head() {
                continue;
            }
            if let Some(sub2) = unify(&first.atom, &anc.atom, &sub, self.opts.occurs) {
                self.stats.reductions_tried += 1;
                let node = DraftNode {
                    literal: first.clone(),
                    closure: Closure::Reduction {
                        ancestor_depth: anc_idx + 1,
                    },
                    children: Vec::new(),
                };
                if let Some((sub3, mut rest_nodes)) = self.solve_all(rest, path, sub2, limit) {
                    rest_nodes.insert(0, node);
                    return Some((sub3, rest_nodes));
                }
                if self.stop.is_some() {
                    return None;
                }
            }
        }

        // Extensions. New subgoals land at depth path.len() + 2; a unit
        // extension opens none and is admissible at any depth.
        let mut candidates =
            candidate_extensions(first, self.matrix, &sub, &mut self.gen, self.opts.occurs);
        self.order_candidates(&mut candidates, path, first, &sub);
        for cand in candidates {
            if !cand.remaining.is_empty() && path.len() + 2 > limit {
                self.depth_cut = true;
                continue;
            }
            self.stats.extensions_tried += 1;
            path.push(first.clone());
            let closed = self.solve_all(&cand.remaining, path, cand.sub, limit);
            path.pop();
            if let Some((sub2, children)) = closed {
                let node = DraftNode {
                    literal: first.clone(),
                    closure: Closure::Extension {
                        clause: cand.clause_name.clone(),
                        lit_idx: cand.lit_idx,
                    },
                    children,
                };
                if let Some((sub3, mut rest_nodes)) = self.solve_all(rest, path, sub2, limit) {
                    rest_nodes.insert(0, node);
                    return Some((sub3, rest_nodes));
                }
            }
            if self.stop.is_some() {
                return None;
            }
        }
        None
    }
}

fn finalize(node: DraftNode, sub: &Substitution) -> TableauNode {
    TableauNode {
        literal: sub.resolve_literal(&node.literal),
        closure: node.closure,
        children: node.children.into_iter().map(|c| finalize(c, sub)).collect(),
    }
}

/// Searches for a closed tableau. Deterministic for a fixed ordering and
/// limits; wall-clock budgets trade that determinism for a stop guarantee.
pub fn prove(matrix: &Matrix, problem_id: &str, opts: &SearchOptions) -> SearchResult {
    let started = Instant::now();
    let mut search = Search {
        matrix,
        opts,
        gen: matrix.var_gen(),
        rng: match opts.ordering {
            ClauseOrdering::Random(seed) => Some(ChaCha20Rng::seed_from_u64(seed)),
            _ => None,
        },
        stats: SearchStats::default(),
        depth_cut: false,
        stop: None,
        started,
    };
    let starts = start_clause_indices(matrix);

    let mut limit = opts.limits.depth_start.max(1);
    let mut outcome = Outcome::DepthExhausted;
    'rounds: while limit <= opts.limits.max_depth {
        search.stats.rounds += 1;
        search.depth_cut = false;
        for &si in &starts {
            let start = rename_apart(&matrix.clauses[si], &mut search.gen);
            let mut path = Vec::new();
            if let Some((sub, drafts)) =
                search.solve_all(&start.literals, &mut path, Substitution::new(), limit)
            {
                let roots: Vec<TableauNode> =
                    drafts.into_iter().map(|d| finalize(d, &sub)).collect();
                let mut depth = 0;
                let tree = ProofTree {
                    problem_id: problem_id.to_string(),
                    start_clause: matrix.clauses[si].name.clone(),
                    roots,
                };
                tree.visit(|p, _| depth = depth.max(p.len()));
                search.stats.proof_depth = depth;
                search.stats.elapsed = started.elapsed();
                return SearchResult {
                    proof: Some(tree),
                    outcome: Outcome::Proved,
                    stats: search.stats,
                };
            }
            if search.stop.is_some() {
                break 'rounds;
            }
        }
        if !search.depth_cut {
            // No branch was cut by the bound: deeper rounds cannot help.
            outcome = Outcome::Saturated;
            break;
        }
        limit += opts.limits.depth_step.max(1);
    }
    if let Some(stop) = search.stop {
        outcome = stop;
    }
    search.stats.elapsed = started.elapsed();
    SearchResult {
        proof: None,
        outcome,
        stats: search.stats,
    }
}

/// Extension steps of an accepted proof in depth-first preorder, as
/// (node path, clause name) pairs. Errors if the proof does not check.
pub fn record_expansions(
    matrix: &Matrix,
    proof: &ProofTree,
) -> Result<Vec<(NodePath, String)>, Violation> {
    check_proof(matrix, proof)?;
    let mut out = Vec::new();
    proof.visit(|path, node| {
        if let Closure::Extension { clause, .. } = &node.closure {
            out.push((path.clone(), clause.clone()));
        }
    });
    Ok(out)
}
