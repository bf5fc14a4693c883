//! Bundled problems: the worked six-clause example and a deterministic
//! generator of small unsatisfiable Horn-style matrices so the whole pipeline
//! runs without external data.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::fol::Matrix;
use crate::tableau::ground_satisfiable;

/// Six-clause worked example. Statement order puts c6 before c5 so that
/// input-order search closes the r(a,b) branch with c6 and reproduces the
/// intended tableau (natural order would find the symmetric c5-first variant).
pub const FIG1_TPTP: &str = "\
cnf(c1, axiom, p(X)).
cnf(c2, axiom, (r(X,Y) | ~p(X) | q(Y))).
cnf(c3, axiom, (s(X) | ~q(b))).
cnf(c4, axiom, (~s(X) | ~q(X))).
cnf(c6, axiom, (~r(a,X) | q(X))).
cnf(c5, axiom, (~q(X) | ~r(a,X))).
";

pub fn fig1_matrix() -> Matrix {
    crate::fol::parse_tptp_cnf(FIG1_TPTP).expect("bundled problem parses")
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Unsatisfiable problems to emit.
    pub problems: usize,
    /// Satisfiable problems appended after the unsatisfiable ones.
    pub satisfiable: usize,
    pub seed: u64,
    /// Goal derivation height range (tableau depth is height + 1).
    pub min_goal_height: usize,
    pub max_goal_height: usize,
    /// Irrelevant clauses mixed into each problem.
    pub distractors: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            problems: 100,
            satisfiable: 0,
            seed: 7,
            min_goal_height: 4,
            max_goal_height: 7,
            distractors: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedProblem {
    pub id: String,
    pub source: String,
    pub satisfiable: bool,
}

/// One ground atom of the shared pool, with its rendered form and the
/// flattened name used to derive clause ids.
#[derive(Debug, Clone)]
struct Atom {
    text: String,
    flat: String,
}

#[derive(Debug, Clone)]
struct Pool {
    atoms: Vec<Atom>,
    /// Derivation bodies per atom index: one or two alternatives, empty for
    /// layer-0 atoms (facts).
    rules: Vec<Vec<Vec<usize>>>,
    layers: Vec<Vec<usize>>,
}

const LAYER0_SIZE: usize = 12;
const LAYER_SIZE: usize = 6;
const MAX_LAYER: usize = 8;

fn sample_atom(rng: &mut ChaCha20Rng) -> Atom {
    let consts = ["c0", "c1", "c2", "c3", "c4", "c5", "c6", "c7"];
    let skolems = ["esk1_0", "esk2_0", "esk3_0"];
    let pick_const = |rng: &mut ChaCha20Rng| -> &'static str {
        if rng.gen_bool(0.2) {
            skolems[rng.gen_range(0..skolems.len())]
        } else {
            consts[rng.gen_range(0..consts.len())]
        }
    };
    let arity = *[0usize, 1, 1, 2].choose(rng).unwrap();
    match arity {
        0 => {
            let name = format!("u{}", rng.gen_range(0..4));
            Atom {
                flat: name.clone(),
                text: name,
            }
        }
        1 => {
            let p = format!("p{}", rng.gen_range(0..6));
            let a = pick_const(rng);
            Atom {
                text: format!("{p}({a})"),
                flat: format!("{p}_{a}"),
            }
        }
        _ => {
            let p = format!("t{}", rng.gen_range(0..4));
            let a = pick_const(rng);
            let b = pick_const(rng);
            Atom {
                text: format!("{p}({a},{b})"),
                flat: format!("{p}_{a}_{b}"),
            }
        }
    }
}

fn build_pool(rng: &mut ChaCha20Rng) -> Pool {
    let mut atoms: Vec<Atom> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut layers: Vec<Vec<usize>> = vec![Vec::new(); MAX_LAYER + 1];
    for layer in 0..=MAX_LAYER {
        let want = if layer == 0 { LAYER0_SIZE } else { LAYER_SIZE };
        while layers[layer].len() < want {
            let atom = sample_atom(rng);
            if seen.insert(atom.text.clone()) {
                layers[layer].push(atoms.len());
                atoms.push(atom);
            }
        }
    }

    // Every atom above layer 0 is derivable, with height exactly its layer:
    // each body contains one atom from the layer directly below.
    let mut rules: Vec<Vec<Vec<usize>>> = vec![Vec::new(); atoms.len()];
    let lower_pick = |rng: &mut ChaCha20Rng, layers: &[Vec<usize>], below: usize| -> usize {
        let layer = rng.gen_range(0..below);
        layers[layer][rng.gen_range(0..layers[layer].len())]
    };
    for layer in 1..=MAX_LAYER {
        for &idx in &layers[layer] {
            let mut alts = Vec::new();
            let n_alts = if rng.gen_bool(0.3) { 2 } else { 1 };
            for _ in 0..n_alts {
                let size = match rng.gen_range(0..100) {
                    0..=49 => 1,
                    50..=84 => 2,
                    _ => 3,
                };
                let mut body = vec![layers[layer - 1][rng.gen_range(0..layers[layer - 1].len())]];
                while body.len() < size {
                    let extra = lower_pick(rng, &layers, layer);
                    if !body.contains(&extra) {
                        body.push(extra);
                    }
                }
                if !alts.contains(&body) {
                    alts.push(body);
                }
            }
            rules[idx] = alts;
        }
    }
    Pool {
        atoms,
        rules,
        layers,
    }
}

/// Downward closure of the goal following every rule alternative.
fn closure(pool: &Pool, goal: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut queue = vec![goal];
    seen.insert(goal);
    while let Some(idx) = queue.pop() {
        out.push(idx);
        for body in &pool.rules[idx] {
            for &b in body {
                if seen.insert(b) {
                    queue.push(b);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// True when the goal is reachable from the kept facts along the included
/// rules; the dual clause set is unsatisfiable exactly in that case.
fn goal_derivable(pool: &Pool, reached: &[usize], dropped: &[usize], goal: usize) -> bool {
    let mut derivable: Vec<bool> = vec![false; pool.atoms.len()];
    for &i in reached {
        if pool.rules[i].is_empty() && !dropped.contains(&i) {
            derivable[i] = true;
        }
    }
    loop {
        let mut changed = false;
        for &a in reached {
            if derivable[a] || pool.rules[a].is_empty() {
                continue;
            }
            if pool.rules[a].iter().any(|body| body.iter().all(|&b| derivable[b])) {
                derivable[a] = true;
                changed = true;
            }
        }
        if !changed {
            return derivable[goal];
        }
    }
}

fn render_problem(
    pool: &Pool,
    goal: usize,
    reached: &[usize],
    dropped: &[usize],
    distractors: &[usize],
    rng: &mut ChaCha20Rng,
) -> String {
    let atom = |i: usize| -> &str { &pool.atoms[i].text };
    let flat = |i: usize| -> &str { &pool.atoms[i].flat };

    let mut clauses: Vec<String> = Vec::new();
    let push_for = |idx: usize, clauses: &mut Vec<String>| {
        if pool.rules[idx].is_empty() {
            if !dropped.contains(&idx) {
                clauses.push(format!("cnf(f_{}, axiom, ~{}).", flat(idx), atom(idx)));
            }
        } else {
            for (alt, body) in pool.rules[idx].iter().enumerate() {
                let name = if alt == 0 {
                    format!("r_{}", flat(idx))
                } else {
                    format!("r{}_{}", alt + 1, flat(idx))
                };
                let mut lits = vec![format!("~{}", atom(idx))];
                lits.extend(body.iter().map(|&b| atom(b).to_string()));
                clauses.push(format!("cnf({name}, axiom, ({})).", lits.join(" | ")));
            }
        }
    };
    for &idx in reached {
        push_for(idx, &mut clauses);
    }
    for &idx in distractors {
        push_for(idx, &mut clauses);
    }
    clauses.shuffle(rng);

    let mut out = format!("cnf(g_{}, axiom, {}).\n", flat(goal), atom(goal));
    for c in &clauses {
        out.push_str(c);
        out.push('\n');
    }
    out
}

pub fn generate_problems(cfg: &GenConfig) -> Vec<GeneratedProblem> {
    assert!(cfg.min_goal_height >= 1 && cfg.max_goal_height <= MAX_LAYER);
    assert!(cfg.min_goal_height <= cfg.max_goal_height);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let pool = build_pool(&mut rng);

    let mut out = Vec::new();
    let total = cfg.problems + cfg.satisfiable;
    for n in 0..total {
        let want_sat = n >= cfg.problems;
        let layer = rng.gen_range(cfg.min_goal_height..=cfg.max_goal_height);
        let goal = pool.layers[layer][rng.gen_range(0..pool.layers[layer].len())];
        let reached = closure(&pool, goal);

        // Satisfiable variant: drop facts until the goal stops being
        // derivable (rule alternatives can route around a single drop).
        let mut dropped: Vec<usize> = Vec::new();
        if want_sat {
            let mut facts: Vec<usize> = reached
                .iter()
                .copied()
                .filter(|&i| pool.rules[i].is_empty())
                .collect();
            facts.shuffle(&mut rng);
            for f in facts {
                dropped.push(f);
                if !goal_derivable(&pool, &reached, &dropped, goal) {
                    break;
                }
            }
        }

        let mut distractors = Vec::new();
        while distractors.len() < cfg.distractors {
            let idx = rng.gen_range(0..pool.atoms.len());
            if !reached.contains(&idx) && !distractors.contains(&idx) {
                distractors.push(idx);
            }
        }

        let source = render_problem(&pool, goal, &reached, &dropped, &distractors, &mut rng);
        let matrix = crate::fol::parse_tptp_cnf(&source).expect("generated problem parses");
        let sat = ground_satisfiable(&matrix).expect("generated problems are ground");
        assert_eq!(sat, want_sat, "generator produced wrong satisfiability");
        out.push(GeneratedProblem {
            id: format!("gen_{n:04}"),
            source,
            satisfiable: sat,
        });
    }
    out
}
