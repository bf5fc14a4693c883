//! First-order terms, literals, and clause matrices with interned symbols.

mod parser;
mod printer;

pub use parser::{
    parse_clause_body, parse_literal_in_scope, parse_literal_text, parse_tptp_cnf, ParseError,
};
pub use printer::{DisplayClause, DisplayLiteral, DisplayTerm};

use std::collections::HashMap;

/// Interned functor / predicate name. Constants are zero-arity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolId(pub u32);

/// Variable identity. Scoped per clause at parse time; search instances get
/// fresh ids from a [`VarGen`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(VarId),
    App(SymbolId, Vec<Term>),
}

impl Term {
    pub fn constant(s: SymbolId) -> Term {
        Term::App(s, Vec::new())
    }

    pub fn head(&self) -> Option<SymbolId> {
        match self {
            Term::Var(_) => None,
            Term::App(s, _) => Some(*s),
        }
    }

    /// Collects variables in left-to-right occurrence order, deduplicated.
    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Term::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }
}

/// Signed atom. The atom is always an application, never a bare variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: Term,
}

impl Literal {
    pub fn new(positive: bool, atom: Term) -> Literal {
        debug_assert!(matches!(atom, Term::App(..)));
        Literal { positive, atom }
    }

    pub fn complement(&self) -> Literal {
        Literal {
            positive: !self.positive,
            atom: self.atom.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub name: String,
    pub literals: Vec<Literal>,
}

/// Interner for functor names plus display names for parsed variables.
///
/// `=`, `VAR`, and `SKLM` are always present so normalization and equality
/// handling never need mutable access.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    names: Vec<String>,
    arities: Vec<u32>,
    index: HashMap<String, SymbolId>,
    var_names: Vec<String>,
    eq: SymbolId,
    var_marker: SymbolId,
    sklm_marker: SymbolId,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("symbol {name} used with arity {new} but previously with arity {old}")]
pub struct ArityClash {
    pub name: String,
    pub old: u32,
    pub new: u32,
}

impl SymbolTable {
    pub fn new() -> SymbolTable {
        let mut t = SymbolTable {
            names: Vec::new(),
            arities: Vec::new(),
            index: HashMap::new(),
            var_names: Vec::new(),
            eq: SymbolId(0),
            var_marker: SymbolId(0),
            sklm_marker: SymbolId(0),
        };
        t.eq = t.intern("=", 2).unwrap();
        t.var_marker = t.intern("VAR", 0).unwrap();
        t.sklm_marker = t.intern("SKLM", 0).unwrap();
        t
    }

    pub fn intern(&mut self, name: &str, arity: u32) -> Result<SymbolId, ArityClash> {
        if let Some(&id) = self.index.get(name) {
            let old = self.arities[id.0 as usize];
            if old != arity {
                return Err(ArityClash {
                    name: name.to_string(),
                    old,
                    new: arity,
                });
            }
            return Ok(id);
        }
        let id = SymbolId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.arities.push(arity);
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, s: SymbolId) -> &str {
        &self.names[s.0 as usize]
    }

    pub fn arity(&self, s: SymbolId) -> u32 {
        self.arities[s.0 as usize]
    }

    pub fn equality(&self) -> SymbolId {
        self.eq
    }

    pub fn var_marker(&self) -> SymbolId {
        self.var_marker
    }

    pub fn sklm_marker(&self) -> SymbolId {
        self.sklm_marker
    }

    /// Registers a parsed variable's display name and returns its id.
    pub fn fresh_named_var(&mut self, name: &str) -> VarId {
        let id = VarId(self.var_names.len() as u32);
        self.var_names.push(name.to_string());
        id
    }

    pub fn var_count(&self) -> u32 {
        self.var_names.len() as u32
    }

    /// Display name for a variable; generated ids fall back to `X<id>`.
    pub fn var_name(&self, v: VarId) -> String {
        match self.var_names.get(v.0 as usize) {
            Some(n) => n.clone(),
            None => format!("X{}", v.0),
        }
    }
}

impl Default for SymbolTable {
    fn default() -> Self {
        SymbolTable::new()
    }
}

/// Immutable clause set with its symbol table. Clause names are unique.
#[derive(Clone, Debug)]
pub struct Matrix {
    pub clauses: Vec<Clause>,
    pub symbols: SymbolTable,
    by_name: HashMap<String, usize>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("duplicate clause name {0}")]
pub struct DuplicateClause(pub String);

impl Matrix {
    pub fn build(symbols: SymbolTable, clauses: Vec<Clause>) -> Result<Matrix, DuplicateClause> {
        let mut by_name = HashMap::new();
        for (i, c) in clauses.iter().enumerate() {
            if by_name.insert(c.name.clone(), i).is_some() {
                return Err(DuplicateClause(c.name.clone()));
            }
        }
        Ok(Matrix {
            clauses,
            symbols,
            by_name,
        })
    }

    pub fn clause_by_name(&self, name: &str) -> Option<&Clause> {
        self.by_name.get(name).map(|&i| &self.clauses[i])
    }

    /// Fresh-variable source guaranteed disjoint from every parsed variable.
    pub fn var_gen(&self) -> VarGen {
        VarGen {
            next: self.symbols.var_count(),
        }
    }

    pub fn total_literals(&self) -> usize {
        self.clauses.iter().map(|c| c.literals.len()).sum()
    }
}

#[derive(Clone, Debug)]
pub struct VarGen {
    next: u32,
}

impl VarGen {
    pub fn new(start: u32) -> VarGen {
        VarGen { next: start }
    }

    pub fn fresh(&mut self) -> VarId {
        let v = VarId(self.next);
        self.next += 1;
        v
    }
}

/// Variable bindings produced by unification.
///
/// Bindings form an acyclic store when the occurs check is on; [`resolve`]
/// expands chains fully, so applying a substitution twice equals applying it
/// once. A cycle (possible only with the occurs check disabled) is cut by
/// leaving the revisited variable in place rather than looping.
///
/// [`resolve`]: Substitution::resolve
#[derive(Clone, Debug, Default)]
pub struct Substitution {
    bindings: HashMap<VarId, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn get(&self, v: VarId) -> Option<&Term> {
        self.bindings.get(&v)
    }

    fn bind(&mut self, v: VarId, t: Term) {
        debug_assert!(!matches!(&t, Term::Var(w) if *w == v));
        self.bindings.insert(v, t);
    }

    /// Dereferences top-level variable chains without descending into
    /// arguments.
    pub fn walk<'a>(&'a self, t: &'a Term) -> &'a Term {
        let mut cur = t;
        while let Term::Var(v) = cur {
            match self.bindings.get(v) {
                Some(next) => cur = next,
                None => break,
            }
        }
        cur
    }

    /// Applies the substitution exhaustively.
    pub fn resolve(&self, t: &Term) -> Term {
        let mut on_stack = Vec::new();
        self.resolve_guarded(t, &mut on_stack)
    }

    fn resolve_guarded(&self, t: &Term, on_stack: &mut Vec<VarId>) -> Term {
        match t {
            Term::Var(v) => match self.bindings.get(v) {
                Some(b) if !on_stack.contains(v) => {
                    on_stack.push(*v);
                    let r = self.resolve_guarded(b, on_stack);
                    on_stack.pop();
                    r
                }
                _ => Term::Var(*v),
            },
            Term::App(f, args) => Term::App(
                *f,
                args.iter()
                    .map(|a| self.resolve_guarded(a, on_stack))
                    .collect(),
            ),
        }
    }

    pub fn resolve_literal(&self, l: &Literal) -> Literal {
        Literal {
            positive: l.positive,
            atom: self.resolve(&l.atom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OccursCheck {
    On,
    Off,
}

/// Most general unifier of `a` and `b` extending `start`, or `None`.
///
/// `start` is never mutated, so a failed attempt costs nothing to back out of.
/// With [`OccursCheck::Off`] the result can bind a variable to a term
/// containing it, which is unsound for proving.
pub fn unify(a: &Term, b: &Term, start: &Substitution, occurs: OccursCheck) -> Option<Substitution> {
    let mut sub = start.clone();
    if unify_into(a, b, &mut sub, occurs) {
        Some(sub)
    } else {
        None
    }
}

fn unify_into(a: &Term, b: &Term, sub: &mut Substitution, occurs: OccursCheck) -> bool {
    let a = sub.walk(a).clone();
    let b = sub.walk(b).clone();
    match (a, b) {
        (Term::Var(x), Term::Var(y)) if x == y => true,
        (Term::Var(x), t) | (t, Term::Var(x)) => {
            if occurs == OccursCheck::On && occurs_in(x, &t, sub) {
                return false;
            }
            sub.bind(x, t);
            true
        }
        (Term::App(f, fa), Term::App(g, ga)) => {
            if f != g || fa.len() != ga.len() {
                return false;
            }
            fa.iter().zip(&ga).all(|(x, y)| unify_into(x, y, sub, occurs))
        }
    }
}

fn occurs_in(v: VarId, t: &Term, sub: &Substitution) -> bool {
    match sub.walk(t) {
        Term::Var(w) => *w == v,
        Term::App(_, args) => args.iter().any(|a| occurs_in(v, a, sub)),
    }
}

/// Copies a clause with every variable replaced by a fresh one, consistently.
pub fn rename_apart(clause: &Clause, gen: &mut VarGen) -> Clause {
    let mut map: HashMap<VarId, VarId> = HashMap::new();
    let literals = clause
        .literals
        .iter()
        .map(|l| Literal {
            positive: l.positive,
            atom: rename_term(&l.atom, &mut map, gen),
        })
        .collect();
    Clause {
        name: clause.name.clone(),
        literals,
    }
}

fn rename_term(t: &Term, map: &mut HashMap<VarId, VarId>, gen: &mut VarGen) -> Term {
    match t {
        Term::Var(v) => Term::Var(*map.entry(*v).or_insert_with(|| gen.fresh())),
        Term::App(f, args) => Term::App(
            *f,
            args.iter().map(|a| rename_term(a, map, gen)).collect(),
        ),
    }
}

/// Decides which functors count as Skolem symbols, by name prefix.
#[derive(Clone, Debug)]
pub struct SkolemDetector {
    prefixes: Vec<String>,
}

impl SkolemDetector {
    pub fn new(prefixes: Vec<String>) -> SkolemDetector {
        SkolemDetector { prefixes }
    }

    pub fn matches(&self, name: &str) -> bool {
        self.prefixes.iter().any(|p| name.starts_with(p.as_str()))
    }
}

impl Default for SkolemDetector {
    fn default() -> Self {
        SkolemDetector::new(vec!["esk".into(), "skolem".into(), "sk".into()])
    }
}

/// Collapses a literal for learning: variables become `VAR`, and any argument
/// subterm headed by a Skolem symbol becomes `SKLM` whole. The predicate head
/// itself is kept. Idempotent, since `VAR` and `SKLM` are plain constants.
pub fn normalize_literal(l: &Literal, symbols: &SymbolTable, det: &SkolemDetector) -> Literal {
    let atom = match &l.atom {
        Term::App(f, args) => Term::App(
            *f,
            args.iter()
                .map(|a| normalize_term(a, symbols, det))
                .collect(),
        ),
        Term::Var(_) => unreachable!("literal atom is never a bare variable"),
    };
    Literal {
        positive: l.positive,
        atom,
    }
}

fn normalize_term(t: &Term, symbols: &SymbolTable, det: &SkolemDetector) -> Term {
    match t {
        Term::Var(_) => Term::constant(symbols.var_marker()),
        Term::App(f, args) => {
            if det.matches(symbols.name(*f)) {
                Term::constant(symbols.sklm_marker())
            } else {
                Term::App(
                    *f,
                    args.iter()
                        .map(|a| normalize_term(a, symbols, det))
                        .collect(),
                )
            }
        }
    }
}
