//! Law-level checks for unification, normalization, and printing, verified
//! against a brute-force oracle that enumerates ground instantiations over a
//! bounded Herbrand base. The oracle shares no code with the unifier.

use proptest::prelude::*;

use prooftrace_core::fol::{
    normalize_literal, parse_tptp_cnf, unify, Literal, OccursCheck, SkolemDetector, Substitution,
    SymbolId, SymbolTable, Term, VarId,
};

/// Test-local term language over constants a, b, unary f, and variables X, Y.
#[derive(Clone, Debug, PartialEq, Eq)]
enum T {
    A,
    B,
    X,
    Y,
    F(Box<T>),
}

struct Ids {
    a: SymbolId,
    b: SymbolId,
    f: SymbolId,
}

fn make_ids(sy: &mut SymbolTable) -> Ids {
    Ids {
        a: sy.intern("a", 0).unwrap(),
        b: sy.intern("b", 0).unwrap(),
        f: sy.intern("f", 1).unwrap(),
    }
}

fn to_term(t: &T, ids: &Ids) -> Term {
    match t {
        T::A => Term::constant(ids.a),
        T::B => Term::constant(ids.b),
        T::X => Term::Var(VarId(0)),
        T::Y => Term::Var(VarId(1)),
        T::F(inner) => Term::App(ids.f, vec![to_term(inner, ids)]),
    }
}

fn term_to_t(t: &Term, ids: &Ids) -> T {
    match t {
        Term::Var(VarId(0)) => T::X,
        Term::Var(VarId(1)) => T::Y,
        Term::Var(v) => panic!("unexpected variable {v:?}"),
        Term::App(s, args) if *s == ids.a => {
            assert!(args.is_empty());
            T::A
        }
        Term::App(s, args) if *s == ids.b => {
            assert!(args.is_empty());
            T::B
        }
        Term::App(s, args) if *s == ids.f => T::F(Box::new(term_to_t(&args[0], ids))),
        Term::App(..) => panic!("unexpected symbol"),
    }
}

/// Ground instantiation: every X becomes `gx`, every Y becomes `gy`.
fn ground(t: &T, gx: &T, gy: &T) -> T {
    match t {
        T::A => T::A,
        T::B => T::B,
        T::X => gx.clone(),
        T::Y => gy.clone(),
        T::F(inner) => T::F(Box::new(ground(inner, gx, gy))),
    }
}

/// All ground terms up to nesting depth 6: a, b, f(a), ..., f^6(b).
fn herbrand_base() -> Vec<T> {
    let mut base = vec![T::A, T::B];
    let mut frontier = base.clone();
    for _ in 0..6 {
        frontier = frontier
            .into_iter()
            .map(|t| T::F(Box::new(t)))
            .collect::<Vec<_>>();
        base.extend(frontier.iter().cloned());
    }
    base
}

/// Every (gx, gy) assignment from the base that makes `s` and `t` equal.
///
/// Generated terms nest at most 2 deep, so a unifiable pair always has a
/// witness within this base.
fn ground_unifiers(s: &T, t: &T, base: &[T]) -> Vec<(T, T)> {
    let mut out = Vec::new();
    for gx in base {
        for gy in base {
            if ground(s, gx, gy) == ground(t, gx, gy) {
                out.push((gx.clone(), gy.clone()));
            }
        }
    }
    out
}

fn arb_t() -> impl Strategy<Value = T> {
    let leaf = prop_oneof![Just(T::A), Just(T::B), Just(T::X), Just(T::Y)];
    leaf.prop_recursive(2, 6, 1, |inner| {
        prop_oneof![inner.clone().prop_map(|t| T::F(Box::new(t))), inner]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// The unifier succeeds exactly when brute-force grounding finds a common
    /// instance, its result equalizes both sides, and every ground unifier
    /// factors through it (the most-general property).
    #[test]
    fn unify_agrees_with_herbrand_oracle(s in arb_t(), t in arb_t()) {
        let mut sy = SymbolTable::new();
        let ids = make_ids(&mut sy);
        let base = herbrand_base();
        let witnesses = ground_unifiers(&s, &t, &base);

        let st = to_term(&s, &ids);
        let tt = to_term(&t, &ids);
        let result = unify(&st, &tt, &Substitution::new(), OccursCheck::On);

        prop_assert_eq!(result.is_some(), !witnesses.is_empty());
        if let Some(sub) = result {
            prop_assert_eq!(sub.resolve(&st), sub.resolve(&tt));
            let sx = term_to_t(&sub.resolve(&Term::Var(VarId(0))), &ids);
            let sy_binding = term_to_t(&sub.resolve(&Term::Var(VarId(1))), &ids);
            for (gx, gy) in &witnesses {
                // sigma' composed with the unifier equals sigma' itself.
                prop_assert_eq!(ground(&sx, gx, gy), gx.clone());
                prop_assert_eq!(ground(&sy_binding, gx, gy), gy.clone());
            }
        }
    }

    /// Argument-position recursion: unifying p(s1,s2) with p(t1,t2) agrees
    /// with grounding both argument pairs simultaneously.
    #[test]
    fn unify_recurses_through_arguments(
        s1 in arb_t(), s2 in arb_t(), t1 in arb_t(), t2 in arb_t()
    ) {
        let mut sy = SymbolTable::new();
        let ids = make_ids(&mut sy);
        let p = sy.intern("p", 2).unwrap();
        let base = herbrand_base();

        let mut unifiable = false;
        'outer: for gx in &base {
            for gy in &base {
                if ground(&s1, gx, gy) == ground(&t1, gx, gy)
                    && ground(&s2, gx, gy) == ground(&t2, gx, gy)
                {
                    unifiable = true;
                    break 'outer;
                }
            }
        }

        let lhs = Term::App(p, vec![to_term(&s1, &ids), to_term(&s2, &ids)]);
        let rhs = Term::App(p, vec![to_term(&t1, &ids), to_term(&t2, &ids)]);
        let result = unify(&lhs, &rhs, &Substitution::new(), OccursCheck::On);
        prop_assert_eq!(result.is_some(), unifiable);
        if let Some(sub) = result {
            prop_assert_eq!(sub.resolve(&lhs), sub.resolve(&rhs));
        }
    }

    /// Applying a unifier twice equals applying it once.
    #[test]
    fn substitution_application_is_idempotent(s in arb_t(), t in arb_t()) {
        let mut sy = SymbolTable::new();
        let ids = make_ids(&mut sy);
        let st = to_term(&s, &ids);
        let tt = to_term(&t, &ids);
        if let Some(sub) = unify(&st, &tt, &Substitution::new(), OccursCheck::On) {
            let once = sub.resolve(&st);
            prop_assert_eq!(sub.resolve(&once), once);
        }
    }
}

fn arb_norm_term() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("a".to_string()),
        Just("esk1_0".to_string()),
        Just("X".to_string()),
        Just("Y0".to_string()),
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| format!("f({t})")),
            (inner.clone(), inner.clone()).prop_map(|(u, v)| format!("esk2_1({u},{v})")),
            (inner.clone(), inner).prop_map(|(u, v)| format!("g({u},{v})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Normalization maps every variable to VAR and every Skolem-headed
    /// subterm to SKLM, keeps polarity, and is idempotent.
    #[test]
    fn normalization_idempotent_and_marker_complete(
        positive in any::<bool>(),
        t1 in arb_norm_term(),
        t2 in arb_norm_term(),
    ) {
        let mut sy = SymbolTable::new();
        let det = SkolemDetector::default();
        let text = format!("{}p({t1},{t2})", if positive { "" } else { "~" });
        let lit = prooftrace_core::fol::parse_literal_text(&text, &mut sy).unwrap();
        let norm = normalize_literal(&lit, &sy, &det);
        prop_assert_eq!(norm.positive, positive);
        prop_assert_eq!(&normalize_literal(&norm, &sy, &det), &norm);
        let rendered = sy.display_literal(&norm).to_string();
        prop_assert!(!rendered.contains('X') || rendered.contains("SKLM"));
        prop_assert!(!rendered.contains("esk"));
        check_no_vars(&norm, &sy);
    }
}

fn check_no_vars(l: &Literal, sy: &SymbolTable) {
    fn walk(t: &Term, sy: &SymbolTable) {
        match t {
            Term::Var(_) => panic!("normalized literal still contains a variable"),
            Term::App(s, args) => {
                assert!(!SkolemDetector::default().matches(sy.name(*s)) );
                for a in args {
                    walk(a, sy);
                }
            }
        }
    }
    match &l.atom {
        Term::App(_, args) => {
            for a in args {
                walk(a, sy);
            }
        }
        Term::Var(_) => panic!("atom is a bare variable"),
    }
}

fn arb_matrix_src() -> impl Strategy<Value = String> {
    let atom = prop_oneof![
        Just("p(X)".to_string()),
        Just("q(X,f(Y))".to_string()),
        Just("r".to_string()),
        Just("s(g(a,X))".to_string()),
        Just("f(X) = h(Y)".to_string()),
        Just("a != b".to_string()),
    ];
    let lit = (any::<bool>(), atom).prop_map(|(pos, a)| {
        if pos || a.contains('=') {
            a
        } else {
            format!("~{a}")
        }
    });
    let clause = prop::collection::vec(lit, 1..4);
    prop::collection::vec(clause, 1..5).prop_map(|clauses| {
        clauses
            .iter()
            .enumerate()
            .map(|(i, lits)| {
                let body = lits.join(" | ");
                if lits.len() > 1 {
                    format!("cnf(c{i}, axiom, ({body})).\n")
                } else {
                    format!("cnf(c{i}, axiom, {body}).\n")
                }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// print . parse is a fixpoint: re-parsing printed output prints the same.
    #[test]
    fn print_parse_round_trip(src in arb_matrix_src()) {
        let m = parse_tptp_cnf(&src).unwrap();
        let printed = m.to_tptp();
        let m2 = parse_tptp_cnf(&printed).unwrap();
        prop_assert_eq!(m2.to_tptp(), printed);
    }
}
