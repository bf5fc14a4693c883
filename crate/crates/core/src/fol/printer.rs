//! Canonical text rendering. Parsing the output reproduces the input up to
//! variable renaming; equality is printed infix as `=` / `!=`.

use std::fmt;

use super::{Clause, Literal, Matrix, SymbolTable, Term};

pub struct DisplayTerm<'a> {
    pub term: &'a Term,
    pub symbols: &'a SymbolTable,
}

impl fmt::Display for DisplayTerm<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self.term, self.symbols)
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, symbols: &SymbolTable) -> fmt::Result {
    match t {
        Term::Var(v) => write!(f, "{}", symbols.var_name(*v)),
        Term::App(s, args) => {
            write!(f, "{}", symbols.name(*s))?;
            if !args.is_empty() {
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write_term(f, a, symbols)?;
                }
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

pub struct DisplayLiteral<'a> {
    pub literal: &'a Literal,
    pub symbols: &'a SymbolTable,
}

impl fmt::Display for DisplayLiteral<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.literal;
        if let Term::App(s, args) = &l.atom {
            if *s == self.symbols.equality() && args.len() == 2 {
                write_term(f, &args[0], self.symbols)?;
                write!(f, "{}", if l.positive { " = " } else { " != " })?;
                return write_term(f, &args[1], self.symbols);
            }
        }
        if !l.positive {
            write!(f, "~")?;
        }
        write_term(f, &l.atom, self.symbols)
    }
}

pub struct DisplayClause<'a> {
    pub clause: &'a Clause,
    pub symbols: &'a SymbolTable,
}

impl fmt::Display for DisplayClause<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.clause.literals.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(
                f,
                "{}",
                DisplayLiteral {
                    literal: l,
                    symbols: self.symbols
                }
            )?;
        }
        Ok(())
    }
}

impl SymbolTable {
    pub fn display_term<'a>(&'a self, term: &'a Term) -> DisplayTerm<'a> {
        DisplayTerm {
            term,
            symbols: self,
        }
    }

    pub fn display_literal<'a>(&'a self, literal: &'a Literal) -> DisplayLiteral<'a> {
        DisplayLiteral {
            literal,
            symbols: self,
        }
    }

    pub fn display_clause<'a>(&'a self, clause: &'a Clause) -> DisplayClause<'a> {
        DisplayClause {
            clause,
            symbols: self,
        }
    }
}

impl Matrix {
    /// Renders the whole matrix as `cnf` statements, one per line.
    pub fn to_tptp(&self) -> String {
        let mut out = String::new();
        for c in &self.clauses {
            let body = DisplayClause {
                clause: c,
                symbols: &self.symbols,
            };
            if c.literals.len() > 1 {
                out.push_str(&format!("cnf({}, axiom, ({})).\n", c.name, body));
            } else {
                out.push_str(&format!("cnf({}, axiom, {}).\n", c.name, body));
            }
        }
        out
    }
}
