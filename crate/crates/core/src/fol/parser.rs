//! Recursive-descent parser for the CNF fragment of TPTP.
//!
//! Accepted statements are `cnf(name, role, clause).` with `|` between
//! literals, `~` for negation, infix `=` and `!=`, and `%` or `/* */`
//! comments. Roles are parsed and discarded. Everything else is rejected
//! with a line/column diagnostic.

use std::collections::HashMap;

use super::{Clause, Literal, Matrix, SymbolTable, Term, VarId};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    LParen,
    RParen,
    Comma,
    Pipe,
    Tilde,
    Eq,
    Neq,
    Dot,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Var(s) => format!("variable '{s}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Pipe => "'|'".into(),
            Tok::Tilde => "'~'".into(),
            Tok::Eq => "'='".into(),
            Tok::Neq => "'!='".into(),
            Tok::Dot => "'.'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = *self.src.get(self.pos)?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'%') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some(b'/') if self.src.get(self.pos + 1) == Some(&b'*') => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            Some(b'*') if self.peek() == Some(b'/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                            None => {
                                return Err(ParseError {
                                    line,
                                    col,
                                    msg: "unterminated block comment".into(),
                                })
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    /// Next token plus its start position.
    fn next(&mut self) -> Result<(Tok, u32, u32), ParseError> {
        self.skip_trivia()?;
        let (line, col) = (self.line, self.col);
        let at = |t| Ok((t, line, col));
        let b = match self.peek() {
            None => return at(Tok::Eof),
            Some(b) => b,
        };
        match b {
            b'(' => {
                self.bump();
                at(Tok::LParen)
            }
            b')' => {
                self.bump();
                at(Tok::RParen)
            }
            b',' => {
                self.bump();
                at(Tok::Comma)
            }
            b'|' => {
                self.bump();
                at(Tok::Pipe)
            }
            b'~' => {
                self.bump();
                at(Tok::Tilde)
            }
            b'=' => {
                self.bump();
                at(Tok::Eq)
            }
            b'.' => {
                self.bump();
                at(Tok::Dot)
            }
            b'!' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    at(Tok::Neq)
                } else {
                    Err(ParseError {
                        line,
                        col,
                        msg: "expected '=' after '!'".into(),
                    })
                }
            }
            b'\'' => {
                // Single-quoted atom; quotes are stripped.
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some(b'\'') => break,
                        Some(c) => s.push(c as char),
                        None => {
                            return Err(ParseError {
                                line,
                                col,
                                msg: "unterminated quoted atom".into(),
                            })
                        }
                    }
                }
                at(Tok::Ident(s))
            }
            b'a'..=b'z' | b'0'..=b'9' => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == b'_' {
                        s.push(c as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                at(Tok::Ident(s))
            }
            b'A'..=b'Z' | b'_' => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == b'_' {
                        s.push(c as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                at(Tok::Var(s))
            }
            other => Err(ParseError {
                line,
                col,
                msg: format!("unexpected character '{}'", other as char),
            }),
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    tok_line: u32,
    tok_col: u32,
    symbols: SymbolTable,
    /// Variables are scoped to the statement being parsed.
    scope: HashMap<String, VarId>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Parser<'a>, ParseError> {
        let mut lexer = Lexer::new(src);
        let (tok, tok_line, tok_col) = lexer.next()?;
        Ok(Parser {
            lexer,
            tok,
            tok_line,
            tok_col,
            symbols: SymbolTable::new(),
            scope: HashMap::new(),
        })
    }

    fn error_here(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.tok_line,
            col: self.tok_col,
            msg: msg.into(),
        }
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, line, col) = self.lexer.next()?;
        self.tok = tok;
        self.tok_line = line;
        self.tok_col = col;
        Ok(())
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if self.tok == want {
            self.advance()
        } else {
            Err(self.error_here(format!(
                "expected {}, found {}",
                want.describe(),
                self.tok.describe()
            )))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, ParseError> {
        match std::mem::replace(&mut self.tok, Tok::Eof) {
            Tok::Ident(s) => {
                self.advance()?;
                Ok(s)
            }
            other => {
                let msg = format!("expected {what}, found {}", other.describe());
                self.tok = other;
                Err(self.error_here(msg))
            }
        }
    }

    fn intern(&mut self, name: &str, arity: u32, line: u32, col: u32) -> Result<super::SymbolId, ParseError> {
        self.symbols.intern(name, arity).map_err(|e| ParseError {
            line,
            col,
            msg: e.to_string(),
        })
    }

    fn parse_term(&mut self) -> Result<Term, ParseError> {
        let (line, col) = (self.tok_line, self.tok_col);
        match std::mem::replace(&mut self.tok, Tok::Eof) {
            Tok::Var(name) => {
                self.advance()?;
                // The normalization markers are reserved: they read back as
                // the pre-interned constants, never as variables.
                if name == "VAR" {
                    return Ok(Term::constant(self.symbols.var_marker()));
                }
                if name == "SKLM" {
                    return Ok(Term::constant(self.symbols.sklm_marker()));
                }
                let id = match self.scope.get(&name) {
                    Some(&id) => id,
                    None => {
                        let id = self.symbols.fresh_named_var(&name);
                        self.scope.insert(name, id);
                        id
                    }
                };
                Ok(Term::Var(id))
            }
            Tok::Ident(name) => {
                self.advance()?;
                if self.tok == Tok::LParen {
                    self.advance()?;
                    let mut args = vec![self.parse_term()?];
                    while self.tok == Tok::Comma {
                        self.advance()?;
                        args.push(self.parse_term()?);
                    }
                    self.expect(Tok::RParen)?;
                    let id = self.intern(&name, args.len() as u32, line, col)?;
                    Ok(Term::App(id, args))
                } else {
                    let id = self.intern(&name, 0, line, col)?;
                    Ok(Term::constant(id))
                }
            }
            other => {
                let msg = format!("expected term, found {}", other.describe());
                self.tok = other;
                Err(self.error_here(msg))
            }
        }
    }

    fn parse_literal(&mut self) -> Result<Literal, ParseError> {
        let mut positive = true;
        if self.tok == Tok::Tilde {
            positive = false;
            self.advance()?;
        }
        let (line, col) = (self.tok_line, self.tok_col);
        let lhs = self.parse_term()?;
        match self.tok {
            Tok::Eq | Tok::Neq => {
                if self.tok == Tok::Neq {
                    positive = !positive;
                }
                self.advance()?;
                let rhs = self.parse_term()?;
                let eq = self.symbols.equality();
                Ok(Literal::new(positive, Term::App(eq, vec![lhs, rhs])))
            }
            _ => match lhs {
                Term::App(..) => Ok(Literal::new(positive, lhs)),
                Term::Var(_) => Err(ParseError {
                    line,
                    col,
                    msg: "a variable cannot stand alone as an atom".into(),
                }),
            },
        }
    }

    fn parse_disjunction(&mut self) -> Result<Vec<Literal>, ParseError> {
        let mut lits = vec![self.parse_literal()?];
        while self.tok == Tok::Pipe {
            self.advance()?;
            lits.push(self.parse_literal()?);
        }
        Ok(lits)
    }

    /// Clause body, optionally wrapped in one pair of parentheses.
    fn parse_clause_body(&mut self) -> Result<Vec<Literal>, ParseError> {
        if self.tok == Tok::LParen {
            // No ambiguity: a literal never starts with '(' in this grammar.
            self.advance()?;
            let lits = self.parse_disjunction()?;
            self.expect(Tok::RParen)?;
            Ok(lits)
        } else {
            self.parse_disjunction()
        }
    }

    fn parse_statement(&mut self) -> Result<Clause, ParseError> {
        let kw_line = self.tok_line;
        let kw_col = self.tok_col;
        let kw = self.expect_ident("'cnf'")?;
        if kw != "cnf" {
            return Err(ParseError {
                line: kw_line,
                col: kw_col,
                msg: format!("unsupported statement '{kw}'; only cnf is accepted"),
            });
        }
        self.expect(Tok::LParen)?;
        let name = self.expect_ident("clause name")?;
        self.expect(Tok::Comma)?;
        let _role = self.expect_ident("role")?;
        self.expect(Tok::Comma)?;
        self.scope.clear();
        let literals = self.parse_clause_body()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::Dot)?;
        Ok(Clause { name, literals })
    }
}

/// Parses a whole problem file into a [`Matrix`].
pub fn parse_tptp_cnf(src: &str) -> Result<Matrix, ParseError> {
    let mut p = Parser::new(src)?;
    let mut clauses = Vec::new();
    while p.tok != Tok::Eof {
        let (line, col) = (p.tok_line, p.tok_col);
        let clause = p.parse_statement()?;
        if clauses.iter().any(|c: &Clause| c.name == clause.name) {
            return Err(ParseError {
                line,
                col,
                msg: format!("duplicate clause name {}", clause.name),
            });
        }
        clauses.push(clause);
    }
    Matrix::build(p.symbols, clauses).map_err(|e| ParseError {
        line: 0,
        col: 0,
        msg: e.to_string(),
    })
}

/// Parses a bare literal (proof files store literals in this form), interning
/// symbols into `symbols`. Variable names are scoped to this call.
pub fn parse_literal_text(src: &str, symbols: &mut SymbolTable) -> Result<Literal, ParseError> {
    parse_literal_in_scope(src, symbols, &mut HashMap::new())
}

/// Like [`parse_literal_text`] but with a caller-owned variable scope, so the
/// same name denotes the same variable across literals (proof files share
/// free variables between nodes).
pub fn parse_literal_in_scope(
    src: &str,
    symbols: &mut SymbolTable,
    scope: &mut HashMap<String, VarId>,
) -> Result<Literal, ParseError> {
    let mut p = Parser::new(src)?;
    p.symbols = std::mem::take(symbols);
    p.scope = std::mem::take(scope);
    let lit = p.parse_literal();
    std::mem::swap(symbols, &mut p.symbols);
    std::mem::swap(scope, &mut p.scope);
    let lit = lit?;
    if p.tok != Tok::Eof {
        return Err(p.error_here(format!("trailing input after literal: {}", p.tok.describe())));
    }
    Ok(lit)
}

/// Parses a bare disjunction such as `p(X) | ~q(X)` against an existing
/// symbol table. Used by tests and tools that assemble matrices directly.
pub fn parse_clause_body(src: &str, symbols: &mut SymbolTable) -> Result<Vec<Literal>, ParseError> {
    let mut p = Parser::new(src)?;
    p.symbols = std::mem::take(symbols);
    let lits = p.parse_clause_body();
    std::mem::swap(symbols, &mut p.symbols);
    let lits = lits?;
    if p.tok != Tok::Eof {
        return Err(p.error_here(format!("trailing input after clause: {}", p.tok.describe())));
    }
    Ok(lits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_statements_roles_and_comments() {
        let m = parse_tptp_cnf(
            "% header comment\n\
             cnf(c1, axiom, p(X)).\n\
             /* block\n comment */\n\
             cnf(c2, negated_conjecture, (r(X,Y) | ~p(X) | q(Y))).\n",
        )
        .unwrap();
        assert_eq!(m.clauses.len(), 2);
        assert_eq!(m.clauses[0].name, "c1");
        assert_eq!(m.clauses[1].literals.len(), 3);
        assert!(!m.clauses[1].literals[1].positive);
    }

    #[test]
    fn clause_scoped_variables() {
        let m = parse_tptp_cnf("cnf(a, axiom, p(X)).\ncnf(b, axiom, q(X)).\n").unwrap();
        let x_in_a = m.clauses[0].literals[0].atom.vars();
        let x_in_b = m.clauses[1].literals[0].atom.vars();
        assert_ne!(x_in_a, x_in_b);
        // Display names are both X.
        assert_eq!(m.symbols.var_name(x_in_a[0]), "X");
        assert_eq!(m.symbols.var_name(x_in_b[0]), "X");
    }

    #[test]
    fn marker_names_parse_as_reserved_constants() {
        let mut symbols = SymbolTable::new();
        let lit = parse_literal_text("p(VAR,SKLM)", &mut symbols).unwrap();
        match &lit.atom {
            Term::App(_, args) => {
                assert_eq!(args[0], Term::constant(symbols.var_marker()));
                assert_eq!(args[1], Term::constant(symbols.sklm_marker()));
            }
            _ => unreachable!(),
        }
        let eq = parse_literal_text("VAR = a", &mut symbols).unwrap();
        assert!(eq.positive);
        assert!(eq.atom.vars().is_empty());
    }

    #[test]
    fn error_carries_line_and_column() {
        let err = parse_tptp_cnf("cnf(c1, axiom, p(X)).\ncnf(c2, axiom, q(X) | ).\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.col, 23);
    }

    #[test]
    fn arity_clash_is_reported_at_reuse_site() {
        let err = parse_tptp_cnf("cnf(c1, axiom, p(a)).\ncnf(c2, axiom, p(a,b)).\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.msg.contains("arity"), "{}", err.msg);
    }

    #[test]
    fn duplicate_clause_name_rejected() {
        let err = parse_tptp_cnf("cnf(c1, axiom, p).\ncnf(c1, axiom, q).\n").unwrap_err();
        assert!(err.msg.contains("duplicate"), "{}", err.msg);
        assert_eq!(err.line, 2);
    }

    #[test]
    fn non_cnf_statement_rejected() {
        let err = parse_tptp_cnf("fof(c1, axiom, p).\n").unwrap_err();
        assert!(err.msg.contains("only cnf"), "{}", err.msg);
    }

    #[test]
    fn bare_variable_atom_rejected() {
        let err = parse_tptp_cnf("cnf(c1, axiom, X).\n").unwrap_err();
        assert!(err.msg.contains("variable"), "{}", err.msg);
    }

    #[test]
    fn equality_variants() {
        let m = parse_tptp_cnf(
            "cnf(c1, axiom, (f(X) = g(X) | a != b | ~ c = d)).\n",
        )
        .unwrap();
        let lits = &m.clauses[0].literals;
        assert!(lits[0].positive);
        assert!(!lits[1].positive);
        assert!(!lits[2].positive);
        for l in lits {
            assert_eq!(l.atom.head(), Some(m.symbols.equality()));
        }
    }

    #[test]
    fn quoted_and_numeric_names() {
        let m = parse_tptp_cnf("cnf(12, axiom, 'has space'(a)).\n").unwrap();
        assert_eq!(m.clauses[0].name, "12");
        let head = m.clauses[0].literals[0].atom.head().unwrap();
        assert_eq!(m.symbols.name(head), "has space");
    }

    #[test]
    fn round_trip_print_parse() {
        let src = "cnf(c1, axiom, p(X)).\n\
                   cnf(c2, axiom, (r(X,Y) | ~p(X) | q(Y))).\n\
                   cnf(c3, axiom, (s(f(a)) | g(X) != h)).\n";
        let m = parse_tptp_cnf(src).unwrap();
        let printed = m.to_tptp();
        let m2 = parse_tptp_cnf(&printed).unwrap();
        assert_eq!(m2.to_tptp(), printed);
        assert_eq!(m.clauses.len(), m2.clauses.len());
    }
}
