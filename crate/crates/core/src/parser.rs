//! Surface syntax for definite programs and queries.
//!
//! ```text
//! % comment
//! anc(X, Y) :- par(X, Y).
//! anc(X, Y) :- par(X, Z), anc(Z, Y).
//! par(a, b).
//! ?- anc(a, W).
//! ```
//!
//! Lowercase identifiers are constants, functors and predicates; identifiers
//! starting with an uppercase letter or `_` are variables, and a lone `_` is
//! a fresh variable at each occurrence. The `pre_` prefix is reserved for
//! rendered magic predicates and only accepted in permissive mode.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{Atom, Clause, Pred, Program, Query, Term, Var};

const MAGIC_PREFIX: &str = "pre_";

/// 1-based source position of a token.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: SourceSpan, message: String },
    #[error("{span}: predicate {pred} used with arity {found}, previously {expected}")]
    ArityMismatch {
        span: SourceSpan,
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("{span}: predicate name {name} uses the reserved prefix `pre_`")]
    ReservedPrefix { span: SourceSpan, name: String },
    #[error("{span}: empty query")]
    EmptyQuery { span: SourceSpan },
}

impl ParseError {
    pub fn span(&self) -> SourceSpan {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::ArityMismatch { span, .. }
            | ParseError::ReservedPrefix { span, .. }
            | ParseError::EmptyQuery { span } => *span,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept `pre_<p>` predicates and read them into the magic namespace.
    pub allow_magic: bool,
}

impl ParseOptions {
    pub fn permissive() -> Self {
        ParseOptions { allow_magic: true }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Name(String),
    Variable(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Neck,
    QueryMark,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(s) | Tok::Variable(s) => write!(f, "`{s}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Neck => write!(f, "`:-`"),
            Tok::QueryMark => write!(f, "`?-`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();
    while let Some(&ch) = chars.peek() {
        let start = SourceSpan {
            line,
            column: col,
            length: 1,
        };
        if ch == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if ch.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if ch == '%' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        if ch.is_alphabetic() || ch == '_' {
            let mut ident = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_alphanumeric() || c == '_' {
                    ident.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            let len = ident.chars().count();
            col += len;
            let span = SourceSpan {
                length: len,
                ..start
            };
            let tok = if ch.is_uppercase() || ch == '_' {
                Tok::Variable(ident)
            } else {
                Tok::Name(ident)
            };
            out.push((tok, span));
            continue;
        }
        chars.next();
        col += 1;
        let tok = match ch {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            ':' | '?' => {
                if chars.peek() == Some(&'-') {
                    chars.next();
                    col += 1;
                    out.push((
                        if ch == ':' { Tok::Neck } else { Tok::QueryMark },
                        SourceSpan { length: 2, ..start },
                    ));
                    continue;
                }
                return Err(ParseError::Syntax {
                    span: start,
                    message: format!("expected `{ch}-`"),
                });
            }
            other => {
                return Err(ParseError::Syntax {
                    span: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((tok, start));
    }
    out.push((
        Tok::Eof,
        SourceSpan {
            line,
            column: col,
            length: 0,
        },
    ));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    options: ParseOptions,
    arities: BTreeMap<Pred, usize>,
    anonymous: usize,
}

impl Parser {
    fn new(text: &str, options: ParseOptions) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            options,
            arities: BTreeMap::new(),
            anonymous: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            span: self.span(),
            message: format!("expected {expected}, found {}", self.peek()),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn program(&mut self) -> Result<Vec<Clause>, ParseError> {
        let mut clauses = Vec::new();
        while *self.peek() != Tok::Eof {
            clauses.push(self.clause()?);
        }
        Ok(clauses)
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        self.anonymous = 0;
        let head = self.atom()?;
        let body = if *self.peek() == Tok::Neck {
            self.bump();
            self.conjunction()?
        } else {
            Vec::new()
        };
        self.expect(Tok::Dot, "`.` after clause")?;
        Ok(Clause::new(head, body))
    }

    fn conjunction(&mut self) -> Result<Vec<Atom>, ParseError> {
        let mut atoms = vec![self.atom()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let span = self.span();
        let name = match self.peek().clone() {
            Tok::Name(n) => {
                self.bump();
                n
            }
            _ => return Err(self.unexpected("a predicate name")),
        };
        let pred = self.predicate(&name, span)?;
        let args = self.arguments()?;
        match self.arities.get(&pred) {
            Some(&n) if n != args.len() => {
                return Err(ParseError::ArityMismatch {
                    span,
                    pred: pred.to_string(),
                    expected: n,
                    found: args.len(),
                })
            }
            Some(_) => {}
            None => {
                self.arities.insert(pred.clone(), args.len());
            }
        }
        Ok(Atom::new(pred, args))
    }

    fn predicate(&self, name: &str, span: SourceSpan) -> Result<Pred, ParseError> {
        match name.strip_prefix(MAGIC_PREFIX) {
            Some(base) if self.options.allow_magic && !base.is_empty() => {
                Ok(Pred::new(base).magic())
            }
            Some(_) => Err(ParseError::ReservedPrefix {
                span,
                name: name.to_string(),
            }),
            None => Ok(Pred::new(name)),
        }
    }

    fn arguments(&mut self) -> Result<Vec<Term>, ParseError> {
        if *self.peek() != Tok::LParen {
            return Ok(Vec::new());
        }
        self.bump();
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        Ok(args)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Variable(name) => {
                self.bump();
                if name == "_" {
                    self.anonymous += 1;
                    Ok(Term::Var(Var::new(&format!("_G{}", self.anonymous))))
                } else {
                    Ok(Term::var(&name))
                }
            }
            Tok::Name(name) => {
                self.bump();
                let args = self.arguments()?;
                Ok(Term::compound(&name, args))
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn query(&mut self) -> Result<Vec<Atom>, ParseError> {
        self.anonymous = 0;
        if *self.peek() == Tok::QueryMark {
            self.bump();
        }
        if matches!(self.peek(), Tok::Dot | Tok::Eof) {
            return Err(ParseError::EmptyQuery { span: self.span() });
        }
        let atoms = self.conjunction()?;
        if *self.peek() == Tok::Dot {
            self.bump();
        }
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("end of query"));
        }
        Ok(atoms)
    }
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    parse_program_with(text, ParseOptions::default())
}

pub fn parse_program_with(text: &str, options: ParseOptions) -> Result<Program, ParseError> {
    let mut p = Parser::new(text, options)?;
    let clauses = p.program()?;
    Ok(Program::new(clauses).expect("parser already checked arities"))
}

pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    parse_query_with(text, ParseOptions::default())
}

pub fn parse_query_with(text: &str, options: ParseOptions) -> Result<Query, ParseError> {
    let mut p = Parser::new(text, options)?;
    Ok(Query::new(p.query()?))
}

/// Text form of any syntax object: programs one clause per line, atoms and
/// queries as written, substitutions as `{X = a, Y = b}`.
pub fn render<T: fmt::Display + ?Sized>(x: &T) -> String {
    x.to_string()
}
