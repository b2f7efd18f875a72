//! Plain-text formats for datasets and programs.
//!
//! Datasets: one fact per statement, terminated by a period — `U1(a).`,
//! `E_red(a,b).`, `U1(f(a)).`. Programs: one rule per statement —
//! `U1(?x) :- E_c(?x,?y), U1(?y), ?y != ?z.`; a bodiless rule is written
//! `U1(?x) :- .` (or just `U1(?x).`). Variables carry a `?` prefix so
//! constants never need quoting; `%` starts a comment running to the end of
//! the line. Parsing and printing round-trip exactly.

use std::fmt;

use thiserror::Error;

use crate::logic::{is_identifier, Atom, Dataset, Literal, Term};
use crate::rules::{Program, Rule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Character scanner with position tracking.
struct Scanner<'t> {
    rest: &'t str,
    line: usize,
    column: usize,
}

impl<'t> Scanner<'t> {
    fn new(text: &'t str) -> Self {
        Scanner { rest: text, line: 1, column: 1 }
    }

    fn error(&self, message: impl fmt::Display) -> ParseError {
        ParseError { line: self.line, column: self.column, message: message.to_string() }
    }

    fn peek(&self) -> Option<char> {
        self.rest.chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.rest = &self.rest[c.len_utf8()..];
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    /// Skip whitespace and `%` comments.
    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_trivia();
        self.peek().is_none()
    }

    fn expect(&mut self, wanted: char) -> Result<(), ParseError> {
        self.skip_trivia();
        match self.peek() {
            Some(c) if c == wanted => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected `{wanted}`, found `{c}`"))),
            None => Err(self.error(format!("expected `{wanted}`, found end of input"))),
        }
    }

    fn eat(&mut self, wanted: char) -> bool {
        self.skip_trivia();
        if self.peek() == Some(wanted) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn identifier(&mut self, what: &str) -> Result<String, ParseError> {
        self.skip_trivia();
        let mut name = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                name.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if !is_identifier(&name) {
            return Err(self.error(format!("expected {what}")));
        }
        Ok(name)
    }

    /// `?x`, `a`, or `f(a,b)`; `allow_variables` is off inside datasets.
    fn term(&mut self, allow_variables: bool) -> Result<Term, ParseError> {
        self.skip_trivia();
        if self.peek() == Some('?') {
            if !allow_variables {
                return Err(self.error("variables are not allowed in facts"));
            }
            self.bump();
            return Ok(Term::variable(self.identifier("a variable name after `?`")?));
        }
        let name = self.identifier("a term")?;
        if !self.eat('(') {
            return Ok(Term::constant(name));
        }
        let mut args = vec![self.term(allow_variables)?];
        while self.eat(',') {
            args.push(self.term(allow_variables)?);
        }
        self.expect(')')?;
        if !args.iter().all(Term::is_ground) {
            return Err(self.error("functional terms must not contain variables"));
        }
        Ok(Term::function(name, args))
    }

    fn atom_args(&mut self, predicate: String, allow_variables: bool) -> Result<Atom, ParseError> {
        let mut args = vec![self.term(allow_variables)?];
        while self.eat(',') {
            args.push(self.term(allow_variables)?);
        }
        self.expect(')')?;
        if args.len() > 2 {
            return Err(self.error(format!(
                "predicate `{predicate}` applied to {} terms; only unary and binary atoms exist",
                args.len()
            )));
        }
        Ok(Atom::new(predicate, args))
    }
}

/// Parse a dataset: ground facts, one statement per `.`.
pub fn parse_dataset(text: &str) -> Result<Dataset, ParseError> {
    let mut scanner = Scanner::new(text);
    let mut dataset = Dataset::new();
    while !scanner.at_end() {
        let predicate = scanner.identifier("a predicate name")?;
        scanner.expect('(')?;
        let fact = scanner.atom_args(predicate, false)?;
        scanner.expect('.')?;
        dataset
            .insert(fact)
            .map_err(|e| scanner.error(e))?;
    }
    Ok(dataset)
}

/// One fact per line, in the dataset's canonical order.
pub fn print_dataset(d: &Dataset) -> String {
    let mut out = String::new();
    for fact in d.iter() {
        out.push_str(&fact.to_string());
        out.push_str(".\n");
    }
    out
}

/// Parse a program: rules terminated by `.`, bodies after `:-`.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut scanner = Scanner::new(text);
    let mut program = Program::new();
    while !scanner.at_end() {
        let predicate = scanner.identifier("a predicate name")?;
        scanner.expect('(')?;
        let head = scanner.atom_args(predicate, true)?;
        let mut body = Vec::new();
        if !scanner.eat('.') {
            scanner.expect(':')?;
            scanner
                .expect('-')
                .map_err(|e| ParseError { message: "expected `:-`".into(), ..e })?;
            if !scanner.eat('.') {
                loop {
                    body.push(scanner.body_literal()?);
                    if !scanner.eat(',') {
                        break;
                    }
                }
                scanner.expect('.')?;
            }
        }
        program.insert(Rule::new(head, body));
    }
    Ok(program)
}

impl Scanner<'_> {
    /// An atom, or an inequality `term != term`.
    fn body_literal(&mut self) -> Result<Literal, ParseError> {
        self.skip_trivia();
        if self.peek() == Some('?') {
            // A variable can only open an inequality.
            self.bump();
            let left = Term::variable(self.identifier("a variable name after `?`")?);
            self.skip_trivia();
            if self.peek() != Some('!') {
                return Err(self.error(format!("expected `!=` after `{left}`")));
            }
            self.bump();
            self.expect('=')?;
            return Ok(Literal::NotEqual(left, self.term(true)?));
        }
        let name = self.identifier("an atom or an inequality")?;
        if self.eat('(') {
            let atom = self.atom_args(name, true)?;
            self.skip_trivia();
            if self.peek() == Some('!') {
                // `f(a) != ?y`: the parenthesized form was a term after all.
                self.bump();
                self.expect('=')?;
                if !atom.args.iter().all(Term::is_ground) {
                    return Err(self.error("functional terms must not contain variables"));
                }
                let left = Term::function(atom.predicate, atom.args);
                return Ok(Literal::NotEqual(left, self.term(true)?));
            }
            return Ok(Literal::Atom(atom));
        }
        // A bare identifier is a constant, only meaningful in an inequality.
        self.skip_trivia();
        if self.peek() == Some('!') {
            self.bump();
            self.expect('=')?;
            return Ok(Literal::NotEqual(Term::constant(name), self.term(true)?));
        }
        Err(self.error(format!("`{name}` is neither an atom nor an inequality")))
    }
}

/// One rule per line, in the program's canonical order.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for rule in p.iter() {
        out.push_str(&rule.to_string());
        out.push('\n');
    }
    out
}
