//! First-order building blocks: terms, atoms, literals, datasets,
//! substitutions, and the unary/binary signatures every component works over.
//!
//! A signature pairs a list of edge colours `C` with a number `δ` of unary
//! predicates; its predicates are written `U1..Uδ` and `E_<colour>`. Datasets
//! are sets of ground atoms (facts) over arbitrary predicates, so the same
//! types also carry the foreign input/output vocabularies used by the
//! dataset encodings in [`crate::encodings`].
//!
//! Ordering everywhere is the lexicographic order of the printed form, which
//! makes iteration order, serialisation, and anything derived from them
//! deterministic.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Errors from logic-level operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("literal `{0}` is not ground")]
    NonGroundLiteral(String),
    #[error("fact `{0}` is not ground")]
    NonGroundFact(String),
    #[error("atom `{0}` has arity {1}; only unary and binary atoms are supported")]
    BadArity(String, usize),
}

/// `true` for the identifiers accepted everywhere: `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A term: constant, variable, or a function symbol applied to ground terms.
///
/// Functional terms (`f(a)`, `g(a,b)`) appear as vertex names produced by the
/// dataset encodings; their arguments are always ground.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Constant(String),
    Variable(String),
    Function(String, Vec<Term>),
}

impl Term {
    /// Constant term. Panics on a malformed identifier (contract violation).
    pub fn constant(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(is_identifier(&name), "bad constant name `{name}`");
        Term::Constant(name)
    }

    /// Variable term (printed with a `?` prefix).
    pub fn variable(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(is_identifier(&name), "bad variable name `{name}`");
        Term::Variable(name)
    }

    /// Functional term. Arguments must be ground.
    pub fn function(name: impl Into<String>, args: Vec<Term>) -> Self {
        let name = name.into();
        assert!(is_identifier(&name), "bad function name `{name}`");
        assert!(!args.is_empty(), "functional term needs arguments");
        assert!(
            args.iter().all(Term::is_ground),
            "functional term arguments must be ground"
        );
        Term::Function(name, args)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Constant(_) => true,
            Term::Variable(_) => false,
            Term::Function(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Replace every variable bound by `sub`; unbound variables remain.
    pub fn substitute(&self, sub: &Substitution) -> Term {
        match self {
            Term::Variable(v) => sub.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Constant(_) => self.clone(),
            Term::Function(name, args) => {
                // Arguments are ground by invariant, but substitute anyway to
                // keep the operation total.
                Term::Function(name.clone(), args.iter().map(|a| a.substitute(sub)).collect())
            }
        }
    }

    /// Collect variable names into `out`.
    pub fn variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Variable(v) => {
                out.insert(v.clone());
            }
            Term::Constant(_) => {}
            Term::Function(_, args) => args.iter().for_each(|a| a.variables(out)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Constant(name) => write!(f, "{name}"),
            Term::Variable(name) => write!(f, "?{name}"),
            Term::Function(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        // Lexicographic on the printed form; distinct terms print distinctly
        // because identifiers never contain `?`, `(`, `)` or `,`.
        self.to_string().cmp(&other.to_string())
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A predicate applied to one or two terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    /// Build an atom; panics unless the arity is 1 or 2 and the predicate is
    /// an identifier (contract violations, caught by parsers beforehand).
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        let predicate = predicate.into();
        assert!(is_identifier(&predicate), "bad predicate name `{predicate}`");
        assert!(
            args.len() == 1 || args.len() == 2,
            "atom `{predicate}` must have arity 1 or 2, got {}",
            args.len()
        );
        Atom { predicate, args }
    }

    pub fn unary(predicate: impl Into<String>, arg: Term) -> Self {
        Atom::new(predicate, vec![arg])
    }

    pub fn binary(predicate: impl Into<String>, from: Term, to: Term) -> Self {
        Atom::new(predicate, vec![from, to])
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn substitute(&self, sub: &Substitution) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|a| a.substitute(sub)).collect(),
        }
    }

    pub fn variables(&self, out: &mut BTreeSet<String>) {
        self.args.iter().for_each(|a| a.variables(out));
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_string().cmp(&other.to_string())
    }
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A body literal: an atom or an inequality between two terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Atom(Atom),
    NotEqual(Term, Term),
}

impl Literal {
    pub fn is_ground(&self) -> bool {
        match self {
            Literal::Atom(a) => a.is_ground(),
            Literal::NotEqual(s, t) => s.is_ground() && t.is_ground(),
        }
    }

    pub fn variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Literal::Atom(a) => a.variables(out),
            Literal::NotEqual(s, t) => {
                s.variables(out);
                t.variables(out);
            }
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Atom(a) => write!(f, "{a}"),
            Literal::NotEqual(s, t) => write!(f, "{s} != {t}"),
        }
    }
}

/// Apply a substitution to a literal.
pub fn apply_substitution(literal: &Literal, sub: &Substitution) -> Literal {
    match literal {
        Literal::Atom(a) => Literal::Atom(a.substitute(sub)),
        Literal::NotEqual(s, t) => Literal::NotEqual(s.substitute(sub), t.substitute(sub)),
    }
}

/// Does the dataset entail a ground literal? Atom literals are membership
/// tests; inequalities compare the two (distinct syntactic) terms. Errors on
/// a non-ground literal.
pub fn entails(dataset: &Dataset, literal: &Literal) -> Result<bool, LogicError> {
    if !literal.is_ground() {
        return Err(LogicError::NonGroundLiteral(literal.to_string()));
    }
    Ok(match literal {
        Literal::Atom(a) => dataset.contains(a),
        Literal::NotEqual(s, t) => s != t,
    })
}

/// A finite map from variable names to ground terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    /// Bind `var` to a ground term, replacing any previous binding.
    pub fn bind(&mut self, var: impl Into<String>, term: Term) {
        assert!(term.is_ground(), "substitutions map variables to ground terms");
        self.map.insert(var.into(), term);
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.map.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.map.iter()
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "?{v} -> {t}")?;
        }
        write!(f, "}}")
    }
}

/// A set of ground atoms, iterated in printed-form order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Dataset {
    facts: BTreeSet<Atom>,
}

impl Dataset {
    pub fn new() -> Self {
        Dataset::default()
    }

    /// Insert a fact; rejects non-ground atoms.
    pub fn insert(&mut self, fact: Atom) -> Result<(), LogicError> {
        if !fact.is_ground() {
            return Err(LogicError::NonGroundFact(fact.to_string()));
        }
        self.facts.insert(fact);
        Ok(())
    }

    /// Build a dataset from facts known to be ground; panics otherwise.
    pub fn from_facts(facts: impl IntoIterator<Item = Atom>) -> Self {
        let mut d = Dataset::new();
        for f in facts {
            d.insert(f).expect("from_facts requires ground atoms");
        }
        d
    }

    pub fn contains(&self, fact: &Atom) -> bool {
        self.facts.contains(fact)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.facts.iter()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn is_subset(&self, other: &Dataset) -> bool {
        self.facts.is_subset(&other.facts)
    }

    pub fn union(&self, other: &Dataset) -> Dataset {
        Dataset {
            facts: self.facts.union(&other.facts).cloned().collect(),
        }
    }
}

impl FromIterator<Atom> for Dataset {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        Dataset::from_facts(iter)
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in &self.facts {
            writeln!(f, "{fact}.")?;
        }
        Ok(())
    }
}

/// The ordered set of terms occurring as predicate arguments in `d`.
///
/// Arguments are taken whole: `U1(f(a))` contributes the term `f(a)`, not its
/// subterm `a`.
pub fn terms_of(d: &Dataset) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for fact in d.iter() {
        for arg in &fact.args {
            out.insert(arg.clone());
        }
    }
    out
}

/// A unary/binary signature: edge colours `C` plus the number `δ >= 1` of
/// unary predicates `U1..Uδ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    colours: Vec<String>,
    delta: usize,
}

/// How a fact relates to a signature: a unary label or a coloured edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactKind {
    /// `U_i(t)` with the 1-based label index.
    Label(usize, Term),
    /// `E_c(s,t)` with the colour index into [`Signature::colours`].
    Edge(usize, Term, Term),
}

impl Signature {
    /// Build a signature; colour names must be distinct identifiers and
    /// `delta` must be at least one.
    pub fn new(colours: Vec<String>, delta: usize) -> Self {
        assert!(delta >= 1, "signature needs at least one unary predicate");
        let mut seen = BTreeSet::new();
        for c in &colours {
            assert!(is_identifier(c), "bad colour name `{c}`");
            assert!(seen.insert(c.clone()), "duplicate colour `{c}`");
        }
        Signature { colours, delta }
    }

    pub fn colours(&self) -> &[String] {
        &self.colours
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn colour_index(&self, name: &str) -> Option<usize> {
        self.colours.iter().position(|c| c == name)
    }

    /// Printed name of the `i`-th (1-based) unary predicate: `U<i>`.
    pub fn unary_predicate(&self, i: usize) -> String {
        assert!((1..=self.delta).contains(&i), "unary index {i} out of range");
        format!("U{i}")
    }

    /// Printed name of the edge predicate for a colour: `E_<colour>`.
    pub fn edge_predicate(&self, colour: &str) -> String {
        format!("E_{colour}")
    }

    /// Parse `U<i>` into the 1-based index, without range-checking it.
    pub fn parse_unary_predicate(name: &str) -> Option<usize> {
        let digits = name.strip_prefix('U')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok()
    }

    /// Parse `E_<colour>` into the colour name, without checking membership.
    pub fn parse_edge_predicate(name: &str) -> Option<&str> {
        name.strip_prefix("E_")
    }

    /// Classify a fact against this signature, or `None` if it is foreign.
    pub fn classify(&self, fact: &Atom) -> Option<FactKind> {
        match fact.args.len() {
            1 => {
                let i = Self::parse_unary_predicate(&fact.predicate)?;
                (1..=self.delta)
                    .contains(&i)
                    .then(|| FactKind::Label(i, fact.args[0].clone()))
            }
            2 => {
                let c = Self::parse_edge_predicate(&fact.predicate)?;
                let idx = self.colour_index(c)?;
                Some(FactKind::Edge(idx, fact.args[0].clone(), fact.args[1].clone()))
            }
            _ => None,
        }
    }

    /// `true` when every fact of `d` belongs to this signature.
    pub fn covers(&self, d: &Dataset) -> bool {
        d.iter().all(|fact| self.classify(fact).is_some())
    }
}
