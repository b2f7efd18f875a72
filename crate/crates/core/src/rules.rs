//! Datalog rules and programs, and their immediate-consequence semantics.
//!
//! A rule derives its head for every substitution of the rule's variables by
//! terms of the input dataset under which all body literals hold. Programs
//! are sets of rules with set semantics up to variable renaming.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use crate::logic::{apply_substitution, entails, Atom, Dataset, Literal, Substitution, Term};

/// A Datalog rule `head :- body`. The body may be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Literal>,
}

/// Above this many variables, rule canonicalisation falls back from exact
/// orbit minimisation (all `n!` renamings) to a first-occurrence renaming,
/// which can fail to identify some renaming-equal rules. Rules from the
/// tree-formula pipeline are already canonical, so the fallback only affects
/// hand-written programs with unusually wide rules.
const MAX_EXACT_CANON_VARS: usize = 8;

impl Rule {
    pub fn new(head: Atom, body: Vec<Literal>) -> Self {
        Rule { head, body }
    }

    /// All variables of the rule (head and body), in name order.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut vars = BTreeSet::new();
        self.head.variables(&mut vars);
        for lit in &self.body {
            lit.variables(&mut vars);
        }
        vars
    }

    /// Variables that occur in at least one body *atom* (inequalities do not
    /// bind). Rules whose variables all occur in body atoms can be checked
    /// against finite instantiations of the body alone.
    pub fn body_atom_variables(&self) -> BTreeSet<String> {
        let mut vars = BTreeSet::new();
        for lit in &self.body {
            if let Literal::Atom(a) = lit {
                a.variables(&mut vars);
            }
        }
        vars
    }

    pub fn is_constant_free(&self) -> bool {
        fn term_ok(t: &Term) -> bool {
            matches!(t, Term::Variable(_))
        }
        let atom_ok = |a: &Atom| a.args.iter().all(term_ok);
        atom_ok(&self.head)
            && self.body.iter().all(|lit| match lit {
                Literal::Atom(a) => atom_ok(a),
                Literal::NotEqual(s, t) => term_ok(s) && term_ok(t),
            })
    }

    /// The body atoms as a dataset under substitution `sub` (which must bind
    /// every body-atom variable).
    pub fn body_atoms_under(&self, sub: &Substitution) -> Dataset {
        let mut d = Dataset::new();
        for lit in &self.body {
            if let Literal::Atom(a) = lit {
                d.insert(a.substitute(sub))
                    .expect("substitution must ground the body");
            }
        }
        d
    }

    /// Canonical printed form modulo variable renaming: the lexicographically
    /// least printing over all renamings into `v1..vn`, with body literals
    /// sorted. Two rules are renaming-equal exactly when their keys coincide
    /// (up to [`MAX_EXACT_CANON_VARS`] variables; see the constant).
    pub fn canonical_key(&self) -> String {
        let vars: Vec<String> = self.variables().into_iter().collect();
        if vars.len() > MAX_EXACT_CANON_VARS {
            // First-occurrence fallback: deterministic, may miss some
            // renaming-equalities on very wide rules.
            let order = self.first_occurrence_order();
            return self.key_under(&order);
        }
        permutations(vars.len())
            .map(|perm| {
                let renamed: Vec<&String> = perm.iter().map(|&i| &vars[i]).collect();
                self.key_under(&renamed.into_iter().cloned().collect::<Vec<_>>())
            })
            .min()
            .unwrap_or_else(|| self.key_under(&[]))
    }

    fn first_occurrence_order(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut order = Vec::new();
        let mut visit = |t: &Term| {
            let mut vs = BTreeSet::new();
            t.variables(&mut vs);
            for v in vs {
                if seen.insert(v.clone()) {
                    order.push(v);
                }
            }
        };
        for a in self.head.args.iter() {
            visit(a);
        }
        for lit in &self.body {
            match lit {
                Literal::Atom(a) => a.args.iter().for_each(&mut visit),
                Literal::NotEqual(s, t) => {
                    visit(s);
                    visit(t);
                }
            }
        }
        order
    }

    /// Print the rule with `order[i]` renamed to `v{i+1}` and body literals
    /// sorted. `order` must cover all variables.
    fn key_under(&self, order: &[String]) -> String {
        let mut sub = Substitution::new();
        // Rename through fresh *constants*: substitutions map to ground
        // terms, and the printed form is all that matters for the key.
        for (i, v) in order.iter().enumerate() {
            sub.bind(v.clone(), Term::constant(format!("v{}", i + 1)));
        }
        let head = self.head.substitute(&sub).to_string();
        let mut body: Vec<String> = self
            .body
            .iter()
            .map(|l| apply_substitution(l, &sub).to_string())
            .collect();
        body.sort();
        format!("{head} :- {}", body.join(", "))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, lit) in self.body.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{lit}")?;
        }
        write!(f, ".")
    }
}

/// `true` when the two rules differ only by a bijective variable renaming.
pub fn rules_equal_up_to_renaming(a: &Rule, b: &Rule) -> bool {
    a.canonical_key() == b.canonical_key()
}

/// All permutations of `0..n` (n! of them). Intended for small `n`.
fn permutations(n: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut all = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    fn heap(k: usize, current: &mut Vec<usize>, all: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            all.push(current.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, current, all);
            if k % 2 == 0 {
                current.swap(i, k - 1);
            } else {
                current.swap(0, k - 1);
            }
        }
    }
    heap(n, &mut current, &mut all);
    all.into_iter()
}

/// Immediate consequences of a single rule on a dataset: every head
/// instantiation under a substitution of *all* rule variables by terms of
/// `d` whose body holds in `d`.
///
/// A rule without variables fires on the empty substitution whenever its
/// (ground) body holds, so a bodyless ground rule fires even on the empty
/// dataset. Rules with variables derive nothing from a term-free dataset.
pub fn immediate_consequences(rule: &Rule, d: &Dataset) -> Dataset {
    let vars: Vec<String> = rule.variables().into_iter().collect();
    let terms: Vec<Term> = crate::logic::terms_of(d).into_iter().collect();
    let mut out = Dataset::new();
    if vars.is_empty() {
        let holds = rule
            .body
            .iter()
            .all(|lit| entails(d, lit).expect("ground rule body is ground"));
        if holds {
            out.insert(rule.head.clone()).expect("ground head");
        }
        return out;
    }
    if terms.is_empty() {
        return out;
    }
    // Odometer over all |terms|^|vars| substitutions.
    let mut idx = vec![0usize; vars.len()];
    loop {
        let mut sub = Substitution::new();
        for (v, &i) in vars.iter().zip(idx.iter()) {
            sub.bind(v.clone(), terms[i].clone());
        }
        let holds = rule.body.iter().all(|lit| {
            entails(d, &apply_substitution(lit, &sub)).expect("substitution grounds the body")
        });
        if holds {
            out.insert(rule.head.substitute(&sub))
                .expect("substitution grounds the head");
        }
        // Advance the odometer.
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return out;
            }
            idx[pos] += 1;
            if idx[pos] < terms.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// A set of rules, deduplicated up to variable renaming and iterated in
/// canonical-key order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    rules: BTreeMap<String, Rule>,
}

impl Program {
    pub fn new() -> Self {
        Program::default()
    }

    pub fn from_rules(rules: impl IntoIterator<Item = Rule>) -> Self {
        let mut p = Program::new();
        for r in rules {
            p.insert(r);
        }
        p
    }

    /// Insert a rule; returns `false` when a renaming-equal rule is present.
    pub fn insert(&mut self, rule: Rule) -> bool {
        let key = rule.canonical_key();
        if self.rules.contains_key(&key) {
            return false;
        }
        self.rules.insert(key, rule);
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rule> {
        self.rules.values()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// `true` when the program contains a rule renaming-equal to `rule`.
    pub fn contains_up_to_renaming(&self, rule: &Rule) -> bool {
        self.rules.contains_key(&rule.canonical_key())
    }

    /// Immediate consequences of the whole program: the union over rules.
    pub fn immediate_consequences(&self, d: &Dataset) -> Dataset {
        let mut out = Dataset::new();
        for rule in self.rules.values() {
            out = out.union(&immediate_consequences(rule, d));
        }
        out
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in self.rules.values() {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Atom, Term};

    fn c(name: &str) -> Term {
        Term::constant(name)
    }
    fn v(name: &str) -> Term {
        Term::variable(name)
    }
    fn atom(l: Atom) -> Literal {
        Literal::Atom(l)
    }

    fn edge_rule() -> Rule {
        // U1(?x) :- E_c(?x,?y), U1(?y).
        Rule::new(
            Atom::unary("U1", v("x")),
            vec![
                atom(Atom::binary("E_c", v("x"), v("y"))),
                atom(Atom::unary("U1", v("y"))),
            ],
        )
    }

    #[test]
    fn consequences_of_edge_rule() {
        let d = Dataset::from_facts([
            Atom::binary("E_c", c("a"), c("b")),
            Atom::unary("U1", c("b")),
        ]);
        let out = immediate_consequences(&edge_rule(), &d);
        assert_eq!(out, Dataset::from_facts([Atom::unary("U1", c("a"))]));
    }

    #[test]
    fn consequences_respect_inequalities() {
        // U1(?x) :- E_c(?x,?y1), E_c(?x,?y2), ?y1 != ?y2.
        let rule = Rule::new(
            Atom::unary("U1", v("x")),
            vec![
                atom(Atom::binary("E_c", v("x"), v("y1"))),
                atom(Atom::binary("E_c", v("x"), v("y2"))),
                Literal::NotEqual(v("y1"), v("y2")),
            ],
        );
        let two = Dataset::from_facts([
            Atom::binary("E_c", c("a"), c("b")),
            Atom::binary("E_c", c("a"), c("e")),
        ]);
        assert_eq!(
            immediate_consequences(&rule, &two),
            Dataset::from_facts([Atom::unary("U1", c("a"))])
        );
        // A single successor cannot satisfy the inequality.
        let one = Dataset::from_facts([Atom::binary("E_c", c("a"), c("b"))]);
        assert!(immediate_consequences(&rule, &one).is_empty());
    }

    #[test]
    fn bodyless_rules_fire_on_every_term() {
        // R(?x,?y) :- .
        let rule = Rule::new(Atom::binary("R", v("x"), v("y")), vec![]);
        let d = Dataset::from_facts([Atom::unary("U1", c("a"))]);
        assert_eq!(
            immediate_consequences(&rule, &d),
            Dataset::from_facts([Atom::binary("R", c("a"), c("a"))])
        );
        // With variables present, a term-free dataset derives nothing.
        assert!(immediate_consequences(&rule, &Dataset::new()).is_empty());
    }

    #[test]
    fn ground_rules_fire_via_the_empty_substitution() {
        let rule = Rule::new(Atom::unary("U1", c("a")), vec![]);
        assert_eq!(
            immediate_consequences(&rule, &Dataset::new()),
            Dataset::from_facts([Atom::unary("U1", c("a"))])
        );
        let guarded = Rule::new(
            Atom::unary("U1", c("a")),
            vec![atom(Atom::unary("U2", c("a")))],
        );
        assert!(immediate_consequences(&guarded, &Dataset::new()).is_empty());
    }

    #[test]
    fn program_consequences_union_rules() {
        let p = Program::from_rules([
            edge_rule(),
            Rule::new(Atom::unary("U2", v("x")), vec![atom(Atom::unary("U1", v("x")))]),
        ]);
        let d = Dataset::from_facts([
            Atom::binary("E_c", c("a"), c("b")),
            Atom::unary("U1", c("b")),
        ]);
        let out = p.immediate_consequences(&d);
        assert_eq!(
            out,
            Dataset::from_facts([Atom::unary("U1", c("a")), Atom::unary("U2", c("b"))])
        );
    }

    #[test]
    fn renaming_equality_ignores_names_and_body_order() {
        let r1 = edge_rule();
        let r2 = Rule::new(
            Atom::unary("U1", v("q")),
            vec![
                atom(Atom::unary("U1", v("p"))),
                atom(Atom::binary("E_c", v("q"), v("p"))),
            ],
        );
        assert!(rules_equal_up_to_renaming(&r1, &r2));
        // Head index matters.
        let r3 = Rule::new(
            Atom::unary("U2", v("x")),
            vec![
                atom(Atom::binary("E_c", v("x"), v("y"))),
                atom(Atom::unary("U1", v("y"))),
            ],
        );
        assert!(!rules_equal_up_to_renaming(&r1, &r3));
    }

    /// Exhaustive bijection search: the independent oracle for renaming
    /// equality on small rules.
    fn renaming_oracle(a: &Rule, b: &Rule) -> bool {
        let va: Vec<String> = a.variables().into_iter().collect();
        let vb: Vec<String> = b.variables().into_iter().collect();
        if va.len() != vb.len() {
            return false;
        }
        let norm = |r: &Rule, order: &[String]| -> (String, BTreeSet<String>) {
            let mut sub = Substitution::new();
            for (i, v) in order.iter().enumerate() {
                sub.bind(v.clone(), Term::constant(format!("w{i}")));
            }
            (
                r.head.substitute(&sub).to_string(),
                r.body
                    .iter()
                    .map(|l| apply_substitution(l, &sub).to_string())
                    .collect(),
            )
        };
        let target = norm(b, &vb);
        permutations(va.len()).any(|perm| {
            let order: Vec<String> = perm.iter().map(|&i| va[i].clone()).collect();
            norm(a, &order) == target
        })
    }

    #[test]
    fn canonical_keys_match_bijection_oracle() {
        let swapped_groups = Rule::new(
            Atom::unary("U1", v("x")),
            vec![
                atom(Atom::binary("E_c", v("x"), v("y2"))),
                atom(Atom::unary("U2", v("y2"))),
                atom(Atom::binary("E_c", v("x"), v("y1"))),
                Literal::NotEqual(v("y1"), v("y2")),
            ],
        );
        let original = Rule::new(
            Atom::unary("U1", v("a"))            ,
            vec![
                atom(Atom::binary("E_c", v("a"), v("b"))),
                atom(Atom::binary("E_c", v("a"), v("d"))),
                atom(Atom::unary("U2", v("d"))),
                Literal::NotEqual(v("b"), v("d")),
            ],
        );
        let cases = [
            (edge_rule(), edge_rule(), true),
            (swapped_groups.clone(), original.clone(), true),
            (swapped_groups, edge_rule(), false),
        ];
        for (a, b, expect) in cases {
            assert_eq!(renaming_oracle(&a, &b), expect, "oracle on {a} vs {b}");
            assert_eq!(
                rules_equal_up_to_renaming(&a, &b),
                expect,
                "canonical keys on {a} vs {b}"
            );
        }
    }

    #[test]
    fn programs_deduplicate_up_to_renaming() {
        let mut p = Program::new();
        assert!(p.insert(edge_rule()));
        let renamed = Rule::new(
            Atom::unary("U1", v("s")),
            vec![
                atom(Atom::binary("E_c", v("s"), v("t"))),
                atom(Atom::unary("U1", v("t"))),
            ],
        );
        assert!(!p.insert(renamed));
        assert_eq!(p.len(), 1);
        assert!(p.contains_up_to_renaming(&edge_rule()));
    }
}
