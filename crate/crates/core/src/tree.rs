//! Tree-shaped rule bodies: formulas with one free root variable whose
//! binary atoms form a tree hanging off the root.
//!
//! A formula node carries a set of unary predicates for its variable and a
//! multiset of *groups*. A group is an edge colour plus a non-empty multiset
//! of child formulas; the grammar asserts pairwise inequalities between the
//! children of one group (and only there), so a two-child group means "two
//! *distinct* successors". Multiple same-colour groups are allowed and stay
//! mutually unconstrained. Inequality-free formulas are exactly those whose
//! groups are all singletons.
//!
//! The depth of a variable is its edge distance from the root and a formula
//! is `(d, f)`-tree-like when every variable at depth `i` has at most
//! `f * (d - i)` children. Formulas are kept in a canonical form — children
//! and groups sorted by their serialised key — so that syntactic equality
//! coincides with equality up to variable renaming.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::logic::{Atom, Literal, Signature, Term};
use crate::rules::Rule;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("enumeration bound {base}^{exponent} exceeds the budget of {budget} formulas")]
    BudgetExceeded {
        base: BigUint,
        exponent: BigUint,
        budget: u64,
    },
    #[error("rule is not tree-like: {0}")]
    NotTreeLike(String),
}

/// A group: one edge colour and the non-empty multiset of child subtrees,
/// pairwise-distinct by implicit inequalities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Group {
    colour: String,
    children: Vec<TreeFormula>,
}

impl Group {
    pub fn new(colour: impl Into<String>, mut children: Vec<TreeFormula>) -> Self {
        assert!(!children.is_empty(), "groups have at least one child");
        children.sort_by(|a, b| a.canonical_key().cmp(&b.canonical_key()));
        Group { colour: colour.into(), children }
    }

    pub fn colour(&self) -> &str {
        &self.colour
    }

    pub fn children(&self) -> &[TreeFormula] {
        &self.children
    }
}

/// A tree-shaped formula in canonical form. The empty formula (no unaries,
/// no groups) is the always-true body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TreeFormula {
    unaries: BTreeSet<usize>,
    groups: Vec<Group>,
}

impl TreeFormula {
    /// The always-true body (printed `true`).
    pub fn top() -> Self {
        TreeFormula { unaries: BTreeSet::new(), groups: Vec::new() }
    }

    /// Build a node; children inside groups and the groups themselves are
    /// sorted into canonical order. Conjunction with the true formula is the
    /// identity by construction: `top` contributes no unaries and no groups.
    pub fn new(unaries: BTreeSet<usize>, mut groups: Vec<Group>) -> Self {
        groups.sort_by_cached_key(Group::canonical_key);
        TreeFormula { unaries, groups }
    }

    pub fn unaries(&self) -> &BTreeSet<usize> {
        &self.unaries
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn is_top(&self) -> bool {
        self.unaries.is_empty() && self.groups.is_empty()
    }

    /// Number of child variables of the root: the total child count over all
    /// groups.
    pub fn fan_out(&self) -> usize {
        self.groups.iter().map(|g| g.children.len()).sum()
    }

    /// Edge depth of the deepest variable.
    pub fn depth(&self) -> usize {
        self.groups
            .iter()
            .flat_map(|g| g.children.iter())
            .map(|c| c.depth() + 1)
            .max()
            .unwrap_or(0)
    }

    /// Every group has exactly one child, recursively, so the flattened body
    /// contains no inequalities.
    pub fn is_inequality_free(&self) -> bool {
        self.groups
            .iter()
            .all(|g| g.children.len() == 1 && g.children[0].is_inequality_free())
    }

    /// `(d, f)` bounds: a variable at depth `i` has fan-out at most
    /// `f * (d - i)`; in particular depth never exceeds `d`.
    pub fn satisfies_bounds(&self, d: usize, f: usize) -> bool {
        fn walk(node: &TreeFormula, remaining: usize, f: usize) -> bool {
            if node.fan_out() > f * remaining {
                return false;
            }
            if remaining == 0 {
                return node.groups.is_empty();
            }
            node.groups
                .iter()
                .flat_map(|g| g.children.iter())
                .all(|c| walk(c, remaining - 1, f))
        }
        walk(self, d, f)
    }

    /// Serialised canonical form; equal keys exactly characterise equality
    /// up to variable renaming.
    pub fn canonical_key(&self) -> String {
        let mut out = String::new();
        self.write_key(&mut out);
        out
    }

    fn write_key(&self, out: &mut String) {
        out.push_str("(n");
        for i in &self.unaries {
            out.push_str(&format!(" u{i}"));
        }
        for g in &self.groups {
            out.push_str(&format!(" (g {}", g.colour));
            for c in &g.children {
                out.push(' ');
                c.write_key(out);
            }
            out.push(')');
        }
        out.push(')');
    }
}

impl Group {
    fn canonical_key(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("(g {}", self.colour));
        for c in &self.children {
            out.push(' ');
            c.write_key(&mut out);
        }
        out.push(')');
        out
    }
}

impl fmt::Display for TreeFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_top() {
            return write!(f, "true");
        }
        let rule = tree_formula_to_rule(self, 1);
        let body: Vec<String> = rule.body.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", body.join(", "))
    }
}

/// `true` when the two formulas are equal up to variable renaming — by the
/// canonical-form invariant, plain equality.
pub fn tree_formulas_equal_up_to_renaming(a: &TreeFormula, b: &TreeFormula) -> bool {
    a == b
}

/// The advertised upper estimate for the number of `(d, f)`-tree-like
/// formulas: `(|C| * 2^δ)^(f^d * (d+1)!)`. Used as the budget guard before
/// enumeration. Note this estimate can *undercount* the enumeration (it
/// charges every formula for a full complement of variables), so treat it
/// as a scale indicator, not an exact bound.
pub fn enumeration_bound(sig: &Signature, d: usize, f: usize) -> (BigUint, BigUint) {
    let base = BigUint::from(sig.colours().len())
        * BigUint::from(2u32).pow(u32::try_from(sig.delta()).expect("sane delta"));
    let mut exponent = BigUint::from(f).pow(u32::try_from(d).expect("sane depth"));
    for i in 1..=(d as u64 + 1) {
        exponent *= BigUint::from(i);
    }
    (base, exponent)
}

fn check_budget(sig: &Signature, d: usize, f: usize, budget: u64) -> Result<(), TreeError> {
    let (base, exponent) = enumeration_bound(sig, d, f);
    let exceeded = if base <= BigUint::one() || exponent.is_zero() {
        false // bound is at most 1
    } else if let Some(e) = exponent.to_u32().filter(|&e| e < 64) {
        base.pow(e) > BigUint::from(budget)
    } else {
        true // base >= 2 and exponent >= 64: bound >= 2^64 > any u64 budget
    };
    if exceeded {
        Err(TreeError::BudgetExceeded { base, exponent, budget })
    } else {
        Ok(())
    }
}

/// Enumerate every `(d, f)`-tree-like formula over `sig` exactly once up to
/// variable renaming, ordered by depth and then by canonical key. With
/// `allow_inequalities = false` the result is exactly the subset of the
/// unrestricted enumeration whose flattened bodies have no inequalities.
///
/// Errors without enumerating when [`enumeration_bound`] exceeds `budget`.
pub fn enumerate_tree_like(
    sig: &Signature,
    d: usize,
    f: usize,
    allow_inequalities: bool,
    budget: u64,
) -> Result<Vec<TreeFormula>, TreeError> {
    check_budget(sig, d, f, budget)?;

    let unary_subsets: Vec<BTreeSet<usize>> = {
        let delta = sig.delta();
        (0u64..(1u64 << delta))
            .map(|mask| (1..=delta).filter(|i| mask >> (i - 1) & 1 == 1).collect())
            .collect()
    };

    // levels[r] holds the shapes legal for a node with `r` remaining depth,
    // i.e. a node at depth d - r. Bounds loosen as r grows, so each level
    // contains the previous one.
    let mut levels: Vec<Vec<TreeFormula>> = Vec::with_capacity(d + 1);
    for r in 0..=d {
        let max_children = f * r;
        let mut nodes = Vec::new();
        if max_children == 0 {
            for unaries in &unary_subsets {
                nodes.push(TreeFormula::new(unaries.clone(), Vec::new()));
            }
        } else {
            let child_shapes = &levels[r - 1];
            // All candidate groups: one colour plus a non-empty multiset of
            // child shapes (singletons only in inequality-free mode).
            let mut candidates: Vec<Group> = Vec::new();
            for colour in sig.colours() {
                let max_size = if allow_inequalities { max_children } else { 1 };
                let mut multiset: Vec<TreeFormula> = Vec::new();
                collect_multisets(child_shapes, 0, max_size, &mut multiset, &mut |m| {
                    if !m.is_empty() {
                        candidates.push(Group::new(colour.clone(), m.to_vec()));
                    }
                });
            }
            // All multisets of candidate groups within the fan-out budget.
            let mut chosen: Vec<Group> = Vec::new();
            let mut group_sets: Vec<Vec<Group>> = Vec::new();
            collect_group_multisets(&candidates, 0, max_children, &mut chosen, &mut group_sets);
            for unaries in &unary_subsets {
                for groups in &group_sets {
                    nodes.push(TreeFormula::new(unaries.clone(), groups.clone()));
                }
            }
        }
        levels.push(nodes);
    }

    let mut result = levels.pop().unwrap();
    result.sort_by_cached_key(|t| (t.depth(), t.canonical_key()));
    result.dedup();
    Ok(result)
}

/// Emit every multiset (as a sorted selection) of `shapes` with at most
/// `remaining` elements, including the empty one, each exactly once.
fn collect_multisets(
    shapes: &[TreeFormula],
    start: usize,
    remaining: usize,
    current: &mut Vec<TreeFormula>,
    emit: &mut impl FnMut(&[TreeFormula]),
) {
    emit(current);
    if remaining == 0 {
        return;
    }
    for i in start..shapes.len() {
        current.push(shapes[i].clone());
        collect_multisets(shapes, i, remaining - 1, current, emit);
        current.pop();
    }
}

/// Emit every multiset of candidate groups whose total child count fits the
/// budget, each exactly once.
fn collect_group_multisets(
    candidates: &[Group],
    start: usize,
    budget: usize,
    current: &mut Vec<Group>,
    out: &mut Vec<Vec<Group>>,
) {
    out.push(current.clone());
    for i in start..candidates.len() {
        let weight = candidates[i].children.len();
        if weight <= budget {
            current.push(candidates[i].clone());
            collect_group_multisets(candidates, i, budget - weight, current, out);
            current.pop();
        }
    }
}

/// Flatten a tree formula into a rule with head `U<head_index>(?x)`.
///
/// The root variable is `x`; child variables are `y1, y2, ..` in canonical
/// traversal order. Each group contributes its children's edge atoms and
/// subtrees followed by the group's pairwise inequalities.
pub fn tree_formula_to_rule(phi: &TreeFormula, head_index: usize) -> Rule {
    let mut body = Vec::new();
    let mut counter = 0usize;
    flatten(phi, &Term::variable("x"), &mut counter, &mut body);
    Rule::new(Atom::unary(format!("U{head_index}"), Term::variable("x")), body)
}

fn flatten(node: &TreeFormula, var: &Term, counter: &mut usize, body: &mut Vec<Literal>) {
    for i in &node.unaries {
        body.push(Literal::Atom(Atom::unary(format!("U{i}"), var.clone())));
    }
    for group in &node.groups {
        let mut members = Vec::new();
        for child in &group.children {
            *counter += 1;
            let child_var = Term::variable(format!("y{counter}"));
            body.push(Literal::Atom(Atom::binary(
                format!("E_{}", group.colour),
                var.clone(),
                child_var.clone(),
            )));
            flatten(child, &child_var, counter, body);
            members.push(child_var);
        }
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                body.push(Literal::NotEqual(members[i].clone(), members[j].clone()));
            }
        }
    }
}

/// Parse a rule back into a tree formula plus its head index, validating
/// the full tree-likeness contract: a unary constant-free head, body atoms
/// over the signature, binary atoms forming a tree rooted at the head
/// variable, and inequalities only between same-group siblings.
pub fn rule_to_tree_formula(
    sig: &Signature,
    rule: &Rule,
) -> Result<(TreeFormula, usize), TreeError> {
    let fail = |msg: String| Err(TreeError::NotTreeLike(msg));
    if !rule.is_constant_free() {
        return fail("tree-like rules are constant-free".into());
    }
    let head_index = match Signature::parse_unary_predicate(&rule.head.predicate) {
        Some(i) if rule.head.args.len() == 1 && (1..=sig.delta()).contains(&i) => i,
        _ => return fail(format!("head `{}` is not a signature unary atom", rule.head)),
    };
    let root = match &rule.head.args[0] {
        Term::Variable(v) => v.clone(),
        other => return fail(format!("head argument `{other}` is not a variable")),
    };

    // Collect the body into unary labels, edges, and inequalities.
    let var_of = |t: &Term| -> Result<String, TreeError> {
        match t {
            Term::Variable(v) => Ok(v.clone()),
            other => Err(TreeError::NotTreeLike(format!("`{other}` is not a variable"))),
        }
    };
    let mut unary: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    let mut edges: BTreeSet<(String, String, String)> = BTreeSet::new(); // (from, colour, to)
    let mut inequalities: BTreeSet<(String, String)> = BTreeSet::new();
    for lit in &rule.body {
        match lit {
            Literal::Atom(a) if a.args.len() == 1 => {
                match Signature::parse_unary_predicate(&a.predicate) {
                    Some(i) if (1..=sig.delta()).contains(&i) => {
                        unary.entry(var_of(&a.args[0])?).or_default().insert(i);
                    }
                    _ => return fail(format!("`{a}` is not a signature unary atom")),
                }
            }
            Literal::Atom(a) => match Signature::parse_edge_predicate(&a.predicate) {
                Some(c) if sig.colour_index(c).is_some() => {
                    edges.insert((var_of(&a.args[0])?, c.to_string(), var_of(&a.args[1])?));
                }
                _ => return fail(format!("`{a}` is not a signature edge atom")),
            },
            Literal::NotEqual(s, t) => {
                let (s, t) = (var_of(s)?, var_of(t)?);
                if s == t {
                    return fail(format!("inequality `{s} != {s}` is unsatisfiable"));
                }
                let (lo, hi) = if s < t { (s, t) } else { (t, s) };
                inequalities.insert((lo, hi));
            }
        }
    }

    // Binary atoms must form a tree rooted at the head variable.
    let mut parent: BTreeMap<String, (String, String)> = BTreeMap::new(); // child -> (parent, colour)
    for (from, colour, to) in &edges {
        if *to == root {
            return fail("root variable has an incoming edge".into());
        }
        if parent.insert(to.clone(), (from.clone(), colour.clone())).is_some() {
            return fail(format!("variable `{to}` has two incoming edges"));
        }
    }
    let mut children_of: BTreeMap<String, BTreeMap<String, Vec<String>>> = BTreeMap::new();
    for (child, (p, colour)) in &parent {
        children_of
            .entry(p.clone())
            .or_default()
            .entry(colour.clone())
            .or_default()
            .push(child.clone());
    }
    // Reachability from the root covers every variable mentioned anywhere.
    let mut reachable = BTreeSet::from([root.clone()]);
    let mut frontier = vec![root.clone()];
    while let Some(v) = frontier.pop() {
        for kids in children_of.get(&v).into_iter().flat_map(BTreeMap::values) {
            for kid in kids {
                if reachable.insert(kid.clone()) {
                    frontier.push(kid.clone());
                }
            }
        }
    }
    let mut mentioned: BTreeSet<String> = unary.keys().cloned().collect();
    mentioned.extend(parent.keys().cloned());
    mentioned.extend(edges.iter().map(|(from, _, _)| from.clone()));
    for (s, t) in &inequalities {
        mentioned.insert(s.clone());
        mentioned.insert(t.clone());
    }
    for v in &mentioned {
        if !reachable.contains(v) {
            return fail(format!("variable `{v}` is not connected to the root"));
        }
    }

    // Inequalities must pair same-colour siblings, and within one parent and
    // colour the inequality components must be cliques (the groups).
    for (s, t) in &inequalities {
        match (parent.get(s), parent.get(t)) {
            (Some((ps, cs)), Some((pt, ct))) if ps == pt && cs == ct => {}
            _ => {
                return fail(format!(
                    "inequality `{s} != {t}` does not relate same-colour siblings"
                ))
            }
        }
    }

    fn build(
        var: &str,
        unary: &BTreeMap<String, BTreeSet<usize>>,
        children_of: &BTreeMap<String, BTreeMap<String, Vec<String>>>,
        inequalities: &BTreeSet<(String, String)>,
    ) -> Result<TreeFormula, TreeError> {
        let mut groups = Vec::new();
        for (colour, siblings) in children_of.get(var).into_iter().flatten() {
            // Partition the same-colour siblings into inequality components.
            let mut component: BTreeMap<String, usize> = BTreeMap::new();
            for (i, s) in siblings.iter().enumerate() {
                component.insert(s.clone(), i);
            }
            let distinct = |a: &str, b: &str| {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                inequalities.contains(&(lo.to_string(), hi.to_string()))
            };
            // Union-find by repeated relabelling (sibling counts are tiny).
            loop {
                let mut changed = false;
                for a in siblings {
                    for b in siblings {
                        if distinct(a, b) {
                            let (ca, cb) = (component[a], component[b]);
                            // Linked by an inequality: same group.
                            if ca != cb {
                                let lo = ca.min(cb);
                                for v in component.values_mut() {
                                    if *v == ca || *v == cb {
                                        *v = lo;
                                    }
                                }
                                changed = true;
                            }
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            let mut by_component: BTreeMap<usize, Vec<&String>> = BTreeMap::new();
            for s in siblings {
                by_component.entry(component[s]).or_default().push(s);
            }
            for members in by_component.values() {
                // Components must be cliques: every pair inside carries an
                // explicit inequality.
                for i in 0..members.len() {
                    for j in i + 1..members.len() {
                        if !distinct(members[i], members[j]) {
                            return Err(TreeError::NotTreeLike(format!(
                                "inequalities among `{}` and `{}` do not form a clique",
                                members[i], members[j]
                            )));
                        }
                    }
                }
                let children = members
                    .iter()
                    .map(|m| build(m, unary, children_of, inequalities))
                    .collect::<Result<Vec<_>, _>>()?;
                groups.push(Group::new(colour.clone(), children));
            }
        }
        Ok(TreeFormula::new(
            unary.get(var).cloned().unwrap_or_default(),
            groups,
        ))
    }

    let tree = build(&root, &unary, &children_of, &inequalities)?;
    Ok((tree, head_index))
}
