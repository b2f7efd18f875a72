//! Rule extraction: turning a network into an equivalent Datalog program.
//!
//! The extracted program consists of every tree-like rule, up to variable
//! renaming, that the network *captures* — i.e. whose consequences the
//! network reproduces on every dataset. Capture is decidable for the rules
//! arising here:
//!
//! * For a rule whose variables all occur in body atoms, it suffices to
//!   instantiate the variables in every possible way over as many fresh
//!   constants as the rule has variables and compare single applications of
//!   the rule and of the network on each instantiated body.
//! * For the body-free rule (`U_i(?x) :- .`), which fires on every term of
//!   every dataset, monotonicity reduces the check to the handful of
//!   single-fact datasets: each term of each dataset appears in some fact,
//!   and if the fact alone already forces the head then so does the whole
//!   dataset. Renaming invariance shrinks those to one representative per
//!   shape: each unary label, and per colour an edge (checking both
//!   endpoints) and a self-loop.
//!
//! Rules with an unbound variable and a non-empty body fall outside both
//! cases and are rejected rather than answered unsoundly.
//!
//! The candidate space is bounded by the network itself: depth is the layer
//! count, and fan-out is `|colours| * max-dimension * capacity`, since no
//! larger neighbourhood can influence a classification. Inequalities are
//! needed only when some layer's capacity exceeds one: only then can the
//! network count neighbours rather than merely detect them.

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::capacity::{layer_capacities, CapacityError};
use crate::codec::{canonical_transform, CodecError};
use crate::exec::retain_filter;
use crate::gnn::{validate_monotonic_max_sum, Gnn, Violation};
use crate::logic::{Atom, Dataset, Signature, Substitution, Term};
use crate::rules::{immediate_consequences, Program, Rule};
use crate::tree::{enumerate_tree_like, tree_formula_to_rule, TreeError};
use crate::ExecMode;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("the network violates the required weight/activation conditions: {}",
            .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidGnn(Vec<Violation>),
    #[error("rule `{0}` contains constants; the capture test needs a constant-free rule")]
    RuleHasConstants(String),
    #[error("rule `{0}` has a variable outside its body atoms; no sound capture test applies")]
    UnsupportedRule(String),
    #[error("candidate fan-out {0} is too large to enumerate")]
    FanOutTooLarge(BigUint),
    #[error(transparent)]
    Budget(#[from] TreeError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

impl From<CapacityError> for ExtractError {
    fn from(e: CapacityError) -> Self {
        match e {
            CapacityError::InvalidGnn(v) => ExtractError::InvalidGnn(v),
        }
    }
}

/// Does the network reproduce every consequence of `rule` on every dataset?
pub fn captures(gnn: &Gnn, rule: &Rule) -> Result<bool, ExtractError> {
    let violations = validate_monotonic_max_sum(gnn);
    if !violations.is_empty() {
        return Err(ExtractError::InvalidGnn(violations));
    }
    if !rule.is_constant_free() {
        return Err(ExtractError::RuleHasConstants(rule.to_string()));
    }
    let bound = rule.body_atom_variables();
    let all = rule.variables();
    if bound == all {
        return captures_bound_rule(gnn, rule);
    }
    if rule.body.is_empty() {
        if let Some(i) = unary_head_index(gnn.signature(), &rule.head) {
            return captures_body_free(gnn, i);
        }
    }
    Err(ExtractError::UnsupportedRule(rule.to_string()))
}

fn unary_head_index(sig: &Signature, head: &Atom) -> Option<usize> {
    match Signature::parse_unary_predicate(&head.predicate) {
        Some(i) if head.args.len() == 1 && (1..=sig.delta()).contains(&i) => Some(i),
        _ => None,
    }
}

/// The instantiation test: over a set of fresh constants the size of the
/// variable set, try every substitution; whenever a single rule application
/// on the instantiated body derives the instantiated head, the network must
/// derive it too.
fn captures_bound_rule(gnn: &Gnn, rule: &Rule) -> Result<bool, ExtractError> {
    let vars: Vec<String> = rule.variables().into_iter().collect();
    let constants: Vec<Term> = (1..=vars.len())
        .map(|i| Term::constant(format!("s{i}")))
        .collect();
    let mut choice = vec![0usize; vars.len()];
    loop {
        let mut sub = Substitution::new();
        for (v, &c) in vars.iter().zip(&choice) {
            sub.bind(v.clone(), constants[c].clone());
        }
        let body = rule.body_atoms_under(&sub);
        let head = rule.head.substitute(&sub);
        if immediate_consequences(rule, &body).contains(&head)
            && !canonical_transform(gnn, &body)?.contains(&head)
        {
            return Ok(false);
        }
        // Odometer over all |constants|^|vars| substitutions.
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                return Ok(true);
            }
            choice[pos] += 1;
            if choice[pos] < constants.len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// Capture test for `U_i(?x) :- .`: the head must be derived for every term
/// of every single-fact dataset.
fn captures_body_free(gnn: &Gnn, head_index: usize) -> Result<bool, ExtractError> {
    let sig = gnn.signature().clone();
    let a = Term::constant("a");
    let b = Term::constant("b");
    let mut cases: Vec<(Atom, Vec<Term>)> = Vec::new();
    for j in 1..=sig.delta() {
        cases.push((Atom::unary(sig.unary_predicate(j), a.clone()), vec![a.clone()]));
    }
    for colour in sig.colours() {
        let edge = sig.edge_predicate(colour);
        cases.push((
            Atom::binary(&edge, a.clone(), b.clone()),
            vec![a.clone(), b.clone()],
        ));
        cases.push((Atom::binary(&edge, a.clone(), a.clone()), vec![a.clone()]));
    }
    for (fact, focal_terms) in cases {
        let dataset = Dataset::from_facts([fact]);
        let derived = canonical_transform(gnn, &dataset)?;
        for t in focal_terms {
            if !derived.contains(&Atom::unary(sig.unary_predicate(head_index), t)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Extract the program equivalent to the network: every captured tree-like
/// rule within the network-determined depth and fan-out, one enumeration
/// per head predicate, deduplicated up to renaming.
///
/// `budget` caps the candidate enumeration (see
/// [`crate::tree::enumerate_tree_like`]); `mode` selects whether capture
/// tests run in parallel. Results are identical in both modes.
pub fn extract_program(gnn: &Gnn, budget: u64, mode: ExecMode) -> Result<Program, ExtractError> {
    let violations = validate_monotonic_max_sum(gnn);
    if !violations.is_empty() {
        return Err(ExtractError::InvalidGnn(violations));
    }
    let report = layer_capacities(gnn)?;
    let sig = gnn.signature();
    let fan_out_big = BigUint::from(sig.colours().len())
        * BigUint::from(gnn.max_dimension())
        * &report.capacity;
    let fan_out = usize::try_from(&fan_out_big)
        .map_err(|_| ExtractError::FanOutTooLarge(fan_out_big.clone()))?;
    let depth = gnn.num_layers();
    let allow_inequalities = report.capacity > BigUint::one();
    let bodies = enumerate_tree_like(sig, depth, fan_out, allow_inequalities, budget)?;
    let mut candidates = Vec::with_capacity(bodies.len() * sig.delta());
    for head in 1..=sig.delta() {
        for body in &bodies {
            candidates.push(tree_formula_to_rule(body, head));
        }
    }
    let kept = retain_filter(mode, candidates, |rule| {
        captures(gnn, rule).expect("constant-free tree-shaped candidates cannot fail")
    });
    let mut program = Program::new();
    for rule in kept {
        program.insert(rule);
    }
    Ok(program)
}
