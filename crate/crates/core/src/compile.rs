//! Compiling a Datalog program into an equivalent network.
//!
//! Input: a program of tree-shaped, inequality-free rules with unary heads.
//! The construction enumerates every inequality-free tree formula within the
//! program's depth/fan-out bounds, ordered by depth, and dedicates one
//! feature component to each formula. Layer by layer, a vertex's component
//! for a formula becomes `1` exactly when the formula is satisfiable at that
//! vertex's term:
//!
//! * layer 1 evaluates the depth-0 formulas (conjunctions of unary labels)
//!   directly from the input bits;
//! * each middle layer carries the already-decided components through an
//!   identity block and wires each new formula (one depth deeper) as a
//!   conjunction of its unary part and, per edge group, a max-aggregated
//!   neighbour component — with a bias of one minus the number of conjuncts,
//!   so the pre-activation hits `1` exactly when all conjuncts hold and
//!   stays at or below `0` otherwise;
//! * the final layer ORs, for each head predicate, the components of all
//!   rule bodies with that head.
//!
//! The result uses ReLU, max aggregation (bound 1) and a threshold-1
//! classifier throughout, and its weights are nonnegative by construction.
//!
//! One reading note on the middle layers: the neighbour wiring applies only
//! to the rows introduced for the new formulas. The carried prefix rows keep
//! plain identity weights — adding neighbour terms to them would push
//! already-true components above `1` and could flip a formula's component to
//! `1` when only a subformula holds, breaking the Boolean reading above.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::codec::{encode, CodecError};
use crate::gnn::{
    forward_trace, Activation, AggregationSpec, Classifier, Gnn, Layer, Matrix,
};
use crate::graph::ColoredGraph;
use crate::logic::{Dataset, Signature, Term};
use crate::rational::{q, Q};
use crate::rules::Program;
use crate::tree::{
    enumerate_tree_like, rule_to_tree_formula, tree_formula_to_rule, TreeError, TreeFormula,
};
use num_traits::{One, Zero};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("rule `{0}` uses inequalities; only inequality-free rules can be compiled")]
    RuleHasInequalities(String),
    #[error("rule `{0}` exceeds the requested bounds (depth {1}, fan-out {2})")]
    BoundsViolated(String, usize, usize),
}

/// All inequality-free tree formulas within the bounds, one per renaming
/// class, ordered by depth and then by canonical form — the component
/// layout used by [`compile`].
pub fn enumerate_ordered_formulas(
    sig: &Signature,
    depth: usize,
    fan_out: usize,
    budget: u64,
) -> Result<Vec<TreeFormula>, TreeError> {
    enumerate_tree_like(sig, depth, fan_out, false, budget)
}

/// A compiled network together with the formula layout needed to interpret
/// (and test) its internal features.
#[derive(Debug, Clone)]
pub struct CompiledGnn {
    pub gnn: Gnn,
    /// The ordered formula list; component `i` of every internal layer
    /// wide enough corresponds to `formulas[i - 1]`.
    pub formulas: Vec<TreeFormula>,
    /// `depth_counts[l]` = number of formulas of depth at most `l`.
    pub depth_counts: Vec<usize>,
    pub depth: usize,
    pub fan_out: usize,
}

/// Compile the program into a network whose transformation agrees with the
/// program's single-step consequences on every dataset.
///
/// `depth`/`fan_out` default to the tightest bounds covering every rule;
/// passing them explicitly widens the formula space (the network grows
/// accordingly but stays equivalent). `budget` caps the enumeration as in
/// [`enumerate_tree_like`].
pub fn compile(
    sig: &Signature,
    program: &Program,
    depth: Option<usize>,
    fan_out: Option<usize>,
    budget: u64,
) -> Result<CompiledGnn, CompileError> {
    // Validate every rule and collect its tree shape and head.
    let mut shaped: Vec<(TreeFormula, usize)> = Vec::with_capacity(program.len());
    for rule in program.iter() {
        let (tree, head) = rule_to_tree_formula(sig, rule)?;
        if !tree.is_inequality_free() {
            return Err(CompileError::RuleHasInequalities(rule.to_string()));
        }
        shaped.push((tree, head));
    }
    let depth = depth.unwrap_or_else(|| shaped.iter().map(|(t, _)| t.depth()).max().unwrap_or(0));
    let fan_out = fan_out.unwrap_or_else(|| {
        fn max_fan_out(t: &TreeFormula) -> usize {
            t.groups()
                .iter()
                .flat_map(|g| g.children())
                .map(max_fan_out)
                .max()
                .unwrap_or(0)
                .max(t.fan_out())
        }
        shaped.iter().map(|(t, _)| max_fan_out(t)).max().unwrap_or(0)
    });
    for (tree, head) in &shaped {
        if !tree.satisfies_bounds(depth, fan_out) {
            let rule = tree_formula_to_rule(tree, *head);
            return Err(CompileError::BoundsViolated(rule.to_string(), depth, fan_out));
        }
    }

    let formulas = enumerate_ordered_formulas(sig, depth, fan_out, budget)?;
    let index: BTreeMap<String, usize> = formulas
        .iter()
        .enumerate()
        .map(|(at, t)| (t.canonical_key(), at + 1))
        .collect();
    let heads: std::collections::BTreeSet<(usize, usize)> = shaped
        .iter()
        .map(|(t, h)| (index[&t.canonical_key()], *h))
        .collect();
    let mut depth_counts = Vec::new();
    for l in 0.. {
        let count = formulas.iter().filter(|t| t.depth() <= l).count();
        depth_counts.push(count);
        if l >= depth {
            break;
        }
    }

    let delta = sig.delta();
    let colours = sig.colours().len();
    let num_layers = depth + 2;
    let dim = |l: usize| -> usize {
        // δ_0 = δ_L = δ; in between, the number of formulas decided so far.
        if l == 0 || l == num_layers {
            delta
        } else {
            depth_counts[l - 1]
        }
    };

    let mut layers = Vec::with_capacity(num_layers);
    for l in 1..=num_layers {
        let rows = dim(l);
        let cols = dim(l - 1);
        let mut a = Matrix::zeros(rows, cols);
        let mut b = vec![Matrix::zeros(rows, cols); colours];
        let mut bias = vec![Q::zero(); rows];
        if l == 1 {
            for (row, tau) in formulas.iter().take(rows).enumerate() {
                for u in tau.unaries() {
                    a.set(row, u - 1, Q::one());
                }
                bias[row] = q(1) - q(tau.unaries().len() as i64);
            }
        } else if l < num_layers {
            for row in 0..rows {
                if row < cols {
                    a.set(row, row, Q::one());
                    continue;
                }
                // A newly decided formula: conjunction of its unary part
                // and one neighbour check per edge group.
                let tau = &formulas[row];
                let unary_part = TreeFormula::new(tau.unaries().clone(), Vec::new());
                a.set(row, index[&unary_part.canonical_key()] - 1, Q::one());
                for group in tau.groups() {
                    let colour = sig.colour_index(group.colour()).expect("validated colour");
                    let child = &group.children()[0];
                    b[colour].set(row, index[&child.canonical_key()] - 1, Q::one());
                }
                let conjuncts: Q = a
                    .row(row)
                    .iter()
                    .chain(b.iter().flat_map(|m| m.row(row).iter()))
                    .sum();
                bias[row] = q(1) - conjuncts;
            }
        } else {
            for j in 0..formulas.len() {
                for i in 1..=delta {
                    if heads.contains(&(j + 1, i)) {
                        a.set(i - 1, j, Q::one());
                    }
                }
            }
        }
        layers.push(Layer { a, b, bias, agg: AggregationSpec::Finite(1) });
    }

    let gnn = Gnn::new(
        sig.clone(),
        layers,
        Activation::relu(),
        Classifier::new(q(1)),
    )
    .expect("compiled dimensions are consistent by construction");
    Ok(CompiledGnn { gnn, formulas, depth_counts, depth, fan_out })
}

/// Does the dataset satisfy the formula with its root variable mapped to
/// `term`? Checked directly against the dataset: unary conjuncts by
/// membership, each edge group by an injective assignment of its children
/// to distinct successors.
pub fn formula_satisfied(sig: &Signature, d: &Dataset, phi: &TreeFormula, term: &Term) -> bool {
    use crate::logic::Atom;
    for u in phi.unaries() {
        if !d.contains(&Atom::unary(sig.unary_predicate(*u), term.clone())) {
            return false;
        }
    }
    for group in phi.groups() {
        let edge = sig.edge_predicate(group.colour());
        let successors: Vec<Term> = d
            .iter()
            .filter_map(|f| match Signature::parse_edge_predicate(&f.predicate) {
                Some(c) if c == group.colour() && f.predicate == edge && f.args[0] == *term => {
                    Some(f.args[1].clone())
                }
                _ => None,
            })
            .collect();
        // Injective assignment children -> distinct successors, by
        // backtracking (group sizes are tiny).
        fn assign(
            sig: &Signature,
            d: &Dataset,
            children: &[TreeFormula],
            successors: &[Term],
            used: &mut Vec<bool>,
        ) -> bool {
            let Some(child) = children.first() else {
                return true;
            };
            for (at, s) in successors.iter().enumerate() {
                if !used[at] && formula_satisfied(sig, d, child, s) {
                    used[at] = true;
                    if assign(sig, d, &children[1..], successors, used) {
                        return true;
                    }
                    used[at] = false;
                }
            }
            false
        }
        let mut used = vec![false; successors.len()];
        if !assign(sig, d, group.children(), &successors, &mut used) {
            return false;
        }
    }
    true
}

/// Verify the compiled network's internal reading on one dataset: at every
/// internal layer, every vertex, every component, the feature must be `1`
/// when the component's formula is satisfiable at the vertex's term and `0`
/// otherwise.
pub fn check_internal_semantics(compiled: &CompiledGnn, d: &Dataset) -> Result<bool, CodecError> {
    let sig = compiled.gnn.signature();
    let graph: ColoredGraph = encode(sig, d)?;
    let trace = forward_trace(&compiled.gnn, &graph)?;
    for (l, layer_values) in trace.iter().enumerate().skip(1) {
        if l == compiled.gnn.num_layers() {
            break;
        }
        for (term, values) in layer_values {
            for (at, value) in values.iter().enumerate() {
                let expected = formula_satisfied(sig, d, &compiled.formulas[at], term);
                if (expected && !value.is_one()) || (!expected && !value.is_zero()) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
