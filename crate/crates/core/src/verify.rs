//! Differential testing between a network's transformation and a program's
//! single-step consequences, plus the structural invariants every monotonic
//! max-sum network must satisfy (monotonicity and invariance under renaming).
//!
//! The comparison convention: the network's transformation reproduces the
//! input's binary facts by construction, while a program with unary heads
//! derives none, so before comparing, the program's consequences are
//! completed with the input's binary facts. The comparison then hinges
//! exactly on what either side can actually derive.
//!
//! Verification is exhaustive over every dataset on a bounded constant
//! universe, followed by seeded random sampling over larger universes.
//! Random generation is deterministic per `(seed, trial)` pair, so reports
//! are reproducible and independent of execution order.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codec::canonical_transform;
use crate::exec::{find_first_map, ExecMode};
use crate::gnn::{forward_trace, Gnn, LayerTrace};
use crate::graph::ColoredGraph;
use crate::logic::{Atom, Dataset, Signature, Term};
use crate::rules::Program;

/// Refusal threshold for exhaustive enumeration (counts datasets).
pub const DEFAULT_DATASET_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(
        "the fact universe has {bits} facts, so {count} datasets exceed the cap of {cap}; \
         lower the constant bound"
    )]
    UniverseTooLarge { bits: usize, count: u128, cap: u64 },
}

/// The constants `a1..an` used by exhaustive enumeration.
pub fn constant_universe(n: usize) -> Vec<Term> {
    (1..=n).map(|i| Term::constant(format!("a{i}"))).collect()
}

/// Every fact over the signature and the given constants: all unary labels,
/// then all directed edges of every colour, in a fixed order.
pub fn fact_universe(sig: &Signature, constants: &[Term]) -> Vec<Atom> {
    let mut facts = Vec::new();
    for t in constants {
        for i in 1..=sig.delta() {
            facts.push(Atom::unary(sig.unary_predicate(i), t.clone()));
        }
    }
    for colour in sig.colours() {
        for s in constants {
            for t in constants {
                facts.push(Atom::binary(sig.edge_predicate(colour), s.clone(), t.clone()));
            }
        }
    }
    facts
}

fn dataset_from_bits(universe: &[Atom], bits: u64) -> Dataset {
    let facts = universe
        .iter()
        .enumerate()
        .filter(|(at, _)| bits >> at & 1 == 1)
        .map(|(_, fact)| fact.clone());
    Dataset::from_facts(facts)
}

fn guarded_count(sig: &Signature, n: usize, cap: u64) -> Result<(Vec<Atom>, u64), VerifyError> {
    let universe = fact_universe(sig, &constant_universe(n));
    let bits = universe.len();
    let count = 1u128 << bits.min(127);
    if bits >= 64 || count > u128::from(cap) {
        return Err(VerifyError::UniverseTooLarge { bits, count, cap });
    }
    Ok((universe, count as u64))
}

/// All datasets over the signature with constants `a1..an` — each subset of
/// the fact universe once, in bitmask order.
pub fn enumerate_datasets(
    sig: &Signature,
    n: usize,
) -> Result<impl Iterator<Item = Dataset>, VerifyError> {
    enumerate_datasets_with_cap(sig, n, DEFAULT_DATASET_CAP)
}

pub fn enumerate_datasets_with_cap(
    sig: &Signature,
    n: usize,
    cap: u64,
) -> Result<impl Iterator<Item = Dataset>, VerifyError> {
    let (universe, count) = guarded_count(sig, n, cap)?;
    Ok((0..count).map(move |bits| dataset_from_bits(&universe, bits)))
}

/// One representative per renaming class: the datasets that equal their own
/// canonical form under constant permutations.
pub fn enumerate_dataset_classes(sig: &Signature, n: usize) -> Result<Vec<Dataset>, VerifyError> {
    let constants = constant_universe(n);
    Ok(enumerate_datasets(sig, n)?
        .filter(|d| *d == canonical_form(d, &constants))
        .collect())
}

/// The least dataset (by fact-list order) obtainable by permuting the given
/// constants.
///
/// Candidate permutations are pruned by iterative colour refinement: each
/// constant starts from its unary labels, is repeatedly re-keyed by the
/// multiset of (colour, direction, neighbour key) around it, and only
/// permutations preserving the final key order are tried. The refined key is
/// permutation-invariant, so two datasets differing by a renaming reach the
/// same canonical form.
pub fn canonical_form(d: &Dataset, constants: &[Term]) -> Dataset {
    let keys = refined_keys(d, constants);
    // Group constant positions by key, in key order.
    let mut order: Vec<usize> = (0..constants.len()).collect();
    order.sort_by(|&p, &q| keys[p].cmp(&keys[q]).then(p.cmp(&q)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for position in order {
        match groups.last_mut() {
            Some(group) if keys[group[0]] == keys[position] => group.push(position),
            _ => groups.push(vec![position]),
        }
    }
    let mut best: Option<Vec<Atom>> = None;
    let mut assignment = vec![0usize; constants.len()];
    permute_groups(&groups, 0, &mut Vec::new(), &mut |flat| {
        // flat[k] = original position taking canonical slot k.
        for (slot, &position) in flat.iter().enumerate() {
            assignment[position] = slot;
        }
        let renamed: Vec<Atom> = {
            let mut facts: Vec<Atom> = d
                .iter()
                .map(|fact| {
                    let args = fact
                        .args
                        .iter()
                        .map(|t| match constants.iter().position(|c| c == t) {
                            Some(p) => constants[assignment[p]].clone(),
                            None => t.clone(),
                        })
                        .collect();
                    Atom::new(fact.predicate.clone(), args)
                })
                .collect();
            facts.sort();
            facts
        };
        if best.as_ref().is_none_or(|b| renamed < *b) {
            best = Some(renamed);
        }
    });
    Dataset::from_facts(best.unwrap_or_default())
}

/// Permutation-invariant keys for the constants, by colour refinement.
fn refined_keys(d: &Dataset, constants: &[Term]) -> Vec<String> {
    let position = |t: &Term| constants.iter().position(|c| c == t);
    let mut keys: Vec<String> = constants
        .iter()
        .map(|t| {
            let unaries: Vec<&str> = d
                .iter()
                .filter(|f| f.args.len() == 1 && f.args[0] == *t)
                .map(|f| f.predicate.as_str())
                .collect();
            format!("{unaries:?}")
        })
        .collect();
    loop {
        let mut next: Vec<String> = Vec::with_capacity(keys.len());
        for (p, t) in constants.iter().enumerate() {
            let mut around: Vec<String> = Vec::new();
            for fact in d.iter().filter(|f| f.args.len() == 2) {
                if fact.args[0] == *t {
                    if let Some(q) = position(&fact.args[1]) {
                        around.push(format!("out {} {}", fact.predicate, keys[q]));
                    }
                }
                if fact.args[1] == *t {
                    if let Some(q) = position(&fact.args[0]) {
                        around.push(format!("in {} {}", fact.predicate, keys[q]));
                    }
                }
            }
            around.sort();
            next.push(format!("{} | {around:?}", keys[p]));
        }
        // Refinement is stable once the partition stops splitting.
        let classes = |ks: &[String]| {
            let mut sorted: Vec<&String> = ks.iter().collect();
            sorted.sort();
            sorted.dedup();
            sorted.len()
        };
        if classes(&next) == classes(&keys) {
            return keys;
        }
        keys = next;
    }
}

/// Visit every interleaving that keeps each group's members in any order but
/// groups in sequence.
fn permute_groups(
    groups: &[Vec<usize>],
    at: usize,
    prefix: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    let Some(group) = groups.get(at) else {
        visit(prefix);
        return;
    };
    fn each_permutation(items: &[usize], current: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if items.is_empty() {
            f(current);
            return;
        }
        for (k, &item) in items.iter().enumerate() {
            let mut rest = items.to_vec();
            rest.remove(k);
            current.push(item);
            each_permutation(&rest, current, f);
            current.pop();
        }
    }
    each_permutation(group, &mut Vec::new(), &mut |ordering| {
        let before = prefix.len();
        prefix.extend_from_slice(ordering);
        permute_groups(groups, at + 1, prefix, visit);
        prefix.truncate(before);
    });
}

/// Outcome of a verification run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Report {
    Verified { exhaustive: u64, random: u64 },
    Counterexample(Box<Counterexample>),
}

impl Report {
    pub fn is_verified(&self) -> bool {
        matches!(self, Report::Verified { .. })
    }
}

/// A concrete failure, with enough context to replay it: the datasets
/// involved, both outputs, and the full per-layer vertex labellings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Counterexample {
    /// The network and the program disagree on `dataset`.
    Disagreement {
        dataset: Dataset,
        network_output: Dataset,
        program_output: Dataset,
        only_network: Dataset,
        only_program: Dataset,
        trace: LayerTrace,
    },
    /// Growing the dataset lost a derived fact.
    MonotonicityViolation {
        smaller: Dataset,
        larger: Dataset,
        missing: Dataset,
        smaller_trace: LayerTrace,
        larger_trace: LayerTrace,
    },
    /// Renaming the input did not rename the output.
    InvarianceViolation {
        dataset: Dataset,
        renaming: BTreeMap<Term, Term>,
        output_then_rename: Dataset,
        rename_then_output: Dataset,
        trace: LayerTrace,
        renamed_trace: LayerTrace,
    },
}

fn fmt_trace(f: &mut fmt::Formatter<'_>, label: &str, trace: &LayerTrace) -> fmt::Result {
    writeln!(f, "{label}:")?;
    for (layer, values) in trace.iter().enumerate() {
        write!(f, "  layer {layer}:")?;
        for (term, vector) in values {
            let entries: Vec<String> = vector.iter().map(|v| v.to_string()).collect();
            write!(f, " {term}=[{}]", entries.join(","))?;
        }
        writeln!(f)?;
    }
    Ok(())
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Report::Verified { exhaustive, random } => {
                let mut parts = Vec::new();
                if *exhaustive > 0 {
                    parts.push(format!(
                        "all {exhaustive} datasets over the bounded universe"
                    ));
                }
                if *random > 0 || parts.is_empty() {
                    parts.push(format!("{random} random datasets"));
                }
                write!(f, "VERIFIED: agreement on {}", parts.join(" and "))
            }
            Report::Counterexample(c) => write!(f, "COUNTEREXAMPLE\n{c}"),
        }
    }
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Counterexample::Disagreement {
                dataset,
                network_output,
                program_output,
                only_network,
                only_program,
                trace,
            } => {
                writeln!(f, "dataset:         {dataset}")?;
                writeln!(f, "network output:  {network_output}")?;
                writeln!(f, "program output:  {program_output}")?;
                writeln!(f, "network only:    {only_network}")?;
                writeln!(f, "program only:    {only_program}")?;
                fmt_trace(f, "network trace", trace)
            }
            Counterexample::MonotonicityViolation {
                smaller,
                larger,
                missing,
                smaller_trace,
                larger_trace,
            } => {
                writeln!(f, "smaller dataset: {smaller}")?;
                writeln!(f, "larger dataset:  {larger}")?;
                writeln!(f, "facts lost by growing the input: {missing}")?;
                fmt_trace(f, "trace on the smaller dataset", smaller_trace)?;
                fmt_trace(f, "trace on the larger dataset", larger_trace)
            }
            Counterexample::InvarianceViolation {
                dataset,
                renaming,
                output_then_rename,
                rename_then_output,
                trace,
                renamed_trace,
            } => {
                writeln!(f, "dataset: {dataset}")?;
                let map: Vec<String> =
                    renaming.iter().map(|(from, to)| format!("{from}->{to}")).collect();
                writeln!(f, "renaming: {{{}}}", map.join(", "))?;
                writeln!(f, "renamed output:   {output_then_rename}")?;
                writeln!(f, "output of renamed input: {rename_then_output}")?;
                fmt_trace(f, "trace on the original", trace)?;
                fmt_trace(f, "trace on the renamed input", renamed_trace)
            }
        }
    }
}

/// The program's single-step consequences, completed with the input's
/// binary facts (which the network transformation reproduces verbatim).
pub fn program_transform(program: &Program, d: &Dataset) -> Dataset {
    let mut out = program.immediate_consequences(d);
    for fact in d.iter().filter(|f| f.args.len() == 2) {
        out.insert(fact.clone()).expect("input facts are ground");
    }
    out
}

fn trace_of(gnn: &Gnn, d: &Dataset) -> LayerTrace {
    let graph: ColoredGraph =
        crate::codec::encode(gnn.signature(), d).expect("dataset lies in the signature");
    forward_trace(gnn, &graph).expect("encoded graph matches the network dimensions")
}

fn difference(left: &Dataset, right: &Dataset) -> Dataset {
    Dataset::from_facts(left.iter().filter(|f| !right.contains(f)).cloned())
}

fn disagreement(gnn: &Gnn, program: &Program, d: Dataset) -> Option<Box<Counterexample>> {
    let network_output =
        canonical_transform(gnn, &d).expect("dataset lies in the network signature");
    let program_output = program_transform(program, &d);
    if network_output == program_output {
        return None;
    }
    let only_network = difference(&network_output, &program_output);
    let only_program = difference(&program_output, &network_output);
    let trace = trace_of(gnn, &d);
    Some(Box::new(Counterexample::Disagreement {
        dataset: d,
        network_output,
        program_output,
        only_network,
        only_program,
        trace,
    }))
}

fn per_trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn random_dataset(universe: &[Atom], rng: &mut ChaCha8Rng) -> Dataset {
    Dataset::from_facts(universe.iter().filter(|_| rng.gen_bool(0.5)).cloned())
}

/// Compare the network's transformation with the program's single-step
/// consequences: exhaustively on every dataset over `max_constants`
/// constants, then on `random_trials` random datasets over universes up to
/// three constants larger.
///
/// When the program was mechanically extracted from the network (or the
/// network compiled from the program), agreement holds on every dataset, so
/// a counterexample in those pipelines signals an implementation fault —
/// not a gap the bounded search happened to miss.
pub fn check_equivalence(
    gnn: &Gnn,
    program: &Program,
    max_constants: usize,
    random_trials: u64,
    seed: u64,
    mode: ExecMode,
) -> Result<Report, VerifyError> {
    let sig = gnn.signature();
    let (universe, count) = guarded_count(sig, max_constants, DEFAULT_DATASET_CAP)?;
    if let Some(found) = find_first_map(mode, count, |bits| {
        disagreement(gnn, program, dataset_from_bits(&universe, bits))
    }) {
        return Ok(Report::Counterexample(found));
    }
    if let Some(found) = find_first_map(mode, random_trials, |trial| {
        let mut rng = per_trial_rng(seed, trial);
        let n = rng.gen_range(max_constants + 1..=max_constants + 3);
        let universe = fact_universe(sig, &constant_universe(n));
        disagreement(gnn, program, random_dataset(&universe, &mut rng))
    }) {
        return Ok(Report::Counterexample(found));
    }
    Ok(Report::Verified { exhaustive: count, random: random_trials })
}

/// Sample dataset pairs `D ⊆ D'` and check that every fact derived from `D`
/// is still derived from `D'`.
pub fn check_monotonicity(gnn: &Gnn, trials: u64, seed: u64, mode: ExecMode) -> Report {
    let sig = gnn.signature().clone();
    match find_first_map(mode, trials, |trial| {
        let mut rng = per_trial_rng(seed, trial);
        let n = rng.gen_range(1..=4usize);
        let universe = fact_universe(&sig, &constant_universe(n));
        let larger = random_dataset(&universe, &mut rng);
        let smaller =
            Dataset::from_facts(larger.iter().filter(|_| rng.gen_bool(0.5)).cloned());
        let smaller_output =
            canonical_transform(gnn, &smaller).expect("dataset lies in the signature");
        let larger_output =
            canonical_transform(gnn, &larger).expect("dataset lies in the signature");
        let missing = difference(&smaller_output, &larger_output);
        if missing.is_empty() {
            return None;
        }
        Some(Box::new(Counterexample::MonotonicityViolation {
            smaller_trace: trace_of(gnn, &smaller),
            larger_trace: trace_of(gnn, &larger),
            smaller,
            larger,
            missing,
        }))
    }) {
        Some(found) => Report::Counterexample(found),
        None => Report::Verified { exhaustive: 0, random: trials },
    }
}

fn rename_dataset(d: &Dataset, h: &BTreeMap<Term, Term>) -> Dataset {
    Dataset::from_facts(d.iter().map(|fact| {
        let args = fact
            .args
            .iter()
            .map(|t| h.get(t).cloned().unwrap_or_else(|| t.clone()))
            .collect();
        Atom::new(fact.predicate.clone(), args)
    }))
}

/// Sample datasets and injective renamings `h` (fresh constants, or wrapping
/// every constant in a function symbol) and check that renaming commutes
/// with the transformation: `h(T(D)) = T(h(D))`.
pub fn check_isomorphism_invariance(gnn: &Gnn, trials: u64, seed: u64, mode: ExecMode) -> Report {
    let sig = gnn.signature().clone();
    match find_first_map(mode, trials, |trial| {
        let mut rng = per_trial_rng(seed, trial);
        let n = rng.gen_range(1..=4usize);
        let constants = constant_universe(n);
        let universe = fact_universe(&sig, &constants);
        let dataset = random_dataset(&universe, &mut rng);
        let renaming: BTreeMap<Term, Term> = if rng.gen_bool(1.0 / 3.0) {
            constants
                .iter()
                .map(|c| (c.clone(), Term::function("f", vec![c.clone()])))
                .collect()
        } else {
            // Injective map onto fresh names: distinct offsets, new prefix.
            let mut offsets: Vec<usize> = (1..=20).collect();
            for at in 0..n {
                let pick = rng.gen_range(at..offsets.len());
                offsets.swap(at, pick);
            }
            constants
                .iter()
                .zip(&offsets)
                .map(|(c, k)| (c.clone(), Term::constant(format!("p{k}"))))
                .collect()
        };
        let renamed_input = rename_dataset(&dataset, &renaming);
        let output_then_rename = rename_dataset(
            &canonical_transform(gnn, &dataset).expect("dataset lies in the signature"),
            &renaming,
        );
        let rename_then_output =
            canonical_transform(gnn, &renamed_input).expect("renamed terms stay ground");
        if output_then_rename == rename_then_output {
            return None;
        }
        Some(Box::new(Counterexample::InvarianceViolation {
            trace: trace_of(gnn, &dataset),
            renamed_trace: trace_of(gnn, &renamed_input),
            dataset,
            renaming,
            output_then_rename,
            rename_then_output,
        }))
    }) {
        Some(found) => Report::Counterexample(found),
        None => Report::Verified { exhaustive: 0, random: trials },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{Activation, AggregationSpec, Classifier, Layer, Matrix};
    use crate::logic::Literal;
    use crate::rational::q;
    use crate::rules::Rule;

    fn sig1() -> Signature {
        Signature::new(vec!["c".into()], 1)
    }

    /// Single layer: keep your own label, or take it from any successor.
    fn g1() -> Gnn {
        let mut a = Matrix::zeros(1, 1);
        a.set(0, 0, q(1));
        let mut b = Matrix::zeros(1, 1);
        b.set(0, 0, q(1));
        Gnn::new(
            sig1(),
            vec![Layer {
                a,
                b: vec![b],
                bias: vec![q(0)],
                agg: AggregationSpec::Infinite,
            }],
            Activation::relu(),
            Classifier::new(q(1)),
        )
        .unwrap()
    }

    fn v(name: &str) -> Term {
        Term::variable(name)
    }

    fn g1_program() -> Program {
        Program::from_rules([
            Rule::new(
                Atom::unary("U1", v("x")),
                vec![Literal::Atom(Atom::unary("U1", v("x")))],
            ),
            Rule::new(
                Atom::unary("U1", v("x")),
                vec![
                    Literal::Atom(Atom::binary("E_c", v("x"), v("y"))),
                    Literal::Atom(Atom::unary("U1", v("y"))),
                ],
            ),
        ])
    }

    #[test]
    fn universe_sizes_match_the_counting() {
        assert_eq!(enumerate_datasets(&sig1(), 0).unwrap().count(), 1);
        let singles: Vec<Dataset> = enumerate_datasets(&sig1(), 1).unwrap().collect();
        assert_eq!(singles.len(), 4);
        let a = Term::constant("a1");
        assert!(singles.contains(&Dataset::new()));
        assert!(singles.contains(&Dataset::from_facts([Atom::unary("U1", a.clone())])));
        assert!(singles
            .contains(&Dataset::from_facts([Atom::binary("E_c", a.clone(), a.clone())])));
        assert!(singles.contains(&Dataset::from_facts([
            Atom::unary("U1", a.clone()),
            Atom::binary("E_c", a.clone(), a.clone()),
        ])));
        assert_eq!(enumerate_datasets(&sig1(), 2).unwrap().count(), 64);
    }

    #[test]
    fn oversized_universes_are_refused() {
        let wide = Signature::new(vec!["c".into()], 30);
        assert!(matches!(
            enumerate_datasets(&wide, 2),
            Err(VerifyError::UniverseTooLarge { .. })
        ));
    }

    #[test]
    fn network_agrees_with_its_program() {
        let report =
            check_equivalence(&g1(), &g1_program(), 2, 50, 7, ExecMode::Sequential).unwrap();
        assert_eq!(report, Report::Verified { exhaustive: 64, random: 50 });
    }

    #[test]
    fn always_firing_program_is_refuted_on_the_edge_dataset() {
        let top = Program::from_rules([Rule::new(Atom::unary("U1", v("x")), vec![])]);
        let report = check_equivalence(&g1(), &top, 2, 0, 7, ExecMode::Sequential).unwrap();
        let Report::Counterexample(c) = report else {
            panic!("expected a counterexample");
        };
        let Counterexample::Disagreement { dataset, only_network, only_program, .. } = *c
        else {
            panic!("expected a disagreement");
        };
        // The least refuting dataset in enumeration order is the self-loop
        // {E_c(a1,a1)}: the program labels a1, the network does not.
        let a = Term::constant("a1");
        assert_eq!(dataset, Dataset::from_facts([Atom::binary("E_c", a.clone(), a.clone())]));
        assert!(only_network.is_empty());
        assert_eq!(only_program, Dataset::from_facts([Atom::unary("U1", a.clone())]));
    }

    #[test]
    fn two_constant_edge_dataset_refutes_the_always_firing_program() {
        let top = Program::from_rules([Rule::new(Atom::unary("U1", v("x")), vec![])]);
        let a = Term::constant("a");
        let b = Term::constant("b");
        let d = Dataset::from_facts([Atom::binary("E_c", a.clone(), b.clone())]);
        let found = disagreement(&g1(), &top, d).expect("must disagree");
        let Counterexample::Disagreement { only_program, network_output, .. } = *found else {
            panic!("expected a disagreement");
        };
        assert_eq!(
            only_program,
            Dataset::from_facts([Atom::unary("U1", a.clone()), Atom::unary("U1", b.clone())])
        );
        assert!(network_output.iter().all(|f| f.args.len() == 2));
    }

    #[test]
    fn parallel_and_sequential_agree_on_the_counterexample() {
        let top = Program::from_rules([Rule::new(Atom::unary("U1", v("x")), vec![])]);
        let sequential = check_equivalence(&g1(), &top, 2, 10, 3, ExecMode::Sequential).unwrap();
        let parallel = check_equivalence(&g1(), &top, 2, 10, 3, ExecMode::Parallel).unwrap();
        assert_eq!(sequential, parallel);
    }

    #[test]
    fn monotonicity_holds_for_a_monotonic_network() {
        let report = check_monotonicity(&g1(), 200, 11, ExecMode::Sequential);
        assert_eq!(report, Report::Verified { exhaustive: 0, random: 200 });
    }

    #[test]
    fn negative_weights_break_monotonicity() {
        // "Labelled unless a successor is labelled": growing the dataset can
        // remove a derived fact. Deliberately skips the weight validation.
        let gnn = Gnn::new(
            sig1(),
            vec![Layer {
                a: Matrix::zeros(1, 1),
                b: vec![Matrix::from_rows(vec![vec![q(-1)]]).unwrap()],
                bias: vec![q(1)],
                agg: AggregationSpec::Infinite,
            }],
            Activation::relu(),
            Classifier::new(q(1)),
        )
        .unwrap();
        let report = check_monotonicity(&gnn, 200, 11, ExecMode::Sequential);
        let Report::Counterexample(c) = report else {
            panic!("expected a monotonicity violation");
        };
        let Counterexample::MonotonicityViolation { smaller, larger, missing, .. } = *c else {
            panic!("expected a monotonicity violation");
        };
        assert!(smaller.iter().all(|f| larger.contains(f)));
        assert!(!missing.is_empty());
    }

    #[test]
    fn renaming_commutes_with_the_transformation() {
        let report = check_isomorphism_invariance(&g1(), 200, 13, ExecMode::Sequential);
        assert_eq!(report, Report::Verified { exhaustive: 0, random: 200 });
    }

    #[test]
    fn renaming_into_functional_terms_commutes() {
        let a = Term::constant("a");
        let b = Term::constant("b");
        let d = Dataset::from_facts([
            Atom::unary("U1", a.clone()),
            Atom::binary("E_c", b.clone(), a.clone()),
        ]);
        let h: BTreeMap<Term, Term> = [
            (a.clone(), Term::function("f", vec![a.clone()])),
            (b.clone(), Term::function("f", vec![b.clone()])),
        ]
        .into();
        let lhs = rename_dataset(&canonical_transform(&g1(), &d).unwrap(), &h);
        let rhs = canonical_transform(&g1(), &rename_dataset(&d, &h)).unwrap();
        assert_eq!(lhs, rhs);
        assert!(rhs.contains(&Atom::unary("U1", Term::function("f", vec![b.clone()]))));
    }

    #[test]
    fn canonical_form_is_constant_on_every_renaming_orbit() {
        fn all_permutations(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for shorter in all_permutations(n - 1) {
                for at in 0..=shorter.len() {
                    let mut longer = shorter.clone();
                    longer.insert(at, n - 1);
                    out.push(longer);
                }
            }
            out
        }
        for n in [2usize, 3] {
            let constants = constant_universe(n);
            let perms = all_permutations(n);
            for d in enumerate_datasets(&sig1(), n).unwrap() {
                let orbit: Vec<Dataset> = perms
                    .iter()
                    .map(|perm| {
                        let facts: Vec<Atom> = d
                            .iter()
                            .map(|fact| {
                                let args = fact
                                    .args
                                    .iter()
                                    .map(|t| {
                                        let p = constants
                                            .iter()
                                            .position(|c| c == t)
                                            .expect("universe constant");
                                        constants[perm[p]].clone()
                                    })
                                    .collect();
                                Atom::new(fact.predicate.clone(), args)
                            })
                            .collect();
                        Dataset::from_facts(facts)
                    })
                    .collect();
                // The canonical form is some renaming of the dataset, and
                // every member of the renaming orbit canonicalizes to it —
                // exactly what deduplication needs.
                let form = canonical_form(&d, &constants);
                assert!(orbit.contains(&form), "form of {d} left its orbit");
                for renamed in &orbit {
                    assert_eq!(canonical_form(renamed, &constants), form, "orbit of {d}");
                }
            }
        }
    }

    #[test]
    fn class_representatives_cover_every_dataset_exactly_once() {
        let n = 2;
        let constants = constant_universe(n);
        let classes = enumerate_dataset_classes(&sig1(), n).unwrap();
        // Every dataset's canonical form is a representative, and distinct
        // representatives are non-isomorphic by construction.
        for d in enumerate_datasets(&sig1(), n).unwrap() {
            let form = canonical_form(&d, &constants);
            assert!(classes.contains(&form), "missing representative for {d}");
        }
        for representative in &classes {
            assert_eq!(*representative, canonical_form(representative, &constants));
        }
        assert!(classes.len() < 64, "permuting two constants must merge some datasets");
    }

    #[test]
    fn reports_render_with_traces() {
        let top = Program::from_rules([Rule::new(Atom::unary("U1", v("x")), vec![])]);
        let report = check_equivalence(&g1(), &top, 1, 0, 7, ExecMode::Sequential).unwrap();
        let rendered = report.to_string();
        assert!(rendered.starts_with("COUNTEREXAMPLE"));
        assert!(rendered.contains("network trace"));
        assert!(rendered.contains("layer 1"));
        let verified = Report::Verified { exhaustive: 64, random: 5 };
        assert!(verified.to_string().contains("VERIFIED"));
    }
}
