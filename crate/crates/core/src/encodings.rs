//! Alternative dataset encodings, expressed as dataset-to-dataset
//! transformations over functional terms.
//!
//! Two schemes are provided, both turning a dataset over an application
//! signature (unary `A1..` labels, binary relations) into an edge-coloured
//! dataset the network pipeline can process directly:
//!
//! * the **pair-vertex scheme** (`mgnn`): every constant `a` becomes a term
//!   `f(a)`, every ordered pair occurring in a binary fact becomes a term
//!   `g(a,b)`, and four edge colours record first-argument, second-argument,
//!   pair-swap and endpoint adjacency. A matching decoder reads unary and
//!   binary facts back off the `f`/`g` terms.
//! * the **ordered-pair scheme** (`kgnn2`): every ordered pair of distinct
//!   constants becomes a term `g(a,b)` labelled by the endpoint labels and
//!   by whether the pair is `R`-connected (absence checked directly against
//!   the input), and pairs sharing a component are linked when the two
//!   differing constants are `R`-connected.
//!
//! Each scheme is a fixed transformation: the rule set is applied once,
//! fact-for-fact, rather than through a general rule engine.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::codec::{canonical_transform, CodecError};
use crate::gnn::Gnn;
use crate::logic::{Atom, Dataset, Signature, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("fact `{0}` is outside the encoder's input signature")]
    UnexpectedFact(String),
    #[error("constant `{constant}` carries {found} labels; the ordered-pair scheme needs exactly one")]
    LabelCount { constant: String, found: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// `A3` -> `Some(3)` for `prefix = "A"`; rejects non-canonical spellings
/// such as `A03`.
fn parse_indexed(name: &str, prefix: &str) -> Option<usize> {
    let digits = name.strip_prefix(prefix)?;
    let index: usize = digits.parse().ok()?;
    (name == format!("{prefix}{index}")).then_some(index)
}

fn f_term(a: &Term) -> Term {
    Term::function("f", vec![a.clone()])
}

fn g_term(a: &Term, b: &Term) -> Term {
    Term::function("g", vec![a.clone(), b.clone()])
}

/// The signature the pair-vertex scheme encodes into: four edge colours,
/// `delta` unary labels.
pub fn mgnn_signature(delta: usize) -> Signature {
    Signature::new(vec!["c1".into(), "c2".into(), "c3".into(), "c4".into()], delta)
}

/// Encode a dataset over unary `A1..A<eps>` and binary `R<eps+1>..R<delta>`
/// into the pair-vertex scheme.
///
/// `A_i(a)` becomes `U_i(f(a))`. `R_j(a,b)` becomes `U_j(g(a,b))` plus eight
/// edges: colour `c1` joins `f(a)` and `g(a,b)` both ways, `c2` joins `f(b)`
/// and `g(a,b)`, `c3` joins `g(a,b)` and `g(b,a)`, and `c4` joins `f(a)` and
/// `f(b)`.
///
/// With `extensions`, pair terms are also materialized beyond co-occurring
/// pairs: `g(a,b)` gets its `c1` edges to `f(a)` whenever `a` and `b` both
/// carry labels, and whenever `a` occurs in a binary fact while `b` carries
/// a label (the pair need not be distinct).
pub fn mgnn_encode_with(
    eps: usize,
    delta: usize,
    d: &Dataset,
    extensions: bool,
) -> Result<Dataset, EncodingError> {
    let mut out = Dataset::new();
    let mut push = |atom: Atom| {
        out.insert(atom).expect("encoded facts are ground");
    };
    for fact in d.iter() {
        match fact.args.as_slice() {
            [a] => {
                let index = parse_indexed(&fact.predicate, "A")
                    .filter(|i| (1..=eps).contains(i))
                    .ok_or_else(|| EncodingError::UnexpectedFact(fact.to_string()))?;
                push(Atom::unary(format!("U{index}"), f_term(a)));
            }
            [a, b] => {
                let index = parse_indexed(&fact.predicate, "R")
                    .filter(|j| (eps + 1..=delta).contains(j))
                    .ok_or_else(|| EncodingError::UnexpectedFact(fact.to_string()))?;
                let (fa, fb) = (f_term(a), f_term(b));
                let (gab, gba) = (g_term(a, b), g_term(b, a));
                push(Atom::unary(format!("U{index}"), gab.clone()));
                push(Atom::binary("E_c1", fa.clone(), gab.clone()));
                push(Atom::binary("E_c1", gab.clone(), fa.clone()));
                push(Atom::binary("E_c2", fb.clone(), gab.clone()));
                push(Atom::binary("E_c2", gab.clone(), fb.clone()));
                push(Atom::binary("E_c3", gab.clone(), gba.clone()));
                push(Atom::binary("E_c3", gba, gab));
                push(Atom::binary("E_c4", fa.clone(), fb.clone()));
                push(Atom::binary("E_c4", fb, fa));
            }
            _ => return Err(EncodingError::UnexpectedFact(fact.to_string())),
        }
    }
    if extensions {
        let labelled: BTreeSet<&Term> = d
            .iter()
            .filter(|f| f.args.len() == 1)
            .map(|f| &f.args[0])
            .collect();
        let in_binary_first: BTreeSet<&Term> = d
            .iter()
            .filter(|f| f.args.len() == 2)
            .map(|f| &f.args[0])
            .collect();
        let in_binary_second: BTreeSet<&Term> = d
            .iter()
            .filter(|f| f.args.len() == 2)
            .map(|f| &f.args[1])
            .collect();
        for x in labelled.iter().chain(&in_binary_first).chain(&in_binary_second) {
            for y in &labelled {
                let (fx, gxy) = (f_term(x), g_term(x, y));
                if labelled.contains(*x) {
                    push(Atom::binary("E_c1", fx.clone(), gxy.clone()));
                }
                push(Atom::binary("E_c1", gxy, fx));
            }
        }
    }
    Ok(out)
}

/// [`mgnn_encode_with`] without the extension edges.
pub fn mgnn_encode(eps: usize, delta: usize, d: &Dataset) -> Result<Dataset, EncodingError> {
    mgnn_encode_with(eps, delta, d, false)
}

/// Read application facts back off a pair-vertex dataset: `U_i(f(a))`
/// becomes `A_i(a)` for `i <= eps`, `U_j(g(a,b))` becomes `R_j(a,b)` for
/// `eps < j <= delta`; everything else is dropped.
pub fn mgnn_decode(eps: usize, delta: usize, d: &Dataset) -> Dataset {
    let mut out = Dataset::new();
    for fact in d.iter() {
        let [arg] = fact.args.as_slice() else {
            continue;
        };
        let Some(index) = parse_indexed(&fact.predicate, "U") else {
            continue;
        };
        match arg {
            Term::Function(name, args) if name == "f" && args.len() == 1 && index <= eps => {
                out.insert(Atom::unary(format!("A{index}"), args[0].clone()))
                    .expect("decoded facts are ground");
            }
            Term::Function(name, args)
                if name == "g" && args.len() == 2 && index > eps && index <= delta =>
            {
                out.insert(Atom::binary(
                    format!("R{index}"),
                    args[0].clone(),
                    args[1].clone(),
                ))
                .expect("decoded facts are ground");
            }
            _ => {}
        }
    }
    out
}

/// An ordered-pair encoding together with the label bookkeeping needed to
/// interpret it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KgnnEncoded {
    pub dataset: Dataset,
    /// The single-colour signature (`c`, `2 * delta1^2`) the dataset lives in.
    pub signature: Signature,
    /// `(i, j, connected)` -> flat unary index: the label of pair `(a,b)`
    /// records `a`'s label `i`, `b`'s label `j`, and whether `R(a,b)` holds.
    pub mapping: BTreeMap<(usize, usize, bool), usize>,
}

/// Position of `(i, j, connected)` in the flattened `U1..U_{2*delta1^2}`
/// space.
fn kgnn_flat_index(delta1: usize, i: usize, j: usize, connected: bool) -> usize {
    ((i - 1) * delta1 + (j - 1)) * 2 + usize::from(connected) + 1
}

/// Encode a dataset over unary `A1..A<delta1>` and a single binary `R` into
/// the ordered-pair scheme.
///
/// Every constant must carry exactly one `A` label. For each ordered pair
/// `(a,b)` of distinct constants with labels `i` and `j`, the output labels
/// `g(a,b)` with the flattened form of `U_{i,j,1}` when `R(a,b)` is present
/// and `U_{i,j,0}` when it is absent. For pairwise-distinct `(x,y,z)` with
/// `R(y,z)` present, `g(x,y)` and `g(x,z)` are linked, as are `g(y,x)` and
/// `g(z,x)` — pairs sharing a component are neighbours when the differing
/// endpoints are connected.
pub fn kgnn_encode(delta1: usize, d: &Dataset) -> Result<KgnnEncoded, EncodingError> {
    let mut labels: BTreeMap<&Term, BTreeSet<usize>> = BTreeMap::new();
    let mut edges: BTreeSet<(&Term, &Term)> = BTreeSet::new();
    for fact in d.iter() {
        match fact.args.as_slice() {
            [a] => {
                let index = parse_indexed(&fact.predicate, "A")
                    .filter(|i| (1..=delta1).contains(i))
                    .ok_or_else(|| EncodingError::UnexpectedFact(fact.to_string()))?;
                labels.entry(a).or_default().insert(index);
            }
            [a, b] if fact.predicate == "R" => {
                edges.insert((a, b));
                labels.entry(a).or_default();
                labels.entry(b).or_default();
            }
            _ => return Err(EncodingError::UnexpectedFact(fact.to_string())),
        }
    }
    for (constant, found) in &labels {
        if found.len() != 1 {
            return Err(EncodingError::LabelCount {
                constant: constant.to_string(),
                found: found.len(),
            });
        }
    }
    let label = |t: &Term| *labels[t].first().expect("validated above");

    let mut dataset = Dataset::new();
    let constants: Vec<&Term> = labels.keys().copied().collect();
    for a in &constants {
        for b in &constants {
            if a == b {
                continue;
            }
            let flat = kgnn_flat_index(delta1, label(a), label(b), edges.contains(&(a, b)));
            dataset
                .insert(Atom::unary(format!("U{flat}"), g_term(a, b)))
                .expect("encoded facts are ground");
        }
    }
    for (y, z) in &edges {
        if y == z {
            continue;
        }
        for x in &constants {
            if x == y || x == z {
                continue;
            }
            dataset
                .insert(Atom::binary("E_c", g_term(x, y), g_term(x, z)))
                .expect("encoded facts are ground");
            dataset
                .insert(Atom::binary("E_c", g_term(y, x), g_term(z, x)))
                .expect("encoded facts are ground");
        }
    }

    let mut mapping = BTreeMap::new();
    for i in 1..=delta1 {
        for j in 1..=delta1 {
            for connected in [false, true] {
                mapping.insert((i, j, connected), kgnn_flat_index(delta1, i, j, connected));
            }
        }
    }
    Ok(KgnnEncoded {
        dataset,
        signature: Signature::new(vec!["c".into()], 2 * delta1 * delta1),
        mapping,
    })
}

/// Run a full pipeline: encode the dataset, apply the network's
/// transformation under the canonical codec, decode the result.
///
/// The encoder's output must live in the network's signature; anything else
/// surfaces as a codec error from the middle step.
pub fn chain<E, D>(encoder: E, gnn: &Gnn, decoder: D, d: &Dataset) -> Result<Dataset, EncodingError>
where
    E: FnOnce(&Dataset) -> Result<Dataset, EncodingError>,
    D: FnOnce(&Dataset) -> Dataset,
{
    let encoded = encoder(d)?;
    let transformed = canonical_transform(gnn, &encoded)?;
    Ok(decoder(&transformed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{Activation, AggregationSpec, Classifier, Layer, Matrix};
    use crate::rational::q;

    fn c(name: &str) -> Term {
        Term::constant(name)
    }

    fn fixture() -> Dataset {
        Dataset::from_facts([
            Atom::unary("A1", c("a")),
            Atom::binary("R2", c("a"), c("b")),
        ])
    }

    #[test]
    fn pair_vertex_encoding_of_the_two_fact_dataset() {
        let encoded = mgnn_encode(1, 2, &fixture()).unwrap();
        let fa = f_term(&c("a"));
        let fb = f_term(&c("b"));
        let gab = g_term(&c("a"), &c("b"));
        let gba = g_term(&c("b"), &c("a"));
        let expected = Dataset::from_facts([
            Atom::unary("U1", fa.clone()),
            Atom::unary("U2", gab.clone()),
            Atom::binary("E_c1", fa.clone(), gab.clone()),
            Atom::binary("E_c1", gab.clone(), fa.clone()),
            Atom::binary("E_c2", fb.clone(), gab.clone()),
            Atom::binary("E_c2", gab.clone(), fb.clone()),
            Atom::binary("E_c3", gab.clone(), gba.clone()),
            Atom::binary("E_c3", gba.clone(), gab.clone()),
            Atom::binary("E_c4", fa.clone(), fb.clone()),
            Atom::binary("E_c4", fb.clone(), fa.clone()),
        ]);
        assert_eq!(encoded, expected);
        assert_eq!(encoded.iter().count(), 10);
        assert_eq!(mgnn_decode(1, 2, &encoded), fixture());
    }

    #[test]
    fn empty_dataset_encodes_to_nothing() {
        assert_eq!(mgnn_encode(1, 2, &Dataset::new()).unwrap(), Dataset::new());
    }

    #[test]
    fn lone_label_encodes_to_one_fact() {
        let d = Dataset::from_facts([Atom::unary("A1", c("a"))]);
        let expected = Dataset::from_facts([Atom::unary("U1", f_term(&c("a")))]);
        assert_eq!(mgnn_encode(1, 1, &d).unwrap(), expected);
    }

    #[test]
    fn out_of_signature_facts_are_rejected() {
        for bad in [
            Atom::unary("A2", c("a")),
            Atom::unary("B1", c("a")),
            Atom::binary("R1", c("a"), c("b")),
            Atom::binary("R3", c("a"), c("b")),
        ] {
            let d = Dataset::from_facts([bad.clone()]);
            assert!(
                matches!(mgnn_encode(1, 2, &d), Err(EncodingError::UnexpectedFact(_))),
                "{bad} should be rejected"
            );
        }
    }

    #[test]
    fn decode_ignores_plain_terms_and_out_of_range_indices() {
        let d = Dataset::from_facts([
            Atom::unary("U1", c("a")),
            Atom::unary("U2", f_term(&c("a"))),
            Atom::unary("U1", g_term(&c("a"), &c("b"))),
            Atom::binary("E_c1", f_term(&c("a")), g_term(&c("a"), &c("b"))),
        ]);
        assert_eq!(mgnn_decode(1, 2, &d), Dataset::new());
    }

    #[test]
    fn encoded_edge_structure_is_symmetric() {
        let d = Dataset::from_facts([
            Atom::binary("R2", c("a"), c("b")),
            Atom::binary("R2", c("b"), c("e")),
            Atom::unary("A1", c("e")),
        ]);
        let encoded = mgnn_encode(1, 2, &d).unwrap();
        for fact in encoded.iter().filter(|f| f.args.len() == 2) {
            let reverse = Atom::binary(
                fact.predicate.clone(),
                fact.args[1].clone(),
                fact.args[0].clone(),
            );
            assert!(encoded.contains(&reverse), "missing reverse of {fact}");
        }
    }

    #[test]
    fn extension_edges_materialize_non_cooccurring_pairs() {
        let d = Dataset::from_facts([Atom::unary("A1", c("a")), Atom::unary("A1", c("b"))]);
        let plain = mgnn_encode(1, 2, &d).unwrap();
        assert_eq!(plain.iter().filter(|f| f.args.len() == 2).count(), 0);
        let extended = mgnn_encode_with(1, 2, &d, true).unwrap();
        for (x, y) in [("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")] {
            let gxy = g_term(&c(x), &c(y));
            let fx = f_term(&c(x));
            assert!(extended.contains(&Atom::binary("E_c1", fx.clone(), gxy.clone())));
            assert!(extended.contains(&Atom::binary("E_c1", gxy, fx)));
        }
    }

    #[test]
    fn ordered_pair_scheme_needs_exactly_one_label() {
        let unlabelled = Dataset::from_facts([
            Atom::unary("A1", c("a")),
            Atom::binary("R", c("a"), c("b")),
        ]);
        assert_eq!(
            kgnn_encode(1, &unlabelled),
            Err(EncodingError::LabelCount { constant: "b".into(), found: 0 })
        );
        let doubled = Dataset::from_facts([
            Atom::unary("A1", c("a")),
            Atom::unary("A2", c("a")),
        ]);
        assert_eq!(
            kgnn_encode(2, &doubled),
            Err(EncodingError::LabelCount { constant: "a".into(), found: 2 })
        );
    }

    #[test]
    fn single_constant_yields_no_pairs() {
        let d = Dataset::from_facts([Atom::unary("A1", c("a"))]);
        let encoded = kgnn_encode(1, &d).unwrap();
        assert_eq!(encoded.dataset, Dataset::new());
        assert_eq!(encoded.signature.delta(), 2);
    }

    #[test]
    fn unconnected_pair_gets_the_disconnected_label() {
        let d = Dataset::from_facts([Atom::unary("A1", c("a")), Atom::unary("A1", c("b"))]);
        let encoded = kgnn_encode(1, &d).unwrap();
        assert_eq!(encoded.mapping[&(1, 1, false)], 1);
        assert_eq!(encoded.mapping[&(1, 1, true)], 2);
        let expected = Dataset::from_facts([
            Atom::unary("U1", g_term(&c("a"), &c("b"))),
            Atom::unary("U1", g_term(&c("b"), &c("a"))),
        ]);
        assert_eq!(encoded.dataset, expected);
    }

    #[test]
    fn shared_component_pairs_are_linked_through_connections() {
        let d = Dataset::from_facts([
            Atom::unary("A1", c("a")),
            Atom::unary("A1", c("b")),
            Atom::unary("A1", c("e")),
            Atom::binary("R", c("b"), c("e")),
        ]);
        let encoded = kgnn_encode(1, &d).unwrap();
        let edge_facts: Vec<&Atom> =
            encoded.dataset.iter().filter(|f| f.args.len() == 2).collect();
        let first = Atom::binary("E_c", g_term(&c("a"), &c("b")), g_term(&c("a"), &c("e")));
        let second = Atom::binary("E_c", g_term(&c("b"), &c("a")), g_term(&c("e"), &c("a")));
        assert_eq!(edge_facts, vec![&first, &second]);
        assert!(encoded
            .dataset
            .contains(&Atom::unary("U2", g_term(&c("b"), &c("e")))));
        assert!(encoded
            .dataset
            .contains(&Atom::unary("U1", g_term(&c("e"), &c("b")))));
        // Signature closure: every fact parses under the output signature.
        for fact in encoded.dataset.iter() {
            match fact.args.as_slice() {
                [_] => {
                    let i = Signature::parse_unary_predicate(&fact.predicate).unwrap();
                    assert!((1..=encoded.signature.delta()).contains(&i));
                }
                [_, _] => assert_eq!(fact.predicate, "E_c"),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn self_loops_produce_no_pair_links() {
        let d = Dataset::from_facts([
            Atom::unary("A1", c("a")),
            Atom::unary("A1", c("b")),
            Atom::binary("R", c("a"), c("a")),
        ]);
        let encoded = kgnn_encode(1, &d).unwrap();
        assert!(encoded.dataset.iter().all(|f| f.args.len() == 1));
    }

    /// One layer, identity transform on the unary components.
    fn identity_gnn(sig: &Signature) -> Gnn {
        let delta = sig.delta();
        let mut a = Matrix::zeros(delta, delta);
        for i in 0..delta {
            a.set(i, i, q(1));
        }
        Gnn::new(
            sig.clone(),
            vec![Layer {
                a,
                b: vec![Matrix::zeros(delta, delta); sig.colours().len()],
                bias: vec![q(0); delta],
                agg: AggregationSpec::Finite(1),
            }],
            Activation::relu(),
            Classifier::new(q(1)),
        )
        .unwrap()
    }

    #[test]
    fn chaining_the_identity_network_round_trips() {
        let sig = mgnn_signature(2);
        let gnn = identity_gnn(&sig);
        let out = chain(|d| mgnn_encode(1, 2, d), &gnn, |d| mgnn_decode(1, 2, d), &fixture())
            .unwrap();
        assert_eq!(out, fixture());
    }

    #[test]
    fn chaining_the_zero_network_derives_nothing() {
        let sig = mgnn_signature(2);
        let mut gnn = identity_gnn(&sig);
        gnn = Gnn::new(
            sig.clone(),
            vec![Layer {
                a: Matrix::zeros(2, 2),
                b: vec![Matrix::zeros(2, 2); 4],
                bias: vec![q(0); 2],
                agg: AggregationSpec::Finite(1),
            }],
            gnn.activation().clone(),
            Classifier::new(q(1)),
        )
        .unwrap();
        let out = chain(|d| mgnn_encode(1, 2, d), &gnn, |d| mgnn_decode(1, 2, d), &fixture())
            .unwrap();
        assert_eq!(out, Dataset::new());
    }

    #[test]
    fn chaining_a_propagation_network_labels_the_second_endpoint() {
        // Identity on both components, plus: a vertex gets label 1 when some
        // c2-successor carries label 2. Over the pair-vertex encoding of
        // {A1(a), R2(a,b)}, vertex f(b) has the c2-successor g(a,b), which
        // carries label 2 — so the end-to-end result adds A1(b).
        let sig = mgnn_signature(2);
        let mut b = vec![Matrix::zeros(2, 2); 4];
        let c2 = sig.colour_index("c2").unwrap();
        b[c2].set(0, 1, q(1));
        let mut a = Matrix::zeros(2, 2);
        a.set(0, 0, q(1));
        a.set(1, 1, q(1));
        let gnn = Gnn::new(
            sig.clone(),
            vec![Layer { a, b, bias: vec![q(0); 2], agg: AggregationSpec::Finite(1) }],
            Activation::relu(),
            Classifier::new(q(1)),
        )
        .unwrap();
        let out = chain(|d| mgnn_encode(1, 2, d), &gnn, |d| mgnn_decode(1, 2, d), &fixture())
            .unwrap();
        let expected = Dataset::from_facts([
            Atom::unary("A1", c("a")),
            Atom::unary("A1", c("b")),
            Atom::binary("R2", c("a"), c("b")),
        ]);
        assert_eq!(out, expected);
    }

    #[test]
    fn chain_surfaces_signature_mismatches() {
        let sig = Signature::new(vec!["c".into()], 1);
        let gnn = identity_gnn(&sig);
        let result = chain(|d| mgnn_encode(1, 2, d), &gnn, |d| mgnn_decode(1, 2, d), &fixture());
        assert!(matches!(result, Err(EncodingError::Codec(_))));
    }
}
