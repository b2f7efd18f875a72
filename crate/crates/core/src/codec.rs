//! The canonical correspondence between datasets over a signature `(C, δ)`
//! and Boolean coloured graphs.
//!
//! Encoding creates one vertex per dataset term whose label vector has bit
//! `i` set exactly when `U_{i+1}` holds for that term, and one `c`-coloured
//! edge per `E_c` fact. Decoding inverts this; vertices whose labels are all
//! zero and that touch no edge correspond to no facts at all, which is why
//! only *regular* graphs (Boolean, no such isolated vertices) round-trip
//! exactly.
//!
//! [`canonical_transform`] is the induced dataset transformation of a GNN:
//! decode ∘ forward ∘ encode. Because edges pass through a forward pass
//! untouched, binary facts are always preserved.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::gnn::{forward, Gnn, GnnError};
use crate::graph::ColoredGraph;
use crate::logic::{Atom, Dataset, FactKind, Signature, Term};
use crate::rational::Q;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("fact `{0}` is not over the signature")]
    OutOfSignature(String),
    #[error("graph is not Boolean")]
    NonBoolean,
    #[error("graph labels must have dimension {expected}")]
    WrongDimension { expected: usize },
    #[error("graph uses colour `{0}` that is not in the signature")]
    UnknownColour(String),
    #[error(transparent)]
    Gnn(#[from] GnnError),
}

/// Encode a dataset as a Boolean coloured graph. Every fact must belong to
/// the signature.
pub fn encode(sig: &Signature, d: &Dataset) -> Result<ColoredGraph, CodecError> {
    let mut labels: Vec<(Term, Vec<bool>)> = crate::logic::terms_of(d)
        .into_iter()
        .map(|t| (t, vec![false; sig.delta()]))
        .collect();
    let mut edges: Vec<(usize, Term, Term)> = Vec::new();
    for fact in d.iter() {
        match sig.classify(fact) {
            None => return Err(CodecError::OutOfSignature(fact.to_string())),
            Some(FactKind::Label(i, t)) => {
                let slot = labels
                    .iter_mut()
                    .find(|(term, _)| *term == t)
                    .expect("labelled term occurs in the dataset");
                slot.1[i - 1] = true;
            }
            Some(FactKind::Edge(c, s, t)) => edges.push((c, s, t)),
        }
    }
    let mut g = ColoredGraph::new();
    for (term, bits) in labels {
        let label: Vec<Q> = bits
            .into_iter()
            .map(|b| if b { Q::one() } else { Q::zero() })
            .collect();
        g.add_vertex(term, label).expect("terms are unique");
    }
    for (c, s, t) in edges {
        g.add_edge(&sig.colours()[c], s, t).expect("endpoints are dataset terms");
    }
    Ok(g)
}

/// Shared validity checks for decoding: Boolean labels of the right
/// dimension, colours from the signature.
fn check_decodable(sig: &Signature, g: &ColoredGraph) -> Result<(), CodecError> {
    if g.uniform_dimension(sig.delta()).is_err() {
        return Err(CodecError::WrongDimension { expected: sig.delta() });
    }
    if !g.is_boolean() {
        return Err(CodecError::NonBoolean);
    }
    for colour in g.edge_colours() {
        if sig.colour_index(colour).is_none() {
            return Err(CodecError::UnknownColour(colour.clone()));
        }
    }
    Ok(())
}

/// Decode a Boolean coloured graph into the dataset it represents.
pub fn decode(sig: &Signature, g: &ColoredGraph) -> Result<Dataset, CodecError> {
    check_decodable(sig, g)?;
    let mut d = Dataset::new();
    for vertex in g.vertices() {
        for (i, bit) in g.label(vertex).unwrap().iter().enumerate() {
            if bit.is_one() {
                d.insert(Atom::unary(sig.unary_predicate(i + 1), vertex.clone()))
                    .expect("vertex terms are ground");
            }
        }
    }
    for colour in g.edge_colours() {
        for (from, to) in g.edges_of_colour(colour) {
            d.insert(Atom::binary(sig.edge_predicate(colour), from.clone(), to.clone()))
                .expect("vertex terms are ground");
        }
    }
    Ok(d)
}

/// A graph is regular for `sig` when it is Boolean over the right dimension
/// and colours and has no all-zero vertex untouched by edges. Exactly the
/// regular graphs are images of [`encode`].
pub fn is_regular(sig: &Signature, g: &ColoredGraph) -> bool {
    if check_decodable(sig, g).is_err() {
        return false;
    }
    g.vertices().all(|v| {
        let all_zero = g.label(v).unwrap().iter().all(|x| !x.is_one());
        !all_zero || g.touched_by_edge(v)
    })
}

/// The dataset transformation induced by a GNN: decode ∘ forward ∘ encode.
///
/// No monotonicity validation happens here — the transformation is defined
/// for any network over the right signature, and the verifier deliberately
/// runs it on invalid networks as negative controls. Analyses that require
/// the monotonic max-sum conditions validate at their own entry points.
pub fn canonical_transform(g: &Gnn, d: &Dataset) -> Result<Dataset, CodecError> {
    let encoded = encode(g.signature(), d)?;
    let out = forward(g, &encoded)?;
    decode(g.signature(), &out)
}
