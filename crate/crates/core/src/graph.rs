//! Vertex-labelled, edge-coloured directed graphs: the objects GNN layers
//! read and write.
//!
//! Vertices are named by ground terms and carry rational feature vectors;
//! edges are grouped by colour name. The canonical codec produces Boolean
//! graphs (all label entries 0 or 1), while intermediate layers of a forward
//! pass work with arbitrary non-negative rationals.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::logic::Term;
use crate::rational::{is_bool, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edge endpoint `{0}` is not a vertex")]
    MissingEndpoint(Term),
    #[error("vertex `{0}` already present")]
    DuplicateVertex(Term),
    #[error("vertex `{vertex}` has dimension {got}, expected {expected}")]
    DimensionMismatch {
        vertex: Term,
        got: usize,
        expected: usize,
    },
}

/// A directed graph with coloured edges and rational vertex labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ColoredGraph {
    labels: BTreeMap<Term, Vec<Q>>,
    edges: BTreeMap<String, BTreeSet<(Term, Term)>>,
}

impl ColoredGraph {
    pub fn new() -> Self {
        ColoredGraph::default()
    }

    /// Add a vertex with its label vector; the term must be ground.
    pub fn add_vertex(&mut self, vertex: Term, label: Vec<Q>) -> Result<(), GraphError> {
        assert!(vertex.is_ground(), "vertex names are ground terms");
        if self.labels.contains_key(&vertex) {
            return Err(GraphError::DuplicateVertex(vertex));
        }
        self.labels.insert(vertex, label);
        Ok(())
    }

    /// Add a coloured edge between existing vertices. Idempotent.
    pub fn add_edge(&mut self, colour: &str, from: Term, to: Term) -> Result<(), GraphError> {
        for endpoint in [&from, &to] {
            if !self.labels.contains_key(endpoint) {
                return Err(GraphError::MissingEndpoint(endpoint.clone()));
            }
        }
        self.edges.entry(colour.to_string()).or_default().insert((from, to));
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Term> {
        self.labels.keys()
    }

    pub fn label(&self, vertex: &Term) -> Option<&[Q]> {
        self.labels.get(vertex).map(Vec::as_slice)
    }

    /// Replace the label of an existing vertex.
    pub fn set_label(&mut self, vertex: &Term, label: Vec<Q>) {
        let slot = self
            .labels
            .get_mut(vertex)
            .expect("set_label only on existing vertices");
        *slot = label;
    }

    /// Colours that actually carry edges, in name order.
    pub fn edge_colours(&self) -> impl Iterator<Item = &String> {
        self.edges.keys()
    }

    /// All `(from, to)` pairs of one colour, in term order.
    pub fn edges_of_colour<'a>(
        &'a self,
        colour: &str,
    ) -> impl Iterator<Item = &'a (Term, Term)> + 'a {
        self.edges.get(colour).into_iter().flatten()
    }

    /// Successors of `vertex` along `colour` edges (with multiplicity one:
    /// edges form a set).
    pub fn successors<'a>(&'a self, colour: &str, vertex: &'a Term) -> Vec<&'a Term> {
        match self.edges.get(colour) {
            None => Vec::new(),
            Some(set) => set
                .iter()
                .filter(|(from, _)| from == vertex)
                .map(|(_, to)| to)
                .collect(),
        }
    }

    /// Does any edge (of any colour) touch `vertex`?
    pub fn touched_by_edge(&self, vertex: &Term) -> bool {
        self.edges
            .values()
            .flatten()
            .any(|(from, to)| from == vertex || to == vertex)
    }

    /// All label vectors have the same length `dim`.
    pub fn uniform_dimension(&self, dim: usize) -> Result<(), GraphError> {
        for (v, l) in &self.labels {
            if l.len() != dim {
                return Err(GraphError::DimensionMismatch {
                    vertex: v.clone(),
                    got: l.len(),
                    expected: dim,
                });
            }
        }
        Ok(())
    }

    /// Boolean graph: every label entry is 0 or 1.
    pub fn is_boolean(&self) -> bool {
        self.labels.values().flatten().all(is_bool)
    }
}
