//! Graph neural networks over exact rationals with `maxsum` aggregation.
//!
//! A network is a stack of layers. Layer `ℓ` combines, for every vertex `v`,
//! the vertex's own feature vector through matrix `A`, one aggregated
//! neighbour vector per edge colour `c` through matrix `B_c`, and a bias:
//!
//! ```text
//! λ_ℓ(v) = σ( A·λ_{ℓ-1}(v) + Σ_c B_c·maxsum_k{ λ_{ℓ-1}(u) : (v,u) ∈ E_c } + bias )
//! ```
//!
//! `maxsum_k` sums the `min(k, n)` largest elements of a multiset (counting
//! multiplicity); `k = 1` is max aggregation and `k = ∞` is plain sum. Over
//! vector multisets it acts component-wise, so different components may take
//! their values from different neighbours.
//!
//! The *monotonic max-sum* conditions — non-negative matrices (biases are
//! unrestricted), a monotonically increasing, unbounded activation with
//! non-negative values that attains zero — are checked by
//! [`validate_monotonic_max_sum`]; they are what the capacity and extraction
//! machinery relies on.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::graph::ColoredGraph;
use crate::logic::{Signature, Term};
use crate::rational::{ceil_nat, print_q, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GnnError {
    #[error("matrix data has {got} entries, expected {rows}x{cols}")]
    MatrixShape { rows: usize, cols: usize, got: usize },
    #[error("network needs at least one layer")]
    EmptyGnn,
    #[error("layer {layer}: {what}")]
    LayerShape { layer: usize, what: String },
    #[error("input graph labels must have dimension {expected}")]
    WrongInputDimension { expected: usize },
    #[error("input graph uses colour `{0}` that is not in the signature")]
    UnknownColour(String),
    #[error("activation is bounded; no natural number reaches {0}")]
    ActivationBounded(String),
    #[error("activation breakpoints invalid: {0}")]
    BadBreakpoints(String),
}

/// Dense row-major matrix of rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Q>) -> Result<Self, GnnError> {
        if data.len() != rows * cols {
            return Err(GnnError::MatrixShape { rows, cols, got: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Q::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self, GnnError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(GnnError::MatrixShape { rows: r, cols: c, got: usize::MAX });
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> &Q {
        &self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Q) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[Q] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Q)> {
        self.data
            .iter()
            .enumerate()
            .map(|(i, v)| (i / self.cols, i % self.cols, v))
    }

    /// Matrix-vector product; `v.len()` must equal `cols`.
    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(v.len(), self.cols, "vector length mismatch");
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(Q::zero(), |acc, (a, x)| acc + a * x)
            })
            .collect()
    }

    /// Least entry that is not zero, if any.
    pub fn least_nonzero(&self) -> Option<&Q> {
        self.data.iter().filter(|v| !v.is_zero()).min()
    }
}

/// The `k` in `maxsum_k`: a natural bound or "sum everything".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationSpec {
    Finite(u64),
    Infinite,
}

impl fmt::Display for AggregationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregationSpec::Finite(k) => write!(f, "maxsum_{k}"),
            AggregationSpec::Infinite => write!(f, "maxsum_inf"),
        }
    }
}

impl AggregationSpec {
    /// Max aggregation is `maxsum_1`.
    pub fn is_max(&self) -> bool {
        matches!(self, AggregationSpec::Finite(1))
    }
}

/// `maxsum_k` of a multiset: the sum of its `min(k, n)` largest elements,
/// counting multiplicity; zero on the empty multiset.
pub fn maxsum(spec: AggregationSpec, values: &[Q]) -> Q {
    let take = match spec {
        AggregationSpec::Finite(k) => (values.len() as u64).min(k) as usize,
        AggregationSpec::Infinite => values.len(),
    };
    if take == 0 {
        return Q::zero();
    }
    let mut sorted: Vec<&Q> = values.iter().collect();
    sorted.sort();
    sorted[values.len() - take..]
        .iter()
        .fold(Q::zero(), |acc, v| acc + *v)
}

/// A monotone piecewise-linear function given by its vertices plus the slope
/// after the last vertex. Left of the first vertex the function is constant.
/// `Activation::relu()` is `[(0,0)]` with final slope 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activation {
    breakpoints: Vec<(Q, Q)>,
    final_slope: Q,
}

impl Activation {
    pub fn new(breakpoints: Vec<(Q, Q)>, final_slope: Q) -> Result<Self, GnnError> {
        if breakpoints.is_empty() {
            return Err(GnnError::BadBreakpoints("need at least one breakpoint".into()));
        }
        for pair in breakpoints.windows(2) {
            if pair[0].0 >= pair[1].0 {
                return Err(GnnError::BadBreakpoints(
                    "breakpoint x-coordinates must be strictly increasing".into(),
                ));
            }
        }
        Ok(Activation { breakpoints, final_slope })
    }

    pub fn relu() -> Self {
        Activation {
            breakpoints: vec![(Q::zero(), Q::zero())],
            final_slope: Q::one(),
        }
    }

    pub fn is_relu(&self) -> bool {
        self.breakpoints == [(Q::zero(), Q::zero())] && self.final_slope.is_one()
    }

    pub fn breakpoints(&self) -> &[(Q, Q)] {
        &self.breakpoints
    }

    pub fn final_slope(&self) -> &Q {
        &self.final_slope
    }

    /// Evaluate at `x`.
    pub fn eval(&self, x: &Q) -> Q {
        let first = &self.breakpoints[0];
        if *x <= first.0 {
            return first.1.clone();
        }
        for pair in self.breakpoints.windows(2) {
            let (x0, y0) = &pair[0];
            let (x1, y1) = &pair[1];
            if x <= x1 {
                // Interpolate on [x0, x1].
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
        let (xn, yn) = self.breakpoints.last().unwrap();
        yn + &self.final_slope * (x - xn)
    }

    /// Monotonically increasing in the non-strict sense.
    pub fn is_monotone(&self) -> bool {
        !self.final_slope.is_negative()
            && self.breakpoints.windows(2).all(|p| p[0].1 <= p[1].1)
    }

    /// Unbounded above (given monotonicity): positive final slope.
    pub fn is_unbounded(&self) -> bool {
        self.final_slope.is_positive()
    }

    /// Minimum value (for a monotone activation): the constant left tail.
    pub fn min_value(&self) -> &Q {
        &self.breakpoints[0].1
    }
}

/// Vertex classifier: outputs 1 exactly when the feature reaches the
/// threshold (inclusive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classifier {
    pub threshold: Q,
}

impl Classifier {
    pub fn new(threshold: Q) -> Self {
        Classifier { threshold }
    }

    pub fn classify(&self, value: &Q) -> bool {
        *value >= self.threshold
    }
}

/// One GNN layer: the self matrix, one neighbour matrix per colour (in
/// signature colour order), a bias vector, and the aggregation bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub a: Matrix,
    pub b: Vec<Matrix>,
    pub bias: Vec<Q>,
    pub agg: AggregationSpec,
}

/// A GNN over a unary/binary signature. Layer dimensions satisfy
/// `δ_0 = δ_L = signature.delta()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gnn {
    signature: Signature,
    layers: Vec<Layer>,
    activation: Activation,
    classifier: Classifier,
}

/// A breach of the monotonic max-sum conditions, reported by
/// [`validate_monotonic_max_sum`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Negative entry in `A` (`colour = None`) or some `B_c`.
    NegativeWeight {
        layer: usize,
        colour: Option<String>,
        row: usize,
        col: usize,
        value: Q,
    },
    ActivationNotMonotone,
    ActivationBounded,
    ActivationNegative,
    /// The activation never attains zero, so its range is not all of `ℝ≥0`.
    ActivationMissesZero,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeWeight { layer, colour, row, col, value } => {
                let m = match colour {
                    None => "A".to_string(),
                    Some(c) => format!("B[{c}]"),
                };
                write!(
                    f,
                    "layer {layer}: {m}[{},{}] = {} is negative",
                    row + 1,
                    col + 1,
                    print_q(value)
                )
            }
            Violation::ActivationNotMonotone => write!(f, "activation is not monotonically increasing"),
            Violation::ActivationBounded => write!(f, "activation is bounded above"),
            Violation::ActivationNegative => write!(f, "activation takes negative values"),
            Violation::ActivationMissesZero => write!(f, "activation never attains zero"),
        }
    }
}

impl Gnn {
    /// Assemble a network, checking all dimension invariants.
    pub fn new(
        signature: Signature,
        layers: Vec<Layer>,
        activation: Activation,
        classifier: Classifier,
    ) -> Result<Self, GnnError> {
        if layers.is_empty() {
            return Err(GnnError::EmptyGnn);
        }
        let delta = signature.delta();
        let mut prev = delta;
        for (i, layer) in layers.iter().enumerate() {
            let l = i + 1;
            if layer.a.cols() != prev {
                return Err(GnnError::LayerShape {
                    layer: l,
                    what: format!("A has {} columns, expected {prev}", layer.a.cols()),
                });
            }
            if layer.bias.len() != layer.a.rows() {
                return Err(GnnError::LayerShape {
                    layer: l,
                    what: format!(
                        "bias has length {}, expected {}",
                        layer.bias.len(),
                        layer.a.rows()
                    ),
                });
            }
            if layer.b.len() != signature.colours().len() {
                return Err(GnnError::LayerShape {
                    layer: l,
                    what: format!(
                        "{} neighbour matrices for {} colours",
                        layer.b.len(),
                        signature.colours().len()
                    ),
                });
            }
            for (c, b) in layer.b.iter().enumerate() {
                if b.rows() != layer.a.rows() || b.cols() != layer.a.cols() {
                    return Err(GnnError::LayerShape {
                        layer: l,
                        what: format!(
                            "B[{}] is {}x{}, expected {}x{}",
                            signature.colours()[c],
                            b.rows(),
                            b.cols(),
                            layer.a.rows(),
                            layer.a.cols()
                        ),
                    });
                }
            }
            prev = layer.a.rows();
        }
        if prev != delta {
            return Err(GnnError::LayerShape {
                layer: layers.len(),
                what: format!("output dimension {prev} must equal the signature's {delta}"),
            });
        }
        Ok(Gnn { signature, layers, activation, classifier })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Number of layers `L`.
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Layer by 1-based index `1..=L`, matching the write-up convention used
    /// in doc comments.
    pub fn layer(&self, l: usize) -> &Layer {
        assert!((1..=self.layers.len()).contains(&l), "layer index {l} out of range");
        &self.layers[l - 1]
    }

    /// Dimensions `[δ_0, .., δ_L]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.signature.delta()];
        dims.extend(self.layers.iter().map(|l| l.a.rows()));
        dims
    }

    /// Largest layer dimension `max(δ_0..δ_L)`.
    pub fn max_dimension(&self) -> usize {
        self.dims().into_iter().max().unwrap()
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    pub fn classifier(&self) -> &Classifier {
        &self.classifier
    }

    /// Replace every layer's aggregation bound (used by capacity bounding).
    pub fn with_aggregations(&self, aggs: Vec<AggregationSpec>) -> Self {
        assert_eq!(aggs.len(), self.layers.len());
        let mut g = self.clone();
        for (layer, agg) in g.layers.iter_mut().zip(aggs) {
            layer.agg = agg;
        }
        g
    }
}

/// Check the monotonic max-sum conditions; the empty list means the network
/// satisfies them all.
pub fn validate_monotonic_max_sum(g: &Gnn) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, layer) in g.layers.iter().enumerate() {
        let layer_no = i + 1;
        for (row, col, v) in layer.a.entries() {
            if v.is_negative() {
                out.push(Violation::NegativeWeight {
                    layer: layer_no,
                    colour: None,
                    row,
                    col,
                    value: v.clone(),
                });
            }
        }
        for (c, b) in layer.b.iter().enumerate() {
            for (row, col, v) in b.entries() {
                if v.is_negative() {
                    out.push(Violation::NegativeWeight {
                        layer: layer_no,
                        colour: Some(g.signature.colours()[c].clone()),
                        row,
                        col,
                        value: v.clone(),
                    });
                }
            }
        }
    }
    let act = &g.activation;
    if !act.is_monotone() {
        out.push(Violation::ActivationNotMonotone);
    } else {
        if !act.is_unbounded() {
            out.push(Violation::ActivationBounded);
        }
        if act.min_value().is_negative() {
            out.push(Violation::ActivationNegative);
        } else if !act.min_value().is_zero() {
            out.push(Violation::ActivationMissesZero);
        }
    }
    out
}

/// Least natural number `n` (zero included) with `act(n) >= alpha`.
/// Errors when the activation is bounded below `alpha`.
pub fn least_nat_activation_geq(act: &Activation, alpha: &Q) -> Result<BigUint, GnnError> {
    let at_zero = act.eval(&Q::zero());
    if at_zero >= *alpha {
        return Ok(BigUint::zero());
    }
    // act(0) < alpha, so the least real crossing point is positive; its
    // ceiling is the least natural (monotonicity).
    let points = act.breakpoints();
    for pair in points.windows(2) {
        let (x0, y0) = &pair[0];
        let (x1, y1) = &pair[1];
        if y1 >= alpha {
            let x = if y0 >= alpha {
                x0.clone() // alpha reached at or before this segment's start
            } else {
                x0 + (alpha - y0) * (x1 - x0) / (y1 - y0)
            };
            return Ok(ceil_nat(&x));
        }
    }
    let (xn, yn) = points.last().unwrap();
    if *yn >= *alpha {
        return Ok(ceil_nat(xn));
    }
    if !act.final_slope().is_positive() {
        return Err(GnnError::ActivationBounded(print_q(alpha)));
    }
    let x = xn + (alpha - yn) / act.final_slope();
    Ok(ceil_nat(&x))
}

/// Per-layer vertex labellings `λ_0 .. λ_L` of a forward pass.
pub type LayerTrace = Vec<BTreeMap<Term, Vec<Q>>>;

/// Run the network and return every intermediate labelling, `λ_0` first.
pub fn forward_trace(g: &Gnn, graph: &ColoredGraph) -> Result<LayerTrace, GnnError> {
    graph
        .uniform_dimension(g.signature.delta())
        .map_err(|_| GnnError::WrongInputDimension { expected: g.signature.delta() })?;
    for colour in graph.edge_colours() {
        if g.signature.colour_index(colour).is_none() {
            return Err(GnnError::UnknownColour(colour.clone()));
        }
    }
    let mut trace: LayerTrace = Vec::with_capacity(g.layers.len() + 1);
    trace.push(
        graph
            .vertices()
            .map(|v| (v.clone(), graph.label(v).unwrap().to_vec()))
            .collect(),
    );
    for layer in &g.layers {
        let prev = trace.last().unwrap();
        let dim_prev = layer.a.cols();
        let mut next = BTreeMap::new();
        for vertex in graph.vertices() {
            let own = layer.a.mul_vec(&prev[vertex]);
            let mut pre = own;
            for (c, colour) in g.signature.colours().iter().enumerate() {
                let neighbours = graph.successors(colour, vertex);
                // Component-wise maxsum over the neighbour multiset.
                let agg: Vec<Q> = (0..dim_prev)
                    .map(|j| {
                        let column: Vec<Q> =
                            neighbours.iter().map(|u| prev[*u][j].clone()).collect();
                        maxsum(layer.agg, &column)
                    })
                    .collect();
                let contrib = layer.b[c].mul_vec(&agg);
                for (p, x) in pre.iter_mut().zip(contrib) {
                    *p += x;
                }
            }
            let activated: Vec<Q> = pre
                .iter()
                .zip(&layer.bias)
                .map(|(x, b)| g.activation.eval(&(x + b)))
                .collect();
            next.insert(vertex.clone(), activated);
        }
        trace.push(next);
    }
    Ok(trace)
}

/// Run the network and classify: the output graph keeps the input's vertices
/// and edges, with Boolean labels `cls(λ_L)`.
pub fn forward(g: &Gnn, graph: &ColoredGraph) -> Result<ColoredGraph, GnnError> {
    let trace = forward_trace(g, graph)?;
    let last = trace.last().unwrap();
    let mut out = ColoredGraph::new();
    for (vertex, label) in last {
        let bits: Vec<Q> = label
            .iter()
            .map(|v| if g.classifier.classify(v) { Q::one() } else { Q::zero() })
            .collect();
        out.add_vertex(vertex.clone(), bits).expect("fresh vertex");
    }
    for colour in graph.edge_colours() {
        for (from, to) in graph.edges_of_colour(colour) {
            out.add_edge(colour, from.clone(), to.clone()).expect("endpoints exist");
        }
    }
    Ok(out)
}
