//! Best-first enumeration of the feature values a network can produce.
//!
//! For a network with nonnegative weight matrices and a monotonically
//! increasing activation, the set `X[level][i]` of values that component `i`
//! of a layer-`level` feature vector can take over *all* input graphs is
//! enumerable in increasing order: start from the value computed for an
//! isolated vertex and repeatedly apply the smallest available increase,
//! which is always one of
//!
//! * bumping one component of the vertex's own previous-layer vector to its
//!   next enumerable value,
//! * bumping one component of one neighbour's vector, or
//! * adding one more neighbour (with a non-zero vector, otherwise nothing
//!   changes under max-sum aggregation).
//!
//! [`ValueEnumerator`] drives this search with one persistent frontier per
//! `(level, i)` pair. Each frontier pops candidates in nondecreasing order
//! of the pre-activation value `z`, so emitted values are strictly
//! increasing and successive queries resume where the previous one stopped
//! instead of re-exploring from scratch.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use num_traits::Zero;

use crate::gnn::{maxsum, Gnn, GnnError};
use crate::rational::Q;

/// Per colour, a multiset of feature vectors (kept sorted so that equal
/// multisets compare equal). All colours of the signature are always
/// present, possibly with empty multisets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MultisetFamily {
    by_colour: BTreeMap<String, Vec<Vec<Q>>>,
}

impl MultisetFamily {
    /// The family with an empty multiset for every listed colour.
    pub fn empty(colours: &[String]) -> Self {
        MultisetFamily {
            by_colour: colours.iter().map(|c| (c.clone(), Vec::new())).collect(),
        }
    }

    /// Add one vector to the colour's multiset.
    ///
    /// # Panics
    /// If the colour is not part of the family.
    pub fn add(&mut self, colour: &str, vector: Vec<Q>) {
        let multiset = self
            .by_colour
            .get_mut(colour)
            .unwrap_or_else(|| panic!("unknown colour `{colour}`"));
        let at = multiset.partition_point(|v| v <= &vector);
        multiset.insert(at, vector);
    }

    /// Remove one copy of the vector from the colour's multiset; `false`
    /// when absent.
    pub fn remove(&mut self, colour: &str, vector: &[Q]) -> bool {
        let Some(multiset) = self.by_colour.get_mut(colour) else {
            return false;
        };
        match multiset.iter().position(|v| v[..] == *vector) {
            Some(at) => {
                multiset.remove(at);
                true
            }
            None => false,
        }
    }

    pub fn get(&self, colour: &str) -> &[Vec<Q>] {
        self.by_colour.get(colour).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn colours(&self) -> impl Iterator<Item = &String> {
        self.by_colour.keys()
    }

    pub fn is_empty(&self) -> bool {
        self.by_colour.values().all(Vec::is_empty)
    }
}

/// The pre-activation value contributed to component `i` of a layer-`level`
/// feature vector by own-vector `x` and neighbour families `family`:
/// row `i` of `A·x + Σ_c B_c·aggregate(family[c]) + bias`.
pub fn val(
    gnn: &Gnn,
    level: usize,
    i: usize,
    x: &[Q],
    family: &MultisetFamily,
) -> Result<Q, GnnError> {
    assert!(
        (1..=gnn.num_layers()).contains(&level),
        "layer index {level} out of range"
    );
    let layer = gnn.layer(level);
    let input_dim = layer.a.cols();
    assert!((1..=layer.a.rows()).contains(&i), "row index {i} out of range");
    if x.len() != input_dim {
        return Err(GnnError::WrongInputDimension { expected: input_dim });
    }
    let row = i - 1;
    let mut total = layer.bias[row].clone();
    for (j, weight) in layer.a.row(row).iter().enumerate() {
        total += weight * &x[j];
    }
    for (c, colour) in gnn.signature().colours().iter().enumerate() {
        let vectors = family.get(colour);
        for v in vectors {
            if v.len() != input_dim {
                return Err(GnnError::WrongInputDimension { expected: input_dim });
            }
        }
        for (j, weight) in layer.b[c].row(row).iter().enumerate() {
            if weight.is_zero() {
                continue;
            }
            let column: Vec<Q> = vectors.iter().map(|v| v[j].clone()).collect();
            total += weight * maxsum(layer.agg, &column);
        }
    }
    Ok(total)
}

/// Query position: from the beginning, or strictly after a given value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Probe {
    Start,
    After(Q),
}

/// Enumeration step result: the next value, or the end of a finite set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NextValue {
    Value(Q),
    End,
}

impl NextValue {
    pub fn value(self) -> Option<Q> {
        match self {
            NextValue::Value(q) => Some(q),
            NextValue::End => None,
        }
    }
}

/// One explored way of producing a value: own vector, neighbour families,
/// and the resulting pre-activation value. Ordered by `z` first, then by the
/// canonical content, which makes frontier pops deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    z: Q,
    x: Vec<Q>,
    family: MultisetFamily,
}

#[derive(Debug, Clone)]
struct SequenceState {
    /// Values emitted so far, strictly increasing.
    values: Vec<Q>,
    /// Unexplored candidates; absent once the reachable space is spent.
    frontier: BTreeSet<Candidate>,
    /// The isolated-vertex input vector for this layer, cached for the
    /// add-a-neighbour expansion.
    start: Vec<Q>,
}

/// Incremental enumerator for the value sets of one network.
///
/// State is memoised per `(level, i)`: deeper levels consume the sequences
/// of the level below through the same cache, so shared prefixes are
/// computed once. The enumeration is meaningful only for networks that pass
/// the monotonicity validation; on others it may diverge.
pub struct ValueEnumerator<'g> {
    gnn: &'g Gnn,
    /// `states[level]` has one entry per component; `None` until first used.
    states: Vec<Vec<Option<SequenceState>>>,
}

impl<'g> ValueEnumerator<'g> {
    pub fn new(gnn: &'g Gnn) -> Self {
        let dims = gnn.dims();
        let states = dims.iter().map(|&d| vec![None; d]).collect();
        ValueEnumerator { gnn, states }
    }

    pub fn gnn(&self) -> &Gnn {
        self.gnn
    }

    /// The least enumerable value strictly greater than the probe, or `End`
    /// if the set holds none. `Probe::Start` yields the least value overall.
    pub fn next(&mut self, level: usize, i: usize, alpha: Probe) -> NextValue {
        assert!(level < self.states.len(), "level {level} out of range");
        assert!(
            (1..=self.states[level].len()).contains(&i),
            "component {i} out of range at level {level}"
        );
        if level == 0 {
            // Input features are Boolean: the set is exactly {0, 1}.
            return match alpha {
                Probe::Start => NextValue::Value(Q::zero()),
                Probe::After(a) if a < Q::zero() => NextValue::Value(Q::zero()),
                Probe::After(a) if a < Q::from_integer(1.into()) => {
                    NextValue::Value(Q::from_integer(1.into()))
                }
                Probe::After(_) => NextValue::End,
            };
        }
        self.ensure(level, i);
        match alpha {
            Probe::Start => {
                NextValue::Value(self.state(level, i).values[0].clone())
            }
            Probe::After(a) => {
                // Serve from the emitted prefix when possible, otherwise
                // advance the frontier until a strictly larger value
                // appears or the space is spent.
                loop {
                    let state = self.state(level, i);
                    let at = state.values.partition_point(|v| v <= &a);
                    if at < state.values.len() {
                        return NextValue::Value(state.values[at].clone());
                    }
                    if state.frontier.is_empty() {
                        return NextValue::End;
                    }
                    self.advance(level, i);
                }
            }
        }
    }

    /// The least strictly positive value across all components feeding
    /// layer `level`, i.e. over the sets at `level - 1`; `None` when every
    /// component is stuck at zero.
    pub fn least_positive_value(&mut self, level: usize) -> Option<Q> {
        assert!(
            (1..=self.gnn.num_layers()).contains(&level),
            "layer index {level} out of range"
        );
        let below = self.states[level - 1].len();
        (1..=below)
            .filter_map(|i| self.next(level - 1, i, Probe::After(Q::zero())).value())
            .min()
    }

    fn state(&self, level: usize, i: usize) -> &SequenceState {
        self.states[level][i - 1].as_ref().expect("state ensured")
    }

    /// Materialise the `(level, i)` state: the isolated-vertex value is the
    /// first element, and the frontier holds its candidate unexpanded.
    fn ensure(&mut self, level: usize, i: usize) {
        if self.states[level][i - 1].is_some() {
            return;
        }
        let start = self.start_vector(level);
        let family = MultisetFamily::empty(self.gnn.signature().colours());
        let z = val(self.gnn, level, i, &start, &family).expect("dimensions fixed by construction");
        let first = self.gnn.activation().eval(&z);
        let mut frontier = BTreeSet::new();
        frontier.insert(Candidate { z, x: start.clone(), family });
        self.states[level][i - 1] = Some(SequenceState {
            values: vec![first],
            frontier,
            start,
        });
    }

    /// The input vector of an isolated vertex: component `j` is the least
    /// value of the level below.
    fn start_vector(&mut self, level: usize) -> Vec<Q> {
        let below = self.states[level - 1].len();
        (1..=below)
            .map(|j| {
                self.next(level - 1, j, Probe::Start)
                    .value()
                    .expect("start probes always yield a value")
            })
            .collect()
    }

    /// All single-step bumps of `vector`: each component advanced to its
    /// next value at `level - 1`, where one exists.
    fn expansions(&mut self, level: usize, vector: &[Q]) -> Vec<Vec<Q>> {
        let mut out = Vec::new();
        for j in 1..=vector.len() {
            if let NextValue::Value(next) =
                self.next(level - 1, j, Probe::After(vector[j - 1].clone()))
            {
                let mut bumped = vector.to_vec();
                bumped[j - 1] = next;
                out.push(bumped);
            }
        }
        out
    }

    /// Pop-and-expand until one new (strictly larger) value is emitted or
    /// the frontier empties. Pops occur in nondecreasing `z` order, so the
    /// first candidate whose activated value exceeds the emitted maximum is
    /// the correct next element.
    fn advance(&mut self, level: usize, i: usize) {
        while let Some(candidate) = {
            let state = self.states[level][i - 1].as_mut().expect("state ensured");
            state.frontier.pop_first()
        } {
            let Candidate { z, x, family } = candidate;
            let mut successors: Vec<Candidate> = Vec::new();
            for bumped in self.expansions(level, &x) {
                successors.push(Candidate { z: Q::zero(), x: bumped, family: family.clone() });
            }
            let colours: Vec<String> = self.gnn.signature().colours().to_vec();
            for colour in &colours {
                // Bump one component of one neighbour vector. Distinct
                // multiset elements suffice: bumping either of two equal
                // copies yields the same family.
                let distinct: Vec<Vec<Q>> = {
                    let set: BTreeSet<&Vec<Q>> = family.get(colour).iter().collect();
                    set.into_iter().cloned().collect()
                };
                for member in &distinct {
                    for bumped in self.expansions(level, member) {
                        let mut updated = family.clone();
                        updated.remove(colour, member);
                        updated.add(colour, bumped);
                        successors.push(Candidate { z: Q::zero(), x: x.clone(), family: updated });
                    }
                }
                // Add one fresh neighbour. An all-zero start vector would
                // leave the value unchanged, so it is pre-bumped.
                let start = self.state(level, i).start.clone();
                let fresh = if start.iter().any(|v| !v.is_zero()) {
                    vec![start]
                } else {
                    self.expansions(level, &start)
                };
                for vector in fresh {
                    let mut updated = family.clone();
                    updated.add(colour, vector);
                    successors.push(Candidate { z: Q::zero(), x: x.clone(), family: updated });
                }
            }
            let state = self.states[level][i - 1].as_mut().expect("state ensured");
            for mut succ in successors {
                succ.z = val(self.gnn, level, i, &succ.x, &succ.family)
                    .expect("dimensions fixed by construction");
                if succ.z > z {
                    state.frontier.insert(succ);
                }
            }
            let emitted = self.gnn.activation().eval(&z);
            let state = self.states[level][i - 1].as_mut().expect("state ensured");
            if Some(&emitted) > state.values.last() {
                state.values.push(emitted);
                return;
            }
        }
    }
}
