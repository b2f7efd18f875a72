//! Per-layer aggregation capacities.
//!
//! For a network with nonnegative weights, a threshold classifier only cares
//! whether the final values reach the threshold. Working backwards from the
//! classifier one can bound, layer by layer, how many neighbours can ever
//! matter to crossing it: with `w` the least nonzero weight entry, `x` the
//! least positive input value, `b` the least bias and `Z` the least natural
//! number the activation maps to the running threshold, at most
//! `ceil((Z - b) / (w * x))` neighbours are needed — any further ones cannot
//! change any classification. Replacing each layer's aggregation bound with
//! this capacity therefore preserves the network's behaviour on every
//! dataset.

use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::gnn::{
    least_nat_activation_geq, validate_monotonic_max_sum, AggregationSpec, Gnn, Violation,
};
use crate::rational::{ceil_nat, print_q, Q};
use crate::values::ValueEnumerator;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CapacityError {
    #[error("the network violates the required weight/activation conditions: {}",
            .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidGnn(Vec<Violation>),
}

/// What the backward pass computed for one layer. Layers below an early
/// return carry a zero capacity and no intermediates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerCapacity {
    /// The bound on how many neighbours this layer ever needs to aggregate.
    pub capacity: BigUint,
    /// The threshold the layer's *outputs* must reach (the classifier
    /// threshold for the last layer, derived for the ones below).
    pub threshold_after: Option<Q>,
    /// Least natural number the activation maps to `threshold_after`.
    pub threshold_before: Option<BigUint>,
    /// Least nonzero entry across the layer's weight matrices.
    pub least_weight: Option<Q>,
    /// Least positive value the layer below can feed in.
    pub least_input: Option<Q>,
    /// Least entry of the layer's bias vector.
    pub least_bias: Option<Q>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityReport {
    /// Entry `l - 1` describes layer `l`.
    pub layers: Vec<LayerCapacity>,
    /// The layer at which the backward pass stopped because no nonzero
    /// weight or no positive input value exists, if any.
    pub early_return_layer: Option<usize>,
    /// The overall capacity: the maximum over all layers.
    pub capacity: BigUint,
}

impl fmt::Display for CapacityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, layer) in self.layers.iter().enumerate() {
            write!(f, "layer {}: capacity {}", idx + 1, layer.capacity)?;
            let mut parts = Vec::new();
            if let Some(w) = &layer.least_weight {
                parts.push(format!("least weight {}", print_q(w)));
            }
            if let Some(x) = &layer.least_input {
                parts.push(format!("least input {}", print_q(x)));
            }
            if let Some(b) = &layer.least_bias {
                parts.push(format!("least bias {}", print_q(b)));
            }
            if let Some(z) = &layer.threshold_before {
                parts.push(format!("pre-activation threshold {z}"));
            }
            if let Some(a) = &layer.threshold_after {
                parts.push(format!("output threshold {}", print_q(a)));
            }
            if !parts.is_empty() {
                write!(f, " ({})", parts.join(", "))?;
            }
            if self.early_return_layer == Some(idx + 1) {
                write!(f, " [stopped here: nothing can cross the threshold]")?;
            }
            writeln!(f)?;
        }
        write!(f, "overall capacity: {}", self.capacity)
    }
}

/// Run the backward pass over all layers.
///
/// Requires a network that satisfies the monotonic max-sum conditions; the
/// value enumeration underpinning `least_input` diverges otherwise.
pub fn layer_capacities(gnn: &Gnn) -> Result<CapacityReport, CapacityError> {
    let violations = validate_monotonic_max_sum(gnn);
    if !violations.is_empty() {
        return Err(CapacityError::InvalidGnn(violations));
    }
    let num_layers = gnn.num_layers();
    let mut layers = vec![
        LayerCapacity {
            capacity: BigUint::zero(),
            threshold_after: None,
            threshold_before: None,
            least_weight: None,
            least_input: None,
            least_bias: None,
        };
        num_layers
    ];
    let mut enumerator = ValueEnumerator::new(gnn);
    let mut early_return_layer = None;
    let mut threshold = gnn.classifier().threshold.clone();
    for l in (1..=num_layers).rev() {
        let entry = &mut layers[l - 1];
        entry.threshold_after = Some(threshold.clone());
        let layer = gnn.layer(l);
        let least_weight = layer
            .a
            .least_nonzero()
            .into_iter()
            .chain(layer.b.iter().filter_map(|m| m.least_nonzero()))
            .min()
            .cloned();
        let least_input = enumerator.least_positive_value(l);
        let entry = &mut layers[l - 1];
        entry.least_weight = least_weight.clone();
        entry.least_input = least_input.clone();
        let (Some(weight), Some(input)) = (least_weight, least_input) else {
            // No nonzero weight or no positive input: neighbour counts are
            // irrelevant from here down.
            early_return_layer = Some(l);
            break;
        };
        let before = least_nat_activation_geq(gnn.activation(), &threshold)
            .expect("unbounded activation reaches every threshold");
        let bias = layer.bias.iter().min().expect("nonempty bias").clone();
        let before_q = Q::from_integer(before.clone().into());
        let needed = ceil_nat(&((&before_q - &bias) / (&weight * &input)));
        let capacity = match layer.agg {
            AggregationSpec::Finite(k) => needed.min(BigUint::from(k)),
            AggregationSpec::Infinite => needed,
        };
        let entry = &mut layers[l - 1];
        entry.threshold_before = Some(before);
        entry.least_bias = Some(bias.clone());
        entry.capacity = capacity;
        threshold = (before_q - bias) / weight;
    }
    let capacity = layers.iter().map(|l| l.capacity.clone()).max().unwrap_or_default();
    Ok(CapacityReport { layers, early_return_layer, capacity })
}

/// The network with every layer's aggregation bound replaced by that
/// layer's capacity; behaviour on every dataset is unchanged.
pub fn bound_aggregation(gnn: &Gnn, report: &CapacityReport) -> Gnn {
    assert_eq!(report.layers.len(), gnn.num_layers(), "report belongs to another network");
    let aggs = report
        .layers
        .iter()
        .map(|l| {
            let k = u64::try_from(&l.capacity)
                .expect("capacity exceeds the representable aggregation bound");
            AggregationSpec::Finite(k)
        })
        .collect();
    gnn.with_aggregations(aggs)
}
