//! A bidirectional toolchain between monotonic max-sum graph neural
//! networks and Datalog programs, built entirely on exact rational
//! arithmetic.
//!
//! The pieces, in dependency order:
//!
//! * [`rational`] — arbitrary-precision rationals ([`rational::Q`]) and the
//!   integer helpers everything else uses; no floating point anywhere.
//! * [`logic`] / [`rules`] — ground facts, datasets, rules with optional
//!   inequalities, and single-step consequence evaluation.
//! * [`graph`] / [`gnn`] / [`codec`] — Boolean edge-coloured graphs, the
//!   network model (per-layer matrices, max-sum aggregation, piecewise
//!   linear activations), and the lossless dataset↔graph translation that
//!   turns a network into a dataset transformation
//!   ([`codec::canonical_transform`]).
//! * [`values`] — lazy enumeration of every value a feature component can
//!   take across all inputs, in strictly increasing order.
//! * [`capacity`] — how many neighbours a layer can ever usefully
//!   aggregate, and [`capacity::bound_aggregation`] which caps unbounded
//!   sums without changing the transformation.
//! * [`tree`] / [`extract`] — tree-shaped rule bodies with a canonical
//!   form, their bounded enumeration, and extraction of an equivalent
//!   program from a network ([`extract::extract_program`]).
//! * [`compile`] — the reverse direction: compiling an inequality-free
//!   tree-shaped program into an equivalent network.
//! * [`verify`] — exhaustive and seeded-random differential testing
//!   between a network and a program, plus monotonicity and
//!   renaming-invariance checks.
//! * [`encodings`] — the pair-vertex and ordered-pair dataset encodings
//!   used by other GNN pipelines, and end-to-end chaining.
//! * [`text`] / [`gnn_json`] — exact, round-tripping file formats.
//!
//! Heavyweight sweeps (dataset enumeration, capture tests, random trials)
//! run data-parallel via rayon when the `parallel` feature (on by default)
//! is enabled; every such entry point also takes an explicit [`ExecMode`]
//! so the sequential fallback stays exercised and results stay identical
//! across modes.

pub mod capacity;
pub mod codec;
pub mod compile;
pub mod encodings;
mod exec;
pub mod extract;
pub mod gnn;
pub mod gnn_json;
pub mod graph;
pub mod logic;
pub mod rational;
pub mod rules;
pub mod text;
pub mod tree;
pub mod values;
pub mod verify;

pub use capacity::{bound_aggregation, layer_capacities, CapacityReport};
pub use codec::{canonical_transform, decode, encode};
pub use compile::{check_internal_semantics, compile, CompiledGnn};
pub use exec::ExecMode;
pub use extract::{captures, extract_program};
pub use gnn::{forward, forward_trace, maxsum, validate_monotonic_max_sum, Gnn};
pub use gnn_json::{parse_gnn, print_gnn};
pub use logic::{Atom, Dataset, Signature, Term};
pub use rational::Q;
pub use rules::{Program, Rule};
pub use text::{parse_dataset, parse_program, print_dataset, print_program};
pub use values::ValueEnumerator;
pub use verify::{
    check_equivalence, check_isomorphism_invariance, check_monotonicity, Report,
};
