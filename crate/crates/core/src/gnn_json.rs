//! JSON format for networks.
//!
//! ```json
//! {
//!   "colors": ["c"],
//!   "dims": [1, 1],
//!   "layers": [
//!     { "A": [["1"]], "B": { "c": [["1"]] }, "bias": ["0"], "agg": { "k": "inf" } }
//!   ],
//!   "activation": { "relu": true },
//!   "classifier": { "threshold": "1" }
//! }
//! ```
//!
//! Every number is exact: a rational is written as a JSON integer or as a
//! string `"p/q"`; floating-point literals are rejected outright, so values
//! survive a round-trip bit for bit. `dims` lists the layer dimensions from
//! input to output and must match the matrix shapes. `agg` is `{"k": n}` for
//! a finite aggregation bound or `{"k": "inf"}` for the unbounded sum.
//! `activation` is `{"relu": true}` or a piecewise-linear description
//! `{"breakpoints": [["0","0"], ["1","1"]], "final_slope": "1"}`.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::gnn::{Activation, AggregationSpec, Classifier, Gnn, Layer, Matrix};
use crate::logic::Signature;
use crate::rational::{parse_q, print_q, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JsonError {
    #[error("invalid JSON: {0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> JsonError {
    JsonError::Schema { path: path.into(), message: message.into() }
}

fn as_object<'v>(value: &'v Value, path: &str) -> Result<&'v Map<String, Value>, JsonError> {
    value.as_object().ok_or_else(|| schema(path, "expected an object"))
}

fn as_array<'v>(value: &'v Value, path: &str) -> Result<&'v Vec<Value>, JsonError> {
    value.as_array().ok_or_else(|| schema(path, "expected an array"))
}

fn field<'v>(object: &'v Map<String, Value>, name: &str, path: &str) -> Result<&'v Value, JsonError> {
    object.get(name).ok_or_else(|| schema(path, format!("missing field `{name}`")))
}

fn rational(value: &Value, path: &str) -> Result<Q, JsonError> {
    match value {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Q::from_integer(i.into()))
            } else if let Some(u) = n.as_u64() {
                Ok(Q::from_integer(u.into()))
            } else {
                Err(schema(
                    path,
                    format!("floating-point value {n} is not exact; write it as \"p/q\""),
                ))
            }
        }
        Value::String(s) => parse_q(s).map_err(|message| schema(path, message)),
        other => Err(schema(path, format!("expected a rational, found {other}"))),
    }
}

fn rational_vector(value: &Value, path: &str) -> Result<Vec<Q>, JsonError> {
    as_array(value, path)?
        .iter()
        .enumerate()
        .map(|(at, entry)| rational(entry, &format!("{path}[{at}]")))
        .collect()
}

fn matrix(value: &Value, rows: usize, cols: usize, path: &str) -> Result<Matrix, JsonError> {
    let row_values = as_array(value, path)?;
    if row_values.len() != rows {
        return Err(schema(path, format!("expected {rows} rows, found {}", row_values.len())));
    }
    let mut data = Vec::with_capacity(rows);
    for (at, row) in row_values.iter().enumerate() {
        let row_path = format!("{path}[{at}]");
        let entries = rational_vector(row, &row_path)?;
        if entries.len() != cols {
            return Err(schema(row_path, format!("expected {cols} columns, found {}", entries.len())));
        }
        data.push(entries);
    }
    Matrix::from_rows(data).map_err(|e| schema(path, e.to_string()))
}

fn aggregation(value: &Value, path: &str) -> Result<AggregationSpec, JsonError> {
    let object = as_object(value, path)?;
    match field(object, "k", path)? {
        Value::String(s) if s == "inf" => Ok(AggregationSpec::Infinite),
        Value::Number(n) => n
            .as_u64()
            .map(AggregationSpec::Finite)
            .ok_or_else(|| schema(path, format!("`k` must be a natural number, found {n}"))),
        other => Err(schema(path, format!("`k` must be a natural number or \"inf\", found {other}"))),
    }
}

fn activation(value: &Value, path: &str) -> Result<Activation, JsonError> {
    let object = as_object(value, path)?;
    if let Some(flag) = object.get("relu") {
        return match flag {
            Value::Bool(true) => Ok(Activation::relu()),
            other => Err(schema(path, format!("`relu` must be true, found {other}"))),
        };
    }
    let list = as_array(field(object, "breakpoints", path)?, &format!("{path}.breakpoints"))?;
    let mut breakpoints = Vec::with_capacity(list.len());
    for (at, pair) in list.iter().enumerate() {
        let pair_path = format!("{path}.breakpoints[{at}]");
        let entries = as_array(pair, &pair_path)?;
        if entries.len() != 2 {
            return Err(schema(pair_path, "expected an [input, output] pair"));
        }
        breakpoints.push((
            rational(&entries[0], &format!("{pair_path}[0]"))?,
            rational(&entries[1], &format!("{pair_path}[1]"))?,
        ));
    }
    let final_slope = rational(field(object, "final_slope", path)?, &format!("{path}.final_slope"))?;
    Activation::new(breakpoints, final_slope).map_err(|e| schema(path, e.to_string()))
}

/// Parse a network from its JSON document.
pub fn parse_gnn(text: &str) -> Result<Gnn, JsonError> {
    let root: Value = serde_json::from_str(text).map_err(|e| JsonError::Syntax(e.to_string()))?;
    let object = as_object(&root, "$")?;

    let colour_values = as_array(field(object, "colors", "$")?, "$.colors")?;
    let mut colours = Vec::with_capacity(colour_values.len());
    for (at, value) in colour_values.iter().enumerate() {
        let name = value
            .as_str()
            .ok_or_else(|| schema(format!("$.colors[{at}]"), "expected a colour name"))?;
        colours.push(name.to_string());
    }

    let dim_values = as_array(field(object, "dims", "$")?, "$.dims")?;
    let mut dims = Vec::with_capacity(dim_values.len());
    for (at, value) in dim_values.iter().enumerate() {
        let dim = value
            .as_u64()
            .ok_or_else(|| schema(format!("$.dims[{at}]"), "expected a dimension"))?;
        dims.push(dim as usize);
    }
    if dims.len() < 2 {
        return Err(schema("$.dims", "need at least an input and an output dimension"));
    }
    let delta = dims[0];
    if *dims.last().unwrap() != delta {
        return Err(schema("$.dims", "input and output dimensions must both equal delta"));
    }
    let sig = Signature::new(colours.clone(), delta);

    let layer_values = as_array(field(object, "layers", "$")?, "$.layers")?;
    if layer_values.len() + 1 != dims.len() {
        return Err(schema(
            "$.layers",
            format!("{} layers need {} dims, found {}", layer_values.len(), layer_values.len() + 1, dims.len()),
        ));
    }
    let mut layers = Vec::with_capacity(layer_values.len());
    for (at, value) in layer_values.iter().enumerate() {
        let path = format!("$.layers[{at}]");
        let layer = as_object(value, &path)?;
        let (rows, cols) = (dims[at + 1], dims[at]);
        let a = matrix(field(layer, "A", &path)?, rows, cols, &format!("{path}.A"))?;
        let b_object = as_object(field(layer, "B", &path)?, &format!("{path}.B"))?;
        for name in b_object.keys() {
            if !colours.iter().any(|c| c == name) {
                return Err(schema(format!("{path}.B.{name}"), "unknown colour"));
            }
        }
        let mut b = Vec::with_capacity(colours.len());
        for colour in &colours {
            let b_path = format!("{path}.B.{colour}");
            let value = b_object
                .get(colour)
                .ok_or_else(|| schema(format!("{path}.B"), format!("missing colour `{colour}`")))?;
            b.push(matrix(value, rows, cols, &b_path)?);
        }
        let bias = rational_vector(field(layer, "bias", &path)?, &format!("{path}.bias"))?;
        if bias.len() != rows {
            return Err(schema(format!("{path}.bias"), format!("expected {rows} entries")));
        }
        let agg = aggregation(field(layer, "agg", &path)?, &format!("{path}.agg"))?;
        layers.push(Layer { a, b, bias, agg });
    }

    let act = activation(field(object, "activation", "$")?, "$.activation")?;
    let classifier_object = as_object(field(object, "classifier", "$")?, "$.classifier")?;
    let threshold =
        rational(field(classifier_object, "threshold", "$.classifier")?, "$.classifier.threshold")?;

    Gnn::new(sig, layers, act, Classifier::new(threshold))
        .map_err(|e| schema("$", e.to_string()))
}

fn rational_value(x: &Q) -> Value {
    if x.is_integer() {
        if let Ok(small) = i64::try_from(x.numer().clone()) {
            return json!(small);
        }
    }
    Value::String(print_q(x))
}

fn matrix_value(m: &Matrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|row| Value::Array(m.row(row).iter().map(rational_value).collect()))
            .collect(),
    )
}

/// Render a network as a JSON document; [`parse_gnn`] reads it back exactly.
pub fn print_gnn(g: &Gnn) -> String {
    let sig = g.signature();
    let layers: Vec<Value> = g
        .layers()
        .iter()
        .map(|layer| {
            let b: Map<String, Value> = sig
                .colours()
                .iter()
                .zip(&layer.b)
                .map(|(colour, m)| (colour.clone(), matrix_value(m)))
                .collect();
            json!({
                "A": matrix_value(&layer.a),
                "B": b,
                "bias": layer.bias.iter().map(rational_value).collect::<Vec<_>>(),
                "agg": match layer.agg {
                    AggregationSpec::Finite(k) => json!({ "k": k }),
                    AggregationSpec::Infinite => json!({ "k": "inf" }),
                },
            })
        })
        .collect();
    let activation = if g.activation().is_relu() {
        json!({ "relu": true })
    } else {
        json!({
            "breakpoints": g
                .activation()
                .breakpoints()
                .iter()
                .map(|(input, output)| json!([rational_value(input), rational_value(output)]))
                .collect::<Vec<_>>(),
            "final_slope": rational_value(g.activation().final_slope()),
        })
    };
    let document = json!({
        "colors": sig.colours(),
        "dims": g.dims(),
        "layers": layers,
        "activation": activation,
        "classifier": { "threshold": rational_value(&g.classifier().threshold) },
    });
    serde_json::to_string_pretty(&document).expect("document serializes")
}
