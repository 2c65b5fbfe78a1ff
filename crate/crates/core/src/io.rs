//! JSON file formats for graphs and fields.
//!
//! Graph files list vertices and edges in a fixed order and carry the
//! well-validation report; serializing a loaded graph reproduces the file
//! byte for byte. Field files map vertex ids to values.

use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VertexField;
use crate::graph::{Edge, ValidationReport, Vertex, WeightedGraph};

#[derive(Debug, Deserialize)]
struct GraphIn {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    #[serde(default)]
    #[allow(dead_code)]
    validation: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct GraphOut<'a> {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    validation: &'a ValidationReport,
}

pub fn parse_graph(text: &str) -> Result<WeightedGraph> {
    let raw: GraphIn = serde_json::from_str(text)?;
    WeightedGraph::new(raw.vertices, raw.edges)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<WeightedGraph> {
    parse_graph(&fs::read_to_string(path)?)
}

/// Canonical JSON text of a graph, with a freshly computed validation report.
pub fn graph_to_json(g: &WeightedGraph) -> String {
    let report = g.validate_potential(None);
    let out = GraphOut {
        vertices: g.vertices(),
        edges: g.edge_specs(),
        validation: &report,
    };
    let mut s = serde_json::to_string_pretty(&out).expect("graph serializes");
    s.push('\n');
    s
}

/// `{"values": {id: value}}` in vertex order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldFile {
    pub values: IndexMap<String, f64>,
}

impl FieldFile {
    pub fn from_field(g: &WeightedGraph, u: &VertexField) -> Self {
        FieldFile {
            values: g.ids().iter().cloned().zip(u.values().iter().copied()).collect(),
        }
    }

    /// Missing ids read as zero; unknown ids are rejected.
    pub fn to_field(&self, g: &WeightedGraph) -> Result<VertexField> {
        let mut u = VertexField::zeros(g.len());
        for (id, &v) in &self.values {
            if !v.is_finite() {
                return Err(Error::Parse(format!("non-finite value at `{id}`")));
            }
            u[g.index_of(id)?] = v;
        }
        Ok(u)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateIn {
    Field(FieldFile),
    Report { minimizer: FieldFile },
}

/// Reads a field file, or the `minimizer` of a solve report.
pub fn parse_state(g: &WeightedGraph, text: &str) -> Result<VertexField> {
    let state: StateIn = serde_json::from_str(text)?;
    match state {
        StateIn::Field(f) | StateIn::Report { minimizer: f } => f.to_field(g),
    }
}

pub fn load_state(g: &WeightedGraph, path: impl AsRef<Path>) -> Result<VertexField> {
    parse_state(g, &fs::read_to_string(path)?)
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    #[test]
    fn graph_round_trip_is_byte_identical() {
        let g = p6_well();
        let text = graph_to_json(&g);
        assert!(text.contains("\"validation\""));
        let again = graph_to_json(&parse_graph(&text).unwrap());
        assert_eq!(text, again);
    }

    #[test]
    fn fields_default_to_zero_and_reject_unknown_ids() {
        let g = p6_well();
        let u = parse_state(&g, r#"{"values": {"v3": 1.5, "v4": -2}}"#).unwrap();
        assert_eq!(u.values(), &[0.0, 0.0, 1.5, -2.0, 0.0, 0.0]);
        let err = parse_state(&g, r#"{"values": {"v9": 1}}"#).unwrap_err();
        assert_eq!(err, Error::UnknownVertex("v9".into()));
        let report = r#"{"level": 3, "minimizer": {"values": {"v1": 0.25}}}"#;
        assert_eq!(parse_state(&g, report).unwrap()[0], 0.25);
        assert!(matches!(parse_state(&g, "[1,2]"), Err(Error::Parse(_))));
    }

    #[test]
    fn field_values_round_trip_exactly() {
        let g = k2();
        let u = VertexField::new(vec![std::f64::consts::E, -0.1 - 0.2]);
        let text = to_json_pretty(&FieldFile::from_field(&g, &u));
        assert_eq!(parse_state(&g, &text).unwrap(), u);
    }
}
