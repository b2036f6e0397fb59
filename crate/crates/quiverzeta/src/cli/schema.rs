//! JSON input schema for algebras and representations.
//!
//! Two document shapes, discriminated by `"type"`:
//!
//! ```json
//! {"type":"algebra","n":2,"d":1,
//!  "brackets":[{"i":1,"j":2,"coeffs":[1]},{"i":2,"j":1,"coeffs":[-1]}]}
//! ```
//!
//! Bracket pairs not listed default to zero; `i`, `j` are 1-indexed and
//! `coeffs` has one entry per central generator.
//!
//! ```json
//! {"type":"rep",
//!  "vertices":[{"id":"v","n1":1,"n2":1}],
//!  "edges":[{"tail":"v","head":"v","matrix":[[1]]}]}
//! ```
//!
//! Matrices are row-major with `n1(tail)` rows and `n2(head)` columns; edge
//! ids are optional and default to `e0, e1, ...` in order.

use serde::{Deserialize, Serialize};

use crate::model::{AdmissibleRep, IntMatrix, ModelError, NilpotentAlgebra, Quiver};

use super::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Document {
    #[serde(rename = "algebra")]
    Algebra(AlgebraDoc),
    #[serde(rename = "rep")]
    Rep(RepDoc),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDoc {
    pub n: u32,
    pub d: u32,
    #[serde(default)]
    pub brackets: Vec<BracketEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketEntry {
    pub i: u32,
    pub j: u32,
    pub coeffs: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepDoc {
    pub vertices: Vec<VertexDoc>,
    #[serde(default)]
    pub edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexDoc {
    pub id: String,
    pub n1: u32,
    pub n2: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub tail: String,
    pub head: String,
    pub matrix: Vec<Vec<i64>>,
}

/// A parsed input document: an algebra (convertible to its representation on
/// demand) or a representation given directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedInput {
    Algebra(NilpotentAlgebra),
    Rep(AdmissibleRep),
}

impl ParsedInput {
    /// The representation this input denotes; algebras go through the
    /// one-vertex 2n-loop dictionary.
    pub fn to_rep(&self) -> AdmissibleRep {
        match self {
            ParsedInput::Algebra(alg) => crate::model::algebra_to_rep(alg),
            ParsedInput::Rep(rep) => rep.clone(),
        }
    }
}

/// Parse and validate a JSON document into a domain value. Schema errors are
/// path-addressed; shape mismatches name the offending edge.
///
/// The `"type"` tag is dispatched by hand so that field errors keep their
/// full path (tagged-enum deserialization would buffer the content and lose
/// it).
pub fn parse_rep(document: &str) -> Result<ParsedInput, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(document).map_err(|e| CliError::Schema(format!("(json) {e}")))?;
    let ty = value
        .get("type")
        .and_then(|t| t.as_str())
        .map(str::to_owned)
        .ok_or_else(|| CliError::Schema("type: expected \"algebra\" or \"rep\"".into()))?;
    let mut payload = value;
    payload
        .as_object_mut()
        .expect("checked above: has a type field")
        .remove("type");
    match ty.as_str() {
        "algebra" => {
            let doc: AlgebraDoc = deserialize_with_path(payload)?;
            Ok(ParsedInput::Algebra(algebra_from_doc(&doc)?))
        }
        "rep" => {
            let doc: RepDoc = deserialize_with_path(payload)?;
            Ok(ParsedInput::Rep(rep_from_doc(&doc)?))
        }
        other => Err(CliError::Schema(format!(
            "type: unknown document type {other:?}"
        ))),
    }
}

fn deserialize_with_path<T: serde::de::DeserializeOwned>(
    value: serde_json::Value,
) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value)
        .map_err(|e| CliError::Schema(format!("{}: {}", e.path(), e.inner())))
}

/// Render a domain value back into its canonical JSON document.
pub fn render(input: &ParsedInput) -> String {
    let doc = match input {
        ParsedInput::Algebra(a) => Document::Algebra(algebra_to_doc(a)),
        ParsedInput::Rep(r) => Document::Rep(rep_to_doc(r)),
    };
    serde_json::to_string_pretty(&doc).expect("documents serialize cleanly")
}

fn algebra_from_doc(doc: &AlgebraDoc) -> Result<NilpotentAlgebra, CliError> {
    let mut alg = NilpotentAlgebra::zero_structure(doc.n, doc.d);
    let mut seen = std::collections::BTreeSet::new();
    for (idx, b) in doc.brackets.iter().enumerate() {
        if b.i == 0 || b.i > doc.n || b.j == 0 || b.j > doc.n {
            return Err(ModelError::BracketIndex {
                i: b.i,
                j: b.j,
                n: doc.n,
            }
            .into());
        }
        if b.coeffs.len() != doc.d as usize {
            return Err(CliError::Schema(format!(
                "brackets[{idx}].coeffs: expected {} entries (one per central generator), got {}",
                doc.d,
                b.coeffs.len()
            )));
        }
        if !seen.insert((b.i, b.j)) {
            return Err(CliError::Schema(format!(
                "brackets[{idx}]: duplicate pair ({}, {})",
                b.i, b.j
            )));
        }
        for (k, &c) in b.coeffs.iter().enumerate() {
            alg.set_c(b.i - 1, b.j - 1, k as u32, c);
        }
    }
    Ok(alg)
}

fn algebra_to_doc(alg: &NilpotentAlgebra) -> AlgebraDoc {
    let mut brackets = Vec::new();
    for i in 0..alg.n() {
        for j in 0..alg.n() {
            let coeffs: Vec<i64> = (0..alg.d()).map(|k| alg.c(i, j, k)).collect();
            if coeffs.iter().any(|&c| c != 0) {
                brackets.push(BracketEntry {
                    i: i + 1,
                    j: j + 1,
                    coeffs,
                });
            }
        }
    }
    AlgebraDoc {
        n: alg.n(),
        d: alg.d(),
        brackets,
    }
}

fn rep_from_doc(doc: &RepDoc) -> Result<AdmissibleRep, CliError> {
    let vertices: Vec<String> = doc.vertices.iter().map(|v| v.id.clone()).collect();
    let edges: Vec<(String, String, String)> = doc
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            (
                e.id.clone().unwrap_or_else(|| format!("e{i}")),
                e.tail.clone(),
                e.head.clone(),
            )
        })
        .collect();
    let quiver = Quiver::new(vertices, edges)?;
    let ranks: Vec<(u32, u32)> = doc.vertices.iter().map(|v| (v.n1, v.n2)).collect();
    let mut maps = Vec::with_capacity(doc.edges.len());
    for (idx, e) in doc.edges.iter().enumerate() {
        let want_rows = ranks[quiver.tail(idx)].0;
        let want_cols = ranks[quiver.head(idx)].1;
        let got_rows = e.matrix.len() as u32;
        if got_rows != want_rows || e.matrix.iter().any(|r| r.len() as u32 != want_cols) {
            let got_cols = e.matrix.first().map(|r| r.len() as u32).unwrap_or(0);
            return Err(ModelError::MatrixShape {
                index: idx,
                id: quiver.edge_id(idx).to_string(),
                want_rows,
                want_cols,
                got_rows,
                got_cols,
            }
            .into());
        }
        let data: Vec<i64> = e.matrix.iter().flatten().copied().collect();
        maps.push(IntMatrix::new(want_rows, want_cols, data).expect("shape checked above"));
    }
    Ok(AdmissibleRep::new(quiver, ranks, maps)?)
}

fn rep_to_doc(rep: &AdmissibleRep) -> RepDoc {
    let q = rep.quiver();
    let vertices = q
        .vertex_ids()
        .iter()
        .enumerate()
        .map(|(v, id)| VertexDoc {
            id: id.clone(),
            n1: rep.n1(v),
            n2: rep.n2(v),
        })
        .collect();
    let edges = (0..q.edge_count())
        .map(|e| EdgeDoc {
            id: Some(q.edge_id(e).to_string()),
            tail: q.vertex_ids()[q.tail(e)].clone(),
            head: q.vertex_ids()[q.head(e)].clone(),
            matrix: rep.edge_map(e).as_nested(),
        })
        .collect();
    RepDoc { vertices, edges }
}
