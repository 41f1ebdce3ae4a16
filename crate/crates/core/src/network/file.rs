//! JSON network files.
//!
//! ```json
//! {
//!   "n_nodes": 3,
//!   "alpha": 0.2,
//!   "edges": [[1, 2, 1.0], [2, 3, 2.0, 0.5]],
//!   "shunt_b": [0.0, 0.0, 0.0],
//!   "params": { "kp": 1.0, "kq": 1.0, "taup": 1.0, "tauq": [1.0, 2.0, 1.0] }
//! }
//! ```
//!
//! Node indices are 1-based. An edge is `[i, k, b]` (conductance `alpha · b`)
//! or `[i, k, b, g]`. `shunt_b` defaults to zeros. A `shunt_g` entry is
//! accepted only if every value is zero.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Edge, NetworkGraph};
use crate::error::{Error, Result};

/// A scalar shared by all nodes, or one value per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Uniform(f64),
    PerNode(Vec<f64>),
}

impl ParamValue {
    pub fn expand(&self, n: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            ParamValue::Uniform(x) => Ok(vec![*x; n]),
            ParamValue::PerNode(v) if v.len() == n => Ok(v.clone()),
            ParamValue::PerNode(v) => Err(Error::InvalidParams(format!(
                "params.{name} has {} entries for {n} nodes",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileParams {
    pub kp: ParamValue,
    pub kq: ParamValue,
    pub taup: ParamValue,
    pub tauq: ParamValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    n_nodes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    edges: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shunt_b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shunt_g: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<FileParams>,
}

/// A validated network file.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFile {
    pub graph: NetworkGraph,
    pub alpha: Option<f64>,
    pub params: Option<FileParams>,
}

impl NetworkFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawNetwork = serde_json::from_str(text)?;
        raw.validate()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Serialize with 1-based indices; edges carry an explicit conductance
    /// unless the graph has a uniform ratio equal to `alpha`.
    pub fn to_json(&self) -> Result<String> {
        let ratio_matches = match (self.alpha, self.graph.uniform_ratio()) {
            (Some(a), Some(r)) => (a - r).abs() <= 1e-12 * a.abs().max(1e-300),
            (Some(_), None) => self.graph.edges().is_empty(),
            _ => false,
        };
        let edges = self
            .graph
            .edges()
            .iter()
            .map(|e| {
                let mut row = vec![(e.i + 1) as f64, (e.k + 1) as f64, e.b];
                if !ratio_matches {
                    row.push(e.g);
                }
                row
            })
            .collect();
        let raw = RawNetwork {
            n_nodes: self.graph.n_nodes(),
            alpha: self.alpha,
            edges,
            shunt_b: Some(self.graph.shunt_b().to_vec()),
            shunt_g: None,
            params: self.params.clone(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }
}

impl RawNetwork {
    fn validate(self) -> Result<NetworkFile> {
        if let Some(a) = self.alpha {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::InvalidParams(format!("alpha must be non-negative, got {a}")));
            }
        }
        if let Some(sg) = &self.shunt_g {
            if let Some((i, g)) = sg.iter().enumerate().find(|(_, g)| **g != 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "shunt_g[{}] = {g}: shunt conductances must be zero",
                    i + 1
                )));
            }
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for (idx, row) in self.edges.iter().enumerate() {
            let endpoint = |x: f64| -> Result<usize> {
                if x.fract() != 0.0 || x < 1.0 || x > self.n_nodes as f64 {
                    Err(Error::InvalidGraph(format!(
                        "edges[{idx}]: endpoint {x} is not a node index in 1..={}",
                        self.n_nodes
                    )))
                } else {
                    Ok(x as usize - 1)
                }
            };
            let (i, k, b, g) = match row.as_slice() {
                [i, k, b] => {
                    let alpha = self.alpha.ok_or_else(|| {
                        Error::InvalidGraph(format!("edges[{idx}] has no conductance and the file sets no alpha"))
                    })?;
                    (endpoint(*i)?, endpoint(*k)?, *b, alpha * b)
                }
                [i, k, b, g] => (endpoint(*i)?, endpoint(*k)?, *b, *g),
                _ => {
                    return Err(Error::InvalidGraph(format!(
                        "edges[{idx}]: expected [i, k, b] or [i, k, b, g], got {} values",
                        row.len()
                    )))
                }
            };
            edges.push(Edge::new(i, k, b, g));
        }
        let shunt_b = self.shunt_b.unwrap_or_else(|| vec![0.0; self.n_nodes]);
        let graph = NetworkGraph::new(self.n_nodes, edges, shunt_b)?;
        if let Some(p) = &self.params {
            for (name, v) in [("kp", &p.kp), ("kq", &p.kq), ("taup", &p.taup), ("tauq", &p.tauq)] {
                v.expand(self.n_nodes, name)?;
            }
        }
        Ok(NetworkFile { graph, alpha: self.alpha, params: self.params })
    }
}
