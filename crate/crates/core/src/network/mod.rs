//! Inverter network graphs, their Laplacians, and power-flow evaluation.
//!
//! Nodes are indexed from 0 in the Rust API. The on-disk network format
//! ([`file`]) uses 1-based indices and is converted at load time.

mod file;
mod flow;
mod generators;
mod kron;

pub use file::{FileParams, NetworkFile, ParamValue};
pub use flow::{linearized_injections, power_injections};
pub use generators::{
    complete_graph, path_graph, random_connected_graph, Susceptances, DEFAULT_SUSCEPTANCE_RANGE,
};
pub use kron::kron_reduce;

use std::collections::HashSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;

/// Relative tolerance on `λ₂ / λ_max` below which a graph counts as disconnected.
pub const CONNECTIVITY_TOL: f64 = 1e-9;

/// A line between nodes `i < k` with susceptance `b > 0` and conductance `g ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub k: usize,
    pub b: f64,
    pub g: f64,
}

impl Edge {
    pub fn new(i: usize, k: usize, b: f64, g: f64) -> Self {
        Self { i, k, b, g }
    }
}

/// Kron-reduced inverter network: weighted lines plus per-node shunt
/// susceptances. Shunt conductances are identically zero (inductive shunts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    n_nodes: usize,
    edges: Vec<Edge>,
    shunt_b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaplacianKind {
    /// `L_B`, weighted by line susceptances.
    Susceptance,
    /// `L_G`, weighted by line conductances.
    Conductance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLaplacian {
    pub matrix: DMatrix<f64>,
    pub kind: LaplacianKind,
}

impl WeightedLaplacian {
    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.matrix)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

impl NetworkGraph {
    /// Validates and builds a graph. Edges given as `(k, i)` with `k > i` are
    /// reordered; the pair must still be unique.
    pub fn new(n_nodes: usize, edges: Vec<Edge>, shunt_b: Vec<f64>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidGraph("graph must have at least one node".into()));
        }
        if shunt_b.len() != n_nodes {
            return Err(Error::InvalidGraph(format!(
                "shunt_b has {} entries for {} nodes",
                shunt_b.len(),
                n_nodes
            )));
        }
        if let Some(s) = shunt_b.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidGraph(format!("non-finite shunt susceptance {s}")));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for (idx, e) in edges.into_iter().enumerate() {
            let (i, k) = if e.i <= e.k { (e.i, e.k) } else { (e.k, e.i) };
            if i == k {
                return Err(Error::InvalidGraph(format!("edge #{idx}: self-loop at node {i}")));
            }
            if k >= n_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge #{idx}: endpoint {k} out of range for {n_nodes} nodes"
                )));
            }
            if !(e.b > 0.0 && e.b.is_finite()) {
                return Err(Error::InvalidGraph(format!(
                    "edge #{idx} ({i},{k}): susceptance must be positive, got {}",
                    e.b
                )));
            }
            if !(e.g >= 0.0 && e.g.is_finite()) {
                return Err(Error::InvalidGraph(format!(
                    "edge #{idx} ({i},{k}): conductance must be non-negative, got {}",
                    e.g
                )));
            }
            if !seen.insert((i, k)) {
                return Err(Error::InvalidGraph(format!("edge #{idx}: duplicate pair ({i},{k})")));
            }
            normalized.push(Edge::new(i, k, e.b, e.g));
        }
        Ok(Self { n_nodes, edges: normalized, shunt_b })
    }

    /// Graph without shunts.
    pub fn without_shunts(n_nodes: usize, edges: Vec<Edge>) -> Result<Self> {
        Self::new(n_nodes, edges, vec![0.0; n_nodes])
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn shunt_b(&self) -> &[f64] {
        &self.shunt_b
    }

    /// Same lines with conductances reset to `alpha · b`.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParams(format!("alpha must be non-negative, got {alpha}")));
        }
        let edges = self.edges.iter().map(|e| Edge::new(e.i, e.k, e.b, alpha * e.b)).collect();
        Ok(Self { n_nodes: self.n_nodes, edges, shunt_b: self.shunt_b.clone() })
    }

    /// Same lines with every shunt set to `shunt_b`.
    pub fn with_uniform_shunt(&self, shunt_b: f64) -> Result<Self> {
        Self::new(self.n_nodes, self.edges.clone(), vec![shunt_b; self.n_nodes])
    }

    /// The common ratio `g/b` if all lines share one (relative tolerance 1e-12).
    /// Edgeless graphs have no ratio.
    pub fn uniform_ratio(&self) -> Option<f64> {
        let first = self.edges.first()?;
        let alpha = first.g / first.b;
        self.edges
            .iter()
            .all(|e| (e.g - alpha * e.b).abs() <= 1e-12 * e.g.abs().max(alpha * e.b).max(f64::MIN_POSITIVE))
            .then_some(alpha)
    }

    /// The common shunt susceptance if all nodes share one.
    pub fn uniform_shunt(&self) -> Option<f64> {
        let s0 = self.shunt_b[0];
        self.shunt_b.iter().all(|&s| s == s0).then_some(s0)
    }

    pub fn laplacian(&self, kind: LaplacianKind) -> WeightedLaplacian {
        build_laplacian(self, kind)
    }

    /// Complex admittance matrix `Y = L_G − j(L_B + diag b̄)`.
    pub fn admittance_matrix(&self) -> DMatrix<Complex64> {
        let lb = self.laplacian(LaplacianKind::Susceptance).matrix;
        let lg = self.laplacian(LaplacianKind::Conductance).matrix;
        DMatrix::from_fn(self.n_nodes, self.n_nodes, |r, c| {
            let shunt = if r == c { self.shunt_b[r] } else { 0.0 };
            Complex64::new(lg[(r, c)], -(lb[(r, c)] + shunt))
        })
    }

    pub fn is_connected(&self) -> bool {
        is_connected(self)
    }

    pub fn is_complete(&self) -> bool {
        self.n_nodes >= 2 && self.edges.len() == self.n_nodes * (self.n_nodes - 1) / 2
    }

    /// A simple path through all nodes, in any labelling.
    pub fn is_path(&self) -> bool {
        if self.n_nodes < 2 || self.edges.len() != self.n_nodes - 1 {
            return false;
        }
        let mut degree = vec![0usize; self.n_nodes];
        for e in &self.edges {
            degree[e.i] += 1;
            degree[e.k] += 1;
        }
        degree.iter().all(|&d| d <= 2) && self.components() == 1
    }

    /// Number of connected components (union-find; used for structure, not
    /// for the numerical connectivity test).
    pub fn components(&self) -> usize {
        let mut uf = UnionFind::new(self.n_nodes);
        for e in &self.edges {
            uf.union(e.i, e.k);
        }
        uf.count()
    }

    /// Arithmetic mean of the line susceptances.
    pub fn mean_susceptance(&self) -> f64 {
        self.edges.iter().map(|e| e.b).sum::<f64>() / self.edges.len() as f64
    }

    pub fn min_susceptance(&self) -> f64 {
        self.edges.iter().map(|e| e.b).fold(f64::INFINITY, f64::min)
    }

    /// Multiply every susceptance and conductance by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(e.i, e.k, e.b * factor, e.g * factor))
            .collect();
        Self::new(self.n_nodes, edges, self.shunt_b.clone())
    }
}

/// Weighted graph Laplacian of the susceptances or conductances. Shunts are
/// not part of either Laplacian.
pub fn build_laplacian(graph: &NetworkGraph, kind: LaplacianKind) -> WeightedLaplacian {
    let n = graph.n_nodes;
    let mut m = DMatrix::zeros(n, n);
    for e in &graph.edges {
        let w = match kind {
            LaplacianKind::Susceptance => e.b,
            LaplacianKind::Conductance => e.g,
        };
        m[(e.i, e.i)] += w;
        m[(e.k, e.k)] += w;
        m[(e.i, e.k)] -= w;
        m[(e.k, e.i)] -= w;
    }
    WeightedLaplacian { matrix: m, kind }
}

/// `λ₂(L_B) > 1e-9 · λ_max(L_B)`. Single-node graphs are connected.
pub fn is_connected(graph: &NetworkGraph) -> bool {
    if graph.n_nodes == 1 {
        return true;
    }
    let eigs = graph.laplacian(LaplacianKind::Susceptance).eigenvalues();
    let max = *eigs.last().unwrap();
    max > 0.0 && eigs[1] > CONNECTIVITY_TOL * max
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }

    fn count(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }
}
