use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Edge, NetworkGraph, UnionFind};
use crate::error::{Error, Result};

/// Default susceptance interval for randomized test networks.
pub const DEFAULT_SUSCEPTANCE_RANGE: (f64, f64) = (0.5, 3.25);

/// How line susceptances are assigned by the topology builders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Susceptances {
    Constant(f64),
    /// Independent draws on the open interval `(low, high)`.
    Uniform { low: f64, high: f64, seed: u64 },
}

impl Susceptances {
    pub fn fig_default(seed: u64) -> Self {
        let (low, high) = DEFAULT_SUSCEPTANCE_RANGE;
        Susceptances::Uniform { low, high, seed }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Susceptances::Constant(b) if b > 0.0 && b.is_finite() => Ok(()),
            Susceptances::Constant(b) => {
                Err(Error::InvalidGraph(format!("susceptance must be positive, got {b}")))
            }
            Susceptances::Uniform { low, high, .. } if low >= 0.0 && high > low && high.is_finite() => Ok(()),
            Susceptances::Uniform { low, high, .. } => Err(Error::InvalidGraph(format!(
                "susceptance interval ({low}, {high}) must satisfy 0 <= low < high"
            ))),
        }
    }

    fn sampler(&self) -> Box<dyn FnMut() -> f64> {
        match *self {
            Susceptances::Constant(b) => Box::new(move || b),
            Susceptances::Uniform { low, high, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Box::new(move || sample_open(&mut rng, low, high))
            }
        }
    }
}

fn sample_open<R: Rng>(rng: &mut R, low: f64, high: f64) -> f64 {
    loop {
        let x = rng.random_range(low..high);
        if x > low {
            return x;
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("alpha must lie in [0, 1), got {alpha}")))
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidGraph(format!("need at least 2 nodes, got {n}")))
    } else {
        Ok(())
    }
}

/// Complete graph on `n` nodes with `g = alpha · b` on every line.
///
/// Edges are generated in lexicographic `(i, k)` order, which fixes which draw
/// lands on which line.
pub fn complete_graph(n: usize, susceptances: Susceptances, alpha: f64) -> Result<NetworkGraph> {
    check_size(n)?;
    check_alpha(alpha)?;
    susceptances.validate()?;
    let mut draw = susceptances.sampler();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for k in i + 1..n {
            let b = draw();
            edges.push(Edge::new(i, k, b, alpha * b));
        }
    }
    NetworkGraph::without_shunts(n, edges)
}

/// Line graph `0 – 1 – … – n−1`.
pub fn path_graph(n: usize, susceptances: Susceptances, alpha: f64) -> Result<NetworkGraph> {
    check_size(n)?;
    check_alpha(alpha)?;
    susceptances.validate()?;
    let mut draw = susceptances.sampler();
    let edges = (0..n - 1)
        .map(|i| {
            let b = draw();
            Edge::new(i, i + 1, b, alpha * b)
        })
        .collect();
    NetworkGraph::without_shunts(n, edges)
}

/// Erdős–Rényi graph made connected by linking each extra component to a
/// random node of the ones before it. Deterministic in `seed`.
pub fn random_connected_graph(
    n: usize,
    edge_prob: f64,
    susceptance_range: (f64, f64),
    alpha: f64,
    seed: u64,
) -> Result<NetworkGraph> {
    check_size(n)?;
    check_alpha(alpha)?;
    if !(edge_prob > 0.0 && edge_prob <= 1.0) {
        return Err(Error::InvalidParams(format!("edge probability must lie in (0, 1], got {edge_prob}")));
    }
    let (low, high) = susceptance_range;
    Susceptances::Uniform { low, high, seed }.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for k in i + 1..n {
            if edge_prob >= 1.0 || rng.random_bool(edge_prob) {
                let b = sample_open(&mut rng, low, high);
                edges.push(Edge::new(i, k, b, alpha * b));
                uf.union(i, k);
            }
        }
    }

    // Component representatives in node order; link each to a random earlier node.
    let mut seen_roots = Vec::new();
    for v in 0..n {
        let r = uf.find(v);
        if !seen_roots.contains(&r) {
            seen_roots.push(r);
            if v > 0 {
                // v is the first node of its component, so every earlier node lies elsewhere.
                let partner = rng.random_range(0..v);
                let b = sample_open(&mut rng, low, high);
                edges.push(Edge::new(partner, v, b, alpha * b));
                uf.union(partner, v);
            }
        }
    }

    let graph = NetworkGraph::without_shunts(n, edges)?;
    if !graph.is_connected() {
        return Err(Error::Numerical("spanning repair left the graph disconnected".into()));
    }
    Ok(graph)
}
