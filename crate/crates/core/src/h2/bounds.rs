//! Topology bounds on the squared H2 norm for identical inverters.
//!
//! All three follow from the concavity of `λ ↦ 1/(c_Q/λ + k_Q)`: the voltage
//! sum is at most `N−1` times its value at the mean nonzero eigenvalue, which
//! is `N·b̲` on a complete graph and `2·b̲` on a path.

use serde::{Deserialize, Serialize};

use crate::dynamics::InverterParams;
use crate::error::{Error, Result};
use crate::network::NetworkGraph;

/// Relative spread below which susceptances count as uniform.
const UNIFORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub lower: f64,
    pub upper: f64,
    pub mean_susceptance: f64,
    pub min_susceptance: f64,
    /// Whether the bounds are tight for this graph.
    pub equality_expected: bool,
}

/// `(α/2)(N−1)(1/k_P + 1/(τ_Q(c_Q/λ̄ + k_Q)))` for a representative
/// nonzero eigenvalue `λ̄`.
fn bound_at(params: &InverterParams, n: usize, lambda: f64) -> f64 {
    let p = params;
    0.5 * p.alpha * (n as f64 - 1.0) * (1.0 / p.k_p + 1.0 / (p.tau_q * (p.c_q / lambda + p.k_q)))
}

fn uniform_susceptances(graph: &NetworkGraph) -> bool {
    let (lo, hi) = graph
        .edges()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.b), hi.max(e.b)));
    hi - lo <= UNIFORM_TOL * hi
}

/// Upper bound from the mean susceptance and lower bound from the minimum
/// one, for a complete graph. Both are equalities when every line has the
/// same susceptance.
pub fn complete_graph_bounds(params: &InverterParams, graph: &NetworkGraph) -> Result<BoundsReport> {
    params.validate()?;
    if !graph.is_complete() {
        return Err(Error::WrongTopology { expected: "complete graph" });
    }
    let n = graph.n_nodes();
    let mean = graph.mean_susceptance();
    let min = graph.min_susceptance();
    Ok(BoundsReport {
        lower: bound_at(params, n, n as f64 * min),
        upper: bound_at(params, n, n as f64 * mean),
        mean_susceptance: mean,
        min_susceptance: min,
        equality_expected: uniform_susceptances(graph),
    })
}

/// Large-`N` limit on a complete graph, `(α/2)(N−1)(1/k_P + 1/(τ_Q k_Q))`.
pub fn complete_graph_asymptote(params: &InverterParams, n: usize) -> f64 {
    let p = params;
    0.5 * p.alpha * (n as f64 - 1.0) * (1.0 / p.k_p + 1.0 / (p.tau_q * p.k_q))
}

/// Upper bound for a path graph from the mean line susceptance. There is no
/// matching lower bound, so `lower` is reported as 0.
///
/// Equality holds only for `N = 2`, where the single nonzero eigenvalue is
/// exactly `2b`.
pub fn path_graph_bound(params: &InverterParams, graph: &NetworkGraph) -> Result<BoundsReport> {
    params.validate()?;
    if !graph.is_path() {
        return Err(Error::WrongTopology { expected: "path graph" });
    }
    let n = graph.n_nodes();
    let mean = graph.mean_susceptance();
    Ok(BoundsReport {
        lower: 0.0,
        upper: bound_at(params, n, 2.0 * mean),
        mean_susceptance: mean,
        min_susceptance: graph.min_susceptance(),
        equality_expected: n == 2,
    })
}
