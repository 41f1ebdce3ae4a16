use super::{LaplacianKind, NetworkGraph};
use crate::error::{Error, Result};

fn check_len(graph: &NetworkGraph, v: &[f64]) -> Result<()> {
    if v.len() == graph.n_nodes() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: graph.n_nodes(), got: v.len() })
    }
}

/// Exact AC power injections `(P, Q)` at every node for phase angles `delta`
/// (rad) and voltage magnitudes `v` (p.u.).
///
/// Self terms use `g_ii = Σ g_ik` and `b_ii = b̄_i + Σ b_ik`.
pub fn power_injections(graph: &NetworkGraph, delta: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(graph, delta)?;
    check_len(graph, v)?;
    let n = graph.n_nodes();
    let mut g_self = vec![0.0; n];
    let mut b_self = graph.shunt_b().to_vec();
    for e in graph.edges() {
        g_self[e.i] += e.g;
        g_self[e.k] += e.g;
        b_self[e.i] += e.b;
        b_self[e.k] += e.b;
    }
    let mut p: Vec<f64> = (0..n).map(|i| -g_self[i] * v[i] * v[i]).collect();
    let mut q: Vec<f64> = (0..n).map(|i| b_self[i] * v[i] * v[i]).collect();
    for e in graph.edges() {
        for (a, c) in [(e.i, e.k), (e.k, e.i)] {
            let d = delta[a] - delta[c];
            let vv = v[a] * v[c];
            let (s, co) = d.sin_cos();
            p[a] += vv * (e.g * co + e.b * s);
            q[a] += vv * (e.g * s - e.b * co);
        }
    }
    Ok((p, q))
}

/// Injections linearized at `δ_ik = 0, V = 1`:
/// `ΔP = L_B δ − L_G V`, `ΔQ = (L_B + 2 diag b̄) V + L_G δ`.
pub fn linearized_injections(
    graph: &NetworkGraph,
    d_delta: &[f64],
    d_v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(graph, d_delta)?;
    check_len(graph, d_v)?;
    let lb = graph.laplacian(LaplacianKind::Susceptance).matrix;
    let lg = graph.laplacian(LaplacianKind::Conductance).matrix;
    let n = graph.n_nodes();
    let mut dp = vec![0.0; n];
    let mut dq = vec![0.0; n];
    for r in 0..n {
        for c in 0..n {
            dp[r] += lb[(r, c)] * d_delta[c] - lg[(r, c)] * d_v[c];
            dq[r] += lb[(r, c)] * d_v[c] + lg[(r, c)] * d_delta[c];
        }
        dq[r] += 2.0 * graph.shunt_b()[r] * d_v[r];
    }
    Ok((dp, dq))
}
