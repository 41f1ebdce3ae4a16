//! Linearized droop/filter dynamics as LTI state-space models.
//!
//! State ordering is `(δ₁..δ_N, ω₁..ω_N, V₁..V_N)`, inputs are
//! `(w^ω₁..w^ω_N, w^V₁..w^V_N)` and the loss output is
//! `y = (L_G^{1/2} δ, L_G^{1/2} V)`, so that `‖y‖²` is the instantaneous
//! resistive loss.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::psd_sqrt;
use crate::network::{LaplacianKind, NetworkGraph};

/// Identical-inverter parameters: droop gains, filter time constants, the
/// shunt-corrected voltage constant `c_Q = 1 + 2 k_Q b̄` and the uniform
/// conductance-to-susceptance ratio `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverterParams {
    pub k_p: f64,
    pub k_q: f64,
    pub tau_p: f64,
    pub tau_q: f64,
    pub c_q: f64,
    pub alpha: f64,
}

impl InverterParams {
    pub fn new(k_p: f64, k_q: f64, tau_p: f64, tau_q: f64, c_q: f64, alpha: f64) -> Result<Self> {
        let p = Self { k_p, k_q, tau_p, tau_q, c_q, alpha };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `c_Q` derived from a uniform shunt susceptance.
    pub fn from_shunt(k_p: f64, k_q: f64, tau_p: f64, tau_q: f64, shunt_b: f64, alpha: f64) -> Result<Self> {
        Self::new(k_p, k_q, tau_p, tau_q, 1.0 + 2.0 * k_q * shunt_b, alpha)
    }

    /// `k_P = k_Q = c_Q = 1`, `α = 0.2`, unit time constants: the size-sweep defaults.
    pub fn scaling_defaults() -> Self {
        Self { k_p: 1.0, k_q: 1.0, tau_p: 1.0, tau_q: 1.0, c_q: 1.0, alpha: 0.2 }
    }

    /// `k_P = 1, k_Q = 2, τ_P = τ_Q = 0.5, c_Q = 1`: the cross-coupling defaults.
    pub fn coupling_defaults(alpha: f64) -> Self {
        Self { k_p: 1.0, k_q: 2.0, tau_p: 0.5, tau_q: 0.5, c_q: 1.0, alpha }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k_P", self.k_p), ("k_Q", self.k_q), ("tau_P", self.tau_p), ("tau_Q", self.tau_q)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.c_q > 0.0 && self.c_q.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "c_Q = 1 + 2 k_Q b̄ must be positive (b̄ > −1/(2k_Q)), got {}",
                self.c_q
            )));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidParams(format!("alpha must lie in [0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    /// The uniform shunt susceptance implied by `c_Q`.
    pub fn shunt_b(&self) -> f64 {
        (self.c_q - 1.0) / (2.0 * self.k_q)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let p = Self { alpha, ..*self };
        p.validate()?;
        Ok(p)
    }
}

/// Per-node droop gains and filter constants for the heterogeneous model.
/// Shunts, and hence `c_Q,i`, come from the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeParams {
    pub k_p: Vec<f64>,
    pub k_q: Vec<f64>,
    pub tau_p: Vec<f64>,
    pub tau_q: Vec<f64>,
}

impl NodeParams {
    pub fn uniform(params: &InverterParams, n: usize) -> Self {
        Self {
            k_p: vec![params.k_p; n],
            k_q: vec![params.k_q; n],
            tau_p: vec![params.tau_p; n],
            tau_q: vec![params.tau_q; n],
        }
    }

    pub fn len(&self) -> usize {
        self.k_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_p.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for (name, v) in [("k_P", &self.k_p), ("k_Q", &self.k_q), ("tau_P", &self.tau_p), ("tau_Q", &self.tau_q)] {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() });
            }
            if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !(**x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidParams(format!("{name}[{i}] must be positive, got {x}")));
            }
        }
        Ok(())
    }

    /// `(k_P, k_Q, τ_P, τ_Q)` if every node shares them.
    pub fn as_uniform(&self) -> Option<(f64, f64, f64, f64)> {
        let same = |v: &[f64]| v.iter().all(|x| *x == v[0]);
        (!self.is_empty() && same(&self.k_p) && same(&self.k_q) && same(&self.tau_p) && same(&self.tau_q))
            .then(|| (self.k_p[0], self.k_q[0], self.tau_p[0], self.tau_q[0]))
    }

    /// `c_Q,i = 1 + 2 k_Q,i b̄_i`, rejected unless strictly positive.
    pub fn c_q(&self, shunt_b: &[f64]) -> Result<Vec<f64>> {
        self.k_q
            .iter()
            .zip(shunt_b)
            .enumerate()
            .map(|(i, (kq, b))| {
                let c = 1.0 + 2.0 * kq * b;
                if c > 0.0 {
                    Ok(c)
                } else {
                    Err(Error::InvalidParams(format!("c_Q at node {i} is {c}; need b̄ > −1/(2k_Q)")))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// Heterogeneous model with general `L_G`.
    Full,
    /// Identical inverters, frequency and voltage loops decoupled.
    Decoupled,
    /// Identical inverters with the `α L_B` cross-coupling blocks.
    Coupled,
    /// Assembled from raw matrices.
    Custom,
}

/// `ψ̇ = Aψ + Bw`, `y = Cψ` over `N` inverters.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    n_nodes: usize,
    kind: ModelKind,
    laplacian_eigenvalues: Vec<f64>,
}

impl StateSpaceModel {
    /// Wrap raw matrices, checking only the block dimensions
    /// (`A`: 3N×3N, `B`: 3N×2N, `C`: 2N×3N).
    pub fn from_parts(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, n_nodes: usize) -> Result<Self> {
        let (s, i, o) = (3 * n_nodes, 2 * n_nodes, 2 * n_nodes);
        for (got, want) in [
            (a.nrows(), s),
            (a.ncols(), s),
            (b.nrows(), s),
            (b.ncols(), i),
            (c.nrows(), o),
            (c.ncols(), s),
        ] {
            if got != want {
                return Err(Error::DimensionMismatch { expected: want, got });
            }
        }
        Ok(Self { a, b, c, n_nodes, kind: ModelKind::Custom, laplacian_eigenvalues: Vec::new() })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_states(&self) -> usize {
        3 * self.n_nodes
    }

    pub fn n_inputs(&self) -> usize {
        2 * self.n_nodes
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Ascending eigenvalues of `L_B` (empty for [`ModelKind::Custom`]).
    pub fn laplacian_eigenvalues(&self) -> &[f64] {
        &self.laplacian_eigenvalues
    }

    /// The uniform phase shift `(1, 0, 0)`: kernel of `A`, invisible to `C`.
    pub fn zero_mode(&self) -> DVector<f64> {
        let n = self.n_nodes;
        DVector::from_fn(3 * n, |r, _| if r < n { 1.0 } else { 0.0 })
    }

    /// `‖Cψ‖²`.
    pub fn output_energy(&self, psi: &DVector<f64>) -> f64 {
        (&self.c * psi).norm_squared()
    }

    pub fn dump(&self) -> ModelDump {
        let n = self.n_nodes;
        let labels = |prefixes: &[&str]| -> Vec<String> {
            prefixes.iter().flat_map(|p| (1..=n).map(move |i| format!("{p}_{i}"))).collect()
        };
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        ModelDump {
            kind: self.kind,
            n_nodes: n,
            state_labels: labels(&["delta", "omega", "V"]),
            input_labels: labels(&["w_omega", "w_V"]),
            output_labels: labels(&["y_delta", "y_V"]),
            a: rows(&self.a),
            b: rows(&self.b),
            c: rows(&self.c),
        }
    }
}

/// Dense text dump of a model with block labels, for external cross-checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    pub kind: ModelKind,
    pub n_nodes: usize,
    pub state_labels: Vec<String>,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl ModelDump {
    pub fn to_model(&self) -> Result<StateSpaceModel> {
        let mat = |rows: &[Vec<f64>]| -> Result<DMatrix<f64>> {
            let nr = rows.len();
            let nc = rows.first().map_or(0, |r| r.len());
            if let Some(bad) = rows.iter().find(|r| r.len() != nc) {
                return Err(Error::DimensionMismatch { expected: nc, got: bad.len() });
            }
            Ok(DMatrix::from_fn(nr, nc, |r, c| rows[r][c]))
        };
        StateSpaceModel::from_parts(mat(&self.a)?, mat(&self.b)?, mat(&self.c)?, self.n_nodes)
    }
}

fn set_block(m: &mut DMatrix<f64>, row: usize, col: usize, n: usize, block: &DMatrix<f64>) {
    m.view_mut((row * n, col * n), (n, n)).copy_from(block);
}

fn input_matrix(tau_p: &[f64], tau_q: &[f64]) -> DMatrix<f64> {
    let n = tau_p.len();
    let mut b = DMatrix::zeros(3 * n, 2 * n);
    for i in 0..n {
        b[(n + i, i)] = 1.0 / tau_p[i];
        b[(2 * n + i, n + i)] = 1.0 / tau_q[i];
    }
    b
}

fn output_matrix(sqrt_lg: &DMatrix<f64>) -> DMatrix<f64> {
    let n = sqrt_lg.nrows();
    let mut c = DMatrix::zeros(2 * n, 3 * n);
    c.view_mut((0, 0), (n, n)).copy_from(sqrt_lg);
    c.view_mut((n, 2 * n), (n, n)).copy_from(sqrt_lg);
    c
}

fn require_connected(graph: &NetworkGraph) -> Result<()> {
    if graph.is_connected() {
        Ok(())
    } else {
        Err(Error::Disconnected)
    }
}

/// The heterogeneous model: per-node gains and filters, shunts from the
/// network, general `L_G` in both the coupling blocks and the output.
pub fn assemble_full(graph: &NetworkGraph, params: &NodeParams) -> Result<StateSpaceModel> {
    let n = graph.n_nodes();
    params.validate(n)?;
    require_connected(graph)?;
    let c_q = params.c_q(graph.shunt_b())?;
    let lb_w = graph.laplacian(LaplacianKind::Susceptance);
    let lb = &lb_w.matrix;
    let lg = graph.laplacian(LaplacianKind::Conductance).matrix;

    // Row scalings K T⁻¹ are diagonal left-multiplications.
    let scale_rows = |m: &DMatrix<f64>, s: &dyn Fn(usize) -> f64| {
        DMatrix::from_fn(n, n, |r, c| s(r) * m[(r, c)])
    };
    let kp_tp = |i: usize| params.k_p[i] / params.tau_p[i];
    let kq_tq = |i: usize| params.k_q[i] / params.tau_q[i];

    let mut a = DMatrix::zeros(3 * n, 3 * n);
    set_block(&mut a, 0, 1, n, &DMatrix::identity(n, n));
    set_block(&mut a, 1, 0, n, &-scale_rows(lb, &kp_tp));
    set_block(&mut a, 1, 1, n, &DMatrix::from_fn(n, n, |r, c| if r == c { -1.0 / params.tau_p[r] } else { 0.0 }));
    set_block(&mut a, 1, 2, n, &scale_rows(&lg, &kp_tp));
    set_block(&mut a, 2, 0, n, &-scale_rows(&lg, &kq_tq));
    let mut vv = -scale_rows(lb, &kq_tq);
    for i in 0..n {
        vv[(i, i)] -= c_q[i] / params.tau_q[i];
    }
    set_block(&mut a, 2, 2, n, &vv);

    let b = input_matrix(&params.tau_p, &params.tau_q);
    let c = output_matrix(&psd_sqrt(&lg)?);
    Ok(StateSpaceModel { a, b, c, n_nodes: n, kind: ModelKind::Full, laplacian_eigenvalues: lb_w.eigenvalues() })
}

fn assemble_uniform(graph: &NetworkGraph, params: &InverterParams, coupled: bool) -> Result<StateSpaceModel> {
    params.validate()?;
    require_connected(graph)?;
    let n = graph.n_nodes();
    let lb_w = graph.laplacian(LaplacianKind::Susceptance);
    let lb = &lb_w.matrix;
    let InverterParams { k_p, k_q, tau_p, tau_q, c_q, alpha } = *params;
    let eye = DMatrix::<f64>::identity(n, n);

    let mut a = DMatrix::zeros(3 * n, 3 * n);
    set_block(&mut a, 0, 1, n, &eye);
    set_block(&mut a, 1, 0, n, &(lb * (-k_p / tau_p)));
    set_block(&mut a, 1, 1, n, &(&eye * (-1.0 / tau_p)));
    set_block(&mut a, 2, 2, n, &(&eye * (-c_q / tau_q) - lb * (k_q / tau_q)));
    if coupled {
        set_block(&mut a, 1, 2, n, &(lb * (k_p / tau_p * alpha)));
        set_block(&mut a, 2, 0, n, &(lb * (-k_q / tau_q * alpha)));
    }

    let b = input_matrix(&vec![tau_p; n], &vec![tau_q; n]);
    let c = output_matrix(&(psd_sqrt(lb)? * alpha.sqrt()));
    let kind = if coupled { ModelKind::Coupled } else { ModelKind::Decoupled };
    Ok(StateSpaceModel { a, b, c, n_nodes: n, kind, laplacian_eigenvalues: lb_w.eigenvalues() })
}

/// Identical inverters with decoupled frequency and voltage loops
/// (`L_G = 0` in `A`). The output keeps the losses through `√α L_B^{1/2}`.
///
/// Only the susceptances of `graph` are used; `α` and `c_Q` come from `params`.
pub fn assemble_decoupled(graph: &NetworkGraph, params: &InverterParams) -> Result<StateSpaceModel> {
    assemble_uniform(graph, params, false)
}

/// Identical inverters with cross-coupling blocks `+(k_P/τ_P) α L_B` and
/// `−(k_Q/τ_Q) α L_B`.
pub fn assemble_coupled(graph: &NetworkGraph, params: &InverterParams) -> Result<StateSpaceModel> {
    assemble_uniform(graph, params, true)
}

/// `Σ_{i∼k} g_ik [(V_i − V_k)² + (δ_i − δ_k)²] = δᵀL_Gδ + VᵀL_GV`.
pub fn instantaneous_loss(graph: &NetworkGraph, delta: &[f64], v: &[f64]) -> Result<f64> {
    let n = graph.n_nodes();
    for len in [delta.len(), v.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    Ok(graph
        .edges()
        .iter()
        .map(|e| {
            let dd = delta[e.i] - delta[e.k];
            let dv = v[e.i] - v[e.k];
            e.g * (dv * dv + dd * dd)
        })
        .sum())
}
