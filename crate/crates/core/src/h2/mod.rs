//! Squared H2 norms of the loss map, and the topology bounds built on them.
//!
//! Three routes compute the same number for identical inverters:
//!
//! * [`h2_norm_analytic`]: the closed form over the nonzero `L_B` eigenvalues,
//! * [`h2_norm_modal`]: one 3×3 Lyapunov solve per Laplacian mode,
//! * [`h2_norm_gramian`]: the dense observability Gramian of the whole model,
//!   which also covers the heterogeneous and cross-coupled models.
//!
//! The uniform phase shift is a zero eigenvalue of every model, so the
//! Gramian route first quotients it out. The mode is in the kernel of both
//! `A` and `C`, which makes the quotient exact.

mod bounds;
mod lyapunov;

pub use bounds::{complete_graph_asymptote, complete_graph_bounds, path_graph_bound, BoundsReport};
pub use lyapunov::{solve_lyapunov, RESIDUAL_TOL};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{InverterParams, StateSpaceModel};
use crate::error::{Error, Result};
use crate::linalg::orthogonal_complement;
use crate::network::CONNECTIVITY_TOL;
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum H2Method {
    Analytic,
    Gramian,
    Modal,
}

/// Squared H2 norm with its split by disturbance channel.
///
/// `phase_part` is the contribution of the `w^ω` inputs and `voltage_part`
/// that of `w^V`. For the decoupled model these are the norms of the phase
/// and voltage subsystems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Report {
    pub total: f64,
    pub phase_part: f64,
    pub voltage_part: f64,
    /// `(λ_n^B, contribution)` for each nonzero Laplacian eigenvalue; empty
    /// for the Gramian route.
    pub per_mode: Vec<(f64, f64)>,
    pub method: H2Method,
}

/// State-space model restricted to the complement of its zero mode.
#[derive(Debug, Clone)]
pub struct DeflatedSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

/// Project onto an orthonormal basis `Q` of `(1, 0, 0)⊥`:
/// `(QᵀAQ, QᵀB, CQ)`. Because `A` and `C` both annihilate the zero mode, the
/// reduced system has the same transfer function.
pub fn deflate(model: &StateSpaceModel) -> DeflatedSystem {
    let q = orthogonal_complement(&model.zero_mode());
    DeflatedSystem {
        a: q.transpose() * model.a() * &q,
        b: q.transpose() * model.b(),
        c: model.c() * &q,
    }
}

/// Observability-Gramian H2 norm: `tr(BᵀXB)` with `AᵀX + XA = −CᵀC` on the
/// deflated system.
pub fn h2_norm_gramian(model: &StateSpaceModel) -> Result<H2Report> {
    let sys = deflate(model);
    let q = sys.c.transpose() * &sys.c;
    let x = solve_lyapunov(&sys.a, &q).map_err(|e| match e {
        Error::NotHurwitz => Error::Unstable { abscissa: abscissa(&sys.a) },
        other => other,
    })?;
    let n = model.n_nodes();
    let xb = &x * &sys.b;
    let channel = |j: usize| sys.b.column(j).dot(&xb.column(j));
    let phase_part: f64 = (0..n).map(channel).sum();
    let voltage_part: f64 = (n..2 * n).map(channel).sum();
    Ok(H2Report {
        total: phase_part + voltage_part,
        phase_part,
        voltage_part,
        per_mode: Vec::new(),
        method: H2Method::Gramian,
    })
}

fn abscissa(a: &DMatrix<f64>) -> f64 {
    crate::linalg::eigenvalues(a)
        .map(|e| e.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
        .unwrap_or(f64::NAN)
}

/// The nonzero part of an ascending Laplacian spectrum, or
/// [`Error::Disconnected`] if `λ₂` is numerically zero.
pub(crate) fn nonzero_modes(laplacian_eigs: &[f64]) -> Result<&[f64]> {
    if laplacian_eigs.is_empty() {
        return Err(Error::InvalidParams("empty Laplacian spectrum".into()));
    }
    if laplacian_eigs.len() == 1 {
        return Ok(&laplacian_eigs[1..]);
    }
    let max = laplacian_eigs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if laplacian_eigs[1].is_nan() || laplacian_eigs[1] <= CONNECTIVITY_TOL * max {
        return Err(Error::Disconnected);
    }
    Ok(&laplacian_eigs[1..])
}

/// Closed-form modal Gramian entries `(X₂₂, X₃₃)` for Laplacian eigenvalue
/// `lambda_b > 0` of the decoupled model.
pub fn modal_gramian(params: &InverterParams, lambda_b: f64) -> Result<(f64, f64)> {
    if lambda_b.is_nan() || lambda_b <= 0.0 {
        return Err(Error::InvalidParams(format!("modal Gramian needs λ > 0, got {lambda_b}")));
    }
    let p = params;
    let x22 = p.alpha * p.tau_p * p.tau_p / (2.0 * p.k_p);
    let x33 = 0.5 * p.alpha * p.tau_q / (p.c_q / lambda_b + p.k_q);
    Ok((x22, x33))
}

/// Mode contribution `X₂₂/τ_P² + X₃₃/τ_Q²`.
fn mode_contribution(params: &InverterParams, lambda_b: f64) -> Result<f64> {
    let (x22, x33) = modal_gramian(params, lambda_b)?;
    Ok(x22 / (params.tau_p * params.tau_p) + x33 / (params.tau_q * params.tau_q))
}

/// Closed-form squared H2 norm of the decoupled model,
/// `α(N−1)/(2k_P) + (α/2τ_Q) Σ_{n≥2} 1/(c_Q/λ_n + k_Q)`.
///
/// `laplacian_eigs` is the ascending spectrum of `L_B`; its first entry is
/// the zero eigenvalue and is skipped.
pub fn h2_norm_analytic(params: &InverterParams, laplacian_eigs: &[f64]) -> Result<H2Report> {
    params.validate()?;
    let modes = nonzero_modes(laplacian_eigs)?;
    let p = params;
    let phase_part = p.alpha * modes.len() as f64 / (2.0 * p.k_p);
    let voltage_part = 0.5 * p.alpha / p.tau_q * modes.iter().map(|l| 1.0 / (p.c_q / l + p.k_q)).sum::<f64>();
    let per_mode = modes
        .iter()
        .map(|&l| mode_contribution(p, l).map(|c| (l, c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(H2Report {
        total: phase_part + voltage_part,
        phase_part,
        voltage_part,
        per_mode,
        method: H2Method::Analytic,
    })
}

/// The 3×3 modal system for Laplacian eigenvalue `lambda_b`:
/// `(A_n, B_n, C_n)` over `(δ̂, ω̂, V̂)`.
pub fn modal_system(
    params: &InverterParams,
    lambda_b: f64,
    coupled: bool,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let InverterParams { k_p, k_q, tau_p, tau_q, c_q, alpha } = *params;
    let cross = if coupled { alpha } else { 0.0 };
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(3, 3, &[
        0.0, 1.0, 0.0,
        -k_p / tau_p * lambda_b, -1.0 / tau_p, k_p / tau_p * cross * lambda_b,
        -k_q / tau_q * cross * lambda_b, 0.0, -(c_q + k_q * lambda_b) / tau_q,
    ]);
    let b = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0 / tau_p, 0.0, 0.0, 1.0 / tau_q]);
    let s = (alpha * lambda_b).sqrt();
    let c = DMatrix::from_row_slice(2, 3, &[s, 0.0, 0.0, 0.0, 0.0, s]);
    (a, b, c)
}

/// Sum of per-mode 3×3 Gramian norms. Valid for the decoupled model and,
/// since every block of the coupled `A` is a polynomial in `L_B`, for the
/// coupled one as well.
pub fn h2_norm_modal(params: &InverterParams, laplacian_eigs: &[f64], coupled: bool) -> Result<H2Report> {
    params.validate()?;
    let modes = nonzero_modes(laplacian_eigs)?;
    let parts = parallel::map(modes, |&l| -> Result<(f64, f64)> {
        let (a, b, c) = modal_system(params, l, coupled);
        let x = solve_lyapunov(&a, &(c.transpose() * &c)).map_err(|e| match e {
            Error::NotHurwitz => Error::Unstable { abscissa: abscissa(&a) },
            other => other,
        })?;
        let xb = &x * &b;
        Ok((b.column(0).dot(&xb.column(0)), b.column(1).dot(&xb.column(1))))
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let phase_part = parts.iter().map(|p| p.0).sum();
    let voltage_part = parts.iter().map(|p| p.1).sum();
    let per_mode = modes.iter().zip(&parts).map(|(&l, p)| (l, p.0 + p.1)).collect();
    Ok(H2Report {
        total: phase_part + voltage_part,
        phase_part,
        voltage_part,
        per_mode,
        method: H2Method::Modal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{assemble_coupled, assemble_decoupled, assemble_full, NodeParams};
    use crate::network::{complete_graph, path_graph, random_connected_graph, NetworkGraph, Susceptances, Edge};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit(alpha: f64) -> InverterParams {
        InverterParams::new(1.0, 1.0, 1.0, 1.0, 1.0, alpha).unwrap()
    }

    #[test]
    fn two_node_reference() {
        // λ₂ = 2: phase 0.2/2 = 0.1, voltage 0.1/(1/2 + 1) = 1/15.
        let g = path_graph(2, Susceptances::Constant(1.0), 0.2).unwrap();
        let eigs = g.laplacian(crate::LaplacianKind::Susceptance).eigenvalues();
        let r = h2_norm_analytic(&unit(0.2), &eigs).unwrap();
        assert_relative_eq!(r.phase_part, 0.1, max_relative = 1e-14);
        assert_relative_eq!(r.voltage_part, 1.0 / 15.0, max_relative = 1e-14);
        assert_relative_eq!(r.total, 1.0 / 6.0, max_relative = 1e-14);
        let gr = h2_norm_gramian(&assemble_decoupled(&g, &unit(0.2)).unwrap()).unwrap();
        assert_relative_eq!(gr.total, r.total, max_relative = 1e-10);
        assert_relative_eq!(gr.phase_part, r.phase_part, max_relative = 1e-10);
    }

    #[test]
    fn modal_entries() {
        let p = unit(0.2);
        let (x22, x33) = modal_gramian(&p, 2.0).unwrap();
        assert_relative_eq!(x22, 0.1, max_relative = 1e-15);
        assert_relative_eq!(x33, 0.1 / 1.5, max_relative = 1e-15);
        // X₂₂ does not depend on λ; X₃₃ saturates at ατ_Q/(2k_Q).
        assert_eq!(modal_gramian(&p, 37.0).unwrap().0, x22);
        assert_relative_eq!(modal_gramian(&p, 1e12).unwrap().1, 0.1, max_relative = 1e-11);
        assert!(modal_gramian(&p, 0.0).is_err());
        assert!(modal_gramian(&p, -1.0).is_err());
    }

    #[test]
    fn modal_entries_match_three_by_three_solve() {
        let p = InverterParams::new(1.7, 0.6, 0.3, 1.4, 1.2, 0.25).unwrap();
        for lambda in [0.1, 0.9, 2.0, 13.0] {
            let (a, _, c) = modal_system(&p, lambda, false);
            let x = solve_lyapunov(&a, &(c.transpose() * &c)).unwrap();
            let (x22, x33) = modal_gramian(&p, lambda).unwrap();
            assert_relative_eq!(x[(1, 1)], x22, max_relative = 1e-11);
            assert_relative_eq!(x[(2, 2)], x33, max_relative = 1e-11);
        }
    }

    #[test]
    fn zero_alpha_is_zero() {
        let g = complete_graph(5, Susceptances::Constant(1.0), 0.0).unwrap();
        let r = h2_norm_gramian(&assemble_decoupled(&g, &unit(0.0)).unwrap()).unwrap();
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn constant_voltage_limit() {
        let g = path_graph(6, Susceptances::Constant(1.0), 0.2).unwrap();
        let eigs = g.laplacian(crate::LaplacianKind::Susceptance).eigenvalues();
        let mut p = unit(0.2);
        p.tau_q = 1e12;
        let r = h2_norm_analytic(&p, &eigs).unwrap();
        assert!(r.voltage_part < 1e-11);
        assert_relative_eq!(r.total, 0.2 * 5.0 / 2.0, max_relative = 1e-10);
    }

    #[test]
    fn disconnected_spectrum_rejected() {
        assert!(matches!(h2_norm_analytic(&unit(0.2), &[0.0, 0.0, 2.0]), Err(Error::Disconnected)));
    }

    #[test]
    fn coupled_two_node_modal_agrees_with_gramian() {
        let g = path_graph(2, Susceptances::Constant(1.0), 0.2).unwrap();
        let p = unit(0.2);
        let m = assemble_coupled(&g, &p).unwrap();
        let gram = h2_norm_gramian(&m).unwrap();
        let modal = h2_norm_modal(&p, m.laplacian_eigenvalues(), true).unwrap();
        assert!(gram.total.is_finite() && gram.total > 0.0);
        assert_relative_eq!(gram.total, modal.total, max_relative = 1e-10);
        // The cross-coupling raises the losses slightly above the decoupled 1/6.
        assert!(gram.total > 1.0 / 6.0);
    }

    #[test]
    fn heterogeneous_full_model_is_finite() {
        // Non-uniform filters break the block structure; the 1-D quotient still applies.
        let g = NetworkGraph::new(
            3,
            vec![Edge::new(0, 1, 1.0, 0.1), Edge::new(1, 2, 2.0, 0.3), Edge::new(0, 2, 0.7, 0.05)],
            vec![0.0, 0.1, 0.2],
        )
        .unwrap();
        let params = NodeParams {
            k_p: vec![1.0, 0.5, 2.0],
            k_q: vec![1.0, 1.5, 0.7],
            tau_p: vec![0.5, 1.0, 2.0],
            tau_q: vec![1.0, 0.3, 0.8],
        };
        let m = assemble_full(&g, &params).unwrap();
        let r = h2_norm_gramian(&m).unwrap();
        assert!(r.total > 0.0 && r.total.is_finite());
        // Cross-check by integrating the impulse responses.
        let impulse: f64 = (0..6).map(|ch| crate::sim::impulse_energy(&m, ch).unwrap()).sum();
        assert_relative_eq!(r.total, impulse, max_relative = 1e-6);
    }

    #[test]
    fn unstable_model_reported() {
        let g = path_graph(2, Susceptances::Constant(1.0), 0.2).unwrap();
        let m = assemble_decoupled(&g, &unit(0.2)).unwrap();
        let mut a = m.a().clone();
        // Force c_Q < 0 behind the constructor's back.
        a[(4, 4)] += 3.0;
        a[(5, 5)] += 3.0;
        let bad = StateSpaceModel::from_parts(a, m.b().clone(), m.c().clone(), 2).unwrap();
        assert!(matches!(h2_norm_gramian(&bad), Err(Error::Unstable { .. })));
    }

    fn random_instance(seed: u64, n: usize) -> (NetworkGraph, InverterParams) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = InverterParams::new(
            rng.random_range(0.2..3.0),
            rng.random_range(0.2..3.0),
            rng.random_range(0.1..2.0),
            rng.random_range(0.1..2.0),
            rng.random_range(0.2..2.0),
            rng.random_range(0.01..0.5),
        )
        .unwrap();
        let prob = rng.random_range(0.1..1.0);
        let g = random_connected_graph(n, prob, (0.5, 3.25), p.alpha, seed).unwrap();
        (g, p)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn three_routes_agree(seed in 0u64..10_000, n in 2usize..12) {
            let (g, p) = random_instance(seed, n);
            let m = assemble_decoupled(&g, &p).unwrap();
            let analytic = h2_norm_analytic(&p, m.laplacian_eigenvalues()).unwrap();
            let modal = h2_norm_modal(&p, m.laplacian_eigenvalues(), false).unwrap();
            let gram = h2_norm_gramian(&m).unwrap();
            prop_assert!((gram.total - analytic.total).abs() <= 1e-8 * analytic.total);
            prop_assert!((modal.total - analytic.total).abs() <= 1e-10 * analytic.total);
            prop_assert!((gram.voltage_part - analytic.voltage_part).abs() <= 1e-8 * analytic.total);
            prop_assert!((analytic.total - analytic.phase_part - analytic.voltage_part).abs() <= 1e-10 * analytic.total);
            prop_assert!(analytic.phase_part >= 0.0 && analytic.voltage_part >= 0.0);
        }

        #[test]
        fn voltage_part_grows_with_susceptance(seed in 0u64..10_000, n in 2usize..10, factor in 1.01f64..5.0) {
            let (g, p) = random_instance(seed, n);
            let lam = |g: &NetworkGraph| g.laplacian(crate::LaplacianKind::Susceptance).eigenvalues();
            let base = h2_norm_analytic(&p, &lam(&g)).unwrap();
            let scaled = h2_norm_analytic(&p, &lam(&g.scaled(factor).unwrap())).unwrap();
            prop_assert!(scaled.voltage_part >= base.voltage_part);
            prop_assert!((scaled.phase_part - base.phase_part).abs() <= 1e-14 * base.phase_part);
        }
    }
}
