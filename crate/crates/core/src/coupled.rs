//! The effect of the frequency/voltage cross-coupling on lossy lines.
//!
//! `γ(α) = (‖H^α‖² − ‖H‖²)/‖H‖²` compares the coupled model against the
//! decoupled closed form. For small `α` it is even in `α` with leading term
//! `∝ α²`; on large complete graphs the series is geometric in
//! `x = (k_P τ_Q / k_Q) α²`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{assemble_coupled, InverterParams};
use crate::error::{Error, Result};
use crate::h2::{h2_norm_analytic, h2_norm_gramian};
use crate::network::{LaplacianKind, NetworkGraph};
use crate::parallel;
use crate::spectral::require_stable;

/// Relative error of the decoupled norm against the coupled one at ratio `alpha`.
///
/// `params.alpha` is ignored; `alpha` is used for both the cross-coupling
/// blocks and the loss output. Only the susceptances of `graph` are read.
pub fn gamma(graph: &NetworkGraph, params: &InverterParams, alpha: f64) -> Result<f64> {
    let p = params.with_alpha(alpha)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let coupled = assemble_coupled(graph, &p)?;
    require_stable(&coupled)?;
    let with = h2_norm_gramian(&coupled)?.total;
    let without = h2_norm_analytic(&p, coupled.laplacian_eigenvalues())?.total;
    Ok((with - without) / without)
}

/// Number of terms in [`gamma_series_complete`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesTerms {
    Finite(usize),
    /// The geometric closed form `x/(1−x)`.
    Infinite,
}

/// Convergence ratio `x = (k_P τ_Q / k_Q) α²` of the complete-graph series.
pub fn series_ratio(params: &InverterParams, alpha: f64) -> f64 {
    params.k_p * params.tau_q / params.k_q * alpha * alpha
}

/// Large-`N` complete-graph prediction `γ ≈ Σ_{k≥1} x^k`.
pub fn gamma_series_complete(params: &InverterParams, alpha: f64, terms: SeriesTerms) -> Result<f64> {
    params.with_alpha(alpha)?;
    let x = series_ratio(params, alpha);
    if x >= 1.0 {
        return Err(Error::SeriesDivergent { ratio: x });
    }
    Ok(match terms {
        SeriesTerms::Infinite => x / (1.0 - x),
        SeriesTerms::Finite(k) => {
            let mut sum = 0.0;
            let mut term = 1.0;
            for _ in 0..k {
                term *= x;
                sum += term;
            }
            sum
        }
    })
}

/// Coefficient `c_k` of `‖H^α‖² = Σ_k c_k α^(2k−1)` on a large complete graph.
///
/// `c_1` is the decoupled asymptote divided by `α`; for `k ≥ 2`,
/// `c_k = (N−1)(k_P + k_Q τ_Q)/(2k_Q²) · (k_P τ_Q/k_Q)^(k−2)`.
pub fn coupled_coefficient_complete(params: &InverterParams, n: usize, k: usize) -> Result<f64> {
    let p = params;
    let m = n as f64 - 1.0;
    match k {
        0 => Err(Error::InvalidParams("coefficient index starts at 1".into())),
        1 => Ok(0.5 * m * (1.0 / p.k_p + 1.0 / (p.tau_q * p.k_q))),
        _ => {
            let r = p.k_p * p.tau_q / p.k_q;
            Ok(m * (p.k_p + p.k_q * p.tau_q) / (2.0 * p.k_q * p.k_q) * r.powi(k as i32 - 2))
        }
    }
}

/// Least-squares slope of `log γ` against `log α`. Non-positive samples are
/// dropped; at least three must remain.
pub fn fit_alpha_exponent(alphas: &[f64], gammas: &[f64]) -> Result<f64> {
    if alphas.len() != gammas.len() {
        return Err(Error::DimensionMismatch { expected: alphas.len(), got: gammas.len() });
    }
    let pts: Vec<(f64, f64)> = alphas
        .iter()
        .zip(gammas)
        .filter(|(a, g)| **a > 0.0 && **g > 0.0)
        .map(|(a, g)| (a.ln(), g.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidParams(format!(
            "exponent fit needs at least 3 positive samples, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParams("exponent fit needs distinct alphas".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCurve {
    pub alphas: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Slope of `log γ` vs `log α`, if enough positive samples exist.
    pub fitted_exponent: Option<f64>,
    /// Complete-graph series value per sampled `α` (`None` where it diverges).
    pub series_prediction: Option<Vec<Option<f64>>>,
    /// Requested ratios that were dropped, with the reason.
    pub skipped: Vec<(f64, String)>,
}

impl GammaCurve {
    /// CSV with columns `alpha, gamma_measured, gamma_series, ratio`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "gamma_measured", "gamma_series", "ratio"]).map_err(csv_err)?;
        for (i, (&a, &g)) in self.alphas.iter().zip(&self.gammas).enumerate() {
            let s = self.series_prediction.as_ref().and_then(|s| s[i]);
            let fmt = |x: Option<f64>| x.map(|v| format!("{v:.12e}")).unwrap_or_default();
            let ratio = s.filter(|s| *s != 0.0).map(|s| g / s);
            w.write_record([format!("{a}"), format!("{g:.12e}"), fmt(s), fmt(ratio)]).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Samples where `γ` exceeds the complete-graph series. The series is
    /// only conjectured to bound `γ` on other topologies, so callers log
    /// these instead of failing.
    pub fn series_bound_violations(&self) -> Vec<(f64, f64, f64)> {
        let Some(series) = &self.series_prediction else {
            return Vec::new();
        };
        self.alphas
            .iter()
            .zip(&self.gammas)
            .zip(series)
            .filter_map(|((&a, &g), s)| s.filter(|s| g > *s).map(|s| (a, g, s)))
            .collect()
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numerical(format!("csv: {other:?}")),
    }
}

/// `γ` at each of `alphas` (evaluated in parallel). Ratios where the coupled
/// model is unstable or the inputs are invalid are skipped and recorded.
pub fn gamma_curve(
    graph: &NetworkGraph,
    params: &InverterParams,
    alphas: &[f64],
    with_series: bool,
) -> Result<GammaCurve> {
    if alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("alphas must be strictly increasing".into()));
    }
    if graph.laplacian(LaplacianKind::Susceptance).dim() == 0 {
        return Err(Error::InvalidGraph("empty graph".into()));
    }
    let results = parallel::map(alphas, |&a| gamma(graph, params, a));
    let mut curve = GammaCurve {
        alphas: Vec::new(),
        gammas: Vec::new(),
        fitted_exponent: None,
        series_prediction: with_series.then(Vec::new),
        skipped: Vec::new(),
    };
    for (&a, r) in alphas.iter().zip(results) {
        match r {
            Ok(g) => {
                curve.alphas.push(a);
                curve.gammas.push(g);
                if let Some(s) = curve.series_prediction.as_mut() {
                    s.push(gamma_series_complete(params, a, SeriesTerms::Infinite).ok());
                }
            }
            Err(e @ (Error::Unstable { .. } | Error::InvalidParams(_) | Error::NotHurwitz)) => {
                curve.skipped.push((a, e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    curve.fitted_exponent = fit_alpha_exponent(&curve.alphas, &curve.gammas).ok();
    Ok(curve)
}
