//! Closed-form and numeric system spectra, and stability certification.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{InverterParams, ModelKind, StateSpaceModel};
use crate::error::{Error, Result};

/// Absolute tolerance for pairing analytic and numeric eigenvalues.
pub const MATCH_TOL: f64 = 1e-8;
/// Eigenvalues with `|λ| < ZERO_TOL · ‖A‖_F` count as zero.
pub const ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityDiagnosis {
    /// One structural zero, everything else strictly in the left half-plane.
    Stable,
    /// More than one eigenvalue at zero, e.g. a disconnected network.
    DegenerateZero,
    /// Some eigenvalue other than the structural zero has `Re λ ≥ −tol`.
    Unstable,
}

/// Whether a certificate is backed by the closed-form spectrum or only by
/// the numeric eigensolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateBasis {
    Analytic,
    NumericOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Ascending `L_B` spectrum; empty for models built from raw matrices.
    pub laplacian_eigenvalues: Vec<f64>,
    /// All `3N` eigenvalues of `A`, sorted by real part (descending).
    pub system_eigenvalues: Vec<Complex64>,
    pub stable_observable: bool,
    /// Largest real part once the structural zero is removed.
    pub spectral_abscissa_observable: f64,
    pub diagnosis: StabilityDiagnosis,
    pub basis: CertificateBasis,
}

/// Closed-form eigenvalues of the decoupled model: for each Laplacian
/// eigenvalue `λ`, the roots `−(1/2τ_P)(1 ± √(1 − 4 k_P τ_P λ))` of
/// `τ_P s² + s + k_P λ` and `−(c_Q + k_Q λ)/τ_Q`.
///
/// At `λ = 0` these reduce to `{0, −1/τ_P, −c_Q/τ_Q}`, so the list has `3N`
/// entries. The first supplied eigenvalue must be the Laplacian zero.
pub fn analytic_spectrum(params: &InverterParams, laplacian_eigs: &[f64]) -> Result<Vec<Complex64>> {
    params.validate()?;
    let first = *laplacian_eigs
        .first()
        .ok_or_else(|| Error::InvalidParams("empty Laplacian spectrum".into()))?;
    let scale = laplacian_eigs.iter().fold(1.0_f64, |m, l| m.max(l.abs()));
    if first.abs() > 1e-9 * scale {
        return Err(Error::InvalidParams(format!("smallest Laplacian eigenvalue {first} is not zero")));
    }
    let InverterParams { k_p, k_q, tau_p, tau_q, c_q, .. } = *params;
    let mut out = Vec::with_capacity(3 * laplacian_eigs.len());
    for (n, &l) in laplacian_eigs.iter().enumerate() {
        let l = if n == 0 { 0.0 } else { l };
        let root = Complex64::new(1.0 - 4.0 * k_p * tau_p * l, 0.0).sqrt();
        let s = -0.5 / tau_p;
        out.push((1.0 + root) * s);
        out.push((1.0 - root) * s);
        out.push(Complex64::new(-(c_q + k_q * l) / tau_q, 0.0));
    }
    sort_by_real_part(&mut out);
    Ok(out)
}

/// Eigenvalues of `A` from its real Schur form.
pub fn numeric_spectrum(model: &StateSpaceModel) -> Result<Vec<Complex64>> {
    let mut eigs = matrix_eigenvalues(model.a())?;
    sort_by_real_part(&mut eigs);
    Ok(eigs)
}

pub(crate) fn matrix_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    crate::linalg::eigenvalues(a)
}

/// Descending real part, ties broken by imaginary part.
fn sort_by_real_part(eigs: &mut [Complex64]) {
    eigs.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
}

/// Greedy nearest-neighbour pairing of two eigenvalue multisets. Returns the
/// largest pairing distance, or `None` if the sizes differ.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))?;
        used[j] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

/// True if the two multisets pair up within [`MATCH_TOL`].
pub fn spectra_match(a: &[Complex64], b: &[Complex64]) -> bool {
    spectrum_distance(a, b).is_some_and(|d| d <= MATCH_TOL)
}

/// Certify that every eigenvalue except one structural zero lies strictly in
/// the open left half-plane.
pub fn certify_stability(model: &StateSpaceModel) -> Result<SpectrumReport> {
    let eigs = numeric_spectrum(model)?;
    let tol = ZERO_TOL * model.a().norm().max(f64::MIN_POSITIVE);
    let zeros: Vec<usize> = (0..eigs.len()).filter(|&i| eigs[i].norm() < tol).collect();
    // Drop exactly one structural zero; any further zero is degenerate.
    let skip = zeros.iter().copied().min_by(|&i, &j| eigs[i].norm().total_cmp(&eigs[j].norm()));
    let abscissa = eigs
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, z)| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let diagnosis = if zeros.len() > 1 {
        StabilityDiagnosis::DegenerateZero
    } else if abscissa < -tol {
        StabilityDiagnosis::Stable
    } else {
        StabilityDiagnosis::Unstable
    };
    let basis = match model.kind() {
        ModelKind::Decoupled => CertificateBasis::Analytic,
        _ => CertificateBasis::NumericOnly,
    };
    Ok(SpectrumReport {
        laplacian_eigenvalues: model.laplacian_eigenvalues().to_vec(),
        system_eigenvalues: eigs,
        stable_observable: diagnosis == StabilityDiagnosis::Stable,
        spectral_abscissa_observable: abscissa,
        diagnosis,
        basis,
    })
}

/// [`certify_stability`] turned into an error if the model is not stable.
pub fn require_stable(model: &StateSpaceModel) -> Result<SpectrumReport> {
    let report = certify_stability(model)?;
    if report.stable_observable {
        Ok(report)
    } else if report.diagnosis == StabilityDiagnosis::DegenerateZero {
        Err(Error::Disconnected)
    } else {
        Err(Error::Unstable { abscissa: report.spectral_abscissa_observable })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{assemble_coupled, assemble_decoupled, assemble_full, NodeParams};
    use crate::network::{complete_graph, path_graph, Edge, NetworkGraph, Susceptances};
    use approx::assert_relative_eq;

    fn unit() -> InverterParams {
        InverterParams::new(1.0, 1.0, 1.0, 1.0, 1.0, 0.2).unwrap()
    }

    #[test]
    fn complex_branch_pair() {
        // s² + s + 2 = 0 gives −1/2 ± j√7/2.
        let s = analytic_spectrum(&unit(), &[0.0, 2.0]).unwrap();
        assert_eq!(s.len(), 6);
        let pair: Vec<_> = s.iter().filter(|z| z.im != 0.0).collect();
        assert_eq!(pair.len(), 2);
        for z in pair {
            assert_relative_eq!(z.re, -0.5, epsilon = 1e-15);
            assert_relative_eq!(z.im.abs(), 7f64.sqrt() / 2.0, epsilon = 1e-15);
        }
        assert!(s.iter().any(|z| z.norm() == 0.0));
        // Matches the assembled two-node model.
        let g = path_graph(2, Susceptances::Constant(1.0), 0.2).unwrap();
        let num = numeric_spectrum(&assemble_decoupled(&g, &unit()).unwrap()).unwrap();
        assert!(spectra_match(&s, &num), "{s:?} {num:?}");
    }

    #[test]
    fn real_branch_pair() {
        // 4 k_P τ_P λ = 0.08 < 1: both roots real.
        let p = InverterParams::new(0.1, 1.0, 0.1, 1.0, 1.0, 0.2).unwrap();
        let s = analytic_spectrum(&p, &[0.0, 2.0]).unwrap();
        let r = 0.92_f64.sqrt();
        for want in [-5.0 * (1.0 + r), -5.0 * (1.0 - r)] {
            assert!(s.iter().any(|z| z.im == 0.0 && (z.re - want).abs() < 1e-12), "{want}");
        }
        let g = path_graph(2, Susceptances::Constant(1.0), 0.2).unwrap();
        let num = numeric_spectrum(&assemble_decoupled(&g, &p).unwrap()).unwrap();
        assert!(spectra_match(&s, &num), "{s:?} {num:?}");
    }

    #[test]
    fn single_node_model() {
        let g = NetworkGraph::without_shunts(1, vec![]).unwrap();
        let p = InverterParams::new(1.0, 1.0, 0.5, 2.0, 3.0, 0.2).unwrap();
        let num = numeric_spectrum(&assemble_decoupled(&g, &p).unwrap()).unwrap();
        let expected = [Complex64::new(0.0, 0.0), Complex64::new(-2.0, 0.0), Complex64::new(-1.5, 0.0)];
        assert!(spectra_match(&num, &expected), "{num:?}");
    }

    #[test]
    fn coupled_complete_five_is_stable() {
        let p = InverterParams::coupling_defaults(0.2);
        let g = complete_graph(5, Susceptances::Constant(1.0), 0.2).unwrap();
        let r = certify_stability(&assemble_coupled(&g, &p).unwrap()).unwrap();
        assert!(r.stable_observable);
        assert_eq!(r.basis, CertificateBasis::NumericOnly);
        assert_eq!(r.system_eigenvalues.len(), 15);
    }

    #[test]
    fn decoupled_is_certified() {
        let g = path_graph(6, Susceptances::fig_default(1), 0.2).unwrap();
        let r = certify_stability(&assemble_decoupled(&g, &unit()).unwrap()).unwrap();
        assert!(r.stable_observable);
        assert_eq!(r.diagnosis, StabilityDiagnosis::Stable);
        assert_eq!(r.basis, CertificateBasis::Analytic);
        assert!(r.spectral_abscissa_observable < 0.0);
    }

    #[test]
    fn negative_c_q_is_unstable() {
        let g = path_graph(3, Susceptances::Constant(1.0), 0.2).unwrap();
        let m = assemble_decoupled(&g, &unit()).unwrap();
        let mut a = m.a().clone();
        for i in 6..9 {
            a[(i, i)] += 1.5; // c_Q = −1/2
        }
        let bad = StateSpaceModel::from_parts(a, m.b().clone(), m.c().clone(), 3).unwrap();
        let r = certify_stability(&bad).unwrap();
        assert!(!r.stable_observable);
        assert_eq!(r.diagnosis, StabilityDiagnosis::Unstable);
        assert!(matches!(require_stable(&bad), Err(Error::Unstable { .. })));
    }

    #[test]
    fn disconnected_is_degenerate() {
        // Assembly refuses disconnected graphs, so build A around a split Laplacian.
        let split = NetworkGraph::without_shunts(4, vec![Edge::new(0, 1, 1.0, 0.2), Edge::new(2, 3, 1.0, 0.2)]).unwrap();
        let joined = NetworkGraph::without_shunts(
            4,
            vec![Edge::new(0, 1, 1.0, 0.0), Edge::new(1, 2, 1.0, 0.0), Edge::new(2, 3, 1.0, 0.0)],
        )
        .unwrap();
        let m = assemble_full(&joined, &NodeParams::uniform(&unit(), 4)).unwrap();
        let mut a = m.a().clone();
        let lb = split.laplacian(crate::LaplacianKind::Susceptance).matrix;
        a.view_mut((4, 0), (4, 4)).copy_from(&-&lb);
        let m = StateSpaceModel::from_parts(a, m.b().clone(), m.c().clone(), 4).unwrap();
        let r = certify_stability(&m).unwrap();
        assert_eq!(r.diagnosis, StabilityDiagnosis::DegenerateZero);
        assert!(!r.stable_observable);
    }

    #[test]
    fn matching_rejects_size_mismatch_and_far_points() {
        let a = [Complex64::new(-1.0, 0.0), Complex64::new(-2.0, 0.0)];
        assert!(!spectra_match(&a, &a[..1]));
        let b = [Complex64::new(-1.0, 0.0), Complex64::new(-2.0, 1e-6)];
        assert!(!spectra_match(&a, &b));
        let c = [Complex64::new(-2.0, 0.0), Complex64::new(-1.0, 1e-12)];
        assert!(spectra_match(&a, &c));
    }

    #[test]
    fn rejects_missing_zero() {
        assert!(analytic_spectrum(&unit(), &[1.0, 2.0]).is_err());
    }
}
