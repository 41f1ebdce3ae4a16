//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut eigs: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| a.total_cmp(b));
    eigs
}

/// Unique PSD square root of a symmetric PSD matrix.
///
/// Eigenvalues within `1e-12 · max(1, λ_max)` of zero are set to zero, so the
/// Laplacian kernel stays an exact kernel of the root; anything more negative
/// is rejected.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |acc, &l| acc.max(l.abs()));
    let tol = 1e-12 * scale;
    let mut roots = DVector::zeros(eig.eigenvalues.len());
    for (r, &l) in roots.iter_mut().zip(eig.eigenvalues.iter()) {
        if l < -tol {
            return Err(Error::NotPsd(l));
        }
        *r = if l <= tol { 0.0 } else { l.sqrt() };
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// Orthonormal basis (as columns) of the orthogonal complement of `v`.
///
/// Built from a Householder reflection mapping `v` onto a coordinate axis.
pub fn orthogonal_complement(v: &DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    let norm = v.norm();
    assert!(n >= 1 && norm > 0.0, "complement of a zero vector");
    let mut u = v / norm;
    let s = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    u[0] += s;
    let uu = u.dot(&u);
    let h = DMatrix::identity(n, n) - (&u * u.transpose()) * (2.0 / uu);
    // Column 0 of h is parallel to v; the rest span its complement.
    h.columns(1, n - 1).into_owned()
}

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;
const SCHUR_RETRIES: u64 = 4;

/// Real Schur form `A = U T Uᵀ`, returned as `(U, T)`.
///
/// The shifted QR iteration can cycle on matrices with special structure
/// (several exact zero eigenvalues sitting in symmetric blocks). When that
/// happens the iteration is restarted on `QᵀAQ` for a fixed pseudo-random
/// orthogonal `Q`, which leaves the spectrum unchanged and breaks the
/// symmetry.
pub fn real_schur(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if let Some(s) = Schur::try_new(a.clone(), SCHUR_EPS, SCHUR_MAX_ITER) {
        return Ok(s.unpack());
    }
    let n = a.nrows();
    for attempt in 1..=SCHUR_RETRIES {
        let q = DMatrix::from_fn(n, n, |r, c| {
            ((r * 7919 + c * 104_729) as f64 * 0.618_033_988_75 + attempt as f64).sin()
        })
        .qr()
        .q();
        if let Some(s) = Schur::try_new(q.transpose() * a * &q, SCHUR_EPS, SCHUR_MAX_ITER) {
            let (u, t) = s.unpack();
            return Ok((q * u, t));
        }
    }
    Err(Error::Numerical("Schur iteration did not converge".into()))
}

/// Eigenvalues of a general real matrix, via [`real_schur`].
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let (_, t) = real_schur(a)?;
    let n = t.nrows();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half_tr = 0.5 * (a + d);
            let disc = Complex64::new(0.25 * (a - d) * (a - d) + b * c, 0.0).sqrt();
            out.push(half_tr + disc);
            out.push(half_tr - disc);
            i += 2;
        } else {
            out.push(Complex64::new(t[(i, i)], 0.0));
            i += 1;
        }
    }
    Ok(out)
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}
