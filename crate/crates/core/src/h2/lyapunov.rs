//! Dense continuous Lyapunov solver, `AᵀX + XA = −Q`.
//!
//! Bartels–Stewart: reduce `A = U T Uᵀ` to real Schur form, solve the
//! quasi-triangular equation `TᵀY + YT = −UᵀQU` block by block, and map back
//! with `X = U Y Uᵀ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::real_schur;

/// Residual bound enforced on every solve, relative to `‖Q‖_F`.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Solve `AᵀX + XA = −Q` for Hurwitz `A`.
///
/// Returns [`Error::NotHurwitz`] if any eigenvalue of `A` has a non-negative
/// real part, and [`Error::Numerical`] if the residual check fails.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    if q.shape() != (n, n) {
        return Err(Error::DimensionMismatch { expected: n, got: q.nrows() });
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let (u, t) = real_schur(a)?;
    let blocks = diagonal_blocks(&t);
    if spectral_abscissa_of_blocks(&t, &blocks) >= 0.0 {
        return Err(Error::NotHurwitz);
    }

    let f = -(u.transpose() * q * &u);
    let y = solve_quasi_triangular(&t, &f, &blocks)?;
    let mut x = &u * y * u.transpose();
    x = (&x + x.transpose()) * 0.5;

    let residual = (a.transpose() * &x + &x * a + q).norm();
    if residual > RESIDUAL_TOL * q.norm() {
        return Err(Error::Numerical(format!(
            "Lyapunov residual {residual:.3e} exceeds {:.1e}·‖Q‖",
            RESIDUAL_TOL
        )));
    }
    Ok(x)
}

/// `(start, size)` of each 1×1 or 2×2 diagonal block of a quasi-triangular matrix.
fn diagonal_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

fn spectral_abscissa_of_blocks(t: &DMatrix<f64>, blocks: &[(usize, usize)]) -> f64 {
    blocks
        .iter()
        .map(|&(s, size)| {
            if size == 1 {
                t[(s, s)]
            } else {
                let (a, b, c, d) = (t[(s, s)], t[(s, s + 1)], t[(s + 1, s)], t[(s + 1, s + 1)]);
                let half_tr = 0.5 * (a + d);
                let disc = 0.25 * (a - d) * (a - d) + b * c;
                if disc >= 0.0 {
                    half_tr + disc.sqrt()
                } else {
                    half_tr
                }
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solve `TᵀY + YT = F` with `T` upper quasi-triangular.
///
/// Block `(I, J)` satisfies
/// `T_IIᵀ Y_IJ + Y_IJ T_JJ = F_IJ − Σ_{K<I} T_KIᵀ Y_KJ − Σ_{K<J} Y_IK T_KJ`,
/// so sweeping `I` then `J` upward only ever reads finished blocks.
fn solve_quasi_triangular(t: &DMatrix<f64>, f: &DMatrix<f64>, blocks: &[(usize, usize)]) -> Result<DMatrix<f64>> {
    let n = t.nrows();
    let mut y = DMatrix::zeros(n, n);
    for &(si, p) in blocks {
        for &(sj, q) in blocks {
            let mut rhs = f.view((si, sj), (p, q)).into_owned();
            if si > 0 {
                rhs -= t.view((0, si), (si, p)).transpose() * y.view((0, sj), (si, q));
            }
            if sj > 0 {
                rhs -= y.view((si, 0), (p, sj)) * t.view((0, sj), (sj, q));
            }
            let tii = t.view((si, si), (p, p));
            let tjj = t.view((sj, sj), (q, q));
            // vec(Tiiᵀ Y + Y Tjj) = (I_q ⊗ Tiiᵀ + Tjjᵀ ⊗ I_p) vec(Y), column-major.
            let m = p * q;
            let mut k = DMatrix::zeros(m, m);
            for col in 0..q {
                for row in 0..p {
                    let r = col * p + row;
                    for l in 0..p {
                        k[(r, col * p + l)] += tii[(l, row)];
                    }
                    for l in 0..q {
                        k[(r, l * p + row)] += tjj[(l, col)];
                    }
                }
            }
            let b = DVector::from_column_slice(rhs.as_slice());
            let sol = k
                .lu()
                .solve(&b)
                .ok_or_else(|| Error::Numerical("singular Lyapunov block (eigenvalues sum to zero)".into()))?;
            y.view_mut((si, sj), (p, q)).copy_from_slice(sol.as_slice());
        }
    }
    Ok(y)
}
