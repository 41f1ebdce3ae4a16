use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Edge, NetworkGraph};
use crate::error::{Error, Result};

/// Eliminate every node outside `boundary` from the admittance matrix via the
/// Schur complement `Y_bb − Y_bi Y_ii⁻¹ Y_ib`, and read the result back as a
/// network on the boundary nodes (in the order given).
///
/// Off-diagonal entries `−(g − jb)` become lines; row sums `−j b̄` become
/// shunts. Reductions that produce negative conductances, non-inductive lines
/// or shunt conductances are rejected.
pub fn kron_reduce(admittance: &DMatrix<Complex64>, boundary: &[usize]) -> Result<NetworkGraph> {
    let n = admittance.nrows();
    if admittance.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: admittance.ncols() });
    }
    let scale = admittance.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    for r in 0..n {
        for c in r + 1..n {
            if (admittance[(r, c)] - admittance[(c, r)]).norm() > tol {
                return Err(Error::InvalidGraph(format!("admittance matrix not symmetric at ({r},{c})")));
            }
        }
    }
    let mut in_boundary = vec![false; n];
    for &b in boundary {
        if b >= n {
            return Err(Error::InvalidGraph(format!("boundary node {b} out of range")));
        }
        if in_boundary[b] {
            return Err(Error::InvalidGraph(format!("boundary node {b} listed twice")));
        }
        in_boundary[b] = true;
    }
    if boundary.is_empty() {
        return Err(Error::InvalidGraph("boundary must be non-empty".into()));
    }
    let interior: Vec<usize> = (0..n).filter(|&v| !in_boundary[v]).collect();

    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| admittance[(rows[r], cols[c])])
    };
    let y_bb = pick(boundary, boundary);
    let reduced = if interior.is_empty() {
        y_bb
    } else {
        let y_ii = pick(&interior, &interior);
        let y_ib = pick(&interior, boundary);
        let y_bi = pick(boundary, &interior);
        let lu = y_ii.lu();
        let pivots = lu.u().diagonal();
        let max_pivot = pivots.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if pivots.iter().any(|z| z.norm() <= 1e-12 * max_pivot.max(f64::MIN_POSITIVE)) {
            return Err(Error::SingularInterior);
        }
        let solved = lu.solve(&y_ib).ok_or(Error::SingularInterior)?;
        y_bb - y_bi * solved
    };
    graph_from_admittance(&reduced, tol)
}

fn graph_from_admittance(y: &DMatrix<Complex64>, tol: f64) -> Result<NetworkGraph> {
    let m = y.nrows();
    let mut edges = Vec::new();
    for r in 0..m {
        for c in r + 1..m {
            let z = y[(r, c)];
            if z.norm() <= tol {
                continue;
            }
            let g = -z.re;
            let b = z.im;
            if g < -tol {
                return Err(Error::NonPhysicalReduction(format!("negative conductance {g:.3e} on ({r},{c})")));
            }
            if b <= tol {
                return Err(Error::NonPhysicalReduction(format!("non-inductive line b = {b:.3e} on ({r},{c})")));
            }
            edges.push(Edge::new(r, c, b, g.max(0.0)));
        }
    }
    let mut shunt_b = Vec::with_capacity(m);
    for r in 0..m {
        let row_sum: Complex64 = y.row(r).iter().sum();
        if row_sum.re.abs() > tol {
            return Err(Error::NonPhysicalReduction(format!(
                "node {r} has shunt conductance {:.3e}",
                row_sum.re
            )));
        }
        let b = -row_sum.im;
        shunt_b.push(if b.abs() <= tol { 0.0 } else { b });
    }
    NetworkGraph::new(m, edges, shunt_b)
}
