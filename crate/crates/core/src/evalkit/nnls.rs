use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnlsSolution {
    pub weights: Vec<f64>,
    /// ½‖Aw − b‖² at the start and after every outer iteration.
    pub objective_trace: Vec<f64>,
    /// Inner (least-squares) solves performed.
    pub iterations: usize,
    pub residual_norm: f64,
}

fn objective(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    0.5 * (a * x - b).norm_squared()
}

/// Unconstrained least squares restricted to the columns flagged in
/// `active`; entries outside the set are zero.
fn solve_active(a: &DMatrix<f64>, b: &DVector<f64>, active: &[bool]) -> Result<DVector<f64>> {
    let cols: Vec<usize> = (0..active.len()).filter(|&j| active[j]).collect();
    let sub = a.select_columns(&cols);
    if cols.len() > a.nrows() {
        return Err(Error::Domain(format!(
            "{} active columns exceed {} rows",
            cols.len(),
            a.nrows()
        )));
    }
    let qr = sub.qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.diagonal().iter().any(|v| v.abs() <= 1e-13 * diag_max) || diag_max == 0.0 {
        return Err(Error::Domain("rank-deficient basis: active columns are dependent".into()));
    }
    let rhs = qr.q().transpose() * b;
    let z = r
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::Domain("singular triangular factor".into()))?;
    let mut full = DVector::zeros(active.len());
    for (k, &j) in cols.iter().enumerate() {
        full[j] = z[k];
    }
    Ok(full)
}

/// Lawson–Hanson active-set solution of `min ‖A w − b‖₂` subject to `w ≥ 0`.
pub fn nnls_matrix(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<NnlsSolution> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            actual: b.len(),
        });
    }
    if let Some(k) = a.iter().chain(b.iter()).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: k });
    }
    let max_iter = 30 * n.max(1);
    let tol = 10.0 * (m.max(n) as f64) * f64::EPSILON * a.norm() * b.norm();
    let mut x = DVector::zeros(n);
    let mut active = vec![false; n];
    let mut trace = vec![objective(a, b, &x)];
    let mut iterations = 0;
    loop {
        let grad = a.transpose() * (b - a * &x);
        let next = (0..n)
            .filter(|&j| !active[j])
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let j = match next {
            Some(j) if grad[j] > tol => j,
            _ => break,
        };
        active[j] = true;
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::NonConvergence(max_iter));
            }
            let z = solve_active(a, b, &active)?;
            if (0..n).filter(|&i| active[i]).all(|i| z[i] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for i in (0..n).filter(|&i| active[i] && z[i] <= 0.0) {
                alpha = alpha.min(x[i] / (x[i] - z[i]));
            }
            x += alpha * (&z - &x);
            for i in 0..n {
                if active[i] && x[i] <= 0.0 {
                    active[i] = false;
                    x[i] = 0.0;
                }
            }
            // Interpolation can leave tiny positive values that should be zero.
            for i in 0..n {
                if active[i] && z[i] <= 0.0 && x[i].abs() <= f64::EPSILON * x.amax() {
                    active[i] = false;
                    x[i] = 0.0;
                }
            }
        }
        trace.push(objective(a, b, &x));
    }
    let residual_norm = (a * &x - b).norm();
    Ok(NnlsSolution {
        weights: x.iter().copied().collect(),
        objective_trace: trace,
        iterations,
        residual_norm,
    })
}

/// Largest violation of the optimality conditions at `w`: |∇ᵢ| for
/// positive weights, max(0, −∇ᵢ) for zero weights, where ∇ = Aᵀ(Aw − b).
pub fn kkt_residual(a: &DMatrix<f64>, b: &DVector<f64>, w: &[f64]) -> f64 {
    let x = DVector::from_column_slice(w);
    let grad = a.transpose() * (a * &x - b);
    w.iter()
        .zip(grad.iter())
        .map(|(&wi, &g)| if wi > 0.0 { g.abs() } else { (-g).max(0.0) })
        .fold(0.0, f64::max)
}

pub fn basis_matrix(basis: &[Spectrum]) -> Result<DMatrix<f64>> {
    let first = basis
        .first()
        .ok_or_else(|| Error::Validation("basis has no components".into()))?;
    for b in basis {
        first.grid().ensure_same(b.grid())?;
    }
    Ok(DMatrix::from_fn(first.len(), basis.len(), |i, j| basis[j].values()[i]))
}

/// Non-negative weights `w` minimizing `‖Σ wⱼ·basisⱼ − target‖₂`.
pub fn nnls(basis: &[Spectrum], target: &Spectrum) -> Result<NnlsSolution> {
    let a = basis_matrix(basis)?;
    basis[0].grid().ensure_same(target.grid())?;
    nnls_matrix(&a, &DVector::from_column_slice(target.values()))
}
