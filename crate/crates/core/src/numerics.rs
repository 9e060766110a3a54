//! Small dense and banded linear-algebra helpers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Solve a tridiagonal system in place (Thomas algorithm, no pivoting).
///
/// Row `i` reads `lower[i]·x[i−1] + diag[i]·x[i] + upper[i]·x[i+1] = rhs[i]`;
/// `lower[0]` and `upper[n−1]` are ignored. `rhs` is overwritten with the
/// solution. Stable for diagonally dominant or M-matrix systems.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    scratch: &mut Vec<f64>,
) {
    let n = diag.len();
    if n == 0 {
        return;
    }
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut denom = diag[0];
    scratch[0] = upper[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

/// Ordinary least-squares line `y ≈ slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::InsufficientSamples { needed: 2, have: n.min(ys.len()) });
    }
    let nf = n as f64;
    let xm = xs.iter().sum::<f64>() / nf;
    let ym = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - xm, y - ym);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples { needed: 2, have: 1 });
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LineFit { slope, intercept, r2, n })
}

/// Least-squares coefficients for `y ≈ Σ_k coef[k]·columns[k]` (SVD based).
pub fn least_squares(columns: &[Vec<f64>], ys: &[f64]) -> Result<Vec<f64>> {
    let n = ys.len();
    let m = columns.len();
    if n < m || columns.iter().any(|c| c.len() != n) {
        return Err(Error::InsufficientSamples { needed: m, have: n });
    }
    let a = DMatrix::from_fn(n, m, |i, j| columns[j][i]);
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let x = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidConfig(format!("least squares failed: {e}")))?;
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tridiagonal_matches_dense_solve() {
        let n = 7;
        let lower: Vec<f64> = (0..n).map(|i| -1.0 - 0.1 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.5 + 0.05 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 4.0 + i as f64).collect();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 1.0).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = diag[i] * x_true[i];
            if i > 0 {
                rhs[i] += lower[i] * x_true[i - 1];
            }
            if i + 1 < n {
                rhs[i] += upper[i] * x_true[i + 1];
            }
        }
        let mut scratch = Vec::new();
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs, &mut scratch);
        for i in 0..n {
            assert_relative_eq!(rhs[i], x_true[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.3 * x + 7.0).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 1.3).abs() < 1e-12);
        assert!((f.intercept - 7.0).abs() < 1e-11);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(fit_line(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn least_squares_recovers_coefficients() {
        let ts: Vec<f64> = (1..60).map(|i| i as f64).collect();
        let y: Vec<f64> = ts.iter().map(|t| 2.0 * t - 0.75 * t.ln() + 1.0).collect();
        let cols = vec![ts.clone(), ts.iter().map(|t| t.ln()).collect(), vec![1.0; ts.len()]];
        let c = least_squares(&cols, &y).unwrap();
        assert_relative_eq!(c[0], 2.0, epsilon = 1e-10);
        assert_relative_eq!(c[1], -0.75, epsilon = 1e-9);
        assert_relative_eq!(c[2], 1.0, epsilon = 1e-9);
    }
}
