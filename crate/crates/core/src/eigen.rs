//! Dirichlet principal eigenvalues of L = χ(x)∂² + c_het ∂ + α on [−r, r] and
//! their large-r limit μ*.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{locate_switch, Case, ChiProfile, Parameters};
use crate::numerics::solve_tridiagonal;

/// Principal pair of Lφ = −μφ, φ(±r) = 0, on `nx` interior nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletPair {
    pub r: f64,
    pub mu_d: f64,
    /// Node positions including both boundary points.
    pub x: Vec<f64>,
    /// Eigenfunction on `x`, zero at the ends, normalised to φ(0) = 1.
    pub phi: Vec<f64>,
    /// ‖Lφ + μφ‖∞ / ‖φ‖∞ on the discrete operator.
    pub residual: f64,
    pub iterations: usize,
}

struct Tridiagonal {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiagonal {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.lower[i] * v[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * v[i + 1];
            }
            out[i] = s;
        }
    }

    fn norm_inf(&self) -> f64 {
        (0..self.diag.len())
            .map(|i| self.lower[i].abs() + self.diag[i].abs() + self.upper[i].abs())
            .fold(0.0, f64::max)
    }
}

fn discretize(r: f64, nx: usize, p: &Parameters, chi: &ChiProfile) -> Result<(Vec<f64>, Tridiagonal)> {
    let h = 2.0 * r / (nx + 1) as f64;
    let c = p.c_het;
    let mut x = Vec::with_capacity(nx + 2);
    let (mut lower, mut diag, mut upper) =
        (vec![0.0; nx], vec![0.0; nx], vec![0.0; nx]);
    x.push(-r);
    for j in 0..nx {
        let xj = -r + (j + 1) as f64 * h;
        x.push(xj);
        let k = chi.eval(xj) / (h * h);
        let a = c / (2.0 * h);
        if k <= a {
            return Err(Error::Precondition(format!(
                "grid too coarse for the advection term: need h < 2χ/c_het (h = {h}, χ = {})",
                k * h * h
            )));
        }
        lower[j] = k - a;
        diag[j] = -2.0 * k + p.alpha;
        upper[j] = k + a;
    }
    x.push(r);
    Ok((x, Tridiagonal { lower, diag, upper }))
}

/// Number of eigenvalues of the symmetric tridiagonal (d, s) below `x`.
fn sturm_count(d: &[f64], s2: &[f64], x: f64, tiny: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    for j in 0..d.len() {
        if j > 0 {
            q = d[j] - x - s2[j - 1] / q;
        }
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue by Sturm-sequence bisection on the symmetrized matrix.
fn largest_eigenvalue(t: &Tridiagonal) -> f64 {
    let n = t.diag.len();
    // Similarity D T D⁻¹ with positive off-diagonal products gives a symmetric
    // matrix with off-diagonal √(upper_j · lower_{j+1}).
    let s2: Vec<f64> = (0..n.saturating_sub(1))
        .map(|j| t.upper[j] * t.lower[j + 1])
        .collect();
    let s: Vec<f64> = s2.iter().map(|v| v.sqrt()).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..n {
        let rad = if j > 0 { s[j - 1] } else { 0.0 } + if j + 1 < n { s[j] } else { 0.0 };
        lo = lo.min(t.diag[j] - rad);
        hi = hi.max(t.diag[j] + rad);
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let tiny = f64::EPSILON * scale * 1e-3;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(&t.diag, &s2, mid, tiny) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Principal Dirichlet pair on [−r, r] with `nx` interior nodes.
///
/// The eigenvalue comes from Sturm bisection on the symmetrized operator; the
/// eigenfunction from inverse iteration shifted just above it.
pub fn dirichlet_eig(r: f64, nx: usize, p: &Parameters, chi: &ChiProfile) -> Result<DirichletPair> {
    p.validate()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Precondition(format!("radius must be > 0 (got {r})")));
    }
    if nx < 51 {
        return Err(Error::Precondition(format!("need nx >= 51 (got {nx})")));
    }
    let (x, t) = discretize(r, nx, p, chi)?;
    let mut lambda = largest_eigenvalue(&t);
    let norm = t.norm_inf();
    let sigma = lambda + 1e-9 * norm.max(1.0);

    // (σI − T) y = v
    let lower: Vec<f64> = t.lower.iter().map(|v| -v).collect();
    let upper: Vec<f64> = t.upper.iter().map(|v| -v).collect();
    let diag: Vec<f64> = t.diag.iter().map(|v| sigma - v).collect();
    let mut v = vec![1.0; nx];
    let mut y = vec![0.0; nx];
    let mut scratch = Vec::with_capacity(nx);
    let mut tv = vec![0.0; nx];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut previous = f64::INFINITY;
    const MAX_ITER: usize = 10_000;
    while iterations < MAX_ITER {
        iterations += 1;
        y.copy_from_slice(&v);
        solve_tridiagonal(&lower, &diag, &upper, &mut y, &mut scratch);
        let ymax = y.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
        let sign = if y.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = sign * yi / ymax;
        }
        lambda = rayleigh_symmetrized(&t, &v);
        t.apply(&v, &mut tv);
        residual = tv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).abs())
            .fold(0.0, f64::max);
        // Stop at the rounding floor of T·v or once progress stalls.
        if residual < 16.0 * f64::EPSILON * norm.max(1.0) || (residual < 1e-9 && residual > 0.5 * previous) {
            break;
        }
        previous = residual;
    }
    if residual > 1e-8 {
        return Err(Error::NoConvergence { iterations, residual });
    }

    let mut phi = Vec::with_capacity(nx + 2);
    phi.push(0.0);
    phi.extend_from_slice(&v);
    phi.push(0.0);
    let at0 = interpolate_at_zero(&x, &phi);
    if !(at0 > 0.0) {
        return Err(Error::Precondition(format!(
            "eigenfunction is not positive at the origin (φ(0) = {at0:e})"
        )));
    }
    let vmax = phi.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    for f in phi.iter_mut() {
        *f /= at0;
    }
    Ok(DirichletPair {
        r,
        mu_d: -lambda,
        x,
        phi,
        residual: residual / vmax,
        iterations,
    })
}

/// Rayleigh quotient of `v` in the basis where `t` is symmetric. Second-order
/// accurate in the eigenvector error, unlike the plain quotient.
fn rayleigh_symmetrized(t: &Tridiagonal, v: &[f64]) -> f64 {
    let n = v.len();
    let mut logd = vec![0.0; n];
    for j in 0..n - 1 {
        logd[j + 1] = logd[j] + 0.5 * (t.upper[j] / t.lower[j + 1]).ln();
    }
    let shift = (0..n)
        .filter(|&j| v[j] != 0.0)
        .map(|j| logd[j] + v[j].abs().ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = (0..n).map(|j| v[j] * (logd[j] - shift).exp()).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..n {
        let mut sw = t.diag[j] * w[j];
        if j > 0 {
            sw += (t.upper[j - 1] * t.lower[j]).sqrt() * w[j - 1];
        }
        if j + 1 < n {
            sw += (t.upper[j] * t.lower[j + 1]).sqrt() * w[j + 1];
        }
        num += w[j] * sw;
        den += w[j] * w[j];
    }
    num / den
}

fn interpolate_at_zero(x: &[f64], f: &[f64]) -> f64 {
    let k = x.partition_point(|&v| v <= 0.0).clamp(1, x.len() - 1);
    let w = (0.0 - x[k - 1]) / (x[k] - x[k - 1]);
    f[k - 1] + w * (f[k] - f[k - 1])
}

/// Interior node count giving spacing at most `dx_max` on [−r, r].
pub fn nodes_for(r: f64, dx_max: f64) -> usize {
    (((2.0 * r / dx_max) - 1e-9).ceil() as usize).saturating_sub(1).max(51)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub r_values: Vec<f64>,
    pub mu_d: Vec<f64>,
    /// Principal pair on the largest radius.
    pub finest: DirichletPair,
    /// Last μ_d; an upper bound on μ* because μ_d decreases with r.
    pub mu_star_estimate: f64,
    pub converged: bool,
    /// μ* + K/r² extrapolation from the last two radii; diagnostic only.
    pub richardson: f64,
}

pub const DEFAULT_RADII: [f64; 4] = [10.0, 20.0, 40.0, 80.0];
pub const DEFAULT_DX: f64 = 0.05;
pub const DEFAULT_TOL: f64 = 5e-3;

/// μ_d over increasing radii with spacing at most `dx_max`.
pub fn generalized_eig_with(
    p: &Parameters,
    chi: &ChiProfile,
    r_list: &[f64],
    tol: f64,
    dx_max: f64,
) -> Result<EigenResult> {
    if r_list.len() < 3 {
        return Err(Error::Precondition(format!(
            "need at least three radii (got {})",
            r_list.len()
        )));
    }
    if r_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("radii must increase strictly".into()));
    }
    if !(tol > 0.0 && dx_max > 0.0) {
        return Err(Error::Precondition("tol and dx_max must be > 0".into()));
    }
    let pairs: Vec<DirichletPair> = r_list
        .par_iter()
        .map(|&r| dirichlet_eig(r, nodes_for(r, dx_max), p, chi))
        .collect::<Result<_>>()?;
    let mu_d: Vec<f64> = pairs.iter().map(|q| q.mu_d).collect();
    let n = mu_d.len();
    let (r1, r2) = (r_list[n - 2], r_list[n - 1]);
    let richardson = (r2 * r2 * mu_d[n - 1] - r1 * r1 * mu_d[n - 2]) / (r2 * r2 - r1 * r1);
    let converged = (mu_d[n - 1] - mu_d[n - 2]).abs() < tol;
    Ok(EigenResult {
        r_values: r_list.to_vec(),
        mu_star_estimate: mu_d[n - 1],
        mu_d,
        finest: pairs.into_iter().last().expect("at least three radii"),
        converged,
        richardson,
    })
}

pub fn generalized_eig(
    p: &Parameters,
    chi: &ChiProfile,
    r_list: &[f64],
    tol: f64,
) -> Result<EigenResult> {
    generalized_eig_with(p, chi, r_list, tol, DEFAULT_DX)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignVerdict {
    Negative,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignCheck {
    pub verdict: SignVerdict,
    pub mu_star_estimate: Option<f64>,
    pub converged: bool,
    /// q = 4χα − c_het² stays at or above `q_floor` on (−∞, q_upper].
    pub q_upper: Option<f64>,
    pub q_floor: f64,
}

/// Certify μ* < 0 for decreasing χ, or report that numerics cannot decide.
pub fn sign_check(p: &Parameters, chi: &ChiProfile) -> SignCheck {
    let q_left = 4.0 * p.d_plus * p.alpha - p.c_het * p.c_het;
    let q_floor = 0.5 * q_left;
    let mut out = SignCheck {
        verdict: SignVerdict::Inconclusive,
        mu_star_estimate: None,
        converged: false,
        q_upper: None,
        q_floor,
    };
    if p.case != Case::Decreasing || q_left <= 0.0 {
        return out;
    }
    let q = |x: f64| 4.0 * chi.eval(x) * p.alpha - p.c_het * p.c_het;
    let span = 1e3;
    out.q_upper = Some(if q(span) >= q_floor {
        f64::INFINITY
    } else {
        match locate_switch(|x| q(x) >= q_floor, -span, span) {
            Ok(x) => x,
            Err(_) => return out,
        }
    });
    if let Ok(res) = generalized_eig(p, chi, &DEFAULT_RADII, DEFAULT_TOL) {
        out.mu_star_estimate = Some(res.mu_star_estimate);
        out.converged = res.converged;
        if res.converged && res.mu_star_estimate < -DEFAULT_TOL {
            out.verdict = SignVerdict::Negative;
        }
    }
    out
}
