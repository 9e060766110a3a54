//! Closed-form speed theory: linear speeds, the dispersion function g, the
//! anomalous speed, decay exponents and the piecewise speed selectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Case, Parameters};

/// Square root that snaps tiny negative discriminants to zero.
fn snapped_sqrt(disc: f64, scale: f64, what: &str) -> Result<f64> {
    if disc >= 0.0 {
        Ok(disc.sqrt())
    } else if disc >= -1e-14 * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::ComplexRoots(format!("{what}: discriminant {disc:e} < 0")))
    }
}

/// `(c_minus, c_plus)` with c_± = 2√(d_± α).
pub fn linear_speeds(p: &Parameters) -> (f64, f64) {
    (
        2.0 * (p.d_minus * p.alpha).sqrt(),
        2.0 * (p.d_plus * p.alpha).sqrt(),
    )
}

/// Upper end of the anomalous window.
pub fn c_int(p: &Parameters) -> Result<f64> {
    p.require_nondegenerate("c_int")?;
    let (_, c_plus) = linear_speeds(p);
    let r = p.d_plus / p.d_minus;
    Ok(c_plus * (r.sqrt() + (r - 1.0).sqrt()))
}

/// Smaller root of d_minus λ² − c λ + α = 0.
pub fn lambda_of_c(c: f64, p: &Parameters) -> Result<f64> {
    let disc = c * c - 4.0 * p.d_minus * p.alpha;
    let root = snapped_sqrt(disc, c * c, "lambda_of_c (c below c_minus)")?;
    Ok((c - root) / (2.0 * p.d_minus))
}

fn check_in(c: f64, lo: f64, hi: f64, what: &str) -> Result<()> {
    let slack = 1e-12 * hi.abs().max(1.0);
    if !(c >= lo - slack && c <= hi + slack) {
        return Err(Error::Domain(format!("{what}: c = {c} outside [{lo}, {hi}]")));
    }
    Ok(())
}

/// g(c) = c_het² − 4 d_plus [α + λ(c)(c_het − c)] on [c_minus, c_het].
pub fn g(c: f64, p: &Parameters) -> Result<f64> {
    let (c_minus, _) = linear_speeds(p);
    check_in(c, c_minus, p.c_het, "g")?;
    let c = c.max(c_minus);
    let lam = lambda_of_c(c, p)?;
    Ok(p.c_het * p.c_het - 4.0 * p.d_plus * (p.alpha + lam * (p.c_het - c)))
}

fn anomalous_window(p: &Parameters) -> Result<(f64, f64, f64)> {
    p.require_nondegenerate("anomalous_speed")?;
    let (c_minus, c_plus) = linear_speeds(p);
    let ci = c_int(p)?;
    let slack = 1e-12 * ci;
    if !(p.c_het >= c_plus - slack && p.c_het < ci) {
        return Err(Error::Regime(format!(
            "anomalous regime needs c_plus <= c_het < c_int ({c_plus} <= {} < {ci})",
            p.c_het
        )));
    }
    Ok((c_minus, c_plus, ci))
}

/// Closed-form spreading speed for c_plus ≤ c_het < c_int.
pub fn anomalous_speed(p: &Parameters) -> Result<f64> {
    let (c_minus, _, _) = anomalous_window(p)?;
    let s = 1.0 - (1.0 - p.d_minus / p.d_plus).sqrt();
    Ok(0.5 * p.c_het * s + c_minus * c_minus / (2.0 * p.c_het * s))
}

/// Root of g on [c_minus, c_plus] by bisection (absolute tolerance 1e-12).
///
/// Independent of the closed form; used to cross-check it.
pub fn g_root(p: &Parameters) -> Result<f64> {
    let (c_minus, c_plus, _) = anomalous_window(p)?;
    let hi_end = c_plus.min(p.c_het);
    let (mut lo, mut hi) = (c_minus, hi_end);
    let (g_lo, g_hi) = (g(lo, p)?, g(hi, p)?);
    if g_lo > 0.0 || g_hi < 0.0 {
        return Err(Error::NotBracketed(format!(
            "g({lo}) = {g_lo}, g({hi}) = {g_hi}"
        )));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid, p)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// λ_⋆ = α − c_het²/(4 d_plus).
pub fn lambda_star(p: &Parameters) -> f64 {
    p.alpha - p.c_het * p.c_het / (4.0 * p.d_plus)
}

/// `(lambda_w, lambda_s)`, the roots of d_minus λ² − c_het λ + α = 0.
pub fn decay_rates(p: &Parameters) -> Result<(f64, f64)> {
    let disc = p.c_het * p.c_het - 4.0 * p.d_minus * p.alpha;
    let root = snapped_sqrt(disc, p.c_het * p.c_het, "decay_rates (c_het below c_minus)")?;
    let two_d = 2.0 * p.d_minus;
    Ok(((p.c_het - root) / two_d, (p.c_het + root) / two_d))
}

/// μ = c_het/(2 d_plus), the front exponent of the anomalous super-solution.
pub fn mu_super(p: &Parameters) -> Result<f64> {
    anomalous_window(p)?;
    Ok(p.c_het / (2.0 * p.d_plus))
}

/// Left-hand sides of the two dispersion relations of the two-piece ansatz.
pub fn dispersion_residuals(lambda: f64, mu: f64, c: f64, p: &Parameters) -> (f64, f64) {
    let r1 = p.d_minus * lambda * lambda - c * lambda + p.alpha;
    let r2 = p.d_plus * mu * mu - p.c_het * mu + lambda * (p.c_het - c) + p.alpha;
    (r1, r2)
}

/// α − η(c) − c_het²/(4 d_plus) with η(c) = −λ(c)(c_het − c).
pub fn absolute_spectrum_edge(c: f64, p: &Parameters) -> Result<f64> {
    let (c_minus, _) = linear_speeds(p);
    check_in(c, c_minus, p.c_het, "absolute_spectrum_edge")?;
    let eta = -lambda_of_c(c.max(c_minus), p)? * (p.c_het - c);
    Ok(p.alpha - eta - p.c_het * p.c_het / (4.0 * p.d_plus))
}

/// Which branch of the speed selection applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Spreading at c_minus.
    LinearLow,
    /// Spreading locked to c_het.
    Locked,
    /// Spreading at c_plus.
    LinearHigh,
    /// Nonlocally pulled speed strictly between the linear speeds.
    Anomalous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedReport {
    pub case: Case,
    pub c_het: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub c_int: f64,
    pub c_star: f64,
    pub regime: Regime,
    /// c_het sits exactly on c_int, where the selection is not settled.
    pub boundary_ambiguous: bool,
    pub lambda_star: f64,
    pub lambda_of_cstar: Option<f64>,
    pub mu_super: Option<f64>,
    pub lambda_w: Option<f64>,
    pub lambda_s: Option<f64>,
}

/// Selected spreading speed and the exponents attached to it.
pub fn spreading_speed(p: &Parameters) -> Result<SpeedReport> {
    p.require_nondegenerate("spreading_speed")?;
    let (c_minus, c_plus) = linear_speeds(p);
    let ci = c_int(p)?;
    let c = p.c_het;
    let mut ambiguous = false;
    let (c_star, regime) = match p.case {
        Case::Decreasing => {
            if c < c_minus {
                (c_minus, Regime::LinearLow)
            } else if c <= c_plus {
                (c, Regime::Locked)
            } else {
                (c_plus, Regime::LinearHigh)
            }
        }
        Case::Increasing => {
            if (c - ci).abs() <= 1e-12 * ci {
                ambiguous = true;
                (c_minus, Regime::LinearLow)
            } else if c < c_plus {
                (c_plus, Regime::LinearHigh)
            } else if c < ci {
                (anomalous_speed(p)?, Regime::Anomalous)
            } else {
                (c_minus, Regime::LinearLow)
            }
        }
    };
    let (lambda_w, lambda_s) = match decay_rates(p) {
        Ok((w, s)) => (Some(w), Some(s)),
        Err(_) => (None, None),
    };
    Ok(SpeedReport {
        case: p.case,
        c_het: c,
        c_minus,
        c_plus,
        c_int: ci,
        c_star,
        regime,
        boundary_ambiguous: ambiguous,
        lambda_star: lambda_star(p),
        lambda_of_cstar: lambda_of_c(c_star, p).ok(),
        mu_super: if regime == Regime::Anomalous {
            Some(mu_super(p)?)
        } else {
            None
        },
        lambda_w,
        lambda_s,
    })
}
