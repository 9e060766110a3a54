//! Physical parameters and the diffusivity profile χ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monotonicity class of χ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// χ decreases from d_plus at −∞ to d_minus at +∞.
    #[serde(rename = "CaseI", alias = "I", alias = "CaseI_decreasing")]
    Decreasing,
    /// χ increases from d_minus at −∞ to d_plus at +∞.
    #[serde(rename = "CaseII", alias = "II", alias = "CaseII_increasing")]
    Increasing,
}

impl Case {
    /// −1 for decreasing profiles, +1 for increasing ones.
    pub fn sign(self) -> f64 {
        match self {
            Case::Decreasing => -1.0,
            Case::Increasing => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub alpha: f64,
    pub d_minus: f64,
    pub d_plus: f64,
    pub c_het: f64,
    pub case: Case,
    /// Logistic rate of χ.
    #[serde(alias = "chi_lambda")]
    pub chi_steepness: f64,
    /// Set when `d_minus == d_plus` is intended (homogeneous oracle runs).
    #[serde(default)]
    pub degenerate: bool,
}

impl Parameters {
    pub fn new(
        alpha: f64,
        d_minus: f64,
        d_plus: f64,
        c_het: f64,
        case: Case,
        chi_steepness: f64,
    ) -> Result<Self> {
        let p = Parameters {
            alpha,
            d_minus,
            d_plus,
            c_het,
            case,
            chi_steepness,
            degenerate: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Constant diffusivity `d` everywhere, flagged degenerate.
    pub fn homogeneous(alpha: f64, d: f64, c_het: f64) -> Result<Self> {
        let p = Parameters {
            alpha,
            d_minus: d,
            d_plus: d,
            c_het,
            case: Case::Decreasing,
            chi_steepness: 1.0,
            degenerate: true,
        };
        p.validate()?;
        Ok(p)
    }

    /// Benchmark constants: α = 1, d_+ = 1, d_- = 0.25, logistic rate 2.
    pub fn benchmark(case: Case, c_het: f64) -> Self {
        Parameters {
            alpha: 1.0,
            d_minus: 0.25,
            d_plus: 1.0,
            c_het,
            case,
            chi_steepness: 2.0,
            degenerate: false,
        }
    }

    pub fn with_c_het(mut self, c_het: f64) -> Self {
        self.c_het = c_het;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.alpha,
            self.d_minus,
            self.d_plus,
            self.c_het,
            self.chi_steepness,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameters("all parameters must be finite".into()));
        }
        if self.alpha <= 0.0 {
            return Err(Error::InvalidParameters(format!(
                "alpha must be > 0 (got {})",
                self.alpha
            )));
        }
        if self.d_minus <= 0.0 {
            return Err(Error::InvalidParameters(format!(
                "d_minus must be > 0 (got {})",
                self.d_minus
            )));
        }
        if self.d_minus > self.d_plus {
            return Err(Error::InvalidParameters(format!(
                "d_minus must not exceed d_plus ({} > {})",
                self.d_minus, self.d_plus
            )));
        }
        if self.d_minus == self.d_plus && !self.degenerate {
            return Err(Error::InvalidParameters(
                "d_minus = d_plus requires the degenerate flag".into(),
            ));
        }
        if self.c_het < 0.0 {
            return Err(Error::InvalidParameters(format!(
                "c_het must be >= 0 (got {})",
                self.c_het
            )));
        }
        if self.chi_steepness <= 0.0 {
            return Err(Error::InvalidParameters(format!(
                "chi_steepness must be > 0 (got {})",
                self.chi_steepness
            )));
        }
        Ok(())
    }

    pub fn is_degenerate(&self) -> bool {
        self.d_minus == self.d_plus
    }

    /// Error unless `d_minus < d_plus`.
    pub fn require_nondegenerate(&self, who: &'static str) -> Result<()> {
        self.validate()?;
        if self.is_degenerate() {
            return Err(Error::Degenerate(who));
        }
        Ok(())
    }
}

/// Which closed form (or table) defines χ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChiVariant {
    LogisticCaseI,
    LogisticCaseII,
    Step,
    Tabulated,
}

#[derive(Clone, Debug, PartialEq)]
struct Table {
    xs: Vec<f64>,
    values: Vec<f64>,
}

/// Diffusivity profile χ. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiProfile {
    variant: ChiVariant,
    params: Parameters,
    table: Option<Table>,
    warning: Option<String>,
}

// Beyond this logistic argument χ equals its limit to double precision.
const SATURATION: f64 = 40.0;

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

impl ChiProfile {
    /// Logistic profile with orientation taken from `p.case`.
    pub fn logistic(p: &Parameters) -> Result<Self> {
        p.validate()?;
        let variant = match p.case {
            Case::Decreasing => ChiVariant::LogisticCaseI,
            Case::Increasing => ChiVariant::LogisticCaseII,
        };
        Ok(ChiProfile {
            variant,
            params: *p,
            table: None,
            warning: None,
        })
    }

    /// Sharp interface at the origin. Case II takes d_minus for x ≤ 0 and d_plus for x > 0;
    /// Case I is the mirror image.
    pub fn step(p: &Parameters) -> Result<Self> {
        p.validate()?;
        Ok(ChiProfile {
            variant: ChiVariant::Step,
            params: *p,
            table: None,
            warning: None,
        })
    }

    /// Piecewise-linear χ through `(xs[i], values[i])`, clamped outside the table.
    pub fn tabulated(p: &Parameters, xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        p.validate()?;
        if xs.is_empty() {
            return Err(Error::InvalidProfile("tabulated profile has an empty table".into()));
        }
        if xs.len() != values.len() {
            return Err(Error::InvalidProfile(format!(
                "table length mismatch: {} positions, {} values",
                xs.len(),
                values.len()
            )));
        }
        if xs.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("table entries must be finite".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile("table positions must increase strictly".into()));
        }
        let slack = 1e-12 * p.d_plus;
        if values
            .iter()
            .any(|&v| v < p.d_minus - slack || v > p.d_plus + slack)
        {
            return Err(Error::InvalidProfile(
                "table values must lie in [d_minus, d_plus]".into(),
            ));
        }
        let sign = p.case.sign();
        if values.windows(2).any(|w| (w[1] - w[0]) * sign < 0.0) {
            return Err(Error::InvalidProfile(format!(
                "table values are not monotone for {:?}",
                p.case
            )));
        }
        let (left, right) = match p.case {
            Case::Decreasing => (p.d_plus, p.d_minus),
            Case::Increasing => (p.d_minus, p.d_plus),
        };
        let tol = 1e-10 * p.d_plus;
        let first = values[0];
        let last = values[values.len() - 1];
        let warning = if (first - left).abs() > tol || (last - right).abs() > tol {
            Some(format!(
                "table endpoints ({first}, {last}) differ from the limits ({left}, {right}) by more than 1e-10 relative"
            ))
        } else {
            None
        };
        Ok(ChiProfile {
            variant: ChiVariant::Tabulated,
            params: *p,
            table: Some(Table { xs, values }),
            warning,
        })
    }

    pub fn variant(&self) -> ChiVariant {
        self.variant
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn case(&self) -> Case {
        self.params.case
    }

    /// Set when a table does not reach the limits d_∓ closely enough.
    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    /// Smooth profiles only; the step is excluded from PDE and residual evaluation.
    pub fn is_smooth(&self) -> bool {
        self.variant != ChiVariant::Step
    }

    /// Exponential tail rate, known only for logistic profiles.
    pub fn tail_rate(&self) -> Option<f64> {
        match self.variant {
            ChiVariant::LogisticCaseI | ChiVariant::LogisticCaseII => {
                Some(self.params.chi_steepness)
            }
            _ => None,
        }
    }

    fn logistic_arg(&self, x: f64) -> f64 {
        let s = self.params.chi_steepness * x;
        match self.variant {
            ChiVariant::LogisticCaseI => -s,
            _ => s,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let p = &self.params;
        match self.variant {
            ChiVariant::LogisticCaseI | ChiVariant::LogisticCaseII => {
                let s = self.logistic_arg(x);
                if s > SATURATION {
                    p.d_plus
                } else if s < -SATURATION {
                    p.d_minus
                } else {
                    p.d_minus + (p.d_plus - p.d_minus) * sigmoid(s)
                }
            }
            ChiVariant::Step => {
                let low_left = p.case == Case::Increasing;
                if (x <= 0.0) == low_left {
                    p.d_minus
                } else {
                    p.d_plus
                }
            }
            ChiVariant::Tabulated => {
                let t = self.table.as_ref().expect("tabulated profile has a table");
                interpolate(&t.xs, &t.values, x)
            }
        }
    }

    pub fn prime(&self, x: f64) -> Result<f64> {
        let p = &self.params;
        match self.variant {
            ChiVariant::LogisticCaseI | ChiVariant::LogisticCaseII => {
                let s = self.logistic_arg(x);
                let sg = sigmoid(s);
                let mag = (p.d_plus - p.d_minus) * p.chi_steepness * sg * sigmoid(-s);
                Ok(if self.variant == ChiVariant::LogisticCaseI {
                    -mag
                } else {
                    mag
                })
            }
            ChiVariant::Step => {
                if x == 0.0 {
                    Err(Error::NotDifferentiable { x })
                } else {
                    Ok(0.0)
                }
            }
            ChiVariant::Tabulated => {
                let t = self.table.as_ref().expect("tabulated profile has a table");
                let n = t.xs.len();
                if n < 2 || x < t.xs[0] || x >= t.xs[n - 1] {
                    return Ok(0.0);
                }
                let k = t.xs.partition_point(|&v| v <= x) - 1;
                Ok((t.values[k + 1] - t.values[k]) / (t.xs[k + 1] - t.xs[k]))
            }
        }
    }

    /// χ(x) − d_minus, computed without cancellation for logistic profiles.
    pub fn gap_low(&self, x: f64) -> f64 {
        let p = &self.params;
        match self.variant {
            ChiVariant::LogisticCaseI | ChiVariant::LogisticCaseII => {
                (p.d_plus - p.d_minus) * sigmoid(self.logistic_arg(x))
            }
            _ => self.eval(x) - p.d_minus,
        }
    }

    /// d_plus − χ(x), computed without cancellation for logistic profiles.
    pub fn gap_high(&self, x: f64) -> f64 {
        let p = &self.params;
        match self.variant {
            ChiVariant::LogisticCaseI | ChiVariant::LogisticCaseII => {
                (p.d_plus - p.d_minus) * sigmoid(-self.logistic_arg(x))
            }
            _ => p.d_plus - self.eval(x),
        }
    }

    /// Half-width of the interval outside which χ equals its limits exactly.
    pub fn saturation_halfwidth(&self) -> Option<f64> {
        self.tail_rate().map(|lam| SATURATION / lam)
    }

    /// Fill `out[i] = χ(xs[i] − shift)`.
    pub fn fill_shifted(&self, xs: &[f64], shift: f64, out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = self.eval(x - shift);
        }
    }
}

fn interpolate(xs: &[f64], vs: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return vs[0];
    }
    if x >= xs[n - 1] {
        return vs[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    vs[k] + w * (vs[k + 1] - vs[k])
}

/// Boundary of the set where a monotone predicate holds.
///
/// `pred` must be true on one side of a single switching point inside `[lo, hi]`
/// and false on the other. Returns the endpoint of the final bracket on the
/// side where `pred` holds, so the returned point always satisfies it.
pub fn locate_switch<F: Fn(f64) -> bool>(pred: F, lo: f64, hi: f64) -> Result<f64> {
    let (p_lo, p_hi) = (pred(lo), pred(hi));
    if p_lo == p_hi {
        return Err(Error::NotBracketed(format!(
            "predicate has the same value ({p_lo}) at {lo} and {hi}"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if pred(m) == p_lo {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(if p_lo { a } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fig2(case: Case) -> ChiProfile {
        ChiProfile::logistic(&Parameters::benchmark(case, 1.5)).unwrap()
    }

    #[test]
    fn logistic_midpoint_and_tails() {
        let chi = fig2(Case::Decreasing);
        assert_relative_eq!(chi.eval(0.0), 0.625, epsilon = 1e-15);
        assert!((chi.eval(40.0) - 0.25).abs() < 1e-12);
        assert!((chi.eval(-40.0) - 1.0).abs() < 1e-12);
        let chi2 = fig2(Case::Increasing);
        assert!((chi2.eval(40.0) - 1.0).abs() < 1e-12);
        assert!((chi2.eval(-40.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn logistic_matches_rational_form() {
        let chi = fig2(Case::Decreasing);
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let e = (-2.0_f64 * x).exp();
            let direct = (1.0 * e + 0.25) / (1.0 + e);
            assert_relative_eq!(chi.eval(x), direct, max_relative = 1e-14);
        }
        let chi2 = fig2(Case::Increasing);
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let e = (-2.0_f64 * x).exp();
            let direct = (0.25 * e + 1.0) / (1.0 + e);
            assert_relative_eq!(chi2.eval(x), direct, max_relative = 1e-14);
        }
    }

    #[test]
    fn derivative_examples() {
        let chi = fig2(Case::Decreasing);
        assert_relative_eq!(chi.prime(0.0).unwrap(), -0.375, epsilon = 1e-15);
        assert!(chi.prime(40.0).unwrap().abs() < 1e-12);
        let chi2 = fig2(Case::Increasing);
        for k in -50..=50 {
            assert!(chi2.prime(k as f64 * 0.3).unwrap() >= 0.0);
        }
    }

    #[test]
    fn step_profile() {
        let p = Parameters::benchmark(Case::Increasing, 1.0);
        let chi = ChiProfile::step(&p).unwrap();
        assert_eq!(chi.eval(-1.0), 0.25);
        assert_eq!(chi.eval(0.0), 0.25);
        assert_eq!(chi.eval(1.0), 1.0);
        assert!(matches!(chi.prime(0.0), Err(Error::NotDifferentiable { .. })));
        assert_eq!(chi.prime(2.0).unwrap(), 0.0);
        assert!(!chi.is_smooth());
        let chi1 = ChiProfile::step(&Parameters::benchmark(Case::Decreasing, 1.0)).unwrap();
        assert_eq!(chi1.eval(-1.0), 1.0);
        assert_eq!(chi1.eval(1.0), 0.25);
    }

    #[test]
    fn tabulated_profile() {
        let p = Parameters::benchmark(Case::Decreasing, 1.0);
        assert!(matches!(
            ChiProfile::tabulated(&p, vec![], vec![]),
            Err(Error::InvalidProfile(_))
        ));
        let chi = ChiProfile::tabulated(&p, vec![-1.0, 0.0, 1.0], vec![1.0, 0.5, 0.25]).unwrap();
        assert!(chi.warning().is_none());
        assert_eq!(chi.eval(-5.0), 1.0);
        assert_eq!(chi.eval(5.0), 0.25);
        assert_relative_eq!(chi.eval(-0.5), 0.75);
        assert_relative_eq!(chi.eval(0.5), 0.375);
        assert_relative_eq!(chi.prime(0.5).unwrap(), -0.25);
        assert!(chi.tail_rate().is_none());

        let short = ChiProfile::tabulated(&p, vec![0.0, 1.0], vec![0.9, 0.3]).unwrap();
        assert!(short.warning().is_some());

        let bad = ChiProfile::tabulated(&p, vec![0.0, 1.0], vec![0.3, 0.9]);
        assert!(matches!(bad, Err(Error::InvalidProfile(_))));
        let unsorted = ChiProfile::tabulated(&p, vec![1.0, 0.0], vec![0.9, 0.3]);
        assert!(unsorted.is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(Parameters::new(1.0, 0.25, 1.0, 1.5, Case::Decreasing, 2.0).is_ok());
        assert!(Parameters::new(0.0, 0.25, 1.0, 1.5, Case::Decreasing, 2.0).is_err());
        assert!(Parameters::new(1.0, 1.0, 0.25, 1.5, Case::Decreasing, 2.0).is_err());
        assert!(Parameters::new(1.0, 0.5, 0.5, 1.5, Case::Decreasing, 2.0).is_err());
        assert!(Parameters::new(1.0, 0.25, 1.0, -1.0, Case::Decreasing, 2.0).is_err());
        assert!(Parameters::new(1.0, 0.25, 1.0, 1.0, Case::Decreasing, 0.0).is_err());
        let h = Parameters::homogeneous(4.0, 1.0, 0.0).unwrap();
        assert!(h.is_degenerate());
        assert!(matches!(
            h.require_nondegenerate("test"),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn locate_switch_returns_satisfying_side() {
        let x = locate_switch(|x| x * x < 2.0, 0.0, 3.0).unwrap();
        assert!(x * x < 2.0);
        assert_relative_eq!(x, 2.0_f64.sqrt(), epsilon = 1e-14);
        let y = locate_switch(|x| x > 1.5, 0.0, 3.0).unwrap();
        assert!(y > 1.5 && y - 1.5 < 1e-14);
        assert!(locate_switch(|x| x > 5.0, 0.0, 3.0).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_case_direction(
            a in -30.0f64..30.0, b in -30.0f64..30.0,
            lam in 0.2f64..5.0, dm in 0.05f64..1.0, ratio in 1.01f64..20.0,
            increasing in any::<bool>(),
        ) {
            let case = if increasing { Case::Increasing } else { Case::Decreasing };
            let p = Parameters::new(1.0, dm, dm * ratio, 1.0, case, lam).unwrap();
            let chi = ChiProfile::logistic(&p).unwrap();
            let (x1, x2) = if a < b { (a, b) } else { (b, a) };
            prop_assert!((chi.eval(x2) - chi.eval(x1)) * case.sign() >= 0.0);
            let v = chi.eval(a);
            prop_assert!(v >= p.d_minus && v <= p.d_plus);
        }

        #[test]
        fn logistic_tail_bound(
            x in 0.0f64..40.0, lam in 0.2f64..5.0, dm in 0.05f64..1.0, ratio in 1.01f64..20.0,
            increasing in any::<bool>(),
        ) {
            let case = if increasing { Case::Increasing } else { Case::Decreasing };
            let p = Parameters::new(1.0, dm, dm * ratio, 1.0, case, lam).unwrap();
            let chi = ChiProfile::logistic(&p).unwrap();
            let bound = (p.d_plus - p.d_minus) * (-lam * x).exp();
            let (right_gap, left_gap) = match case {
                Case::Decreasing => (chi.gap_low(x), chi.gap_high(-x)),
                Case::Increasing => (chi.gap_high(x), chi.gap_low(-x)),
            };
            prop_assert!(right_gap <= bound * (1.0 + 1e-12));
            prop_assert!(left_gap <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn derivative_matches_finite_difference(
            s in -8.0f64..8.0, lam in 0.2f64..5.0, dm in 0.05f64..1.0, ratio in 1.5f64..20.0,
            increasing in any::<bool>(),
        ) {
            let case = if increasing { Case::Increasing } else { Case::Decreasing };
            let p = Parameters::new(1.0, dm, dm * ratio, 1.0, case, lam).unwrap();
            let chi = ChiProfile::logistic(&p).unwrap();
            let x = s / lam;
            let h = 1e-5;
            let fd = (chi.eval(x + h) - chi.eval(x - h)) / (2.0 * h);
            let exact = chi.prime(x).unwrap();
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "fd {} exact {}", fd, exact);
        }
    }
}
