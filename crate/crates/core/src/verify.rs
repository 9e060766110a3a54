//! Piecewise-analytic comparison functions and pointwise sign checks of
//! N(w) = w_t − χ(x − c_het t) w_xx − α w (1 − w).

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{locate_switch, Case, ChiProfile, Parameters};
use crate::speeds;
use crate::waves::PhiSolution;

/// Default residual tolerance for analytic evaluators.
pub const TOLERANCE: f64 = 1e-12;
/// Tolerance for the builder that evaluates a tabulated φ.
pub const TABULATED_TOLERANCE: f64 = 1e-10;
/// Relative continuity tolerance across interfaces.
pub const CONTINUITY_TOLERANCE: f64 = 1e-12;
/// Relative tolerance on the derivative jump of C¹ junctions.
const SMOOTH_JUMP_TOLERANCE: f64 = 1e-10;
/// Sample points closer than this to an interface are skipped.
const INTERFACE_EXCLUSION: f64 = 1e-9;
/// Search bracket for threshold inversions of χ.
const SEARCH: (f64, f64) = (-1e3, 1e3);

/// Value and first derivatives of a piece at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub value: f64,
    pub dt: f64,
    pub dx: f64,
    pub dxx: f64,
}

impl Jet {
    pub const ZERO: Jet = Jet { value: 0.0, dt: 0.0, dx: 0.0, dxx: 0.0 };

    pub fn constant(value: f64) -> Jet {
        Jet { value, ..Jet::ZERO }
    }

    /// Jet of f(x − speed·t + shift) from `[f, f′, f″]`.
    fn travelling(f: [f64; 3], speed: f64) -> Jet {
        Jet { value: f[0], dt: -speed * f[1], dx: f[1], dxx: f[2] }
    }

    fn scale(self, s: f64) -> Jet {
        Jet { value: s * self.value, dt: s * self.dt, dx: s * self.dx, dxx: s * self.dxx }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Super,
    Sub,
}

/// Operator whose sign is checked.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Operator {
    /// N(w) = w_t − χ w_xx − α w (1 − w).
    Nonlinear,
    /// M(w) = w_t − χ w_xx − rate·w.
    Linear { rate: f64 },
}

impl Operator {
    pub fn apply(self, jet: Jet, chi: f64, alpha: f64) -> f64 {
        let diffusion = jet.dt - chi * jet.dxx;
        match self {
            Operator::Nonlinear => diffusion - alpha * jet.value * (1.0 - jet.value),
            Operator::Linear { rate } => diffusion - rate * jet.value,
        }
    }
}

/// Expected sign of w_x(s⁺) − w_x(s⁻) at an interface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpRule {
    /// Non-positive jump (allowed for super-solutions).
    Decrease,
    /// Non-negative jump (allowed for sub-solutions).
    Increase,
    /// C¹ junction.
    Smooth,
}

/// Moving interface x = offset + speed·t.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub offset: f64,
    pub speed: f64,
    pub rule: JumpRule,
    pub label: String,
}

impl Interface {
    fn new(offset: f64, speed: f64, rule: JumpRule, label: &str) -> Self {
        Interface { offset, speed, rule, label: label.to_string() }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.offset + self.speed * t
    }
}

pub type Piece = Arc<dyn Fn(f64, f64) -> Jet + Send + Sync>;
pub type Constants = BTreeMap<String, f64>;
type Build = Arc<dyn Fn(&Constants) -> Result<Layout> + Send + Sync>;

/// Interfaces ordered left to right for t ≥ 0, with one more piece than interfaces.
#[derive(Clone)]
pub struct Layout {
    pub interfaces: Vec<Interface>,
    pub pieces: Vec<Piece>,
    /// Quantities computed from the constants (roots, normalizers).
    pub derived: BTreeMap<String, f64>,
}

impl Layout {
    fn new(interfaces: Vec<Interface>, pieces: Vec<Piece>) -> Self {
        debug_assert_eq!(pieces.len(), interfaces.len() + 1);
        Layout { interfaces, pieces, derived: BTreeMap::new() }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.derived.insert(key.to_string(), value);
        self
    }
}

/// A sub- or super-solution candidate assembled from analytic pieces.
#[derive(Clone)]
pub struct ComparisonFunction {
    pub name: String,
    pub kind: Kind,
    pub operator: Operator,
    /// Inputs of the construction; `perturbed` rebuilds from these.
    pub constants: Constants,
    /// Admissibility thresholds computed by the constructor.
    pub thresholds: BTreeMap<String, f64>,
    /// Keys of `constants` that are decay or oscillation exponents.
    pub exponents: Vec<String>,
    pub tolerance: f64,
    /// Overall amplitude applied to every piece.
    pub scale: f64,
    build: Build,
    layout: Layout,
}

impl fmt::Debug for ComparisonFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComparisonFunction")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("operator", &self.operator)
            .field("constants", &self.constants)
            .field("thresholds", &self.thresholds)
            .field("scale", &self.scale)
            .field("interfaces", &self.layout.interfaces)
            .finish()
    }
}

impl ComparisonFunction {
    #[allow(clippy::too_many_arguments)]
    fn new(
        name: &str,
        kind: Kind,
        operator: Operator,
        constants: Constants,
        thresholds: BTreeMap<String, f64>,
        exponents: &[&str],
        tolerance: f64,
        build: Build,
    ) -> Result<Self> {
        let layout = build(&constants)?;
        Ok(ComparisonFunction {
            name: name.to_string(),
            kind,
            operator,
            constants,
            thresholds,
            exponents: exponents.iter().map(|s| s.to_string()).collect(),
            tolerance,
            scale: 1.0,
            build,
            layout,
        })
    }

    pub fn interfaces(&self) -> &[Interface] {
        &self.layout.interfaces
    }

    pub fn derived(&self) -> &BTreeMap<String, f64> {
        &self.layout.derived
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }

    /// Rebuild with `constants[key]` replaced. No admissibility re-check.
    pub fn with_constant(&self, key: &str, value: f64) -> Result<Self> {
        if !self.constants.contains_key(key) {
            return Err(Error::Domain(format!("{} has no constant `{key}`", self.name)));
        }
        let mut out = self.clone();
        out.constants.insert(key.to_string(), value);
        out.layout = (out.build)(&out.constants)?;
        Ok(out)
    }

    /// Rebuild with `constants[key]` multiplied by `factor`.
    pub fn perturbed(&self, key: &str, factor: f64) -> Result<Self> {
        let v = self
            .constant(key)
            .ok_or_else(|| Error::Domain(format!("{} has no constant `{key}`", self.name)))?;
        self.with_constant(key, v * factor)
    }

    /// δ·w checked against `operator`.
    pub fn scaled(&self, delta: f64, operator: Operator) -> Self {
        let mut out = self.clone();
        out.scale *= delta;
        out.operator = operator;
        out.name = format!("{} (scaled)", self.name);
        out
    }

    fn piece_index(&self, t: f64, x: f64) -> usize {
        self.layout.interfaces.iter().filter(|i| i.at(t) < x).count()
    }

    pub fn eval(&self, t: f64, x: f64) -> Jet {
        let k = self.piece_index(t, x);
        (self.layout.pieces[k])(t, x).scale(self.scale)
    }

    /// Jets of the pieces left and right of interface `i`, evaluated on it.
    pub fn one_sided(&self, t: f64, i: usize) -> (Jet, Jet) {
        let s = self.layout.interfaces[i].at(t);
        (
            (self.layout.pieces[i])(t, s).scale(self.scale),
            (self.layout.pieces[i + 1])(t, s).scale(self.scale),
        )
    }

    /// Largest value over `n` points of [s_first − margin, s_last + margin] at time `t`.
    pub fn max_value(&self, t: f64, margin: f64, n: usize) -> f64 {
        let (lo, hi) = self.span(t, margin);
        (0..n)
            .map(|k| self.eval(t, lo + (hi - lo) * k as f64 / (n - 1).max(1) as f64).value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn span(&self, t: f64, margin: f64) -> (f64, f64) {
        let pos = self.layout.interfaces.iter().map(|i| i.at(t));
        let lo = pos.clone().fold(f64::INFINITY, f64::min);
        let hi = pos.fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() {
            (lo - margin, hi + margin)
        } else {
            (-margin, margin)
        }
    }
}

/// Sampling plan for `check`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    pub t_range: (f64, f64),
    /// Distance sampled beyond the outermost interfaces.
    pub x_margin: f64,
    pub n_times: usize,
    pub n_positions: usize,
    /// Half of the positions fall within this distance of an interface.
    pub near_width: f64,
    /// Overrides the function's own tolerance.
    pub tolerance: Option<f64>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            t_range: (0.0, 50.0),
            x_margin: 20.0,
            n_times: 200,
            n_positions: 2000,
            near_width: 5.0,
            tolerance: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Nothing was sampled; the pass would be vacuous.
    Insufficient,
}

/// Jump statistics of one interface over all sampled times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpCheck {
    pub label: String,
    pub rule: JumpRule,
    pub checks: usize,
    /// Most adverse jump w_x(s⁺) − w_x(s⁻) seen.
    pub worst_jump: f64,
    pub worst_t: f64,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub name: String,
    pub kind: Kind,
    pub operator: Operator,
    pub tolerance: f64,
    /// Most adverse residual: the minimum for super-solutions, the maximum for sub-solutions.
    pub worst_residual_value: f64,
    pub worst_point: (f64, f64),
    pub sample_count: usize,
    pub residual_ok: bool,
    pub jump_checks: Vec<JumpCheck>,
    pub max_continuity_gap: f64,
    pub continuity_ok: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
struct Partial {
    worst: f64,
    point: (f64, f64),
    count: usize,
    jumps: Vec<(f64, f64, usize)>,
    gap: f64,
}

/// Sample the operator sign on a tensor grid and check interface jumps.
pub fn check(w: &ComparisonFunction, p: &Parameters, chi: &ChiProfile, cfg: &CheckConfig) -> SignReport {
    let tol = cfg.tolerance.unwrap_or(w.tolerance);
    let sign = match w.kind {
        Kind::Super => -1.0,
        Kind::Sub => 1.0,
    };
    let interfaces = &w.layout.interfaces;
    let n_if = interfaces.len();
    let times: Vec<f64> = if cfg.n_times == 0 {
        Vec::new()
    } else if cfg.n_times == 1 {
        vec![cfg.t_range.0]
    } else {
        let (t0, t1) = cfg.t_range;
        (0..cfg.n_times)
            .map(|k| t0 + (t1 - t0) * k as f64 / (cfg.n_times - 1) as f64)
            .collect()
    };
    // Adverse jump direction: larger is worse for Decrease, smaller for Increase.
    let adverse = |rule: JumpRule, jump: f64, scale: f64| match rule {
        JumpRule::Decrease => jump,
        JumpRule::Increase => -jump,
        JumpRule::Smooth => jump.abs() / scale.max(1.0),
    };
    let init = |_| Partial {
        worst: f64::NEG_INFINITY,
        point: (f64::NAN, f64::NAN),
        count: 0,
        jumps: vec![(f64::NEG_INFINITY, f64::NAN, 0); n_if],
        gap: 0.0,
    };
    let parts: Vec<Partial> = times
        .par_iter()
        .map(|&t| {
            let mut part = init(());
            let pos: Vec<f64> = interfaces.iter().map(|i| i.at(t)).collect();
            let (lo, hi) = w.span(t, cfg.x_margin);
            let n_far = cfg.n_positions / 2;
            let n_near = (cfg.n_positions - n_far).checked_div(n_if).unwrap_or(0);
            let far = (0..n_far).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / n_far as f64);
            // Quadratic clustering toward each interface, both sides.
            let half = (n_near / 2).max(1);
            let near = pos.iter().flat_map(|&s| {
                (0..n_near).map(move |k| {
                    let r = ((k / 2) as f64 + 0.5) / half as f64;
                    let d = cfg.near_width * r * r;
                    if k % 2 == 0 { s - d } else { s + d }
                })
            });
            for x in far.chain(near) {
                if pos.iter().any(|&s| (x - s).abs() < INTERFACE_EXCLUSION) {
                    continue;
                }
                let jet = w.eval(t, x);
                let r = sign * w.operator.apply(jet, chi.eval(x - p.c_het * t), p.alpha);
                part.count += 1;
                if r > part.worst || r.is_nan() {
                    part.worst = if r.is_nan() { f64::INFINITY } else { r };
                    part.point = (t, x);
                }
            }
            for i in 0..n_if {
                // The middle piece of coincident interfaces is empty.
                let coincident = (i > 0 && (pos[i] - pos[i - 1]).abs() < 1e-12)
                    || (i + 1 < n_if && (pos[i + 1] - pos[i]).abs() < 1e-12);
                if coincident {
                    continue;
                }
                let (l, r) = w.one_sided(t, i);
                let gap = (l.value - r.value).abs() / l.value.abs().max(r.value.abs()).max(1.0);
                part.gap = part.gap.max(if gap.is_nan() { f64::INFINITY } else { gap });
                let a = adverse(interfaces[i].rule, r.dx - l.dx, l.dx.abs().max(r.dx.abs()));
                let slot = &mut part.jumps[i];
                slot.2 += 1;
                if a > slot.0 || a.is_nan() {
                    slot.0 = if a.is_nan() { f64::INFINITY } else { a };
                    slot.1 = t;
                }
            }
            part
        })
        .collect();
    let mut total = init(());
    for part in parts {
        total.count += part.count;
        if part.worst > total.worst {
            total.worst = part.worst;
            total.point = part.point;
        }
        total.gap = total.gap.max(part.gap);
        for (acc, j) in total.jumps.iter_mut().zip(&part.jumps) {
            acc.2 += j.2;
            if j.0 > acc.0 {
                acc.0 = j.0;
                acc.1 = j.1;
            }
        }
    }
    let jump_checks: Vec<JumpCheck> = interfaces
        .iter()
        .zip(&total.jumps)
        .map(|(i, &(a, t, n))| {
            let limit = match i.rule {
                JumpRule::Smooth => SMOOTH_JUMP_TOLERANCE,
                _ => tol,
            };
            let worst_jump = match i.rule {
                JumpRule::Decrease | JumpRule::Smooth => a,
                JumpRule::Increase => -a,
            };
            JumpCheck {
                label: i.label.clone(),
                rule: i.rule,
                checks: n,
                worst_jump: if n == 0 { 0.0 } else { worst_jump },
                worst_t: t,
                satisfied: n == 0 || a <= limit,
            }
        })
        .collect();
    let residual_ok = total.count == 0 || total.worst <= tol;
    let continuity_ok = total.gap <= CONTINUITY_TOLERANCE;
    let verdict = if total.count == 0 {
        Verdict::Insufficient
    } else if residual_ok && continuity_ok && jump_checks.iter().all(|j| j.satisfied) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    SignReport {
        name: w.name.clone(),
        kind: w.kind,
        operator: w.operator,
        tolerance: tol,
        worst_residual_value: if total.count == 0 { 0.0 } else { sign * total.worst },
        worst_point: total.point,
        sample_count: total.count,
        residual_ok,
        jump_checks,
        max_continuity_gap: total.gap,
        continuity_ok,
        verdict,
    }
}

// ---------------------------------------------------------------------------
// Piece helpers

/// amp·e^{−m t}·e^{−k (x − speed·t + shift)}.
fn exponential(amp: f64, k: f64, speed: f64, shift: f64, m: f64) -> Piece {
    Arc::new(move |t, x| {
        let v = amp * (-m * t - k * (x - speed * t + shift)).exp();
        Jet { value: v, dt: (k * speed - m) * v, dx: -k * v, dxx: k * k * v }
    })
}

fn constant(v: f64) -> Piece {
    Arc::new(move |_, _| Jet::constant(v))
}

/// e^{−a z} cos(b z) with its first two derivatives.
fn damped_cos(a: f64, b: f64, z: f64) -> [f64; 3] {
    let e = (-a * z).exp();
    let (s, c) = (b * z).sin_cos();
    [
        e * c,
        e * (-a * c - b * s),
        e * ((a * a - b * b) * c + 2.0 * a * b * s),
    ]
}

/// Inflection point of e^{−a z} cos(b z) inside (−π/(2b), π/(2b)).
pub fn inflection(a: f64, b: f64) -> f64 {
    -((a * a - b * b) / (2.0 * a * b)).atan() / b
}

fn constants(pairs: &[(&str, f64)]) -> Constants {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn get(c: &Constants, key: &str) -> f64 {
    c[key]
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Precondition(msg()))
    }
}

fn require_case(p: &Parameters, case: Case, who: &str) -> Result<()> {
    if p.case != case {
        return Err(Error::Regime(format!("{who} needs {case:?} χ")));
    }
    Ok(())
}

fn require_smooth(chi: &ChiProfile) -> Result<()> {
    if !chi.is_smooth() {
        return Err(Error::Precondition(
            "N is evaluated pointwise only for differentiable χ".into(),
        ));
    }
    Ok(())
}

/// Largest value of a sampled function on [a, b].
fn sampled_max(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    (0..=n)
        .map(|k| f(a + (b - a) * k as f64 / n as f64))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NotBracketed(format!(
            "f({lo}) = {f_lo:e} and f({hi}) = {f_hi:e} share a sign"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// Builders

/// min{1, C e^{−λ (x − c_+ t)}} with λ = c_+/(2 d_+).
pub fn general_super(p: &Parameters, amplitude: f64) -> Result<ComparisonFunction> {
    require(amplitude > 0.0, || format!("amplitude C = {amplitude} must be positive"))?;
    let (_, c_plus) = speeds::linear_speeds(p);
    let build: Build = Arc::new(|c: &Constants| {
        let (lam, s, amp) = (get(c, "lambda"), get(c, "speed"), get(c, "C"));
        let edge = amp.ln() / lam;
        Ok(Layout::new(
            vec![Interface::new(edge, s, JumpRule::Decrease, "cap")],
            vec![constant(1.0), exponential(amp, lam, s, 0.0, 0.0)],
        ))
    });
    ComparisonFunction::new(
        "general_super",
        Kind::Super,
        Operator::Nonlinear,
        constants(&[("lambda", c_plus / (2.0 * p.d_plus)), ("speed", c_plus), ("C", amplitude)]),
        BTreeMap::new(),
        &["lambda"],
        TOLERANCE,
        build,
    )
}

/// Compactly supported sub-solution travelling at c < c_minus, glued from
/// damped cosines in the d_plus and d_minus tails.
pub fn general_sub(p: &Parameters, c: f64, delta: f64, eps: f64) -> Result<ComparisonFunction> {
    let (c_minus, _) = speeds::linear_speeds(p);
    require(c > 0.0 && c < c_minus, || format!("speed {c} must lie in (0, c_minus = {c_minus})"))?;
    let delta_0 = p.alpha - c * c / (4.0 * p.d_minus);
    require(delta > 0.0 && delta < delta_0, || {
        format!("δ = {delta} must lie in (0, α − c²/(4 d_minus) = {delta_0})")
    })?;
    let beta = (4.0 * p.d_minus * (p.alpha - delta) - c * c).sqrt() / (2.0 * p.d_minus);
    let omega = (4.0 * p.d_plus * (p.alpha - delta) - c * c).sqrt() / (2.0 * p.d_plus);
    let build: Build = Arc::new(|k: &Constants| {
        let (c, eps) = (get(k, "c"), get(k, "eps"));
        let (lam, beta) = (get(k, "lambda"), get(k, "beta"));
        let (gam, omega) = (get(k, "gamma"), get(k, "omega"));
        let zm = inflection(lam, beta);
        let zp = inflection(gam, omega);
        let rho = damped_cos(lam, beta, zm)[0] / damped_cos(gam, omega, zp)[0];
        let left = -FRAC_PI_2 / omega - zp;
        let right = FRAC_PI_2 / beta - zm;
        let plus: Piece = Arc::new(move |t, x| {
            let f = damped_cos(gam, omega, x - c * t + zp);
            Jet::travelling(f, c).scale(eps * rho)
        });
        let minus: Piece = Arc::new(move |t, x| {
            let f = damped_cos(lam, beta, x - c * t + zm);
            Jet::travelling(f, c).scale(eps)
        });
        Ok(Layout::new(
            vec![
                Interface::new(left, c, JumpRule::Increase, "left edge"),
                Interface::new(0.0, c, JumpRule::Smooth, "junction"),
                Interface::new(right, c, JumpRule::Increase, "right edge"),
            ],
            vec![constant(0.0), plus, minus, constant(0.0)],
        )
        .with("z_star_minus", zm)
        .with("z_star_plus", zp)
        .with("rho", rho))
    });
    let k = constants(&[
        ("c", c),
        ("delta", delta),
        ("eps", 1.0),
        ("lambda", c / (2.0 * p.d_minus)),
        ("beta", beta),
        ("gamma", c / (2.0 * p.d_plus)),
        ("omega", omega),
    ]);
    // Unit-amplitude profile fixes ε₀ = η / max.
    let unit = build(&k)?;
    let (a, b) = (unit.interfaces[0].offset, unit.interfaces[2].offset);
    let peak = sampled_max(|z| unit.pieces[unit.piece_index_at(z)](0.0, z).value, a, b, 4000);
    let eta = delta / p.alpha;
    let eps_0 = eta / peak;
    require(eps > 0.0 && eps < eps_0, || {
        format!("ε = {eps} must lie in (0, ε₀ = {eps_0}) so that the bump stays below η = {eta}")
    })?;
    let mut k = k;
    k.insert("eps".into(), eps);
    let thresholds = constants(&[("delta_0", delta_0), ("eta", eta), ("eps_0", eps_0)]);
    ComparisonFunction::new(
        "general_sub",
        Kind::Sub,
        Operator::Nonlinear,
        k,
        thresholds,
        &["lambda", "beta", "gamma", "omega"],
        TOLERANCE,
        build,
    )
}

impl Layout {
    fn piece_index_at(&self, x: f64) -> usize {
        self.interfaces.iter().filter(|i| i.offset < x).count()
    }
}

/// min{1, e^{−λ (x − s t − τ)}} sitting in the tail where χ ≤ χ(τ).
fn capped_exponential(name: &str, lam: f64, speed: f64, tau: f64, thresholds: BTreeMap<String, f64>, extra: &[(&str, f64)]) -> Result<ComparisonFunction> {
    let build: Build = Arc::new(|k: &Constants| {
        let (lam, s, tau) = (get(k, "lambda"), get(k, "speed"), get(k, "tau"));
        Ok(Layout::new(
            vec![Interface::new(tau, s, JumpRule::Decrease, "cap")],
            vec![constant(1.0), exponential(1.0, lam, s, -tau, 0.0)],
        ))
    });
    let mut k = constants(&[("lambda", lam), ("speed", speed), ("tau", tau)]);
    k.extend(constants(extra));
    ComparisonFunction::new(name, Kind::Super, Operator::Nonlinear, k, thresholds, &["lambda"], TOLERANCE, build)
}

/// Case I, c_het < c_minus: super-solution spreading at c_ε = 2√((d_minus + ε) α).
///
/// `tau = None` uses the threshold τ_ε where χ(τ_ε) = d_minus + ε.
pub fn case1_super_slow(p: &Parameters, chi: &ChiProfile, eps: f64, tau: Option<f64>) -> Result<ComparisonFunction> {
    require_case(p, Case::Decreasing, "case1_super_slow")?;
    require_smooth(chi)?;
    let (c_minus, c_plus) = speeds::linear_speeds(p);
    if !(p.c_het < c_minus) {
        return Err(Error::Regime(format!("needs c_het < c_minus = {c_minus}")));
    }
    let c_eps = 2.0 * ((p.d_minus + eps) * p.alpha).sqrt();
    require(eps > 0.0 && c_eps < c_plus, || {
        format!("ε = {eps} must be positive with c_ε = {c_eps} < c_plus = {c_plus}")
    })?;
    let tau_eps = locate_switch(|x| chi.gap_low(x) <= eps, SEARCH.0, SEARCH.1)?;
    let tau = tau.unwrap_or(tau_eps);
    require(tau >= tau_eps, || format!("τ = {tau} is below τ_ε = {tau_eps}"))?;
    let lam = c_eps / (2.0 * chi.eval(tau));
    capped_exponential(
        "case1_super_slow",
        lam,
        c_eps,
        tau,
        constants(&[("tau_eps", tau_eps), ("c_eps", c_eps)]),
        &[("eps", eps)],
    )
}

/// Case I, c_minus < c_het ≤ c_plus: super-solution locked to the shift speed.
///
/// The exponent is c_het/(2χ(τ)). `tau = None` uses τ₀ where χ(τ₀) = c_het²/(4α).
pub fn case1_super_locked(p: &Parameters, chi: &ChiProfile, tau: Option<f64>) -> Result<ComparisonFunction> {
    require_case(p, Case::Decreasing, "case1_super_locked")?;
    require_smooth(chi)?;
    let (c_minus, c_plus) = speeds::linear_speeds(p);
    if p.c_het <= c_minus * (1.0 + 1e-12) && p.c_het >= c_minus * (1.0 - 1e-12) {
        return Err(Error::Regime(format!(
            "marginal case c_het = c_minus = {c_minus}: needs χ(τ) ≤ d_minus, which holds only as τ → ∞"
        )));
    }
    if !(p.c_het > c_minus && p.c_het <= c_plus) {
        return Err(Error::Regime(format!("needs c_minus < c_het ≤ c_plus ({c_minus}, {c_plus})")));
    }
    let room = p.c_het * p.c_het / (4.0 * p.alpha) - p.d_minus;
    let pred = |x: f64| chi.gap_low(x) <= room;
    let tau_0 = if pred(SEARCH.0) { SEARCH.0 } else { locate_switch(pred, SEARCH.0, SEARCH.1)? };
    let tau = tau.unwrap_or(tau_0);
    require(tau >= tau_0, || format!("τ = {tau} is below τ₀ = {tau_0}"))?;
    let lam = p.c_het / (2.0 * chi.eval(tau));
    capped_exponential("case1_super_locked", lam, p.c_het, tau, constants(&[("tau_0", tau_0)]), &[])
}

/// Smallest roots z⁻, z⁺ > 0 of e^{∓k(π/(2β) + z)} sin(β z) = ε.
///
/// For small ε, z⁻ ≈ ε e^{−kπ/(2β)}/β and z⁺ ≈ ε e^{+kπ/(2β)}/β.
pub fn bump_roots(k: f64, beta: f64, eps: f64) -> Result<(f64, f64)> {
    let q = FRAC_PI_2 / beta;
    let z_minus = bisect(|z| (k * (q + z)).exp() * (beta * z).sin() - eps, 0.0, q)?;
    // e^{−k(q+z)} sin(βz) peaks where tan(βz) = β/k.
    let peak = (beta / k).atan() / beta;
    let z_plus = bisect(|z| (-k * (q + z)).exp() * (beta * z).sin() - eps, 0.0, peak)?;
    Ok((z_minus, z_plus))
}

/// Layout of δ[e^{−kz} cos(βz) + ε] on Ω = [−π/(2β) − z⁻, π/(2β) + z⁺], z = x − c t + shift.
fn bump_build(shift_sign: f64) -> Build {
    Arc::new(move |k: &Constants| {
        let (c, eps, tau, alpha) = (get(k, "c"), get(k, "eps"), get(k, "tau"), get(k, "alpha"));
        let (kk, beta) = (get(k, "k"), get(k, "beta"));
        let (zm, zp) = bump_roots(kk, beta, eps)?;
        let q = FRAC_PI_2 / beta;
        let (lo, hi) = (-q - zm, q + zp);
        let peak = sampled_max(|z| damped_cos(kk, beta, z)[0] + eps, lo, hi, 4000);
        let delta = 0.9 * (eps / alpha) / peak;
        let shift = shift_sign * tau;
        let bump: Piece = Arc::new(move |t, x| {
            let mut f = damped_cos(kk, beta, x - c * t + shift);
            f[0] += eps;
            Jet::travelling(f, c).scale(delta)
        });
        let kappa = (kk + beta).powi(2) * (kk * (q + zm)).exp();
        Ok(Layout::new(
            vec![
                Interface::new(lo - shift, c, JumpRule::Increase, "left edge"),
                Interface::new(hi - shift, c, JumpRule::Increase, "right edge"),
            ],
            vec![constant(0.0), bump, constant(0.0)],
        )
        .with("z_minus", zm)
        .with("z_plus", zp)
        .with("delta_eps", delta)
        .with("K_eps", kappa))
    })
}

struct BumpSetup {
    k: f64,
    beta: f64,
    z_minus: f64,
    z_plus: f64,
    kappa: f64,
}

fn bump_setup(p: &Parameters, c: f64, eps: f64) -> Result<BumpSetup> {
    let limit = 2.0 * (p.d_plus * (p.alpha - 2.0 * eps)).sqrt();
    require(eps > 0.0 && 2.0 * eps < p.alpha && c < limit, || {
        format!("need 0 < 2ε < α and c < 2√(d_plus(α − 2ε)) = {limit} (c = {c}, ε = {eps})")
    })?;
    let k = c / (2.0 * p.d_plus);
    let beta = (4.0 * p.d_plus * (p.alpha - eps) - c * c).sqrt() / (2.0 * p.d_plus);
    let (z_minus, z_plus) = bump_roots(k, beta, eps)?;
    let kappa = (k + beta).powi(2) * (k * (FRAC_PI_2 / beta + z_minus)).exp();
    require((kappa + 1.0) * eps - p.alpha <= 0.0, || {
        format!("(K_ε + 1) ε − α = {} > 0 with K_ε = {kappa}; decrease ε", (kappa + 1.0) * eps - p.alpha)
    })?;
    Ok(BumpSetup { k, beta, z_minus, z_plus, kappa })
}

fn bump_function(name: &str, p: &Parameters, c: f64, eps: f64, tau: f64, shift_sign: f64, thresholds: BTreeMap<String, f64>, s: &BumpSetup) -> Result<ComparisonFunction> {
    let k = constants(&[
        ("c", c),
        ("eps", eps),
        ("tau", tau),
        ("alpha", p.alpha),
        ("k", s.k),
        ("beta", s.beta),
    ]);
    let mut thresholds = thresholds;
    thresholds.insert("K_eps".into(), s.kappa);
    thresholds.insert("eta_eps".into(), eps / p.alpha);
    ComparisonFunction::new(name, Kind::Sub, Operator::Nonlinear, k, thresholds, &["k", "beta"], TOLERANCE, bump_build(shift_sign))
}

/// Case I cosine bump travelling at 0 < c < min(c_plus, c_het) in the d_plus tail.
///
/// `tau = None` takes τ just above τ_ε = A + π/(2β) + z⁺.
pub fn case1_sub_bump(p: &Parameters, chi: &ChiProfile, c: f64, eps: f64, tau: Option<f64>) -> Result<ComparisonFunction> {
    require_case(p, Case::Decreasing, "case1_sub_bump")?;
    require_smooth(chi)?;
    let (_, c_plus) = speeds::linear_speeds(p);
    require(c > 0.0 && c < c_plus.min(p.c_het), || {
        format!("speed {c} must lie in (0, min(c_plus, c_het) = {})", c_plus.min(p.c_het))
    })?;
    let s = bump_setup(p, c, eps)?;
    let a = -locate_switch(|x| chi.gap_high(x) <= eps * eps, SEARCH.0, SEARCH.1)?;
    let tau_eps = a + FRAC_PI_2 / s.beta + s.z_plus;
    let tau = tau.unwrap_or(tau_eps + 1e-9);
    require(tau > tau_eps, || format!("τ = {tau} must exceed τ_ε = {tau_eps}"))?;
    bump_function("case1_sub_bump", p, c, eps, tau, 1.0, constants(&[("A", a), ("tau_eps", tau_eps)]), &s)
}

/// Case II, c_het < c < c_plus: the cosine bump pushed into the d_plus tail on the right.
pub fn case2_sub_cplus(p: &Parameters, chi: &ChiProfile, c: f64, eps: f64, tau: Option<f64>) -> Result<ComparisonFunction> {
    require_case(p, Case::Increasing, "case2_sub_cplus")?;
    require_smooth(chi)?;
    let (_, c_plus) = speeds::linear_speeds(p);
    require(c > p.c_het && c < c_plus, || {
        format!("speed {c} must lie in (c_het, c_plus) = ({}, {c_plus})", p.c_het)
    })?;
    let s = bump_setup(p, c, eps)?;
    let a = locate_switch(|x| chi.gap_high(x) <= eps * eps, SEARCH.0, SEARCH.1)?;
    let tau_eps = a + FRAC_PI_2 / s.beta + s.z_minus;
    let tau = tau.unwrap_or(tau_eps + 1e-9);
    require(tau > tau_eps, || format!("τ = {tau} must exceed τ_ε = {tau_eps}"))?;
    bump_function("case2_sub_cplus", p, c, eps, tau, -1.0, constants(&[("A", a), ("tau_eps", tau_eps)]), &s)
}

/// Plateau C, exponential at rate λ from x = c t − τ, then rate μ from x = c_het t − τ.
fn three_piece_super(name: &str, k: Constants, thresholds: BTreeMap<String, f64>) -> Result<ComparisonFunction> {
    let build: Build = Arc::new(|k: &Constants| {
        let (c, c_het, tau, amp) = (get(k, "c"), get(k, "c_het"), get(k, "tau"), get(k, "C"));
        let (lam, mu) = (get(k, "lambda"), get(k, "mu"));
        Ok(Layout::new(
            vec![
                Interface::new(-tau, c, JumpRule::Decrease, "plateau edge"),
                Interface::new(-tau, c_het, JumpRule::Decrease, "shift anchor"),
            ],
            vec![
                constant(amp),
                exponential(amp, lam, c, tau, 0.0),
                exponential(amp, mu, c_het, tau, lam * (c_het - c)),
            ],
        ))
    });
    ComparisonFunction::new(name, Kind::Super, Operator::Nonlinear, k, thresholds, &["lambda", "mu"], TOLERANCE, build)
}

/// Case II, c_plus < c_het < c_int: super-solution spreading at any c > c_u*.
///
/// `c = None` takes c_u* + 0.05 (capped below c_het); `tau = None` the threshold τ₀.
pub fn case2_super_anomalous(p: &Parameters, chi: &ChiProfile, c: Option<f64>, tau: Option<f64>, amplitude: f64) -> Result<ComparisonFunction> {
    require_case(p, Case::Increasing, "case2_super_anomalous")?;
    require_smooth(chi)?;
    let (_, c_plus) = speeds::linear_speeds(p);
    let c_int = speeds::c_int(p)?;
    if !(p.c_het > c_plus && p.c_het < c_int) {
        return Err(Error::Regime(format!("needs c_plus < c_het < c_int ({c_plus}, {c_int})")));
    }
    let c_u = speeds::anomalous_speed(p)?;
    let c = c.unwrap_or_else(|| (c_u + 0.05).min(0.5 * (c_u + p.c_het)));
    require(c > c_u && c < p.c_het, || format!("speed {c} must lie in (c_u* = {c_u}, c_het)"))?;
    require(amplitude >= 1.0, || format!("amplitude C = {amplitude} must be ≥ 1"))?;
    let lam = speeds::lambda_of_c(c_u, p)?;
    let mu = p.c_het / (2.0 * p.d_plus);
    // λ²(d_minus − χ(−τ)) + λ(c − c_u*) > 0.
    let room = (c - c_u) / lam;
    let tau_0 = -locate_switch(|x| chi.gap_low(x) < room, SEARCH.0, SEARCH.1)?;
    let tau = tau.unwrap_or(tau_0);
    require(tau >= tau_0, || format!("τ = {tau} is below τ₀ = {tau_0}"))?;
    three_piece_super(
        "case2_super_anomalous",
        constants(&[("c", c), ("c_het", p.c_het), ("tau", tau), ("C", amplitude), ("lambda", lam), ("mu", mu)]),
        constants(&[("tau_0", tau_0), ("c_u_star", c_u)]),
    )
}

/// Case II, c_het ≥ c_int: super-solution spreading at any c ∈ (c_minus, c_het).
///
/// Rates λ = c_minus/(2 d_minus) and μ_- = (c_het + √g(c_minus))/(2 d_plus); the
/// plateau edge moves at c and the rate switch is anchored at x = c_het t − τ.
pub fn case2_super_fast(p: &Parameters, chi: &ChiProfile, c: Option<f64>, tau: Option<f64>) -> Result<ComparisonFunction> {
    require_case(p, Case::Increasing, "case2_super_fast")?;
    require_smooth(chi)?;
    let (c_minus, _) = speeds::linear_speeds(p);
    let c_int = speeds::c_int(p)?;
    if p.c_het < c_int * (1.0 - 1e-12) {
        return Err(Error::Regime(format!("needs c_het ≥ c_int = {c_int}")));
    }
    let c = c.unwrap_or_else(|| (c_minus + 0.05).min(0.5 * (c_minus + p.c_het)));
    require(c > c_minus && c < p.c_het, || format!("speed {c} must lie in (c_minus = {c_minus}, c_het)"))?;
    let g = speeds::g(c_minus, p)?.max(0.0);
    let lam = c_minus / (2.0 * p.d_minus);
    let mu = (p.c_het + g.sqrt()) / (2.0 * p.d_plus);
    // λ(c − c_minus) − λ² (χ(−τ) − d_minus) ≥ 0.
    let room = (c - c_minus) / lam;
    let tau_0 = -locate_switch(|x| chi.gap_low(x) <= room, SEARCH.0, SEARCH.1)?;
    let tau = tau.unwrap_or(tau_0);
    require(tau >= tau_0, || format!("τ = {tau} is below τ₀ = {tau_0}"))?;
    three_piece_super(
        "case2_super_fast",
        constants(&[("c", c), ("c_het", p.c_het), ("tau", tau), ("C", 1.0), ("lambda", lam), ("mu", mu)]),
        constants(&[("tau_0", tau_0), ("g_c_minus", g), ("c_int", c_int)]),
    )
}

/// Shared constants of the pulled sub-solutions.
struct PullSetup {
    lam: f64,
    gamma: f64,
    root: f64,
    x_star: f64,
    tau_star: f64,
    c_u: f64,
}

fn pull_setup(p: &Parameters, chi: &ChiProfile, c: f64, eps: f64) -> Result<PullSetup> {
    require_case(p, Case::Increasing, "pulled sub-solution")?;
    require_smooth(chi)?;
    let (c_minus, c_plus) = speeds::linear_speeds(p);
    let c_int = speeds::c_int(p)?;
    if !(p.c_het >= c_plus && p.c_het < c_int) {
        return Err(Error::Regime(format!("needs c_plus ≤ c_het < c_int ({c_plus}, {c_int})")));
    }
    let c_u = speeds::anomalous_speed(p)?;
    require(c > c_minus && c < c_u, || format!("speed {c} must lie in (c_minus, c_u*) = ({c_minus}, {c_u})"))?;
    require(eps > 0.0 && eps < p.alpha, || format!("ε = {eps} must lie in (0, α)"))?;
    let root = (c * c - 4.0 * p.d_minus * (p.alpha - eps)).sqrt();
    let lam = (c - root) / (2.0 * p.d_minus);
    let gamma = 0.5 * root / p.d_minus;
    let bound = gamma * (root - gamma * p.d_minus) / (lam + gamma).powi(2);
    let x_star = locate_switch(|x| chi.gap_low(x) <= bound, SEARCH.0, SEARCH.1)?;
    let tau_star = -x_star + (2.0 / gamma) * ((lam + gamma) / lam).ln();
    Ok(PullSetup { lam, gamma, root, x_star, tau_star, c_u })
}

/// v = max{0, e^{−λz} − e^{−(λ+γ)z}}, z = x − c t + τ, as a piece.
fn pull_piece(lam: f64, gamma: f64, c: f64, tau: f64) -> Piece {
    let (a, b) = (exponential(1.0, lam, c, tau, 0.0), exponential(1.0, lam + gamma, c, tau, 0.0));
    Arc::new(move |t, x| {
        let (u, v) = (a(t, x), b(t, x));
        Jet { value: u.value - v.value, dt: u.dt - v.dt, dx: u.dx - v.dx, dxx: u.dxx - v.dxx }
    })
}

/// Case II, c_minus < c < c_u*: difference of exponentials, sub-solution of the
/// linear operator M(u) = u_t − χ u_xx − (α − ε) u.
pub fn case2_sub_pull(p: &Parameters, chi: &ChiProfile, c: f64, eps: f64, tau: Option<f64>) -> Result<ComparisonFunction> {
    let s = pull_setup(p, chi, c, eps)?;
    let tau = tau.unwrap_or(s.tau_star + 1e-6);
    require(tau > s.tau_star, || format!("τ = {tau} must exceed τ_* = {}", s.tau_star))?;
    let build: Build = Arc::new(|k: &Constants| {
        let (c, tau, lam, gamma) = (get(k, "c"), get(k, "tau"), get(k, "lambda"), get(k, "gamma"));
        Ok(Layout::new(
            vec![Interface::new(-tau, c, JumpRule::Increase, "support edge")],
            vec![constant(0.0), pull_piece(lam, gamma, c, tau)],
        ))
    });
    ComparisonFunction::new(
        "case2_sub_pull",
        Kind::Sub,
        Operator::Linear { rate: p.alpha - eps },
        constants(&[("c", c), ("eps", eps), ("tau", tau), ("lambda", s.lam), ("gamma", s.gamma)]),
        constants(&[("x_star", s.x_star), ("tau_star", s.tau_star), ("gamma_max", s.root / p.d_minus)]),
        &["lambda", "gamma"],
        TOLERANCE,
        build,
    )
}

/// Case II, c_plus < c_het < c_int: the pulled sub-solution glued at x − c_het t = −τ/2
/// to a multiple of φ, the principal solution of χφ″ + c_het φ′ + (α − λ_⋆ + ε)φ = 0.
///
/// `tau = None` scans for the smallest admissible τ in steps of 0.25.
pub fn case2_sub_full(p: &Parameters, chi: &ChiProfile, c: f64, eps: f64, tau: Option<f64>, phi: &PhiSolution) -> Result<ComparisonFunction> {
    let s = pull_setup(p, chi, c, eps)?;
    let (_, c_plus) = speeds::linear_speeds(p);
    if !(p.c_het > c_plus) {
        return Err(Error::Regime(format!("needs c_het > c_plus = {c_plus}")));
    }
    require((phi.eps - eps).abs() <= 1e-15 * eps.max(1.0), || {
        format!("φ was shot with ε = {}, not {eps}", phi.eps)
    })?;
    let lam_star = speeds::lambda_star(p);
    let floor = p.alpha - p.c_het * p.c_het / (4.0 * p.d_minus);
    require(floor < lam_star - eps, || {
        format!("α − c_het²/(4 d_minus) = {floor} must be below λ_⋆ − ε = {}", lam_star - eps)
    })?;
    let lam_u = speeds::lambda_of_c(s.c_u, p)?;
    let speed_gap = -s.lam * (p.c_het - c) + lam_u * (p.c_het - s.c_u) + 3.0 * eps;
    require(speed_gap < 0.0, || {
        format!("−λ_ε(c)(c_het − c) + λ(c_u*)(c_het − c_u*) + 3ε = {speed_gap} must be negative")
    })?;
    let exponent = phi.asymptotic_exponent;
    require(-s.lam < exponent, || {
        format!("−λ_ε(c) = {} must be below the φ exponent {exponent}", -s.lam)
    })?;
    let lam = s.lam;
    let gamma = s.gamma;
    let b = (lam + gamma) * (p.c_het - c) + lam_star - 2.0 * eps;
    let admissible = |tau: f64| -> bool {
        if !(tau > s.tau_star && -0.5 * tau < phi.x_eps && -0.5 * tau >= phi.x[0]) {
            return false;
        }
        let q = (-0.5 * gamma * tau).exp();
        if b * q >= eps {
            return false;
        }
        match phi.eval(-0.5 * tau) {
            Some((f, df)) if f > 0.0 => {
                let r = df / f;
                let left = -lam * (1.0 - (lam + gamma) / lam * q);
                let right = r * (1.0 - q);
                left < right && right < 0.0
            }
            _ => false,
        }
    };
    let tau_hi = -2.0 * phi.x[0];
    let tau_lo = s.tau_star.max(-2.0 * phi.x_eps).max(0.0);
    let tau_0 = {
        let mut t = tau_lo;
        loop {
            if admissible(t) {
                break t;
            }
            t += 0.25;
            if t > tau_hi {
                return Err(Error::DomainTooSmall(format!(
                    "no admissible τ in [{tau_lo}, {tau_hi}]; shoot φ from further left"
                )));
            }
        }
    };
    let tau = tau.unwrap_or(tau_0);
    require(admissible(tau), || {
        format!("τ = {tau} is not admissible (smallest admissible found: {tau_0})")
    })?;
    let phi_zero = phi.x_eps;
    let phi = Arc::new(phi.clone());
    let chi = chi.clone();
    let (c_het, alpha) = (p.c_het, p.alpha);
    let k_phi = alpha - lam_star + eps;
    let build: Build = Arc::new(move |k: &Constants| {
        let (c, tau, lam, gamma) = (get(k, "c"), get(k, "tau"), get(k, "lambda"), get(k, "gamma"));
        let (phi0, _) = phi
            .eval(-0.5 * tau)
            .ok_or_else(|| Error::DomainTooSmall(format!("φ is not defined at {}", -0.5 * tau)))?;
        let norm = 1.0 / phi0;
        let x_eps = phi.x_eps;
        let (phi, chi) = (phi.clone(), chi.clone());
        let glued: Piece = Arc::new(move |t, x| {
            let s = (c_het - c) * t + 0.5 * tau;
            let (e1, e2) = ((-lam * s).exp(), (-(lam + gamma) * s).exp());
            let amp = norm * (e1 - e2);
            let damp = norm * (c_het - c) * (-lam * e1 + (lam + gamma) * e2);
            // Clamp rounding overshoot at the zero of φ.
            let xi = (x - c_het * t).min(x_eps);
            let (f, df) = phi.eval(xi).unwrap_or((f64::NAN, f64::NAN));
            let d2f = -(c_het * df + k_phi * f) / chi.eval(xi);
            Jet { value: amp * f, dt: damp * f - amp * c_het * df, dx: amp * df, dxx: amp * d2f }
        });
        Ok(Layout::new(
            vec![
                Interface::new(-tau, c, JumpRule::Increase, "support edge"),
                Interface::new(-0.5 * tau, c_het, JumpRule::Increase, "glue"),
                Interface::new(x_eps, c_het, JumpRule::Increase, "φ zero"),
            ],
            vec![constant(0.0), pull_piece(lam, gamma, c, tau), glued, constant(0.0)],
        )
        .with("c_eps_tau", norm)
        .with("phi_at_glue", phi0))
    });
    ComparisonFunction::new(
        "case2_sub_full",
        Kind::Sub,
        Operator::Linear { rate: p.alpha - eps },
        constants(&[("c", c), ("eps", eps), ("tau", tau), ("lambda", lam), ("gamma", gamma)]),
        constants(&[
            ("x_star", s.x_star),
            ("tau_star", s.tau_star),
            ("tau_0", tau_0),
            ("x_eps", phi_zero),
            ("phi_exponent", exponent),
            ("speed_gap", speed_gap),
        ]),
        &["lambda", "gamma"],
        TABULATED_TOLERANCE,
        build,
    )
}

/// δ = 0.9·(ε/α)/max w, so that δ·w stays below the concavity threshold η = ε/α.
pub fn concavity_scale(w: &ComparisonFunction, alpha: f64, eps: f64, cfg: &CheckConfig) -> f64 {
    let (t0, t1) = cfg.t_range;
    let peak = (0..=20)
        .map(|k| w.max_value(t0 + (t1 - t0) * k as f64 / 20.0, cfg.x_margin, 4000))
        .fold(f64::NEG_INFINITY, f64::max);
    0.9 * (eps / alpha) / peak
}

// ---------------------------------------------------------------------------
// Standard suite

/// One builder instance with the data needed to check it.
#[derive(Clone, Debug)]
pub struct SuiteEntry {
    pub function: ComparisonFunction,
    pub params: Parameters,
    pub chi: ChiProfile,
    pub check: CheckConfig,
}

/// Verdict of one mutation: `constants[key] *= factor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutationOutcome {
    pub key: String,
    pub factor: f64,
    pub verdict: Verdict,
    pub worst_residual_value: f64,
}

/// Everything written to the verification report for one builder instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuilderOutcome {
    pub name: String,
    pub c_het: f64,
    pub case: Case,
    pub constants: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, f64>,
    pub derived: BTreeMap<String, f64>,
    pub report: SignReport,
    pub mutations: Vec<MutationOutcome>,
    /// True when at least one mutation changed the verdict away from pass.
    pub mutation_sensitive: bool,
}

/// Check `entry` and each of its exponents scaled by 0.9 and 1.1.
pub fn run_entry(entry: &SuiteEntry, with_mutations: bool) -> BuilderOutcome {
    let w = &entry.function;
    let report = check(w, &entry.params, &entry.chi, &entry.check);
    let mut mutations = Vec::new();
    if with_mutations {
        for key in &w.exponents {
            for factor in [0.9, 1.1] {
                let outcome = match w.perturbed(key, factor) {
                    Ok(m) => {
                        let r = check(&m, &entry.params, &entry.chi, &entry.check);
                        (r.verdict, r.worst_residual_value)
                    }
                    Err(_) => (Verdict::Fail, f64::NAN),
                };
                mutations.push(MutationOutcome {
                    key: key.clone(),
                    factor,
                    verdict: outcome.0,
                    worst_residual_value: outcome.1,
                });
            }
        }
    }
    let mutation_sensitive = mutations.iter().any(|m| m.verdict == Verdict::Fail);
    BuilderOutcome {
        name: w.name.clone(),
        c_het: entry.params.c_het,
        case: entry.params.case,
        constants: w.constants.clone(),
        thresholds: w.thresholds.clone(),
        derived: w.derived().clone(),
        report,
        mutations,
        mutation_sensitive,
    }
}

/// Whether some instance of each builder flipped under mutation.
pub fn mutation_sensitivity(outcomes: &[BuilderOutcome]) -> BTreeMap<String, bool> {
    let mut out = BTreeMap::new();
    for o in outcomes {
        *out.entry(o.name.clone()).or_insert(false) |= o.mutation_sensitive;
    }
    out
}

fn entry(function: ComparisonFunction, p: Parameters, chi: &ChiProfile) -> SuiteEntry {
    SuiteEntry { function, params: p, chi: chi.clone(), check: CheckConfig::default() }
}

/// Builders admissible for `p` at their computed thresholds, plus the builders
/// whose regime matches but whose constructor refused the default constants.
#[derive(Clone, Debug, Default)]
pub struct Suite {
    pub entries: Vec<SuiteEntry>,
    /// (builder, reason)
    pub skipped: Vec<(String, String)>,
}

impl Suite {
    fn add(&mut self, name: &str, p: &Parameters, chi: &ChiProfile, w: Result<ComparisonFunction>) {
        match w {
            Ok(w) => self.entries.push(entry(w, *p, chi)),
            Err(e) => self.skipped.push((name.to_string(), e.to_string())),
        }
    }
}

/// Every builder whose regime contains `p`.
///
/// Speeds sit at fixed fractions of their admissible windows.
pub fn suite_for(p: &Parameters) -> Result<Suite> {
    let chi = ChiProfile::logistic(p)?;
    let (c_minus, c_plus) = speeds::linear_speeds(p);
    let mut s = Suite::default();
    s.add("general_super", p, &chi, general_super(p, 1.0));
    s.add("general_sub", p, &chi, general_sub(p, 0.8 * c_minus, 0.05 * p.alpha, 1e-3));
    match p.case {
        Case::Decreasing => {
            if p.c_het < c_minus {
                s.add("case1_super_slow", p, &chi, case1_super_slow(p, &chi, 0.2 * p.d_minus, None));
            } else if p.c_het > c_minus && p.c_het <= c_plus {
                s.add("case1_super_locked", p, &chi, case1_super_locked(p, &chi, None));
            }
            let c = 0.95 * c_plus.min(p.c_het);
            s.add("case1_sub_bump", p, &chi, case1_sub_bump(p, &chi, c, 1e-4, None));
        }
        Case::Increasing => {
            let c_int = speeds::c_int(p)?;
            if p.c_het < c_plus {
                let c = 0.5 * (p.c_het + c_plus);
                s.add("case2_sub_cplus", p, &chi, case2_sub_cplus(p, &chi, c, 1e-4, None));
            } else if p.c_het < c_int {
                if p.c_het > c_plus {
                    s.add("case2_super_anomalous", p, &chi, case2_super_anomalous(p, &chi, None, None, 1.0));
                }
                let c_u = speeds::anomalous_speed(p)?;
                let c = c_minus + 0.4 * (c_u - c_minus);
                s.add("case2_sub_pull", p, &chi, case2_sub_pull(p, &chi, c, 0.05 * p.alpha, None));
                if p.c_het > c_plus {
                    let c = c_minus + 0.8 * (c_u - c_minus);
                    match full_entries(p, &chi, c, 0.02 * p.alpha) {
                        Ok(v) => s.entries.extend(v),
                        Err(e) => s.skipped.push(("case2_sub_full".into(), e.to_string())),
                    }
                }
            } else {
                s.add("case2_super_fast", p, &chi, case2_super_fast(p, &chi, None, None));
            }
        }
    }
    Ok(s)
}

/// The glued sub-solution and its δ-scaled copy checked against N.
pub fn full_entries(p: &Parameters, chi: &ChiProfile, c: f64, eps: f64) -> Result<Vec<SuiteEntry>> {
    let phi = crate::waves::phi_shoot(p, chi, eps, -80.0, 80.0, 0.01)?;
    let w = case2_sub_full(p, chi, c, eps, None, &phi)?;
    let cfg = CheckConfig::default();
    let delta = concavity_scale(&w, p.alpha, eps, &cfg);
    let scaled = w.scaled(delta, Operator::Nonlinear);
    Ok(vec![entry(w, *p, chi), entry(scaled, *p, chi)])
}

/// Entries for every builder, each at a parameter point inside its regime.
pub fn standard_suite() -> Result<Vec<SuiteEntry>> {
    let case1 = |c| Parameters::benchmark(Case::Decreasing, c);
    let case2 = |c| Parameters::benchmark(Case::Increasing, c);
    let mut out = Vec::new();
    let p = case1(3.0);
    let chi = ChiProfile::logistic(&p)?;
    out.push(entry(general_super(&p, 1.0)?, p, &chi));
    out.push(entry(case1_sub_bump(&p, &chi, 1.9, 5e-4, None)?, p, &chi));
    let p = case1(1.5);
    let chi = ChiProfile::logistic(&p)?;
    out.push(entry(general_sub(&p, 0.8, 0.05, 1e-3)?, p, &chi));
    out.push(entry(case1_super_locked(&p, &chi, None)?, p, &chi));
    // At c_het = c_plus the linear factor vanishes in the flat d_plus tail, the
    // one place where a perturbed exponent can break the inequality.
    let p = case1(2.0);
    let chi = ChiProfile::logistic(&p)?;
    out.push(entry(case1_super_locked(&p, &chi, None)?, p, &chi));
    let p = case1(0.5);
    let chi = ChiProfile::logistic(&p)?;
    out.push(entry(case1_super_slow(&p, &chi, 1e-3, None)?, p, &chi));
    let p = case2(3.0);
    let chi = ChiProfile::logistic(&p)?;
    out.push(entry(case2_super_anomalous(&p, &chi, None, None, 1.0)?, p, &chi));
    out.push(entry(case2_sub_pull(&p, &chi, 1.2, 0.05, None)?, p, &chi));
    out.extend(full_entries(&p, &chi, 1.35, 0.02)?);
    let p = case2(8.0);
    let chi = ChiProfile::logistic(&p)?;
    out.push(entry(case2_super_fast(&p, &chi, None, None)?, p, &chi));
    let p = case2(1.0);
    let chi = ChiProfile::logistic(&p)?;
    out.push(entry(case2_sub_cplus(&p, &chi, 1.8, 1e-3, None)?, p, &chi));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1(c: f64) -> Parameters {
        Parameters::benchmark(Case::Decreasing, c)
    }

    fn p2(c: f64) -> Parameters {
        Parameters::benchmark(Case::Increasing, c)
    }

    fn chi(p: &Parameters) -> ChiProfile {
        ChiProfile::logistic(p).unwrap()
    }

    fn quick() -> CheckConfig {
        CheckConfig { n_times: 40, n_positions: 600, ..CheckConfig::default() }
    }

    fn passes(w: &ComparisonFunction, p: &Parameters) -> SignReport {
        let r = check(w, p, &chi(p), &quick());
        assert_eq!(r.verdict, Verdict::Pass, "{r:#?}");
        r
    }

    #[test]
    fn general_super_samples_and_constant_piece() {
        let p = p1(3.0);
        let w = general_super(&p, 1.0).unwrap();
        let cfg = CheckConfig { n_times: 50, n_positions: 2000, ..CheckConfig::default() };
        let r = check(&w, &p, &chi(&p), &cfg);
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.sample_count, 100_000);
        let one = w.eval(0.0, -5.0);
        assert_eq!(Operator::Nonlinear.apply(one, 0.7, 1.0), 0.0);
    }

    #[test]
    fn general_super_homogeneous_residual_is_quadratic() {
        let p = p1(3.0);
        let w = general_super(&p, 1.0).unwrap();
        let lam = w.constant("lambda").unwrap();
        for &x in &[0.5, 2.0, 7.0] {
            let jet = w.eval(0.0, x);
            let n = Operator::Nonlinear.apply(jet, p.d_plus, p.alpha);
            let expect = p.alpha * (-2.0 * lam * x).exp();
            assert!((n - expect).abs() <= 1e-15, "{n} vs {expect}");
        }
    }

    #[test]
    fn halved_rate_fails_with_negative_residual() {
        let p = p1(3.0);
        let w = general_super(&p, 1.0).unwrap().perturbed("lambda", 0.5).unwrap();
        let r = check(&w, &p, &chi(&p), &quick());
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.worst_residual_value < -1e-6);
    }

    #[test]
    fn zero_samples_are_flagged() {
        let p = p1(3.0);
        let w = general_super(&p, 1.0).unwrap();
        let cfg = CheckConfig { n_times: 0, ..CheckConfig::default() };
        let r = check(&w, &p, &chi(&p), &cfg);
        assert_eq!(r.verdict, Verdict::Insufficient);
        assert_eq!(r.sample_count, 0);
    }

    #[test]
    fn general_sub_junction() {
        let p = p1(1.5);
        let w = general_sub(&p, 0.8, 0.05, 1e-3).unwrap();
        let d = w.derived();
        let (lam, beta) = (w.constant("lambda").unwrap(), w.constant("beta").unwrap());
        let (gam, omega) = (w.constant("gamma").unwrap(), w.constant("omega").unwrap());
        assert!(damped_cos(lam, beta, d["z_star_minus"])[2].abs() < 1e-10);
        assert!(damped_cos(gam, omega, d["z_star_plus"])[2].abs() < 1e-10);
        let (l, r) = w.one_sided(0.0, 1);
        assert!((l.value - r.value).abs() < 1e-14 * l.value.abs().max(1e-3) / 1e-3);
        passes(&w, &p);
        assert!(matches!(general_sub(&p, 0.8, 0.05, 1.0), Err(Error::Precondition(_))));
        assert!(matches!(general_sub(&p, 1.2, 0.05, 1e-3), Err(Error::Precondition(_))));
    }

    #[test]
    fn slow_case1_super() {
        let p = p1(0.5);
        let c = chi(&p);
        let t0 = case1_super_slow(&p, &c, 0.05, None).unwrap().thresholds["tau_eps"];
        let w = case1_super_slow(&p, &c, 0.05, Some(t0 + 1.0)).unwrap();
        passes(&w, &p);
        let c_eps = w.thresholds["c_eps"];
        let chi_tau = c.eval(t0 + 1.0);
        let factor = (c_eps * c_eps - 4.0 * chi_tau * p.alpha) / (4.0 * chi_tau);
        assert!(factor >= 0.0);
        assert!(matches!(case1_super_slow(&p, &c, 0.05, Some(t0 - 1.0)), Err(Error::Precondition(_))));
        assert!(matches!(case1_super_slow(&p1(1.5), &c, 0.05, None), Err(Error::Regime(_))));
    }

    #[test]
    fn bump_roots_follow_small_eps_asymptotics() {
        let p = p1(3.0);
        let (c, eps) = (1.0, 1e-4);
        let k = c / (2.0 * p.d_plus);
        let beta0 = (4.0 * p.d_plus * p.alpha - c * c).sqrt() / (2.0 * p.d_plus);
        let beta = (4.0 * p.d_plus * (p.alpha - eps) - c * c).sqrt() / (2.0 * p.d_plus);
        let (zm, zp) = bump_roots(k, beta, eps).unwrap();
        let q = std::f64::consts::PI / (2.0 * beta0);
        let am = eps * (-k * q).exp() / beta0;
        let ap = eps * (k * q).exp() / beta0;
        assert!((zm / am - 1.0).abs() < 0.01, "{}", zm / am);
        assert!((zp / ap - 1.0).abs() < 0.01, "{}", zp / ap);
        let (zm, zp) = bump_roots(k, beta, 1e-12).unwrap();
        assert!(zm < 1e-9 && zp < 1e-9);
    }

    #[test]
    fn case1_bump_passes_and_checks_threshold() {
        let p = p1(3.0);
        let c = chi(&p);
        // At c = 1.9 the right-edge equation has a root only for ε below about 9.7e-4.
        assert!(matches!(case1_sub_bump(&p, &c, 1.9, 1e-3, None), Err(Error::NotBracketed(_))));
        let w = case1_sub_bump(&p, &c, 1.9, 5e-4, None).unwrap();
        passes(&w, &p);
        let tau_eps = w.thresholds["tau_eps"];
        assert!(matches!(case1_sub_bump(&p, &c, 1.9, 5e-4, Some(tau_eps - 0.5)), Err(Error::Precondition(_))));
        assert!(matches!(case1_sub_bump(&p, &c, 2.1, 5e-4, None), Err(Error::Precondition(_))));
    }

    #[test]
    fn locked_case1_super() {
        let p = p1(1.5);
        let c = chi(&p);
        let w = case1_super_locked(&p, &c, None).unwrap();
        let tau_0 = w.thresholds["tau_0"];
        // Invert the logistic: χ(τ₀) = 0.5625.
        let s: f64 = (p.d_plus - 0.5625) / (0.5625 - p.d_minus);
        let expect = s.ln() / p.chi_steepness;
        assert!((tau_0 - expect).abs() < 1e-9, "{tau_0} vs {expect}");
        passes(&w, &p);
        let marginal = p1(1.0);
        let err = case1_super_locked(&marginal, &chi(&marginal), None).unwrap_err();
        assert!(err.to_string().contains("marginal"));
    }

    #[test]
    fn anomalous_case2_super() {
        let p = p2(3.0);
        let w = case2_super_anomalous(&p, &chi(&p), None, None, 1.0).unwrap();
        let (lam, mu) = (w.constant("lambda").unwrap(), w.constant("mu").unwrap());
        assert!((lam - 0.8038).abs() < 1e-4 && mu == 1.5);
        let r = passes(&w, &p);
        assert!(r.jump_checks.iter().all(|j| j.worst_jump < 0.0));
        assert!(r.max_continuity_gap <= 1e-12);
    }

    #[test]
    fn pulled_sub_and_root() {
        let p = p2(3.0);
        let w = case2_sub_pull(&p, &chi(&p), 1.2, 0.05, None).unwrap();
        let lam = w.constant("lambda").unwrap();
        assert!((p.d_minus * lam * lam - 1.2 * lam + (p.alpha - 0.05)).abs() < 1e-14);
        let r = passes(&w, &p);
        assert!(r.max_continuity_gap == 0.0);
        assert!(w.eval(0.0, -w.constant("tau").unwrap() + 1e-15).value.abs() < 1e-13);
    }

    #[test]
    fn glued_sub_solution() {
        let p = p2(3.0);
        let c = chi(&p);
        let entries = full_entries(&p, &c, 1.35, 0.02).unwrap();
        let w = &entries[0].function;
        let d = w.derived();
        assert!((d["c_eps_tau"] * d["phi_at_glue"] - 1.0).abs() < 1e-12);
        let r = passes(w, &p);
        let glue = r.jump_checks.iter().find(|j| j.label == "glue").unwrap();
        assert!(glue.worst_jump > 0.0);
        passes(&entries[1].function, &p);
    }

    #[test]
    fn phi_log_derivative_approaches_exponent() {
        let p = p2(3.0);
        let c = chi(&p);
        let phi = crate::waves::phi_shoot(&p, &c, 0.02, -80.0, 80.0, 0.01).unwrap();
        let ratio = |tau: f64| {
            let (f, df) = phi.eval(-0.5 * tau).unwrap();
            (df / f - phi.asymptotic_exponent).abs()
        };
        let errs: Vec<f64> = [5.0, 10.0, 20.0, 40.0].iter().map(|&t| ratio(t)).collect();
        assert!(errs.windows(2).all(|e| e[1] < e[0]), "{errs:?}");
        assert!(errs[3] < 1e-8);
    }

    #[test]
    fn fast_case2_super() {
        let p = p2(8.0);
        let w = case2_super_fast(&p, &chi(&p), None, None).unwrap();
        assert!((w.thresholds["g_c_minus"] - 4.0).abs() < 1e-12);
        assert!((w.constant("mu").unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(w.constant("lambda").unwrap(), 2.0);
        passes(&w, &p);
        let edge = p2(speeds::c_int(&p).unwrap());
        let w = case2_super_fast(&edge, &chi(&edge), None, None).unwrap();
        assert!((w.constant("mu").unwrap() - edge.c_het / (2.0 * edge.d_plus)).abs() < 1e-6);
        assert!(matches!(case2_super_fast(&p2(5.0), &chi(&p2(5.0)), None, None), Err(Error::Regime(_))));
    }

    #[test]
    fn fast_super_with_plateau_at_linear_speed_fails() {
        // Plateau edge at c_minus t + τ, exponent c_minus/(2 d_minus) all the way to c_het t + τ.
        let p = p2(8.0);
        let c = chi(&p);
        let g = speeds::g(1.0, &p).unwrap();
        let lam = 2.0;
        let mu = (p.c_het + g.sqrt()) / (2.0 * p.d_plus);
        let build: Build = Arc::new(move |k: &Constants| {
            let tau = get(k, "tau");
            Ok(Layout::new(
                vec![
                    Interface::new(tau, 1.0, JumpRule::Decrease, "plateau edge"),
                    Interface::new(tau, 8.0, JumpRule::Decrease, "shift anchor"),
                ],
                vec![
                    constant(1.0),
                    exponential(1.0, lam, 1.0, -tau, 0.0),
                    exponential(1.0, mu, 8.0, -tau, lam * 7.0),
                ],
            ))
        });
        for tau in [5.0, 20.0, 40.0] {
            let w = ComparisonFunction::new(
                "as stated",
                Kind::Super,
                Operator::Nonlinear,
                constants(&[("tau", tau)]),
                BTreeMap::new(),
                &[],
                TOLERANCE,
                build.clone(),
            )
            .unwrap();
            let r = check(&w, &p, &c, &quick());
            assert_eq!(r.verdict, Verdict::Fail, "τ = {tau}");
        }
    }

    #[test]
    fn cplus_case2_bump() {
        let p = p2(1.0);
        let w = case2_sub_cplus(&p, &chi(&p), 1.8, 1e-3, None).unwrap();
        let d = w.derived();
        let beta = w.constant("beta").unwrap();
        let ifs = w.interfaces();
        let width = ifs[1].offset - ifs[0].offset;
        let expect = std::f64::consts::PI / beta + d["z_plus"] + d["z_minus"];
        assert!((width - expect).abs() < 1e-12);
        passes(&w, &p);
    }

    #[test]
    fn every_standard_builder_is_mutation_sensitive() {
        let suite = standard_suite().unwrap();
        let outcomes: Vec<BuilderOutcome> = suite
            .iter()
            .map(|e| run_entry(&SuiteEntry { check: quick(), ..e.clone() }, true))
            .collect();
        for out in &outcomes {
            assert_eq!(out.report.verdict, Verdict::Pass, "{}: {:#?}", out.name, out.report);
        }
        let by_name = mutation_sensitivity(&outcomes);
        assert_eq!(by_name.len(), 11);
        for (name, sensitive) in by_name {
            assert!(sensitive, "{name}");
        }
    }
}
