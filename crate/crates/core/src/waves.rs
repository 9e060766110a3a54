//! Traveling waves in the comoving frame: relaxation, decay-rate fits, the
//! shooting problem for the eigen-ODE, and the weak-decay probe.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{locate_switch, Case, ChiProfile, Parameters};
use crate::numerics::fit_line;
use crate::pde::{Advection, Field, Frame, Grid1D, Scheme, Solver, SolverConfig};
use crate::speeds;

/// Default window of U levels used for the tail fit.
pub const DECAY_WINDOW: (f64, f64) = (1e-14, 1e-8);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Time between convergence checks.
    pub check_every: f64,
    /// Sup-norm increment over `check_every` that counts as steady.
    pub tol: f64,
    /// Overrides the default ε of the initial super-solution.
    pub eps: Option<f64>,
    /// Overrides the default shift τ of the initial super-solution.
    pub tau: Option<f64>,
    pub decay_window: (f64, f64),
}

impl Default for RelaxConfig {
    fn default() -> Self {
        RelaxConfig {
            dt: 0.05,
            t_max: 400.0,
            check_every: 1.0,
            tol: 1e-10,
            eps: None,
            tau: None,
            decay_window: DECAY_WINDOW,
        }
    }
}

impl RelaxConfig {
    /// Default comoving grid for relaxation runs.
    pub fn default_grid() -> Grid1D {
        Grid1D::with_spacing(-40.0, 20.0, 0.02).expect("static grid is valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub lambda: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
    pub window: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub grid: Grid1D,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    /// max |χU″ + c_het U′ + αU(1 − U)| over interior nodes.
    pub residual: f64,
    pub decay_fit: Option<DecayFit>,
    pub monotone: bool,
    /// 0 < U ≤ 1 on the interior. U rounds to exactly 1 deep in the invaded state.
    pub in_range: bool,
    pub converged: bool,
    pub t_relax: f64,
    /// Last sup-norm increment over one check interval.
    pub increment: f64,
    /// Largest pointwise increase seen between checks; ~0 for monotone relaxation.
    pub max_increase: f64,
    pub eps: f64,
    pub tau: f64,
}

/// ε and λ_ε of the initial super-solution min{1, e^{−λ_ε(x − τ)}}.
pub fn super_solution_rate(p: &Parameters, eps: Option<f64>) -> Result<(f64, f64)> {
    let (c_minus, _) = speeds::linear_speeds(p);
    if p.c_het <= c_minus {
        return Err(Error::Regime(format!(
            "relaxation needs c_het > c_minus = {c_minus} (got {})",
            p.c_het
        )));
    }
    let mut eps = eps.unwrap_or(0.1 * (p.c_het - c_minus).powi(2) / (4.0 * p.alpha));
    // Keep 2√((d_minus + ε)α) strictly below c_het.
    let eps_max = p.c_het * p.c_het / (4.0 * p.alpha) - p.d_minus;
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("ε must be > 0 (got {eps})")));
    }
    eps = eps.min(0.5 * eps_max);
    let d = p.d_minus + eps;
    let disc = p.c_het * p.c_het - 4.0 * d * p.alpha;
    Ok((eps, (p.c_het + disc.sqrt()) / (2.0 * d)))
}

/// First point right of which χ stays within `eps / 2` of d_minus (Case I).
pub fn default_tau(chi: &ChiProfile, eps: f64) -> Result<f64> {
    locate_switch(|x| chi.gap_low(x) < 0.5 * eps, -1e3, 1e3)
}

/// Initial data min{1, e^{−λ_ε(x − τ)}} on `grid`.
pub fn super_solution_field(grid: Grid1D, lambda_eps: f64, tau: f64) -> Field {
    Field::from_fn(grid, |x| (-lambda_eps * (x - tau)).exp().min(1.0))
}

/// Relax the comoving equation from `init` until the increment over
/// `check_every` drops below `tol`, or `t_max` is reached.
pub fn relax(
    p: &Parameters,
    chi: &ChiProfile,
    init: Field,
    cfg: &RelaxConfig,
) -> Result<WaveProfile> {
    if !(cfg.dt > 0.0 && cfg.check_every >= cfg.dt && cfg.t_max > 0.0 && cfg.tol > 0.0) {
        return Err(Error::InvalidConfig(
            "relaxation needs 0 < dt <= check_every, t_max > 0 and tol > 0".into(),
        ));
    }
    let grid = init.grid;
    let solver_cfg = SolverConfig {
        scheme: Scheme::BackwardEuler,
        frame: Frame::Comoving,
        advection: Advection::Centered,
        dt: Some(cfg.dt),
        t_end: cfg.t_max,
        ..SolverConfig::default()
    };
    let mut solver = Solver::new(init, solver_cfg, p, chi)?;
    let per_check = (cfg.check_every / cfg.dt).round().max(1.0) as usize;
    let mut prev = solver.values().to_vec();
    let mut increment = f64::INFINITY;
    let mut max_increase = 0.0_f64;
    let mut converged = false;
    while solver.t() < cfg.t_max - 1e-9 {
        for _ in 0..per_check {
            solver.step()?;
        }
        let (mut inc, mut up) = (0.0_f64, 0.0_f64);
        for (a, b) in solver.values().iter().zip(&prev) {
            inc = inc.max((a - b).abs());
            up = up.max(a - b);
        }
        increment = inc;
        max_increase = max_increase.max(up);
        prev.copy_from_slice(solver.values());
        if increment < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("relaxation not steady by t = {} (increment {increment:e})", solver.t());
    }
    let u = solver.values().to_vec();
    let residual = wave_residual(&grid, &u, p, chi);
    let monotone = is_monotone(&u);
    let in_range = u[1..u.len() - 1].iter().all(|&v| v > 0.0 && v <= 1.0);
    let mut w = WaveProfile {
        grid,
        u,
        residual,
        decay_fit: None,
        monotone,
        in_range,
        converged,
        t_relax: solver.t(),
        increment,
        max_increase,
        eps: f64::NAN,
        tau: f64::NAN,
    };
    w.decay_fit = measure_decay(&w, cfg.decay_window.0, cfg.decay_window.1).ok();
    Ok(w)
}

/// Traveling wave for Case I with c_minus < c_het < c_plus, relaxed from the
/// super-solution min{1, e^{−λ_ε(x − τ)}}.
pub fn relax_to_wave(
    p: &Parameters,
    chi: &ChiProfile,
    grid: Grid1D,
    cfg: &RelaxConfig,
) -> Result<WaveProfile> {
    let (c_minus, c_plus) = speeds::linear_speeds(p);
    if p.case != Case::Decreasing {
        return Err(Error::Precondition("travelling waves are relaxed for Case I only".into()));
    }
    if !(p.c_het > c_minus && p.c_het < c_plus) {
        return Err(Error::Regime(format!(
            "relax_to_wave needs c_minus < c_het < c_plus ({c_minus} < {} < {c_plus})",
            p.c_het
        )));
    }
    relax_from_super_solution(p, chi, grid, cfg)
}

/// Same as [`relax_to_wave`] without the regime check; used for probes
/// outside the locked window.
pub fn relax_from_super_solution(
    p: &Parameters,
    chi: &ChiProfile,
    grid: Grid1D,
    cfg: &RelaxConfig,
) -> Result<WaveProfile> {
    let (eps, lambda_eps) = super_solution_rate(p, cfg.eps)?;
    let tau = match cfg.tau {
        Some(t) => t,
        None => default_tau(chi, eps)?,
    };
    let mut w = relax(p, chi, super_solution_field(grid, lambda_eps, tau), cfg)?;
    w.eps = eps;
    w.tau = tau;
    Ok(w)
}

/// max |χU″ + c_het U′ + αU(1 − U)| over interior nodes, centered differences.
pub fn wave_residual(grid: &Grid1D, u: &[f64], p: &Parameters, chi: &ChiProfile) -> f64 {
    let h = grid.dx();
    (1..u.len() - 1)
        .map(|i| {
            let x = grid.x(i);
            let d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
            let d1 = (u[i + 1] - u[i - 1]) / (2.0 * h);
            (chi.eval(x) * d2 + p.c_het * d1 + p.alpha * u[i] * (1.0 - u[i])).abs()
        })
        .fold(0.0, f64::max)
}

/// U′ ≤ 0 everywhere and U′ < 0 where U ∈ [1e-6, 1 − 1e-6].
pub fn is_monotone(u: &[f64]) -> bool {
    u.windows(2).all(|w| {
        let strict = (1e-6..=1.0 - 1e-6).contains(&w[0]) || (1e-6..=1.0 - 1e-6).contains(&w[1]);
        if strict {
            w[1] < w[0]
        } else {
            w[1] <= w[0]
        }
    })
}

/// Slope of −ln U against x where U ∈ [u_lo, u_hi].
pub fn measure_decay(w: &WaveProfile, u_lo: f64, u_hi: f64) -> Result<DecayFit> {
    decay_fit_xy(&w.grid.points(), &w.u, u_lo, u_hi)
}

pub fn decay_fit_xy(xs: &[f64], u: &[f64], u_lo: f64, u_hi: f64) -> Result<DecayFit> {
    if !(u_lo > 0.0 && u_hi > u_lo) {
        return Err(Error::InvalidConfig(format!(
            "decay window needs 0 < u_lo < u_hi (got {u_lo}, {u_hi})"
        )));
    }
    let (fx, fy): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(u)
        .filter(|(_, &v)| v >= u_lo && v <= u_hi)
        .map(|(&x, &v)| (x, v.ln()))
        .unzip();
    if fx.len() < 20 {
        return Err(Error::DomainTooSmall(format!(
            "only {} points with U in [{u_lo:e}, {u_hi:e}]; extend the domain or refine the grid",
            fx.len()
        )));
    }
    let fit = fit_line(&fx, &fy)?;
    Ok(DecayFit {
        lambda: -fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        n: fit.n,
        window: (u_lo, u_hi),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakDecayReport {
    /// min of U′ + (c_het / (2 d_plus)) U over the evaluated nodes.
    pub min_value: f64,
    pub worst_x: f64,
    pub positive: bool,
    pub evaluated: usize,
}

/// Evaluate U′ + (c_het/(2d_plus))U with forward differences.
///
/// Nodes within `margin` of the right end (the Dirichlet boundary layer) and
/// nodes with U below `floor` are skipped.
pub fn check_weak_decay_inequality(
    xs: &[f64],
    u: &[f64],
    p: &Parameters,
    margin: f64,
    floor: f64,
) -> WeakDecayReport {
    let rate = p.c_het / (2.0 * p.d_plus);
    let x_end = xs.last().copied().unwrap_or(0.0) - margin;
    let mut rep = WeakDecayReport {
        min_value: f64::INFINITY,
        worst_x: f64::NAN,
        positive: false,
        evaluated: 0,
    };
    for i in 0..xs.len().saturating_sub(1) {
        if xs[i] > x_end || u[i] < floor {
            continue;
        }
        let d = (u[i + 1] - u[i]) / (xs[i + 1] - xs[i]);
        let v = d + rate * u[i];
        rep.evaluated += 1;
        if v < rep.min_value {
            rep.min_value = v;
            rep.worst_x = xs[i];
        }
    }
    rep.positive = rep.evaluated > 0 && rep.min_value > 0.0;
    rep
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub taus: Vec<f64>,
    /// Largest pairwise sup-distance of the steady profiles as computed.
    pub max_distance: f64,
    /// Same after translating each profile so that U = 0.5 at a common point.
    pub max_aligned_distance: f64,
    pub all_converged: bool,
}

/// Relax from several shifts τ of the super-solution and compare the results.
pub fn uniqueness_probe(
    p: &Parameters,
    chi: &ChiProfile,
    grid: Grid1D,
    cfg: &RelaxConfig,
    taus: &[f64],
) -> Result<UniquenessReport> {
    if taus.len() < 2 {
        return Err(Error::Precondition("uniqueness probe needs at least two shifts".into()));
    }
    let waves: Vec<WaveProfile> = taus
        .par_iter()
        .map(|&tau| relax_to_wave(p, chi, grid, &RelaxConfig { tau: Some(tau), ..*cfg }))
        .collect::<Result<_>>()?;
    let xs = grid.points();
    let mut max_distance = 0.0_f64;
    let mut max_aligned_distance = 0.0_f64;
    for i in 0..waves.len() {
        for j in i + 1..waves.len() {
            max_distance = max_distance.max(profile_distance(&waves[i].u, &waves[j].u));
            max_aligned_distance =
                max_aligned_distance.max(aligned_distance(&xs, &waves[i].u, &waves[j].u)?);
        }
    }
    Ok(UniquenessReport {
        taus: taus.to_vec(),
        max_distance,
        max_aligned_distance,
        all_converged: waves.iter().all(|w| w.converged),
    })
}

/// Sup-norm distance of two profiles on a shared grid.
pub fn profile_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn level_crossing(xs: &[f64], u: &[f64], level: f64) -> Option<f64> {
    let k = u.windows(2).position(|w| w[0] >= level && w[1] < level)?;
    let t = (u[k] - level) / (u[k] - u[k + 1]);
    Some(xs[k] + t * (xs[k + 1] - xs[k]))
}

fn interp(xs: &[f64], u: &[f64], x: f64) -> Option<f64> {
    if x < xs[0] || x > xs[xs.len() - 1] {
        return None;
    }
    let k = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    Some(u[k - 1] + t * (u[k] - u[k - 1]))
}

fn aligned_distance(xs: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
    let (xa, xb) = match (level_crossing(xs, a, 0.5), level_crossing(xs, b, 0.5)) {
        (Some(xa), Some(xb)) => (xa, xb),
        _ => return Err(Error::Precondition("profile never crosses U = 0.5".into())),
    };
    let shift = xb - xa;
    Ok(xs
        .iter()
        .zip(a)
        .filter_map(|(&x, &va)| interp(xs, b, x + shift).map(|vb| (va - vb).abs()))
        .fold(0.0, f64::max))
}

/// Solution of χφ″ + c_het φ′ + (α − λ_⋆ + ε)φ = 0 up to its first zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiSolution {
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub x_eps: f64,
    /// Growth rate of the initial condition (φ, φ′) = (1, exponent).
    pub asymptotic_exponent: f64,
    pub eps: f64,
    /// Sup-norm ODE residual with φ″ from fourth-order differences of φ′.
    pub residual: f64,
    #[serde(skip)]
    rhs: Option<PhiRhs>,
}

#[derive(Clone, Debug, PartialEq)]
struct PhiRhs {
    chi: ChiProfile,
    c: f64,
    k: f64,
}

impl PhiRhs {
    #[inline]
    fn f(&self, x: f64, y: [f64; 2]) -> [f64; 2] {
        [y[1], -(self.c * y[1] + self.k * y[0]) / self.chi.eval(x)]
    }

    fn rk4(&self, x: f64, y: [f64; 2], h: f64) -> [f64; 2] {
        let k1 = self.f(x, y);
        let k2 = self.f(x + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = self.f(x + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = self.f(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }
}

impl PhiSolution {
    /// (φ, φ′) at `x` ∈ [x_start, x_eps] by one RK4 step from the nearest stored node.
    pub fn eval(&self, x: f64) -> Option<(f64, f64)> {
        let rhs = self.rhs.as_ref()?;
        let (x0, x1) = (self.x[0], self.x_eps);
        if !(x >= x0 && x <= x1) {
            return None;
        }
        let k = match self.x.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(k) => return Some((self.phi[k], self.dphi[k])),
            Err(k) => {
                if k == 0 {
                    0
                } else if k >= self.x.len() || x - self.x[k - 1] <= self.x[k] - x {
                    k - 1
                } else {
                    k
                }
            }
        };
        let y = rhs.rk4(self.x[k], [self.phi[k], self.dphi[k]], x - self.x[k]);
        Some((y[0], y[1]))
    }
}

/// Shoot the eigen-ODE rightward from the d_minus tail of a Case II profile.
///
/// RK4 runs with step `dx / 4`; every substep is stored. The first sign
/// change is refined by bisection on the RK4 step length.
pub fn phi_shoot(
    p: &Parameters,
    chi: &ChiProfile,
    eps: f64,
    x_start: f64,
    x_end: f64,
    dx: f64,
) -> Result<PhiSolution> {
    let (_, c_plus) = speeds::linear_speeds(p);
    if p.case != Case::Increasing || !(p.c_het > c_plus) {
        return Err(Error::Precondition(format!(
            "shooting needs Case II with c_het > c_plus = {c_plus}"
        )));
    }
    let lambda_star = speeds::lambda_star(p);
    let shifted = lambda_star - eps;
    let floor = p.alpha - p.c_het * p.c_het / (4.0 * p.d_minus);
    if !(eps > 0.0 && shifted > floor) {
        return Err(Error::Precondition(format!(
            "ε = {eps} must satisfy 0 < ε < λ_⋆ − (α − c_het²/(4 d_minus)) = {}",
            lambda_star - floor
        )));
    }
    if !(x_end > x_start && dx > 0.0) {
        return Err(Error::InvalidConfig("shooting needs x_end > x_start and dx > 0".into()));
    }
    if (chi.eval(x_start) - p.d_minus).abs() >= 1e-10 {
        return Err(Error::Precondition(format!(
            "x_start = {x_start} is not in the d_minus tail of χ"
        )));
    }
    let c = p.c_het;
    let k = p.alpha - shifted;
    let disc = c * c - 4.0 * p.d_minus * k;
    let exponent = (-c + disc.sqrt()) / (2.0 * p.d_minus);
    let rhs = PhiRhs { chi: chi.clone(), c, k };
    let h = dx / 4.0;
    let steps = ((x_end - x_start) / h).ceil() as usize;
    let mut xs = vec![x_start];
    let mut phi = vec![1.0];
    let mut dphi = vec![exponent];
    let mut y = [1.0, exponent];
    let mut x_eps = None;
    for s in 0..steps {
        let x = x_start + s as f64 * h;
        let next = rhs.rk4(x, y, h);
        if next[0] <= 0.0 {
            let root = bisect_step(&rhs, x, y, h);
            let y_root = rhs.rk4(x, y, root - x);
            xs.push(root);
            phi.push(0.0);
            dphi.push(y_root[1]);
            x_eps = Some(root);
            break;
        }
        if !next[0].is_finite() {
            return Err(Error::Blowup { step: s });
        }
        y = next;
        xs.push(x + h);
        phi.push(y[0]);
        dphi.push(y[1]);
    }
    let x_eps = x_eps.ok_or_else(|| {
        Error::DomainTooSmall(format!("φ has no zero on [{x_start}, {x_end}]"))
    })?;
    let residual = phi_residual(&rhs, &xs, &phi, &dphi, h);
    Ok(PhiSolution {
        x: xs,
        phi,
        dphi,
        x_eps,
        asymptotic_exponent: exponent,
        eps,
        residual,
        rhs: Some(rhs),
    })
}

fn bisect_step(rhs: &PhiRhs, x: f64, y: [f64; 2], h: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rhs.rk4(x, y, mid)[0] > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    x + hi
}

fn phi_residual(rhs: &PhiRhs, xs: &[f64], phi: &[f64], dphi: &[f64], h: f64) -> f64 {
    // The last node sits at the (unevenly spaced) root; stay clear of it.
    let n = xs.len().saturating_sub(1);
    (2..n.saturating_sub(2))
        .map(|i| {
            let d2 = (-dphi[i + 2] + 8.0 * dphi[i + 1] - 8.0 * dphi[i - 1] + dphi[i - 2]) / (12.0 * h);
            (rhs.chi.eval(xs[i]) * d2 + rhs.c * dphi[i] + rhs.k * phi[i]).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn synthetic(f: impl Fn(f64) -> f64) -> WaveProfile {
        let grid = Grid1D::with_spacing(0.0, 20.0, 0.01).unwrap();
        WaveProfile {
            grid,
            u: grid.points().into_iter().map(f).collect(),
            residual: 0.0,
            decay_fit: None,
            monotone: true,
            in_range: true,
            converged: true,
            t_relax: 0.0,
            increment: 0.0,
            max_increase: 0.0,
            eps: 0.0,
            tau: 0.0,
        }
    }

    #[test]
    fn exact_exponential_decay() {
        let w = synthetic(|x| 3.0 * (-2.0 * x).exp());
        let fit = measure_decay(&w, 1e-6, 1e-2).unwrap();
        assert!((fit.lambda - 2.0).abs() < 1e-10);
        assert!((fit.r2 - 1.0).abs() < 1e-10);
        assert_relative_eq!(fit.intercept, 3f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn far_window_sees_weak_mode() {
        let (lw, ls) = (0.763_932_0, 5.236_068_0);
        let w = synthetic(|x| (-lw * x).exp() + (-ls * x).exp());
        let fit = measure_decay(&w, 1e-6, 1e-3).unwrap();
        assert!((fit.lambda - lw).abs() < 1e-3, "{}", fit.lambda);
    }

    #[test]
    fn narrow_window_is_rejected() {
        let w = synthetic(|x| (-2.0 * x).exp());
        assert!(matches!(measure_decay(&w, 1e-3, 1.1e-3), Err(Error::DomainTooSmall(_))));
        assert!(measure_decay(&w, 1e-2, 1e-3).is_err());
    }

    #[test]
    fn weak_decay_inequality_on_exponentials() {
        let p = Parameters::new(1.0, 0.25, 1.0, 3.0, Case::Decreasing, 2.0).unwrap();
        let xs: Vec<f64> = (0..2001).map(|i| i as f64 * 0.01).collect();
        let slow: Vec<f64> = xs.iter().map(|x| (-x).exp()).collect();
        let fast: Vec<f64> = xs.iter().map(|x| (-2.0 * x).exp()).collect();
        let r = check_weak_decay_inequality(&xs, &slow, &p, 0.0, 0.0);
        assert!(r.positive);
        let r = check_weak_decay_inequality(&xs, &fast, &p, 0.0, 0.0);
        assert!(!r.positive);
        assert!(r.min_value < 0.0);
    }

    #[test]
    fn identity_stays_at_one() {
        let p = Parameters::benchmark(Case::Decreasing, 1.5);
        let chi = ChiProfile::logistic(&p).unwrap();
        let grid = Grid1D::with_spacing(-20.0, 10.0, 0.05).unwrap();
        let mut init = Field::constant(grid, 1.0);
        *init.values.last_mut().unwrap() = 0.0;
        let cfg = RelaxConfig { t_max: 5.0, ..RelaxConfig::default() };
        let w = relax(&p, &chi, init, &cfg).unwrap();
        // The boundary deficit is carried left at speed c_het; the far left never sees it.
        assert!(w.u[..w.u.len() / 4].iter().all(|&v| (1.0 - v).abs() < 1e-9));
    }

    #[test]
    fn shooting_examples() {
        let p = Parameters::benchmark(Case::Increasing, 3.0);
        let chi = ChiProfile::logistic(&p).unwrap();
        let s = phi_shoot(&p, &chi, 0.05, -15.0, 60.0, 0.02).unwrap();
        assert!(s.x_eps.is_finite() && s.x_eps > -15.0);
        assert!(s.phi[..s.phi.len() - 1].iter().all(|&v| v > 0.0));
        assert!(s.residual < 1e-8, "residual {}", s.residual);
        let deep = phi_shoot(&p, &chi, 0.05, -30.0, 60.0, 0.02).unwrap();
        assert!((deep.x_eps - s.x_eps).abs() < 1e-6, "{} vs {}", deep.x_eps, s.x_eps);
        let (v, _) = s.eval(0.5 * (s.x[10] + s.x[11])).unwrap();
        assert!(v > 0.0);
        assert!(s.eval(s.x_eps + 1.0).is_none());
    }

    #[test]
    fn shooting_without_oscillation_reports_domain() {
        let p = Parameters::benchmark(Case::Increasing, 3.0);
        let flat = ChiProfile::tabulated(&p, vec![-1.0, 1.0], vec![p.d_minus, p.d_minus]).unwrap();
        assert!(matches!(
            phi_shoot(&p, &flat, 0.05, -15.0, 60.0, 0.02),
            Err(Error::DomainTooSmall(_))
        ));
    }

    #[test]
    fn shooting_preconditions() {
        let p = Parameters::benchmark(Case::Increasing, 3.0);
        let chi = ChiProfile::logistic(&p).unwrap();
        assert!(phi_shoot(&p, &chi, 0.05, 0.0, 60.0, 0.02).is_err());
        assert!(phi_shoot(&p, &chi, 10.0, -15.0, 60.0, 0.02).is_err());
        assert!(phi_shoot(&p, &chi, -0.1, -15.0, 60.0, 0.02).is_err());
        let q = Parameters::benchmark(Case::Increasing, 1.5);
        assert!(phi_shoot(&q, &ChiProfile::logistic(&q).unwrap(), 0.05, -15.0, 60.0, 0.02).is_err());
    }

    #[test]
    fn monotonicity_helper() {
        assert!(is_monotone(&[1.0, 1.0, 0.5, 0.2, 0.0, 0.0]));
        assert!(!is_monotone(&[1.0, 0.5, 0.5, 0.2]));
        assert!(!is_monotone(&[1.0, 0.5, 0.6]));
    }
}
