//! Finite-difference simulation of u_t = χ(x − c_het t) u_xx + α u (1 − u),
//! front tracking and spreading-speed estimation.
//!
//! Boundary conditions are homogeneous Neumann at `x_min` and u = 0 at `x_max`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChiProfile, Parameters};
use crate::numerics::{fit_line, least_squares, solve_tridiagonal};
use crate::speeds;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, nx: usize) -> Result<Self> {
        let g = Grid1D { x_min, x_max, nx };
        g.validate()?;
        Ok(g)
    }

    /// Grid with spacing as close to `dx` as an integer point count allows.
    pub fn with_spacing(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::InvalidConfig(format!("dx must be > 0 (got {dx})")));
        }
        let cells = ((x_max - x_min) / dx).round().max(2.0) as usize;
        Grid1D::new(x_min, x_max, cells + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_max > self.x_min) {
            return Err(Error::InvalidConfig(format!(
                "grid needs finite x_min < x_max (got {}, {})",
                self.x_min, self.x_max
            )));
        }
        if self.nx < 3 {
            return Err(Error::InvalidConfig(format!("grid needs nx >= 3 (got {})", self.nx)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }
}

/// Gridded solution snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: Grid1D,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Field {
    pub fn constant(grid: Grid1D, value: f64) -> Self {
        Field {
            grid,
            t: 0.0,
            values: vec![value; grid.nx],
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid1D, f: F) -> Self {
        Field {
            grid,
            t: 0.0,
            values: grid.points().into_iter().map(f).collect(),
        }
    }

    /// Trapezoidal integral of the values.
    pub fn mass(&self) -> f64 {
        let v = &self.values;
        let inner: f64 = v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]);
        inner * self.grid.dx()
    }
}

/// Compactly supported initial datum with a one-cell cosine taper.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: f64,
    pub halfwidth: f64,
    pub height: f64,
}

impl Default for Bump {
    fn default() -> Self {
        Bump {
            center: 0.0,
            halfwidth: 5.0,
            height: 1.0,
        }
    }
}

pub fn initial_bump(grid: &Grid1D, center: f64, halfwidth: f64, height: f64) -> Result<Field> {
    grid.validate()?;
    if !(height > 0.0 && height <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "bump height must lie in (0, 1] (got {height})"
        )));
    }
    if !(halfwidth > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "bump halfwidth must be > 0 (got {halfwidth})"
        )));
    }
    let dx = grid.dx();
    if center - halfwidth - dx < grid.x_min || center + halfwidth + dx > grid.x_max {
        return Err(Error::InvalidConfig(format!(
            "bump [{}, {}] does not fit in the grid [{}, {}]",
            center - halfwidth,
            center + halfwidth,
            grid.x_min,
            grid.x_max
        )));
    }
    Ok(Field::from_fn(*grid, |x| {
        let r = (x - center).abs();
        if r <= halfwidth {
            height
        } else if r < halfwidth + dx {
            0.5 * height * (1.0 + (std::f64::consts::PI * (r - halfwidth) / dx).cos())
        } else {
            0.0
        }
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    ExplicitEuler,
    /// Crank–Nicolson for the linear part, explicit reaction.
    #[serde(rename = "StrangCN", alias = "CrankNicolson")]
    CrankNicolson,
    /// Backward Euler for the linear part, explicit reaction.
    BackwardEuler,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// χ translates with the heterogeneity; no advection term.
    Lab,
    /// Coordinates z = x − c_het t; χ is static and c_het ∂_z u appears.
    Comoving,
}

/// Discretization of c_het ∂_z u in the comoving frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Advection {
    Upwind,
    Centered,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Fraction of the explicit stability bound used for dt.
    pub dt_safety: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub frame: Frame,
    pub advection: Advection,
    /// Steps between trajectory records; 0 picks roughly four records per time unit.
    pub snapshot_stride: usize,
    /// Fixed time step; overrides `dt_safety` when set.
    pub dt: Option<f64>,
    pub keep_snapshots: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt_safety: 0.4,
            t_end: 150.0,
            scheme: Scheme::ExplicitEuler,
            frame: Frame::Lab,
            advection: Advection::Upwind,
            snapshot_stride: 0,
            dt: None,
            keep_snapshots: false,
        }
    }
}

impl SolverConfig {
    /// Largest dt for which the explicit update is monotone.
    pub fn explicit_bound(&self, grid: &Grid1D, p: &Parameters) -> f64 {
        let dx = grid.dx();
        let adv = match (self.frame, self.advection) {
            (Frame::Comoving, Advection::Upwind) => p.c_het * dx,
            _ => 0.0,
        };
        dx * dx / (2.0 * p.d_plus + adv)
    }

    /// Time step that will actually be used for a run of length `t_end`.
    pub fn resolve_dt(&self, grid: &Grid1D, p: &Parameters) -> Result<f64> {
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "dt_safety must lie in (0, 1] (got {})",
                self.dt_safety
            )));
        }
        let bound = self.explicit_bound(grid, p);
        let dt = match (self.dt, self.scheme) {
            (Some(dt), _) => dt,
            (None, Scheme::ExplicitEuler) => self.dt_safety * bound,
            (None, _) => self.dt_safety * grid.dx(),
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be > 0 (got {dt})")));
        }
        if self.scheme == Scheme::ExplicitEuler && dt > bound * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, bound });
        }
        Ok(dt)
    }
}

/// Cumulative out-of-range corrections applied after steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClipStats {
    pub count: usize,
    pub total: f64,
}

const CLIP_LO: f64 = -1e-9;
const CLIP_HI: f64 = 1.0 + 1e-9;
// Magnitudes below this are set to zero to keep arithmetic out of the subnormal range.
const FLUSH: f64 = 1e-280;

/// Owns the buffers for one time integration.
pub struct Solver<'a> {
    p: Parameters,
    chi: &'a ChiProfile,
    cfg: SolverConfig,
    grid: Grid1D,
    xs: Vec<f64>,
    u: Vec<f64>,
    next: Vec<f64>,
    chi_now: Vec<f64>,
    chi_next: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    scratch: Vec<f64>,
    band_now: Option<(usize, usize)>,
    band_next: Option<(usize, usize)>,
    t: f64,
    dt: f64,
    steps: usize,
    clip: ClipStats,
}

impl<'a> Solver<'a> {
    pub fn new(f0: Field, cfg: SolverConfig, p: &Parameters, chi: &'a ChiProfile) -> Result<Self> {
        p.validate()?;
        f0.grid.validate()?;
        if !chi.is_smooth() {
            return Err(Error::InvalidProfile(
                "the step profile is not admitted by the PDE solver".into(),
            ));
        }
        if f0.values.len() != f0.grid.nx {
            return Err(Error::InvalidConfig("field length does not match its grid".into()));
        }
        let dt = cfg.resolve_dt(&f0.grid, p)?;
        let n = f0.grid.nx;
        let xs = f0.grid.points();
        let mut chi_now = vec![0.0; n];
        let shift = match cfg.frame {
            Frame::Lab => p.c_het * f0.t,
            Frame::Comoving => 0.0,
        };
        chi.fill_shifted(&xs, shift, &mut chi_now);
        Ok(Solver {
            p: *p,
            chi,
            cfg,
            grid: f0.grid,
            xs,
            next: vec![0.0; n],
            chi_next: chi_now.clone(),
            chi_now,
            u: f0.values,
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            scratch: Vec::with_capacity(n),
            band_now: None,
            band_next: None,
            t: f0.t,
            dt,
            steps: 0,
            clip: ClipStats::default(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Shrink the step so that `t_end` is hit exactly after a whole number of steps.
    pub fn fit_dt_to(&mut self, duration: f64) -> usize {
        let n = (duration / self.dt - 1e-9).ceil().max(1.0) as usize;
        self.dt = duration / n as f64;
        n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn clip_stats(&self) -> ClipStats {
        self.clip
    }

    pub fn field(&self) -> Field {
        Field {
            grid: self.grid,
            t: self.t,
            values: self.u.clone(),
        }
    }

    /// Index range of nodes whose χ is not saturated at time `t`.
    fn active_band(&self, t: f64) -> Option<(usize, usize)> {
        let w = self.chi.saturation_halfwidth()?;
        let shift = self.p.c_het * t;
        let (x0, dx, n) = (self.grid.x_min, self.grid.dx(), self.grid.nx);
        let last = (n - 1) as f64;
        let lo = ((shift - w - x0) / dx).floor().clamp(0.0, last);
        let hi = ((shift + w - x0) / dx).ceil().clamp(lo, last);
        Some((lo as usize, hi as usize))
    }

    fn refresh_chi(&mut self, t: f64, into_next: bool) {
        if self.cfg.frame == Frame::Comoving {
            return;
        }
        let shift = self.p.c_het * t;
        let band = self.active_band(t);
        let (buf, old) = if into_next {
            (&mut self.chi_next, &mut self.band_next)
        } else {
            (&mut self.chi_now, &mut self.band_now)
        };
        match (band, *old) {
            (Some((a, b)), Some((c, d))) => {
                // Cells leaving the band return to their (exact) limit through eval.
                let (lo, hi) = (a.min(c), b.max(d));
                self.chi.fill_shifted(&self.xs[lo..=hi], shift, &mut buf[lo..=hi]);
            }
            _ => self.chi.fill_shifted(&self.xs, shift, buf),
        }
        *old = band;
    }

    /// Advection contributions (lower, diag, upper) to the operator stencil.
    fn advection_coeffs(&self) -> (f64, f64, f64) {
        if self.cfg.frame == Frame::Lab {
            return (0.0, 0.0, 0.0);
        }
        let (c, dx) = (self.p.c_het, self.grid.dx());
        match self.cfg.advection {
            Advection::Upwind => (0.0, -c / dx, c / dx),
            Advection::Centered => (-c / (2.0 * dx), 0.0, c / (2.0 * dx)),
        }
    }

    /// Coefficients (lower, diag, upper) of the linear operator at node `i`.
    #[inline]
    fn coeffs(&self, chi_i: f64, i: usize) -> (f64, f64, f64) {
        let dx = self.grid.dx();
        let k = chi_i / (dx * dx);
        let (a_lo, a_d, a_up) = self.advection_coeffs();
        let (mut lo, d, mut up) = (k + a_lo, -2.0 * k + a_d, k + a_up);
        if i == 0 {
            // Neumann ghost node u_{-1} = u_1.
            up += lo;
            lo = 0.0;
        }
        (lo, d, up)
    }

    fn apply_operator(&self, chi: &[f64], i: usize) -> f64 {
        let (lo, d, up) = self.coeffs(chi[i], i);
        let left = if i > 0 { self.u[i - 1] } else { 0.0 };
        lo * left + d * self.u[i] + up * self.u[i + 1]
    }

    /// Advance one time step.
    pub fn step(&mut self) -> Result<()> {
        let n = self.grid.nx;
        let dt = self.dt;
        let alpha = self.p.alpha;
        let t_next = self.t + dt;
        match self.cfg.scheme {
            Scheme::ExplicitEuler => {
                self.refresh_chi(self.t, false);
                let u0 = self.u[0];
                self.next[0] =
                    u0 + dt * (self.apply_operator(&self.chi_now, 0) + alpha * u0 * (1.0 - u0));
                let dx = self.grid.dx();
                let inv_dx2 = 1.0 / (dx * dx);
                let (a_lo, a_d, a_up) = self.advection_coeffs();
                let interior = self.next[1..n - 1]
                    .iter_mut()
                    .zip(self.u.windows(3))
                    .zip(&self.chi_now[1..n - 1]);
                for ((out, w), &c) in interior {
                    let (l, m, r) = (w[0], w[1], w[2]);
                    let lin = c * inv_dx2 * (r - 2.0 * m + l) + a_lo * l + a_d * m + a_up * r;
                    *out = m + dt * (lin + alpha * m * (1.0 - m));
                }
                self.next[n - 1] = 0.0;
            }
            Scheme::CrankNicolson | Scheme::BackwardEuler => {
                let theta = if self.cfg.scheme == Scheme::CrankNicolson {
                    0.5
                } else {
                    1.0
                };
                self.refresh_chi(self.t, false);
                self.refresh_chi(t_next, true);
                for i in 0..n - 1 {
                    let u = self.u[i];
                    let explicit = if theta < 1.0 {
                        (1.0 - theta) * dt * self.apply_operator(&self.chi_now, i)
                    } else {
                        0.0
                    };
                    self.next[i] = u + explicit + dt * alpha * u * (1.0 - u);
                    let (lo, d, up) = self.coeffs(self.chi_next[i], i);
                    self.lower[i] = -theta * dt * lo;
                    self.diag[i] = 1.0 - theta * dt * d;
                    self.upper[i] = -theta * dt * up;
                }
                self.lower[n - 1] = 0.0;
                self.diag[n - 1] = 1.0;
                self.upper[n - 1] = 0.0;
                self.next[n - 1] = 0.0;
                solve_tridiagonal(
                    &self.lower,
                    &self.diag,
                    &self.upper,
                    &mut self.next,
                    &mut self.scratch,
                );
            }
        }
        self.steps += 1;
        for v in self.next.iter_mut() {
            if *v >= FLUSH && *v <= CLIP_HI {
                continue;
            }
            if !v.is_finite() {
                return Err(Error::Blowup { step: self.steps });
            }
            if *v < CLIP_LO {
                self.clip.count += 1;
                self.clip.total += CLIP_LO - *v;
                *v = CLIP_LO;
            } else if *v > CLIP_HI {
                self.clip.count += 1;
                self.clip.total += *v - CLIP_HI;
                *v = CLIP_HI;
            } else if v.abs() < FLUSH {
                *v = 0.0;
            }
        }
        std::mem::swap(&mut self.u, &mut self.next);
        if self.cfg.frame == Frame::Lab && self.cfg.scheme != Scheme::ExplicitEuler {
            std::mem::swap(&mut self.chi_now, &mut self.chi_next);
            std::mem::swap(&mut self.band_now, &mut self.band_next);
        }
        self.t = t_next;
        Ok(())
    }
}

/// One step of the configured scheme from `f`.
pub fn step(f: &Field, cfg: &SolverConfig, p: &Parameters, chi: &ChiProfile) -> Result<Field> {
    let mut s = Solver::new(f.clone(), *cfg, p, chi)?;
    s.step()?;
    Ok(s.field())
}

/// Rightmost position where `u` crosses `theta`, linearly interpolated.
///
/// Returns `f64::NEG_INFINITY` when `u` never reaches `theta`.
pub fn front_position(f: &Field, theta: f64) -> f64 {
    let u = &f.values;
    let Some(i) = u.iter().rposition(|&v| v >= theta) else {
        return f64::NEG_INFINITY;
    };
    if i + 1 == u.len() {
        return f.grid.x_max;
    }
    let w = (u[i] - theta) / (u[i] - u[i + 1]);
    f.grid.x(i) + w * f.grid.dx()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub thetas: Vec<f64>,
    pub times: Vec<f64>,
    /// `front_positions[k][j]`: level `thetas[k]` at `times[j]`, in the frame of computation.
    pub front_positions: Vec<Vec<f64>>,
    pub snapshots: Vec<Field>,
    pub frame: Frame,
    pub c_het: f64,
    /// A front came within ten cells of `x_max` before `t_end`.
    pub exhausted: bool,
    pub clip: ClipStats,
    pub dt: f64,
}

impl Trajectory {
    pub fn theta_index(&self, theta: f64) -> Result<usize> {
        self.thetas
            .iter()
            .position(|&t| (t - theta).abs() <= 1e-12)
            .ok_or_else(|| Error::Precondition(format!("level {theta} was not tracked")))
    }

    /// Front positions of level `k` in laboratory coordinates.
    pub fn lab_positions(&self, k: usize) -> Vec<f64> {
        let shift = match self.frame {
            Frame::Lab => 0.0,
            Frame::Comoving => self.c_het,
        };
        self.front_positions[k]
            .iter()
            .zip(&self.times)
            .map(|(x, t)| x + shift * t)
            .collect()
    }
}

fn validate_thetas(thetas: &[f64]) -> Result<()> {
    if thetas.is_empty() {
        return Err(Error::InvalidConfig("at least one tracking level is needed".into()));
    }
    if let Some(t) = thetas.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::InvalidConfig(format!("tracking level {t} outside (0, 1)")));
    }
    Ok(())
}

/// Integrate to `cfg.t_end`, recording front positions for every level.
pub fn evolve(
    f0: Field,
    cfg: &SolverConfig,
    p: &Parameters,
    chi: &ChiProfile,
    thetas: &[f64],
) -> Result<Trajectory> {
    validate_thetas(thetas)?;
    if !(cfg.t_end > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "t_end must be > 0 for a trajectory (got {})",
            cfg.t_end
        )));
    }
    let grid = f0.grid;
    let mut solver = Solver::new(f0, *cfg, p, chi)?;
    let n_steps = solver.fit_dt_to(cfg.t_end);
    let stride = if cfg.snapshot_stride > 0 {
        cfg.snapshot_stride
    } else {
        ((0.25 / solver.dt()).round() as usize).max(1)
    };
    let guard = grid.x_max - 10.0 * grid.dx();
    let mut traj = Trajectory {
        thetas: thetas.to_vec(),
        times: Vec::new(),
        front_positions: vec![Vec::new(); thetas.len()],
        snapshots: Vec::new(),
        frame: cfg.frame,
        c_het: p.c_het,
        exhausted: false,
        clip: ClipStats::default(),
        dt: solver.dt(),
    };
    let record = |s: &Solver, traj: &mut Trajectory| -> bool {
        let f = s.field();
        let mut near_edge = false;
        for (k, &th) in thetas.iter().enumerate() {
            let x = front_position(&f, th);
            near_edge |= x > guard;
            traj.front_positions[k].push(x);
        }
        traj.times.push(f.t);
        if cfg.keep_snapshots {
            traj.snapshots.push(f);
        }
        near_edge
    };
    record(&solver, &mut traj);
    for n in 1..=n_steps {
        solver.step()?;
        if (n % stride == 0 || n == n_steps) && record(&solver, &mut traj) {
            log::warn!("front within 10 cells of x_max at t = {:.3}; stopping early", solver.t());
            traj.exhausted = n < n_steps;
            break;
        }
    }
    traj.clip = solver.clip_stats();
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedFit {
    pub c: f64,
    /// Logarithmic lag coefficient in x = c t − k ln t + b (Bramson fit only).
    pub k: Option<f64>,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
    pub t_from: f64,
    pub t_to: f64,
}

/// Least-squares speed of the level-`theta` front over the final `fit_window_frac` of time.
pub fn estimate_speed(
    traj: &Trajectory,
    theta: f64,
    fit_window_frac: f64,
    bramson: bool,
) -> Result<SpeedFit> {
    if !(fit_window_frac > 0.0 && fit_window_frac <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "fit_window_frac must lie in (0, 1] (got {fit_window_frac})"
        )));
    }
    let k = traj.theta_index(theta)?;
    let xs = traj.lab_positions(k);
    let (Some(&t_first), Some(&t_last)) = (traj.times.first(), traj.times.last()) else {
        return Err(Error::InsufficientSamples { needed: 10, have: 0 });
    };
    let t_from = t_last - fit_window_frac * (t_last - t_first);
    let (ts, ys): (Vec<f64>, Vec<f64>) = traj
        .times
        .iter()
        .zip(&xs)
        .filter(|(t, x)| **t >= t_from && x.is_finite() && (!bramson || **t > 0.0))
        .map(|(t, x)| (*t, *x))
        .unzip();
    if ts.len() < 10 {
        return Err(Error::InsufficientSamples { needed: 10, have: ts.len() });
    }
    if bramson {
        let logs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let coef = least_squares(&[ts.clone(), logs.clone(), vec![1.0; ts.len()]], &ys)?;
        let ym = ys.iter().sum::<f64>() / ys.len() as f64;
        let (mut ss_res, mut ss_tot) = (0.0, 0.0);
        for i in 0..ts.len() {
            let r = ys[i] - (coef[0] * ts[i] + coef[1] * logs[i] + coef[2]);
            ss_res += r * r;
            ss_tot += (ys[i] - ym) * (ys[i] - ym);
        }
        Ok(SpeedFit {
            c: coef[0],
            k: Some(-coef[1]),
            intercept: coef[2],
            r2: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
            n: ts.len(),
            t_from,
            t_to: t_last,
        })
    } else {
        let f = fit_line(&ts, &ys)?;
        Ok(SpeedFit {
            c: f.slope,
            k: None,
            intercept: f.intercept,
            r2: f.r2,
            n: f.n,
            t_from,
            t_to: t_last,
        })
    }
}

/// Everything needed to turn parameters into a measured spreading speed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub grid: Grid1D,
    pub bump: Bump,
    pub solver: SolverConfig,
    pub thetas: Vec<f64>,
    /// Level used for the reported speed; must be one of `thetas`.
    pub theta: f64,
    pub fit_window_frac: f64,
    pub bramson: bool,
}

impl Experiment {
    /// dx = 0.1 on [−100, 450], t_end = 150, explicit Euler, levels 0.5 and 0.01.
    pub fn desk_defaults() -> Self {
        Experiment {
            grid: Grid1D::new(-100.0, 450.0, 5501).expect("valid default grid"),
            bump: Bump::default(),
            solver: SolverConfig::default(),
            thetas: vec![0.5, 0.01],
            theta: 0.5,
            fit_window_frac: 0.5,
            bramson: false,
        }
    }

    pub fn run(&self, p: &Parameters, chi: &ChiProfile) -> Result<ExperimentOutcome> {
        let f0 = initial_bump(&self.grid, self.bump.center, self.bump.halfwidth, self.bump.height)?;
        let trajectory = evolve(f0, &self.solver, p, chi, &self.thetas)?;
        let fit = estimate_speed(&trajectory, self.theta, self.fit_window_frac, self.bramson)?;
        Ok(ExperimentOutcome { trajectory, fit })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutcome {
    pub trajectory: Trajectory,
    pub fit: SpeedFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub c_het: f64,
    pub c_theory: Option<f64>,
    pub c_estimated: Option<f64>,
    pub rel_err: Option<f64>,
    pub exhausted: bool,
    pub error: Option<String>,
}

/// One experiment per c_het; failures become flagged rows. Rows keep input order.
///
/// Runs on the current rayon pool; wrap the call in `ThreadPool::install` to bound it.
pub fn sweep_chet<B>(
    p_base: &Parameters,
    chet_values: &[f64],
    experiment: &Experiment,
    chi_builder: B,
) -> Vec<SweepRow>
where
    B: Fn(&Parameters) -> Result<ChiProfile> + Sync,
{
    chet_values
        .par_iter()
        .map(|&c_het| {
            let p = p_base.with_c_het(c_het);
            let c_theory = speeds::spreading_speed(&p).ok().map(|r| r.c_star);
            let outcome = p
                .validate()
                .and_then(|_| chi_builder(&p))
                .and_then(|chi| experiment.run(&p, &chi));
            match outcome {
                Ok(o) => {
                    let c_est = o.fit.c;
                    SweepRow {
                        c_het,
                        c_theory,
                        c_estimated: Some(c_est),
                        rel_err: c_theory.map(|ct| (c_est - ct).abs() / ct),
                        exhausted: o.trajectory.exhausted,
                        error: None,
                    }
                }
                Err(e) => SweepRow {
                    c_het,
                    c_theory,
                    c_estimated: None,
                    rel_err: None,
                    exhausted: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}
