//! One function per subcommand. Each writes its files and returns a JSON
//! summary for stdout.

use std::collections::BTreeMap;

use kpp_shift::pde::{self, ClipStats, SpeedFit, SweepRow};
use kpp_shift::speeds::{self, Regime, SpeedReport};
use kpp_shift::verify::{self, BuilderOutcome, Verdict};
use kpp_shift::waves::{self, DecayFit};
use kpp_shift::{eigen, Case, ChiProfile, Parameters};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::Resolved;
use crate::output::{csv, ensure_dir, fmt_g, sweep_svg, write_json, write_text};
use crate::CliError;

pub fn speeds(cfg: &Resolved) -> Result<Value, CliError> {
    let report: SpeedReport = speeds::spreading_speed(&cfg.params)?;
    ensure_dir(&cfg.out_dir)?;
    write_json(&cfg.out_dir, "speeds.json", &report)?;
    Ok(serde_json::to_value(report).expect("report serializes"))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub case: Case,
    pub c_het: f64,
    pub theta: f64,
    pub c_est: f64,
    pub c_theory: Option<f64>,
    pub rel_err: Option<f64>,
    pub exhausted: bool,
    pub t_final: f64,
    pub dt: f64,
    pub clip: ClipStats,
    pub fit: SpeedFit,
}

pub fn simulate(cfg: &Resolved) -> Result<Value, CliError> {
    let p = &cfg.params;
    let chi = ChiProfile::logistic(p)?;
    let out = cfg.experiment.run(p, &chi)?;
    let traj = &out.trajectory;
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(traj.thetas.iter().map(|th| format!("x_front_theta{}", fmt_g(*th))))
        .collect();
    let lab: Vec<Vec<f64>> = (0..traj.thetas.len()).map(|k| traj.lab_positions(k)).collect();
    let rows = traj
        .times
        .iter()
        .enumerate()
        .map(|(j, &t)| std::iter::once(t).chain(lab.iter().map(|col| col[j])).collect());
    let c_theory = speeds::spreading_speed(p).ok().map(|r| r.c_star);
    let summary = SimulationSummary {
        case: p.case,
        c_het: p.c_het,
        theta: cfg.experiment.theta,
        c_est: out.fit.c,
        c_theory,
        rel_err: c_theory.map(|c| (out.fit.c - c).abs() / c),
        exhausted: traj.exhausted,
        t_final: traj.times.last().copied().unwrap_or(0.0),
        dt: traj.dt,
        clip: traj.clip,
        fit: out.fit,
    };
    if summary.exhausted {
        log::warn!("front reached the right boundary guard; the speed estimate covers a shortened run");
    }
    ensure_dir(&cfg.out_dir)?;
    write_text(&cfg.out_dir, "front.csv", &csv(&header, rows))?;
    write_json(&cfg.out_dir, "summary.json", &summary)?;
    Ok(serde_json::to_value(summary).expect("summary serializes"))
}

pub fn sweep(cfg: &Resolved) -> Result<Value, CliError> {
    let chets = &cfg.raw.sweep.chet_values;
    let rows: Vec<SweepRow> =
        pde::sweep_chet(&cfg.params, chets, &cfg.experiment, ChiProfile::logistic);
    for r in rows.iter().filter(|r| r.error.is_some() || r.exhausted) {
        log::warn!(
            "c_het = {}: {}",
            r.c_het,
            r.error.as_deref().unwrap_or("front reached the boundary guard")
        );
    }
    let nan = f64::NAN;
    let header = ["c_het", "c_theory", "c_estimated", "rel_err"].map(String::from);
    let table = rows.iter().map(|r| {
        vec![
            r.c_het,
            r.c_theory.unwrap_or(nan),
            r.c_estimated.unwrap_or(nan),
            r.rel_err.unwrap_or(nan),
        ]
    });
    ensure_dir(&cfg.out_dir)?;
    write_text(&cfg.out_dir, "sweep.csv", &csv(&header, table))?;
    write_json(&cfg.out_dir, "sweep.json", &rows)?;
    if cfg.raw.output.emit_svg {
        let x: Vec<f64> = rows.iter().map(|r| r.c_het).collect();
        let th: Vec<Option<f64>> = rows.iter().map(|r| r.c_theory).collect();
        let est: Vec<Option<f64>> = rows.iter().map(|r| r.c_estimated).collect();
        write_text(&cfg.out_dir, "sweep.svg", &sweep_svg(&x, &th, &est))?;
    }
    let ok = rows.iter().filter(|r| r.c_estimated.is_some()).count();
    if ok == 0 {
        return Err(CliError::Runtime("every sweep row failed".into()));
    }
    Ok(json!({ "rows": rows.len(), "succeeded": ok, "failed": rows.len() - ok }))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WaveMeta {
    pub c_het: f64,
    pub residual: f64,
    pub lambda_fit: Option<f64>,
    /// Steep decay root of the linearization at +∞.
    pub lambda_theory: f64,
    pub window: (f64, f64),
    pub decay_fit: Option<DecayFit>,
    pub monotone: bool,
    pub in_range: bool,
    pub converged: bool,
    pub t_relax: f64,
    pub increment: f64,
    pub eps: f64,
    pub tau: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiMeta {
    pub c_het: f64,
    pub x_eps: f64,
    pub eps: f64,
    pub asymptotic_exponent: f64,
    pub residual: f64,
}

pub fn wave(cfg: &Resolved) -> Result<Value, CliError> {
    let p = &cfg.params;
    let chi = ChiProfile::logistic(p)?;
    let (_, c_plus) = speeds::linear_speeds(p);
    let wb = &cfg.raw.wave;
    ensure_dir(&cfg.out_dir)?;
    if p.case == Case::Increasing && p.c_het > c_plus {
        let eps = wb.phi_eps.unwrap_or(0.02 * p.alpha);
        let phi = waves::phi_shoot(p, &chi, eps, wb.phi_range.0, wb.phi_range.1, wb.phi_dx)?;
        let header = ["x", "phi"].map(String::from);
        let rows = phi.x.iter().zip(&phi.phi).map(|(x, v)| vec![*x, *v]);
        write_text(&cfg.out_dir, "phi.csv", &csv(&header, rows))?;
        let meta = PhiMeta {
            c_het: p.c_het,
            x_eps: phi.x_eps,
            eps: phi.eps,
            asymptotic_exponent: phi.asymptotic_exponent,
            residual: phi.residual,
        };
        write_json(&cfg.out_dir, "phi_meta.json", &meta)?;
        return Ok(serde_json::to_value(meta).expect("meta serializes"));
    }
    let w = waves::relax_to_wave(p, &chi, cfg.wave_grid, &wb.relax)?;
    let header = ["x", "U"].map(String::from);
    let rows = w.grid.points().into_iter().zip(&w.u).map(|(x, u)| vec![x, *u]);
    write_text(&cfg.out_dir, "wave.csv", &csv(&header, rows))?;
    let meta = WaveMeta {
        c_het: p.c_het,
        residual: w.residual,
        lambda_fit: w.decay_fit.map(|f| f.lambda),
        lambda_theory: speeds::decay_rates(p)?.1,
        window: wb.relax.decay_window,
        decay_fit: w.decay_fit,
        monotone: w.monotone,
        in_range: w.in_range,
        converged: w.converged,
        t_relax: w.t_relax,
        increment: w.increment,
        eps: w.eps,
        tau: w.tau,
    };
    if !w.converged {
        log::warn!("relaxation stopped at t = {} before reaching the increment tolerance", w.t_relax);
    }
    write_json(&cfg.out_dir, "wave_meta.json", &meta)?;
    Ok(serde_json::to_value(meta).expect("meta serializes"))
}

pub fn eigen(cfg: &Resolved) -> Result<Value, CliError> {
    let p = &cfg.params;
    let chi = ChiProfile::logistic(p)?;
    let e = &cfg.raw.eigen;
    let res = eigen::generalized_eig_with(p, &chi, &e.r_values, e.tol, e.dx_max)?;
    let header = ["r", "mu_d"].map(String::from);
    let rows = res.r_values.iter().zip(&res.mu_d).map(|(r, m)| vec![*r, *m]);
    let mut text = csv(&header, rows);
    text.push_str(&format!("#mu_star_estimate,{}\n", fmt_g(res.mu_star_estimate)));
    ensure_dir(&cfg.out_dir)?;
    write_text(&cfg.out_dir, "eigen.csv", &text)?;
    let sign = (p.case == Case::Decreasing).then(|| eigen::sign_check(p, &chi));
    Ok(json!({
        "r_values": res.r_values,
        "mu_d": res.mu_d,
        "mu_star_estimate": res.mu_star_estimate,
        "converged": res.converged,
        "richardson": res.richardson,
        "sign_check": sign,
    }))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Skipped {
    pub builder: String,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub parameters: Parameters,
    pub regime: Option<Regime>,
    pub c_star: Option<f64>,
    pub all_pass: bool,
    pub builders: Vec<BuilderOutcome>,
    pub skipped: Vec<Skipped>,
    /// Per builder: whether some mutated exponent broke the inequality.
    pub mutation_sensitivity: BTreeMap<String, bool>,
}

pub fn verify(cfg: &Resolved) -> Result<Value, CliError> {
    let p = &cfg.params;
    let suite = verify::suite_for(p)?;
    let vb = &cfg.raw.verify;
    let builders: Vec<BuilderOutcome> = suite
        .entries
        .into_iter()
        .map(|mut e| {
            e.check = vb.check;
            let o = verify::run_entry(&e, vb.mutations);
            log::info!(
                "{:<30} {:?} worst residual {:.3e}",
                o.name,
                o.report.verdict,
                o.report.worst_residual_value
            );
            o
        })
        .collect();
    let speed = speeds::spreading_speed(p).ok();
    let report = VerifyReport {
        parameters: *p,
        regime: speed.as_ref().map(|s| s.regime),
        c_star: speed.as_ref().map(|s| s.c_star),
        all_pass: builders.iter().all(|b| b.report.verdict == Verdict::Pass),
        mutation_sensitivity: verify::mutation_sensitivity(&builders),
        skipped: suite
            .skipped
            .into_iter()
            .map(|(builder, reason)| Skipped { builder, reason })
            .collect(),
        builders,
    };
    for s in &report.skipped {
        log::warn!("{} skipped: {}", s.builder, s.reason);
    }
    ensure_dir(&cfg.out_dir)?;
    write_json(&cfg.out_dir, "verify.json", &report)?;
    let verdicts: BTreeMap<&str, Verdict> =
        report.builders.iter().map(|b| (b.name.as_str(), b.report.verdict)).collect();
    if !report.all_pass {
        let failed: Vec<&str> = report
            .builders
            .iter()
            .filter(|b| b.report.verdict != Verdict::Pass)
            .map(|b| b.name.as_str())
            .collect();
        return Err(CliError::Verdict(format!("failed: {}", failed.join(", "))));
    }
    Ok(json!({ "all_pass": report.all_pass, "verdicts": verdicts, "skipped": report.skipped }))
}
