//! Run configuration: one JSON document, optionally patched by `--set` overrides.

use std::path::{Path, PathBuf};

use kpp_shift::eigen;
use kpp_shift::pde::{Advection, Bump, Experiment, Frame, Grid1D, Scheme, SolverConfig};
use kpp_shift::verify::CheckConfig;
use kpp_shift::waves::RelaxConfig;
use kpp_shift::{Case, Parameters};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const OUT_ENV: &str = "KPP_SHIFT_OUT";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub parameters: ParametersBlock,
    pub grid: GridBlock,
    pub time: TimeBlock,
    pub tracking: TrackingBlock,
    pub sweep: SweepBlock,
    pub output: OutputBlock,
    pub wave: WaveBlock,
    pub eigen: EigenBlock,
    pub verify: VerifyBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParametersBlock {
    pub alpha: f64,
    pub d_minus: f64,
    pub d_plus: f64,
    pub c_het: f64,
    pub case: Case,
    pub chi_lambda: f64,
    /// Admit d_minus = d_plus.
    pub degenerate: bool,
}

impl Default for ParametersBlock {
    fn default() -> Self {
        ParametersBlock {
            alpha: 1.0,
            d_minus: 0.25,
            d_plus: 1.0,
            c_het: 1.5,
            case: Case::Decreasing,
            chi_lambda: 2.0,
            degenerate: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock { x_min: -100.0, x_max: 450.0, nx: 5501 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeBlock {
    pub dt_safety: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub frame: Frame,
}

impl Default for TimeBlock {
    fn default() -> Self {
        let s = SolverConfig::default();
        TimeBlock { dt_safety: s.dt_safety, t_end: s.t_end, scheme: s.scheme, frame: s.frame }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackingBlock {
    /// The first level is the one whose speed is reported.
    pub theta_levels: Vec<f64>,
    pub fit_window_frac: f64,
    pub bramson: bool,
}

impl Default for TrackingBlock {
    fn default() -> Self {
        TrackingBlock { theta_levels: vec![0.5, 0.01], fit_window_frac: 0.5, bramson: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub chet_values: Vec<f64>,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock { chet_values: (1..=18).map(|k| 0.5 * k as f64).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub out_dir: PathBuf,
    pub emit_svg: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { out_dir: PathBuf::from("out"), emit_svg: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveBlock {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub relax: RelaxConfig,
    /// ε of the shooting problem for increasing χ; defaults to 0.02 α.
    pub phi_eps: Option<f64>,
    pub phi_range: (f64, f64),
    pub phi_dx: f64,
}

impl Default for WaveBlock {
    fn default() -> Self {
        let g = RelaxConfig::default_grid();
        WaveBlock {
            x_min: g.x_min,
            x_max: g.x_max,
            dx: g.dx(),
            relax: RelaxConfig::default(),
            phi_eps: None,
            phi_range: (-80.0, 80.0),
            phi_dx: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenBlock {
    pub r_values: Vec<f64>,
    pub dx_max: f64,
    pub tol: f64,
}

impl Default for EigenBlock {
    fn default() -> Self {
        EigenBlock {
            r_values: eigen::DEFAULT_RADII.to_vec(),
            dx_max: eigen::DEFAULT_DX,
            tol: eigen::DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyBlock {
    /// Also check each builder with its exponents scaled by 0.9 and 1.1.
    pub mutations: bool,
    pub check: CheckConfig,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        VerifyBlock { mutations: true, check: CheckConfig::default() }
    }
}

/// A configuration whose blocks have passed every module precondition.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub raw: RunConfig,
    pub params: Parameters,
    pub experiment: Experiment,
    pub wave_grid: Grid1D,
    pub out_dir: PathBuf,
}

fn invalid(block: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{block}: {msg}"))
}

impl RunConfig {
    pub fn params(&self) -> Parameters {
        let b = &self.parameters;
        Parameters {
            alpha: b.alpha,
            d_minus: b.d_minus,
            d_plus: b.d_plus,
            c_het: b.c_het,
            case: b.case,
            chi_steepness: b.chi_lambda,
            degenerate: b.degenerate,
        }
    }

    pub fn resolve(self, out_override: Option<PathBuf>) -> Result<Resolved, CliError> {
        let params = self.params();
        params.validate().map_err(|e| invalid("parameters", e))?;

        let g = &self.grid;
        let grid = Grid1D::new(g.x_min, g.x_max, g.nx).map_err(|e| invalid("grid", e))?;
        let t = &self.time;
        if !(t.t_end > 0.0) {
            return Err(invalid("time", format!("t_end must be > 0 (got {})", t.t_end)));
        }
        let solver = SolverConfig {
            dt_safety: t.dt_safety,
            t_end: t.t_end,
            scheme: t.scheme,
            frame: t.frame,
            advection: Advection::Upwind,
            ..SolverConfig::default()
        };
        solver.resolve_dt(&grid, &params).map_err(|e| invalid("time", e))?;

        let tr = &self.tracking;
        let theta = *tr
            .theta_levels
            .first()
            .ok_or_else(|| invalid("tracking", "theta_levels must not be empty"))?;
        if let Some(th) = tr.theta_levels.iter().find(|th| !(**th > 0.0 && **th < 1.0)) {
            return Err(invalid("tracking", format!("level {th} outside (0, 1)")));
        }
        if !(tr.fit_window_frac > 0.0 && tr.fit_window_frac <= 1.0) {
            return Err(invalid(
                "tracking",
                format!("fit_window_frac must lie in (0, 1] (got {})", tr.fit_window_frac),
            ));
        }

        let sw = &self.sweep.chet_values;
        if sw.is_empty() {
            return Err(invalid("sweep", "chet_values must not be empty"));
        }
        if let Some(c) = sw.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(invalid("sweep", format!("c_het = {c} must be finite and >= 0")));
        }

        let w = &self.wave;
        let wave_grid =
            Grid1D::with_spacing(w.x_min, w.x_max, w.dx).map_err(|e| invalid("wave", e))?;
        if !(w.relax.dt > 0.0 && w.relax.t_max > 0.0 && w.relax.tol > 0.0) {
            return Err(invalid("wave", "relax.dt, relax.t_max and relax.tol must be > 0"));
        }
        if !(w.phi_range.1 > w.phi_range.0 && w.phi_dx > 0.0) {
            return Err(invalid("wave", "phi_range must be increasing and phi_dx > 0"));
        }

        let e = &self.eigen;
        if e.r_values.len() < 3 || !e.r_values.windows(2).all(|p| p[0] > 0.0 && p[1] > p[0]) {
            return Err(invalid("eigen", "r_values needs at least three increasing positive radii"));
        }
        if !(e.dx_max > 0.0 && e.tol > 0.0) {
            return Err(invalid("eigen", "dx_max and tol must be > 0"));
        }

        let c = &self.verify.check;
        if !(c.n_times > 0 && c.n_positions > 1 && c.t_range.1 >= c.t_range.0 && c.near_width > 0.0) {
            return Err(invalid("verify", "check needs n_times > 0, n_positions > 1 and a valid t_range"));
        }

        let experiment = Experiment {
            grid,
            bump: Bump::default(),
            solver,
            thetas: tr.theta_levels.clone(),
            theta,
            fit_window_frac: tr.fit_window_frac,
            bramson: tr.bramson,
        };
        let out_dir = out_override.unwrap_or_else(|| self.output.out_dir.clone());
        Ok(Resolved { raw: self, params, experiment, wave_grid, out_dir })
    }
}

/// Parse `a.b.c=value`; the value is JSON when it parses as JSON and a string otherwise.
pub fn parse_override(s: &str) -> Result<(Vec<String>, Value), CliError> {
    let (path, value) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{s}` is not of the form key.path=value")))?;
    let keys: Vec<String> = path.split('.').map(str::to_string).collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("override `{s}` has an empty key")));
    }
    let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((keys, value))
}

pub fn apply_override(doc: &mut Value, keys: &[String], value: Value) -> Result<(), CliError> {
    let mut node = doc;
    for (i, key) in keys.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            CliError::Config(format!("`{}` is not an object", keys[..i].join(".")))
        })?;
        if i + 1 == keys.len() {
            obj.insert(key.clone(), value);
            return Ok(());
        }
        node = obj.entry(key.clone()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("keys is non-empty")
}

/// Read `path` (or start from defaults), apply overrides, then deserialize strictly.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("malformed JSON in {}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    for s in overrides {
        let (keys, value) = parse_override(s)?;
        apply_override(&mut doc, &keys, value)?;
    }
    serde_json::from_value(doc).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_benchmark() {
        let cfg = load(None, &[]).unwrap();
        assert_eq!(cfg.params(), Parameters::benchmark(Case::Decreasing, 1.5));
        let r = cfg.resolve(None).unwrap();
        assert_eq!(r.experiment, Experiment::desk_defaults());
        assert_eq!(r.raw.sweep.chet_values.len(), 18);
    }

    #[test]
    fn overrides_patch_nested_keys() {
        let sets = [
            "parameters.c_het=3".to_string(),
            "parameters.case=CaseII".to_string(),
            "verify.check.n_times=10".to_string(),
            "sweep.chet_values=[1,2]".to_string(),
        ];
        let cfg = load(None, &sets).unwrap();
        assert_eq!(cfg.parameters.c_het, 3.0);
        assert_eq!(cfg.parameters.case, Case::Increasing);
        assert_eq!(cfg.verify.check.n_times, 10);
        assert_eq!(cfg.sweep.chet_values, vec![1.0, 2.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load(None, &["parameters.beta=1".into()]).unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("beta")), "{err}");
        assert!(load(None, &["nonsense=1".into()]).is_err());
        assert!(load(None, &["parameters".into()]).is_err());
    }

    #[test]
    fn preconditions_are_checked_at_load() {
        let bad = |set: &str| load(None, &[set.to_string()]).unwrap().resolve(None).unwrap_err();
        assert!(bad("parameters.d_minus=2").to_string().contains("d_minus"));
        assert!(bad("time.t_end=0").to_string().contains("t_end"));
        assert!(bad("tracking.theta_levels=[1.5]").to_string().contains("1.5"));
        assert!(bad("eigen.r_values=[10,20]").to_string().contains("three"));
        assert!(bad("time.dt_safety=3").to_string().contains("time"));
    }

    #[test]
    fn serialized_defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
