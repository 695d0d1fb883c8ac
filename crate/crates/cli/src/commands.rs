//! Subcommand implementations.
//!
//! Defaults: `t-max` and `horizon` 50 (10 for `hamiltonian`), `output-dt`
//! 0.01, `tol` 1e-4, base volumes 1, integrator and event settings from
//! [`IntegratorSettings::default`] and [`EventSpec::default`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use efl_core::models::{self, BackgroundModel};
use efl_core::{
    bisect_critical, classification_settings, classify, hamiltonian_audit, integrate, sweep, CurvatureSign,
    EventSpec, FlowConfig, IntegratorSettings, TerminationKind,
};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::{
    BackgroundArgs, BisectArgs, ClassifyArgs, Command, HamiltonianArgs, SimulateArgs, SweepArgs,
};
use crate::output::{self, document, render, to_value, ConfigEcho, Manifest};

pub const DEFAULT_HORIZON: f64 = 50.0;
pub const DEFAULT_AUDIT_HORIZON: f64 = 10.0;
pub const DEFAULT_BISECT_TOL: f64 = 1e-4;
pub const THREADS_ENV: &str = "EFL_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTEGRATOR: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config file {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] efl_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => EXIT_USAGE,
            CliError::Core(e) if e.is_precondition() => EXIT_PRECONDITION,
            CliError::Core(efl_core::Error::Domain { .. } | efl_core::Error::InvalidConfig(_)) => EXIT_USAGE,
            CliError::Core(_) | CliError::Io { .. } => EXIT_FAILURE,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn required<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

/// Overlays the flags given on the command line onto the `--config` file.
fn merge<A: Serialize + DeserializeOwned>(cli: A, config: Option<&Path>) -> CliResult<A> {
    let Some(path) = config else {
        return Ok(cli);
    };
    let config_err = |message: String| CliError::Config {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| config_err(e.to_string()))?;
    let mut base: Map<String, Value> = match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => map,
        Ok(_) => return Err(config_err("expected a JSON object".into())),
        Err(e) => return Err(config_err(e.to_string())),
    };
    if let Value::Object(flags) = serde_json::to_value(&cli).expect("flags serialize") {
        base.extend(flags);
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| config_err(e.to_string()))
}

fn emit_stdout(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|()| out.flush())
        .map_err(io_err("writing stdout"))
}

/// Runs one subcommand and returns the process exit code.
pub fn execute(command: Command) -> CliResult<i32> {
    let started = Instant::now();
    let name = command.name();
    match command {
        Command::Simulate(a) => {
            let path = a.config.config.clone();
            simulate(merge(a, path.as_deref())?, started)
        }
        Command::Classify(a) => {
            let path = a.config.config.clone();
            run_classify(merge(a, path.as_deref())?, name, started)
        }
        Command::Bisect(a) => {
            let path = a.config.config.clone();
            run_bisect(merge(a, path.as_deref())?, name, started)
        }
        Command::Sweep(a) => {
            let path = a.config.config.clone();
            run_sweep(merge(a, path.as_deref())?, name, started)
        }
        Command::Hamiltonian(a) => {
            let path = a.config.config.clone();
            run_hamiltonian(merge(a, path.as_deref())?, name, started)
        }
        Command::Background(a) => {
            let path = a.config.config.clone();
            run_background(merge(a, path.as_deref())?, name, started)
        }
    }
}

fn flow_config(n: Option<u32>, curvature: Option<CurvatureSign>, s: f64, vol_m: f64, vol_n: f64) -> CliResult<FlowConfig> {
    let n = required(n, "n")?;
    let sign = required(curvature, "curvature")?;
    Ok(FlowConfig::with_dimension(n, sign, s)?.with_volumes(vol_m, vol_n)?)
}

fn simulate(mut a: SimulateArgs, started: Instant) -> CliResult<i32> {
    let defaults = IntegratorSettings::default();
    let default_events = EventSpec::default();
    let s = required(a.s, "s")?;
    a.vol_m.get_or_insert(1.0);
    a.vol_n.get_or_insert(1.0);
    let cfg = flow_config(a.n, a.curvature, s, a.vol_m.unwrap(), a.vol_n.unwrap())?;
    let settings = IntegratorSettings {
        rel_tol: *a.rel_tol.get_or_insert(defaults.rel_tol),
        abs_tol: *a.abs_tol.get_or_insert(defaults.abs_tol),
        max_step: *a.max_step.get_or_insert(defaults.max_step),
        min_step: *a.min_step.get_or_insert(defaults.min_step),
        t_max: *a.t_max.get_or_insert(DEFAULT_HORIZON),
        output_dt: *a.output_dt.get_or_insert(defaults.output_dt),
    };
    let events = EventSpec {
        y_floor: *a.y_floor.get_or_insert(default_events.y_floor),
        velocity_floor: *a.velocity_floor.get_or_insert(default_events.velocity_floor),
    };

    let traj = integrate(&cfg, &settings, &events)?;
    let mut csv = Vec::new();
    output::write_trajectory_csv(&traj, &mut csv).map_err(|e| CliError::Io {
        context: "rendering CSV".into(),
        source: e.into(),
    })?;

    let result = json!({
        "termination": to_value(&traj.termination),
        "samples": traj.samples.len(),
        "csv": a.out.as_ref().map(|p| p.display().to_string()),
    });
    let diagnostics = to_value(&json!({
        "accepted_steps": traj.steps.len(),
        "max_abs_ham_residual": traj.max_abs_ham_residual(),
        "max_abs_step_first_integral": traj.max_abs_step_first_integral(),
    }));
    let echo = ConfigEcho {
        flow: Some(cfg),
        integrator: Some(settings),
        events: Some(events),
    };
    let doc = render(&document(result, diagnostics, &Manifest::new("simulate", &a, echo, started)));

    match &a.out {
        Some(path) => {
            fs::write(path, &csv).map_err(io_err(format!("writing {}", path.display())))?;
            let manifest_path = manifest_path(path);
            fs::write(&manifest_path, &doc).map_err(io_err(format!("writing {}", manifest_path.display())))?;
            emit_stdout(&doc)?;
        }
        None => {
            emit_stdout(&String::from_utf8(csv).expect("CSV output is ASCII"))?;
            let mut err = std::io::stderr().lock();
            err.write_all(doc.as_bytes()).map_err(io_err("writing stderr"))?;
        }
    }

    Ok(if traj.termination.kind() == TerminationKind::StepSizeCollapse {
        EXIT_INTEGRATOR
    } else {
        EXIT_OK
    })
}

/// `PATH.manifest.json` next to the CSV.
pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Moves the `diagnostics` member of a serialized result next to it.
fn split_diagnostics(mut result: Value) -> (Value, Value) {
    let diagnostics = result
        .as_object_mut()
        .and_then(|m| m.remove("diagnostics"))
        .unwrap_or_else(|| json!({}));
    (result, diagnostics)
}

fn finish<A: Serialize>(name: &str, args: &A, echo: ConfigEcho, result: Value, diagnostics: Value, started: Instant) -> CliResult<i32> {
    let doc = document(result, diagnostics, &Manifest::new(name, args, echo, started));
    emit_stdout(&render(&doc))?;
    Ok(EXIT_OK)
}

fn run_classify(mut a: ClassifyArgs, name: &str, started: Instant) -> CliResult<i32> {
    let s = required(a.s, "s")?;
    let horizon = *a.horizon.get_or_insert(DEFAULT_HORIZON);
    let cfg = flow_config(a.n, a.curvature, s, *a.vol_m.get_or_insert(1.0), *a.vol_n.get_or_insert(1.0))?;
    let c = classify(&cfg, horizon)?;
    let (result, diagnostics) = split_diagnostics(to_value(&c));
    let echo = ConfigEcho {
        flow: Some(cfg),
        integrator: Some(classification_settings(horizon)),
        events: Some(EventSpec::default()),
    };
    finish(name, &a, echo, result, diagnostics, started)
}

fn run_bisect(mut a: BisectArgs, name: &str, started: Instant) -> CliResult<i32> {
    let n = required(a.n, "n")?;
    let sign = required(a.curvature, "curvature")?;
    let lo = required(a.lo, "lo")?;
    let hi = required(a.hi, "hi")?;
    let tol = *a.tol.get_or_insert(DEFAULT_BISECT_TOL);
    let horizon = *a.horizon.get_or_insert(DEFAULT_HORIZON);
    // Base volumes do not enter the dynamics; they are accepted for a uniform
    // flag set and echoed.
    let (vol_m, vol_n) = (*a.vol_m.get_or_insert(1.0), *a.vol_n.get_or_insert(1.0));
    FlowConfig::with_dimension(n, sign, lo)?.with_volumes(vol_m, vol_n)?;
    let r = bisect_critical(n, sign, lo, hi, tol, horizon)?;
    let diagnostics = to_value(&json!({
        "midpoint": r.midpoint(),
        "width": r.bracket.1 - r.bracket.0,
        "distance_to_analytic": r.analytic_threshold.map(|t| (r.midpoint() - t).abs()),
    }));
    let echo = ConfigEcho {
        flow: None,
        integrator: Some(classification_settings(horizon)),
        events: Some(EventSpec::default()),
    };
    finish(name, &a, echo, to_value(&r), diagnostics, started)
}

/// Inclusive, evenly spaced grid.
pub fn linspace(lo: f64, hi: f64, steps: u32) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        k => (0..k)
            .map(|i| {
                if i == k - 1 {
                    hi
                } else {
                    lo + (hi - lo) * f64::from(i) / f64::from(k - 1)
                }
            })
            .collect(),
    }
}

/// Thread cap from `EFL_THREADS`; `None` if unset.
pub fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Usage(format!("{THREADS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

fn run_sweep(mut a: SweepArgs, name: &str, started: Instant) -> CliResult<i32> {
    let n = required(a.n, "n")?;
    let sign = required(a.curvature, "curvature")?;
    let horizon = *a.horizon.get_or_insert(DEFAULT_HORIZON);
    let (vol_m, vol_n) = (*a.vol_m.get_or_insert(1.0), *a.vol_n.get_or_insert(1.0));
    let grid = match &a.grid {
        Some(g) => g.clone(),
        None => {
            let steps = required(a.steps, "steps")?;
            if steps == 0 {
                return Err(CliError::Usage("--steps must be at least 1".into()));
            }
            linspace(required(a.s_min, "s-min")?, required(a.s_max, "s-max")?, steps)
        }
    };
    if grid.is_empty() {
        return Err(CliError::Usage("empty parameter grid".into()));
    }
    for &s in &grid {
        FlowConfig::with_dimension(n, sign, s)?.with_volumes(vol_m, vol_n)?;
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(CliError::Usage(format!("--horizon must be positive, got {horizon}")));
    }

    let cap = thread_cap()?;
    let rows = match cap {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {k} threads: {e}")))?
            .install(|| sweep(n, sign, &grid, horizon)),
        None => sweep(n, sign, &grid, horizon),
    };
    let errors = rows.iter().filter(|r| r.error.is_some()).count();
    let diagnostics = json!({
        "rows": rows.len(),
        "row_errors": errors,
        "thread_cap": cap,
    });
    let echo = ConfigEcho {
        flow: None,
        integrator: Some(classification_settings(horizon)),
        events: Some(EventSpec::default()),
    };
    finish(name, &a, echo, to_value(&json!({ "rows": rows })), diagnostics, started)
}

fn run_hamiltonian(mut a: HamiltonianArgs, name: &str, started: Instant) -> CliResult<i32> {
    let s = required(a.s, "s")?;
    let horizon = *a.horizon.get_or_insert(DEFAULT_AUDIT_HORIZON);
    let cfg = flow_config(a.n, a.curvature, s, *a.vol_m.get_or_insert(1.0), *a.vol_n.get_or_insert(1.0))?;
    let report = hamiltonian_audit(&cfg, horizon)?;
    let diagnostics = to_value(&json!({
        "samples": report.series.len(),
        "branch": match cfg.sign {
            CurvatureSign::Negative => "minus",
            CurvatureSign::Positive => "plus",
        },
    }));
    let echo = ConfigEcho {
        flow: Some(cfg),
        integrator: Some(classification_settings(horizon)),
        events: Some(EventSpec::default()),
    };
    finish(name, &a, echo, to_value(&report), diagnostics, started)
}

fn run_background(a: BackgroundArgs, name: &str, started: Instant) -> CliResult<i32> {
    let n = required(a.n, "n")?;
    let sign = required(a.curvature, "curvature")?;
    let t = required(a.t, "t")?;
    let model = BackgroundModel::new(n, sign)?;
    let g = model.gauge_quantities(t)?;
    let rescaling = models::rescaling_factor(n, sign, g.tau)?;
    let (residual_g, residual_sigma) = models::rescaled_background_residual(n, sign, t)?;
    let result = to_value(&json!({
        "n": n,
        "curvature": sign,
        "t": t,
        "scale_factor": model.scale_factor(t)?,
        "tau": g.tau,
        "lapse": g.lapse,
        "scale_sq": g.scale_sq,
        "rescaling": rescaling,
    }));
    let diagnostics = to_value(&json!({
        "lapse_equation_residual": models::lapse_equation_residual(n, g.tau, g.lapse, sign),
        "rescaled_residual_g": residual_g,
        "rescaled_residual_sigma": residual_sigma,
    }));
    finish(name, &a, ConfigEcho::default(), result, diagnostics, started)
}
