//! JSON and CSV rendering.
//!
//! Floating-point values are written with 17 significant digits
//! (`{:.16e}`), which round-trips every `f64` exactly and is independent of
//! locale. Non-finite floats become `null` in JSON.

use std::io::Write;
use std::time::Instant;

use efl_core::{EventSpec, FlowConfig, IntegratorSettings, ReducedHamiltonian, Trajectory};
use serde::Serialize;
use serde_json::{Map, Number, Value};

pub const CSV_HEADER: [&str; 11] = [
    "t",
    "x",
    "y",
    "xp",
    "yp",
    "tau",
    "sigma_sq",
    "scalar_curv",
    "ham_residual",
    "first_integral_residual",
    "h_red",
];

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes `value` and rewrites every float with 17 significant digits.
pub fn to_value<T: Serialize>(value: &T) -> Value {
    let mut v = serde_json::to_value(value).expect("output types serialize to JSON");
    normalize_floats(&mut v);
    v
}

fn normalize_floats(v: &mut Value) {
    match v {
        Value::Number(num) => {
            let text = num.to_string();
            if text.contains(['.', 'e', 'E']) {
                if let Ok(x) = text.parse::<f64>() {
                    *v = if x.is_finite() {
                        Value::Number(format_float(x).parse::<Number>().expect("formatted float is a JSON number"))
                    } else {
                        Value::Null
                    };
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(normalize_floats),
        Value::Object(map) => map.values_mut().for_each(normalize_floats),
        _ => {}
    }
}

/// Integrator configuration echoed in every manifest.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConfigEcho {
    pub flow: Option<FlowConfig>,
    pub integrator: Option<IntegratorSettings>,
    pub events: Option<EventSpec>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    /// Fully defaulted flags, in `--config` form.
    pub args: Value,
    pub config: ConfigEcho,
    pub tool_version: String,
    pub wall_time_ms: u64,
}

impl Manifest {
    pub fn new<A: Serialize>(command: &str, args: &A, config: ConfigEcho, started: Instant) -> Self {
        Self {
            command: command.to_string(),
            args: to_value(args),
            config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_ms: u64::try_from(started.elapsed().as_millis()).unwrap_or(u64::MAX),
        }
    }
}

/// The single JSON object every command emits.
pub fn document(result: Value, diagnostics: Value, manifest: &Manifest) -> Value {
    let mut doc = Map::new();
    doc.insert("result".into(), result);
    doc.insert("diagnostics".into(), diagnostics);
    doc.insert("manifest".into(), to_value(manifest));
    Value::Object(doc)
}

pub fn render(doc: &Value) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("JSON values always render");
    text.push('\n');
    text
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in &traj.samples {
        let (st, o) = (&s.state, &s.obs);
        let h_red = match o.h_red {
            ReducedHamiltonian::OutOfRange => String::new(),
            ReducedHamiltonian::Minus(v) | ReducedHamiltonian::Plus(v) => format_float(v),
        };
        let mut row: Vec<String> = [
            st.t,
            st.x,
            st.y,
            st.xp,
            st.yp,
            o.tau,
            o.sigma_sq,
            o.scalar_curv,
            o.ham_residual,
            o.first_integral_residual,
        ]
        .iter()
        .map(|&v| format_float(v))
        .collect();
        row.push(h_red);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_get_seventeen_digits_and_integers_stay() {
        #[derive(Serialize)]
        struct Row {
            a: f64,
            b: u32,
            c: f64,
            d: Option<f64>,
        }
        let v = to_value(&Row {
            a: 0.1,
            b: 7,
            c: f64::NAN,
            d: Some(-2.5e-300),
        });
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(text, r#"{"a":1.0000000000000001e-1,"b":7,"c":null,"d":-2.5000000000000000e-300}"#);
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [std::f64::consts::PI, 1.0 / 3.0, 1e-320, f64::MAX, -0.0] {
            assert_eq!(format_float(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn out_of_range_h_red_is_an_empty_field() {
        use efl_core::{CurvatureSign, FlowState, Sample, Termination};
        let cfg = FlowConfig::with_dimension(4, CurvatureSign::Positive, 1.0).unwrap();
        // τ = -2(x' + y') = -4 = -n
        let state = FlowState { t: 1.0, x: 0.5, y: 0.5, xp: 1.0, yp: 1.0 };
        let traj = Trajectory {
            config: cfg,
            samples: vec![Sample {
                state,
                obs: efl_core::flow::observables(&cfg, &state),
            }],
            steps: Vec::new(),
            termination: Termination::ReachedHorizon,
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row = text.lines().nth(1).unwrap();
        assert!(row.ends_with(','));
        assert_eq!(row.split(',').count(), CSV_HEADER.len());
    }
}
