//! Fixed-step classical RK4, used as an independent reference.

use super::{deriv, sample, step_first_integral, to_vec, EventSpec, Vec4};
use super::{StepRecord, Termination, Trajectory, Trigger};
use crate::error::{Error, Result};
use crate::flow::FlowConfig;

fn rk4_step(cfg: &FlowConfig, u: &Vec4, h: f64) -> Result<Vec4> {
    let shift = |k: &Vec4, c: f64| -> Vec4 { std::array::from_fn(|i| u[i] + c * h * k[i]) };
    let k1 = deriv(cfg, u)?;
    let k2 = deriv(cfg, &shift(&k1, 0.5))?;
    let k3 = deriv(cfg, &shift(&k2, 0.5))?;
    let k4 = deriv(cfg, &shift(&k3, 1.0))?;
    Ok(std::array::from_fn(|i| {
        u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

/// Fixed-step RK4 from the constrained initial data to `t_max`.
///
/// Samples are recorded every `round(output_dt / dt)` steps and at the final
/// time. A blow-up event is detected by a sign change of the event functions
/// across a step and then refined by bisecting the length of a single RK4
/// step taken from the last state before the crossing.
pub fn integrate_oracle(
    cfg: &FlowConfig,
    dt: f64,
    t_max: f64,
    output_dt: f64,
    events: &EventSpec,
) -> Result<Trajectory> {
    cfg.validate()?;
    events.validate()?;
    for (name, v) in [("dt", dt), ("t_max", t_max), ("output_dt", output_dt)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
        }
    }
    let stride = ((output_dt / dt).round() as u64).max(1);

    let mut u = to_vec(&cfg.initial_state());
    let mut t = 0.0;
    let mut samples = vec![sample(cfg, 0.0, &u)];
    let mut steps = Vec::new();
    let mut i: u64 = 0;

    let termination = loop {
        if t >= t_max {
            break Termination::ReachedHorizon;
        }
        let t_next = ((i + 1) as f64 * dt).min(t_max);
        let h = t_next - t;
        let u_next = match rk4_step(cfg, &u, h) {
            Ok(v) => v,
            Err(_) => {
                break Termination::BlowUpEvent {
                    t_event: t,
                    trigger: Trigger::Overflow,
                }
            }
        };

        let g = events.values(&u_next, 1.0);
        if g.iter().any(|&v| v <= 0.0) {
            let mut best: Option<(f64, usize, Vec4)> = None;
            for which in (0..2).filter(|&w| g[w] <= 0.0) {
                let (mut lo, mut hi) = (0.0, h);
                let mut u_hi = u_next;
                while hi - lo > 1e-13 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    match rk4_step(cfg, &u, mid) {
                        Ok(v) if events.values(&v, 1.0)[which] > 0.0 => lo = mid,
                        Ok(v) => {
                            hi = mid;
                            u_hi = v;
                        }
                        Err(_) => hi = mid,
                    }
                }
                if best.as_ref().is_none_or(|b| hi < b.0) {
                    best = Some((hi, which, u_hi));
                }
            }
            let (h_event, which, u_event) = best.expect("at least one event fired");
            let t_event = t + h_event;
            samples.push(sample(cfg, t_event, &u_event));
            let fi = deriv(cfg, &u_event).map_or(f64::NAN, |du| step_first_integral(&u_event, &du));
            steps.push(StepRecord {
                t: t_event,
                h: h_event,
                first_integral_residual: fi,
            });
            break Termination::BlowUpEvent {
                t_event,
                trigger: Trigger::from_index(which),
            };
        }

        i += 1;
        t = t_next;
        u = u_next;
        let fi = deriv(cfg, &u).map_or(f64::NAN, |du| step_first_integral(&u, &du));
        steps.push(StepRecord {
            t,
            h,
            first_integral_residual: fi,
        });
        if i.is_multiple_of(stride) || t >= t_max {
            samples.push(sample(cfg, t, &u));
        }
    };

    if let Termination::BlowUpEvent {
        trigger: Trigger::Overflow,
        ..
    } = termination
    {
        if samples.last().is_none_or(|s| s.state.t < t) {
            samples.push(sample(cfg, t, &u));
        }
    }

    Ok(Trajectory {
        config: *cfg,
        samples,
        steps,
        termination,
    })
}
