//! Dormand–Prince 5(4) with PI step-size control and dense output.

use super::{deriv, sample, step_first_integral, EventSpec, IntegratorSettings, Vec4};
use super::{StepRecord, Termination, Trajectory, Trigger};
use crate::error::Result;
use crate::flow::FlowConfig;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th-order minus embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// Step control.
const SAFETY: f64 = 0.9;
const MAX_SHRINK: f64 = 5.0;
const MAX_GROW: f64 = 0.1;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;

/// Event bracket width (in t) at which bisection stops.
const EVENT_T_TOL: f64 = 1e-12;

struct Step {
    u_new: Vec4,
    k: [Vec4; 7],
}

fn axpy(u: &Vec4, h: f64, terms: &[(f64, &Vec4)]) -> Vec4 {
    let mut out = *u;
    for i in 0..4 {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn attempt(cfg: &FlowConfig, u: &Vec4, k1: &Vec4, h: f64) -> Result<Step> {
    let k2 = deriv(cfg, &axpy(u, h, &[(A21, k1)]))?;
    let k3 = deriv(cfg, &axpy(u, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = deriv(cfg, &axpy(u, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = deriv(cfg, &axpy(u, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = deriv(
        cfg,
        &axpy(u, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let u_new = axpy(u, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = deriv(cfg, &u_new)?;
    Ok(Step {
        u_new,
        k: [*k1, k2, k3, k4, k5, k6, k7],
    })
}

fn error_norm(u: &Vec4, step: &Step, h: f64, settings: &IntegratorSettings) -> f64 {
    let k = &step.k;
    let mut sum = 0.0;
    for i in 0..4 {
        let e = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
        let sc = settings.abs_tol + settings.rel_tol * u[i].abs().max(step.u_new[i].abs());
        sum += (e / sc) * (e / sc);
    }
    (sum / 4.0).sqrt()
}

/// 4th-order continuous extension over one accepted step.
struct Dense {
    t0: f64,
    h: f64,
    r: [Vec4; 5],
}

impl Dense {
    fn new(t0: f64, h: f64, u: &Vec4, step: &Step) -> Self {
        let k = &step.k;
        let mut r = [[0.0; 4]; 5];
        for i in 0..4 {
            let ydiff = step.u_new[i] - u[i];
            let bspl = h * k[0][i] - ydiff;
            r[0][i] = u[i];
            r[1][i] = ydiff;
            r[2][i] = bspl;
            r[3][i] = ydiff - h * k[6][i] - bspl;
            r[4][i] = h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
        }
        Self { t0, h, r }
    }

    fn at_theta(&self, theta: f64) -> Vec4 {
        let th1 = 1.0 - theta;
        let r = &self.r;
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = r[0][i] + theta * (r[1][i] + th1 * (r[2][i] + theta * (r[3][i] + th1 * r[4][i])));
        }
        out
    }

    fn at(&self, t: f64) -> Vec4 {
        self.at_theta((t - self.t0) / self.h)
    }
}

/// Output grid `t_k = dir·k·output_dt`.
struct Recorder<'a> {
    cfg: &'a FlowConfig,
    dir: f64,
    dt: f64,
    next_k: u64,
    samples: Vec<super::Sample>,
}

impl<'a> Recorder<'a> {
    fn grid_time(&self) -> f64 {
        self.dir * (self.next_k as f64) * self.dt
    }

    /// Emits grid points strictly before `t_stop` (with a small margin so the
    /// exact endpoint is recorded by `push` instead of a near-duplicate).
    fn emit_before(&mut self, t_stop: f64, dense: &Dense) {
        let margin = 1e-9 * self.dt;
        loop {
            let tk = self.grid_time();
            if self.dir * (t_stop - tk) <= margin {
                break;
            }
            if self.dir * (tk - (dense.t0 + dense.h)) > 0.0 {
                break;
            }
            let u = dense.at(tk);
            self.samples.push(sample(self.cfg, tk, &u));
            self.next_k += 1;
        }
    }

    fn push(&mut self, t: f64, u: &Vec4) {
        self.samples.push(sample(self.cfg, t, u));
    }
}

fn initial_step(cfg: &FlowConfig, u0: &Vec4, f0: &Vec4, dir: f64, settings: &IntegratorSettings) -> f64 {
    let sk: Vec<f64> = u0.iter().map(|v| settings.abs_tol + settings.rel_tol * v.abs()).collect();
    let norm = |v: &dyn Fn(usize) -> f64| ((0..4).map(|i| (v(i) / sk[i]).powi(2)).sum::<f64>() / 4.0).sqrt();
    let dnf = norm(&|i| f0[i]);
    let dny = norm(&|i| u0[i]);
    let mut h = if dnf <= 1e-5 || dny <= 1e-5 { 1e-6 } else { 0.01 * dny / dnf };
    h = h.min(settings.max_step);
    let u1: Vec4 = std::array::from_fn(|i| u0[i] + dir * h * f0[i]);
    let der2 = match deriv(cfg, &u1) {
        Ok(f1) => norm(&|i| f1[i] - f0[i]) / h,
        Err(_) => return h.max(settings.min_step),
    };
    let der12 = der2.abs().max(dnf);
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(settings.max_step).max(settings.min_step)
}

/// Bisection on the dense output for the first `θ` with `g(θ) <= 0`.
fn locate(dense: &Dense, events: &EventSpec, dir: f64, which: usize) -> f64 {
    let g = |theta: f64| events.values(&dense.at_theta(theta), dir)[which];
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while dense.h.abs() * (hi - lo) > EVENT_T_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    dense.t0 + hi * dense.h
}

pub(super) fn run(cfg: &FlowConfig, settings: &IntegratorSettings, events: &EventSpec, dir: f64) -> Trajectory {
    let t_end = dir * settings.t_max;
    let mut t = 0.0;
    let mut u = super::to_vec(&cfg.initial_state());
    let mut rec = Recorder {
        cfg,
        dir,
        dt: settings.output_dt,
        next_k: 1,
        samples: Vec::with_capacity((settings.t_max / settings.output_dt) as usize + 2),
    };
    rec.push(0.0, &u);
    let mut steps = Vec::new();

    let mut k1 = match deriv(cfg, &u) {
        Ok(k) => k,
        Err(_) => {
            return Trajectory {
                config: *cfg,
                samples: rec.samples,
                steps,
                termination: Termination::BlowUpEvent {
                    t_event: 0.0,
                    trigger: Trigger::Overflow,
                },
            }
        }
    };

    let mut h = initial_step(cfg, &u, &k1, dir, settings);
    let mut facold: f64 = 1e-4;
    let mut rejected_last = false;
    let mut overflow_pending = false;

    let termination = loop {
        let remaining = dir * (t_end - t);
        if remaining <= 0.0 {
            break Termination::ReachedHorizon;
        }
        let mut h_abs = h.min(settings.max_step);
        let last = h_abs >= remaining;
        if last {
            h_abs = remaining;
        } else if h_abs < settings.min_step {
            break if overflow_pending {
                Termination::BlowUpEvent {
                    t_event: t,
                    trigger: Trigger::Overflow,
                }
            } else {
                Termination::StepSizeCollapse { t_last: t }
            };
        }
        let hs = dir * h_abs;

        let step = match attempt(cfg, &u, &k1, hs) {
            Ok(step) => step,
            Err(_) => {
                overflow_pending = true;
                rejected_last = true;
                h = 0.25 * h_abs;
                continue;
            }
        };

        let err = error_norm(&u, &step, hs, settings);
        let fac11 = err.powf(EXPO);
        if !(err <= 1.0) {
            // NaN errors land here as well.
            let shrink = if err.is_finite() {
                MAX_SHRINK.min(fac11 / SAFETY)
            } else {
                MAX_SHRINK
            };
            h = h_abs / shrink;
            rejected_last = true;
            continue;
        }

        overflow_pending = false;
        let t_new = if last { t_end } else { t + hs };
        let dense = Dense::new(t, hs, &u, &step);

        let g = events.values(&step.u_new, dir);
        let fired: Vec<usize> = (0..2).filter(|&i| g[i] <= 0.0).collect();
        if !fired.is_empty() {
            let (t_event, which) = fired
                .iter()
                .map(|&i| (locate(&dense, events, dir, i), i))
                .fold((f64::NAN, 0), |best, cand| {
                    if best.0.is_nan() || dir * (cand.0 - best.0) < 0.0 {
                        cand
                    } else {
                        best
                    }
                });
            rec.emit_before(t_event, &dense);
            // Re-step to the event for a 5th-order terminal state.
            let (u_event, fi) = match attempt(cfg, &u, &k1, t_event - t) {
                Ok(s) => {
                    let fi = step_first_integral(&s.u_new, &s.k[6]);
                    (s.u_new, fi)
                }
                Err(_) => (dense.at(t_event), f64::NAN),
            };
            rec.push(t_event, &u_event);
            steps.push(StepRecord {
                t: t_event,
                h: t_event - t,
                first_integral_residual: fi,
            });
            break Termination::BlowUpEvent {
                t_event,
                trigger: Trigger::from_index(which),
            };
        }

        rec.emit_before(t_new, &dense);
        steps.push(StepRecord {
            t: t_new,
            h: hs,
            first_integral_residual: step_first_integral(&step.u_new, &step.k[6]),
        });
        t = t_new;
        u = step.u_new;
        k1 = step.k[6];

        let mut fac = fac11 / facold.powf(BETA);
        fac = (fac / SAFETY).clamp(MAX_GROW, MAX_SHRINK);
        let mut h_new = h_abs / fac;
        if rejected_last {
            h_new = h_new.min(h_abs);
        }
        facold = err.max(1e-4);
        rejected_last = false;
        h = h_new;
    };

    let end_t = match termination {
        Termination::ReachedHorizon => Some(t_end),
        Termination::StepSizeCollapse { .. } => Some(t),
        Termination::BlowUpEvent {
            trigger: Trigger::Overflow,
            ..
        } => Some(t),
        Termination::BlowUpEvent { .. } => None,
    };
    if let Some(end_t) = end_t {
        let last_t = rec.samples.last().map(|s| s.state.t).unwrap_or(0.0);
        if dir * (end_t - last_t) > 0.0 {
            rec.push(end_t, &u);
        }
    }

    Trajectory {
        config: *cfg,
        samples: rec.samples,
        steps,
        termination,
    }
}
