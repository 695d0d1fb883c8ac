//! Drivers built on the integrator: recollapse classification, bisection for
//! the critical coupling, late-time limits of `x - y`, reduced-Hamiltonian
//! audits and sweeps over `s`.
//!
//! "Complete" always means complete *within the horizon*: a finite run can
//! only certify that no blow-up event happened before `horizon`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, FlowConfig, ReducedHamiltonian};
use crate::integrator::{
    integrate, integrate_oracle, EventSpec, IntegratorSettings, Termination, TerminationKind, Trajectory,
};
use crate::models::CurvatureSign;

/// Classifications closer than this to an analytic threshold are flagged.
pub const NEAR_THRESHOLD: f64 = 1e-3;
/// Fixed step of the RK4 cross-check in [`limit_cs`].
pub const ORACLE_DT: f64 = 1e-4;
/// `|x' - y'|` below this is rounding noise and excluded from the decay fit.
pub const DECAY_FIT_FLOOR: f64 = 1e-13;
/// Relative variation up to which a reduced Hamiltonian counts as constant.
pub const CONSTANT_REL_VARIATION: f64 = 1e-6;
/// Per-sample decreases/increases smaller than this fraction of `max |H|`
/// are treated as noise when judging monotonicity.
pub const AUDIT_NOISE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    CompleteWithinHorizon,
    Recollapse,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::CompleteWithinHorizon => "CompleteWithinHorizon",
            Verdict::Recollapse => "Recollapse",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationDiagnostics {
    /// Largest `|ham_residual|` over the recorded samples.
    pub max_constraint_residual: f64,
    pub termination: TerminationKind,
    /// Set when the verdict rests on a step-size collapse rather than an event.
    pub degraded_confidence: bool,
    /// `s` lies within [`NEAR_THRESHOLD`] of an analytic critical value.
    pub near_threshold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub t_blowup: Option<f64>,
    pub horizon: f64,
    pub diagnostics: ClassificationDiagnostics,
}

/// Relative tolerance of the experiment drivers.
pub const EXPERIMENT_REL_TOL: f64 = 1e-12;
/// Absolute tolerance of the experiment drivers.
pub const EXPERIMENT_ABS_TOL: f64 = 1e-14;

/// Integrator settings used by classification, limit extraction and audits.
///
/// Tighter than the integrator defaults: close to a blow-up event the
/// velocities reach `|x'+y'| ~ 100` and the first integral has to hold to
/// `1e-7` in absolute terms, which the default tolerances miss by a factor
/// of several.
pub fn classification_settings(horizon: f64) -> IntegratorSettings {
    IntegratorSettings {
        rel_tol: EXPERIMENT_REL_TOL,
        abs_tol: EXPERIMENT_ABS_TOL,
        ..IntegratorSettings::with_horizon(horizon)
    }
}

fn near_threshold(cfg: &FlowConfig) -> bool {
    cfg.sign == CurvatureSign::Positive
        && flow::critical_thresholds(cfg.n())
            .is_some_and(|(lo, hi)| (cfg.s - lo).abs() < NEAR_THRESHOLD || (cfg.s - hi).abs() < NEAR_THRESHOLD)
}

/// Classifies an already integrated trajectory.
pub fn classify_trajectory(traj: &Trajectory, horizon: f64) -> Classification {
    let (verdict, t_blowup, degraded) = match traj.termination {
        Termination::ReachedHorizon => (Verdict::CompleteWithinHorizon, None, false),
        Termination::BlowUpEvent { t_event, .. } => (Verdict::Recollapse, Some(t_event), false),
        Termination::StepSizeCollapse { t_last } => (Verdict::Recollapse, Some(t_last), true),
    };
    Classification {
        verdict,
        t_blowup,
        horizon,
        diagnostics: ClassificationDiagnostics {
            max_constraint_residual: traj.max_abs_ham_residual(),
            termination: traj.termination.kind(),
            degraded_confidence: degraded,
            near_threshold: near_threshold(&traj.config),
        },
    }
}

pub fn classify(cfg: &FlowConfig, horizon: f64) -> Result<Classification> {
    let traj = integrate(cfg, &classification_settings(horizon), &EventSpec::default())?;
    Ok(classify_trajectory(&traj, horizon))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionResult {
    pub bracket: (f64, f64),
    pub iterations: u32,
    pub horizon_used: f64,
    pub verdict_lo: Verdict,
    pub verdict_hi: Verdict,
    /// Analytic critical value nearest to the bracket, when defined.
    pub analytic_threshold: Option<f64>,
}

impl BisectionResult {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.bracket.0 + self.bracket.1)
    }
}

/// Bisection on the classification predicate of the positive family.
pub fn bisect_critical(
    n: u32,
    sign: CurvatureSign,
    s_lo: f64,
    s_hi: f64,
    tol: f64,
    horizon: f64,
) -> Result<BisectionResult> {
    if sign != CurvatureSign::Positive {
        return Err(Error::Precondition(
            "the negative-curvature family is complete for every s; there is no threshold to bracket".into(),
        ));
    }
    if !(s_lo < s_hi) {
        return Err(Error::InvalidConfig(format!("need s_lo < s_hi, got [{s_lo}, {s_hi}]")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let verdict_at = |s: f64| -> Result<Verdict> {
        let cfg = FlowConfig::with_dimension(n, sign, s)?;
        Ok(classify(&cfg, horizon)?.verdict)
    };

    let (mut lo, mut hi) = (s_lo, s_hi);
    let verdict_lo = verdict_at(lo)?;
    let verdict_hi = verdict_at(hi)?;
    if verdict_lo == verdict_hi {
        return Err(Error::Bracket {
            s_lo,
            s_hi,
            verdict: verdict_lo.to_string(),
        });
    }

    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if verdict_at(mid)? == verdict_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }

    let mid = 0.5 * (lo + hi);
    let analytic_threshold = flow::critical_thresholds(n).map(|(a, b)| {
        if (mid - a).abs() <= (mid - b).abs() {
            a
        } else {
            b
        }
    });

    Ok(BisectionResult {
        bracket: (lo, hi),
        iterations,
        horizon_used: horizon,
        verdict_lo,
        verdict_hi,
        analytic_threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    /// `x(horizon) - y(horizon)`.
    pub value: f64,
    /// Volume ratio of the two factors implied by `value`.
    pub volume_ratio: f64,
    /// `max - min` of `x - y` over the last 20% of samples.
    pub tail_variation: f64,
    /// Least-squares slope of `ln|x' - y'|`; `None` if `x' - y'` never
    /// rises above the noise floor (e.g. `s = 1`).
    pub decay_rate: Option<f64>,
    /// `|value - value_rk4|` against the fixed-step oracle.
    pub cross_check_delta: f64,
    pub horizon: f64,
}

/// Whether `lim (x - y)` is expected to exist for this configuration.
/// `n = 2` positive has no upper threshold; any `s > 1/2` is admitted and the
/// integration decides.
pub fn in_convergent_regime(cfg: &FlowConfig) -> bool {
    match cfg.sign {
        CurvatureSign::Negative => true,
        CurvatureSign::Positive => match flow::critical_thresholds(cfg.n()) {
            Some((lo, hi)) => cfg.s > lo && cfg.s < hi,
            None => true,
        },
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_v = points.iter().map(|p| p.1).sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, v) in points {
        sxy += (t - mean_t) * (v - mean_v);
        sxx += (t - mean_t) * (t - mean_t);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Fitted exponential rate of `|x' - y'|` over the final half of the samples
/// that lie above [`DECAY_FIT_FLOOR`].
pub fn decay_rate(traj: &Trajectory) -> Option<f64> {
    let usable: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .filter(|s| s.state.t > 0.0)
        .map(|s| (s.state.t, (s.state.xp - s.state.yp).abs()))
        .filter(|&(_, d)| d > DECAY_FIT_FLOOR)
        .map(|(t, d)| (t, d.ln()))
        .collect();
    let start = usable.len() / 2;
    least_squares_slope(&usable[start..])
}

pub fn limit_cs(cfg: &FlowConfig, horizon: f64) -> Result<LimitEstimate> {
    if !in_convergent_regime(cfg) {
        return Err(Error::Regime(format!(
            "s = {} is outside the open equilibrium interval for n = {}",
            cfg.s,
            cfg.n()
        )));
    }
    let settings = classification_settings(horizon);
    let traj = integrate(cfg, &settings, &EventSpec::default())?;
    if traj.termination != Termination::ReachedHorizon {
        return Err(Error::Regime(format!(
            "integration ended with {} before the horizon",
            traj.termination.kind().as_str()
        )));
    }

    let diff = |s: &crate::integrator::Sample| s.state.x - s.state.y;
    let value = diff(traj.last());
    let tail_start = traj.samples.len() - (traj.samples.len() / 5).max(1);
    let (lo, hi) = traj.samples[tail_start..]
        .iter()
        .map(diff)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));

    let oracle = integrate_oracle(cfg, ORACLE_DT, horizon, settings.output_dt, &EventSpec::default())?;
    let oracle_value = diff(oracle.last());

    Ok(LimitEstimate {
        value,
        volume_ratio: flow::limit_volume_ratio(cfg, value),
        tail_variation: hi - lo,
        decay_rate: decay_rate(&traj),
        cross_check_delta: (value - oracle_value).abs(),
        horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuditVerdict {
    Constant,
    MonotoneNonIncreasing,
    MonotoneNonDecreasing,
    NonMonotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditPoint {
    pub t: f64,
    pub h_red: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub series: Vec<AuditPoint>,
    pub verdict: AuditVerdict,
    /// `(max - min) / |mean|` over `t > 0`.
    pub relative_variation: f64,
    /// `H(horizon) - H(first sample after 0)`.
    pub net_change: f64,
    /// Sign of `net_change` (`0` for a constant series).
    pub empirical_sign: i8,
}

/// Tracks `H-_red` (negative curvature) or `H+_red` (positive curvature)
/// along the trajectory and judges its monotonicity for `t > 0`.
pub fn hamiltonian_audit(cfg: &FlowConfig, horizon: f64) -> Result<AuditReport> {
    let traj = integrate(cfg, &classification_settings(horizon), &EventSpec::default())?;
    let mut series = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        let value = match (cfg.sign, s.obs.h_red) {
            (CurvatureSign::Negative, ReducedHamiltonian::Minus(v)) => v,
            (CurvatureSign::Positive, ReducedHamiltonian::Plus(v)) => v,
            _ => {
                return Err(Error::GaugeRange {
                    t: s.state.t,
                    tau: s.obs.tau,
                })
            }
        };
        series.push(AuditPoint { t: s.state.t, h_red: value });
    }

    let expanding: Vec<f64> = series.iter().filter(|p| p.t > 0.0).map(|p| p.h_red).collect();
    if expanding.is_empty() {
        return Err(Error::Precondition("no samples with t > 0".into()));
    }
    let max = expanding.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = expanding.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = expanding.iter().sum::<f64>() / expanding.len() as f64;
    let relative_variation = (max - min) / mean.abs();
    let net_change = expanding[expanding.len() - 1] - expanding[0];

    let verdict = if relative_variation <= CONSTANT_REL_VARIATION {
        AuditVerdict::Constant
    } else {
        let noise = AUDIT_NOISE * max.abs().max(min.abs());
        let non_increasing = expanding.windows(2).all(|w| w[1] - w[0] <= noise);
        let non_decreasing = expanding.windows(2).all(|w| w[1] - w[0] >= -noise);
        match (non_increasing, non_decreasing) {
            (true, _) => AuditVerdict::MonotoneNonIncreasing,
            (false, true) => AuditVerdict::MonotoneNonDecreasing,
            (false, false) => AuditVerdict::NonMonotone,
        }
    };
    let empirical_sign = if verdict == AuditVerdict::Constant {
        0
    } else if net_change > 0.0 {
        1
    } else if net_change < 0.0 {
        -1
    } else {
        0
    };

    Ok(AuditReport {
        series,
        verdict,
        relative_variation,
        net_change,
        empirical_sign,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s: f64,
    pub classification: Option<Classification>,
    pub limit: Option<LimitEstimate>,
    /// Per-row failure; the sweep itself never aborts.
    pub error: Option<String>,
}

/// Independent classification (and, where convergent, limit extraction) per
/// grid value. Rows run in parallel on the current rayon pool and are
/// returned sorted by `s`.
pub fn sweep(n: u32, sign: CurvatureSign, s_grid: &[f64], horizon: f64) -> Vec<SweepRow> {
    let mut grid = s_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.par_iter()
        .map(|&s| sweep_row(n, sign, s, horizon))
        .collect()
}

fn sweep_row(n: u32, sign: CurvatureSign, s: f64, horizon: f64) -> SweepRow {
    let mut row = SweepRow {
        s,
        classification: None,
        limit: None,
        error: None,
    };
    let cfg = match FlowConfig::with_dimension(n, sign, s) {
        Ok(cfg) => cfg,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    match classify(&cfg, horizon) {
        Ok(c) => {
            if c.verdict == Verdict::CompleteWithinHorizon && in_convergent_regime(&cfg) {
                match limit_cs(&cfg, horizon) {
                    Ok(l) => row.limit = Some(l),
                    Err(e) => row.error = Some(e.to_string()),
                }
            }
            row.classification = Some(c);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (f64::from(i), 3.0 - 2.0 * f64::from(i))).collect();
        assert!((least_squares_slope(&pts).unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(least_squares_slope(&pts[..1]), None);
    }

    #[test]
    fn regime_predicate() {
        let pos = |s| FlowConfig::with_dimension(4, CurvatureSign::Positive, s).unwrap();
        assert!(in_convergent_regime(&pos(1.3)));
        assert!(!in_convergent_regime(&pos(1.5)));
        assert!(!in_convergent_regime(&pos(0.7)));
        assert!(in_convergent_regime(
            &FlowConfig::with_dimension(4, CurvatureSign::Negative, 3.0).unwrap()
        ));
    }

    #[test]
    fn bisection_rejects_negative_family_and_equal_verdicts() {
        let err = bisect_critical(4, CurvatureSign::Negative, 0.6, 3.0, 1e-3, 10.0).unwrap_err();
        assert!(err.is_precondition());
        let err = bisect_critical(4, CurvatureSign::Positive, 1.0, 1.2, 1e-3, 20.0).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn limit_rejects_recollapsing_config() {
        let cfg = FlowConfig::with_dimension(4, CurvatureSign::Positive, 2.0).unwrap();
        assert!(matches!(limit_cs(&cfg, 20.0), Err(Error::Regime(_))));
    }

    #[test]
    fn audit_rejects_leaving_gauge_range() {
        // recollapse drives τ positive and through n
        let cfg = FlowConfig::with_dimension(4, CurvatureSign::Positive, 3.0).unwrap();
        assert!(matches!(hamiltonian_audit(&cfg, 20.0), Err(Error::GaugeRange { .. })));
    }

    #[test]
    fn sweep_rows_are_sorted_and_never_abort() {
        let rows = sweep(4, CurvatureSign::Positive, &[2.0, 0.4, 1.0], 10.0);
        let s: Vec<f64> = rows.iter().map(|r| r.s).collect();
        assert_eq!(s, vec![0.4, 1.0, 2.0]);
        assert!(rows[0].error.is_some() && rows[0].classification.is_none());
        assert!(rows[1].limit.is_some());
        assert!(rows[2].limit.is_none());
    }
}
