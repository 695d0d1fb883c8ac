//! Time integration of the warped-product system.
//!
//! [`integrate`] is the production path: Dormand–Prince 5(4) with a PI step
//! controller, the 4th-order continuous extension for output sampling, and
//! blow-up events located by bisection on the dense output.
//! [`integrate_oracle`] is a classical fixed-step RK4 kept deliberately
//! independent of that machinery so the two can be cross-checked.

mod dopri;
mod rk4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, FlowConfig, FlowState, Observables};
use crate::models::CurvatureSign;

pub use rk4::integrate_oracle;

pub(crate) type Vec4 = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Integration horizon (absolute value of the final time).
    pub t_max: f64,
    /// Spacing of recorded samples.
    pub output_dt: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.5,
            min_step: 1e-13,
            t_max: 50.0,
            output_dt: 0.01,
        }
    }
}

impl IntegratorSettings {
    pub fn with_horizon(t_max: f64) -> Self {
        Self {
            t_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be a positive number, got {v}")))
            }
        };
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        positive("max_step", self.max_step)?;
        positive("min_step", self.min_step)?;
        positive("t_max", self.t_max)?;
        positive("output_dt", self.output_dt)?;
        if self.min_step >= self.max_step {
            return Err(Error::InvalidConfig(format!(
                "min_step ({}) must be smaller than max_step ({})",
                self.min_step, self.max_step
            )));
        }
        Ok(())
    }
}

/// Blow-up triggers. An event fires when `min(x, y)` drops to `y_floor` or
/// `x' + y'` (measured in the direction of integration) drops to
/// `velocity_floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub y_floor: f64,
    pub velocity_floor: f64,
}

impl Default for EventSpec {
    fn default() -> Self {
        Self {
            y_floor: -20.0,
            velocity_floor: -100.0,
        }
    }
}

impl EventSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.y_floor < 0.0 && self.y_floor.is_finite()) {
            return Err(Error::InvalidConfig(format!("y_floor must be negative, got {}", self.y_floor)));
        }
        if !(self.velocity_floor < 0.0 && self.velocity_floor.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "velocity_floor must be negative, got {}",
                self.velocity_floor
            )));
        }
        Ok(())
    }

    /// Event functions; an event has occurred once either is `<= 0`.
    pub(crate) fn values(&self, u: &Vec4, dir: f64) -> [f64; 2] {
        [u[0].min(u[1]) - self.y_floor, dir * (u[2] + u[3]) - self.velocity_floor]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// `min(x, y)` reached `y_floor`.
    ScaleFactorFloor,
    /// `x' + y'` reached `velocity_floor`.
    VelocityFloor,
    /// The right-hand side could not be evaluated even at the minimum step.
    Overflow,
}

impl Trigger {
    pub(crate) fn from_index(i: usize) -> Self {
        if i == 0 {
            Trigger::ScaleFactorFloor
        } else {
            Trigger::VelocityFloor
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Termination {
    ReachedHorizon,
    BlowUpEvent { t_event: f64, trigger: Trigger },
    StepSizeCollapse { t_last: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationKind {
    ReachedHorizon,
    BlowUpEvent,
    StepSizeCollapse,
}

impl Termination {
    pub fn kind(&self) -> TerminationKind {
        match self {
            Termination::ReachedHorizon => TerminationKind::ReachedHorizon,
            Termination::BlowUpEvent { .. } => TerminationKind::BlowUpEvent,
            Termination::StepSizeCollapse { .. } => TerminationKind::StepSizeCollapse,
        }
    }

    pub fn blowup_time(&self) -> Option<f64> {
        match *self {
            Termination::BlowUpEvent { t_event, .. } => Some(t_event),
            _ => None,
        }
    }
}

impl TerminationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationKind::ReachedHorizon => "ReachedHorizon",
            TerminationKind::BlowUpEvent => "BlowUpEvent",
            TerminationKind::StepSizeCollapse => "StepSizeCollapse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub state: FlowState,
    pub obs: Observables,
}

/// First-integral check at the end of an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub h: f64,
    pub first_integral_residual: f64,
}

/// Samples are ordered along the direction of integration: increasing `t`
/// for forward runs, decreasing `t` for [`backward_integrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: FlowConfig,
    pub samples: Vec<Sample>,
    pub steps: Vec<StepRecord>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory always holds the initial sample")
    }

    pub fn max_abs_ham_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.obs.ham_residual.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_step_first_integral(&self) -> f64 {
        self.steps.iter().map(|s| s.first_integral_residual.abs()).fold(0.0, f64::max)
    }
}

/// Integrates the constrained initial data forward to `settings.t_max` or the
/// first blow-up event.
pub fn integrate(cfg: &FlowConfig, settings: &IntegratorSettings, events: &EventSpec) -> Result<Trajectory> {
    check_inputs(cfg, settings, events)?;
    Ok(dopri::run(cfg, settings, events, 1.0))
}

/// Integrates the time-symmetric positive-curvature data towards `t < 0`.
pub fn backward_integrate(cfg: &FlowConfig, settings: &IntegratorSettings, events: &EventSpec) -> Result<Trajectory> {
    check_inputs(cfg, settings, events)?;
    if cfg.sign != CurvatureSign::Positive {
        return Err(Error::Precondition(
            "backward integration needs time-symmetric (positive curvature) initial data".into(),
        ));
    }
    Ok(dopri::run(cfg, settings, events, -1.0))
}

fn check_inputs(cfg: &FlowConfig, settings: &IntegratorSettings, events: &EventSpec) -> Result<()> {
    cfg.validate()?;
    settings.validate()?;
    events.validate()
}

#[inline]
pub(crate) fn deriv(cfg: &FlowConfig, u: &Vec4) -> Result<Vec4> {
    let (xpp, ypp) = flow::accelerations(cfg, u[0], u[1], u[2], u[3])?;
    if !(xpp.is_finite() && ypp.is_finite()) {
        return Err(Error::Overflow { value: u[0].min(u[1]) });
    }
    Ok([u[2], u[3], xpp, ypp])
}

pub(crate) fn to_state(t: f64, u: &Vec4) -> FlowState {
    FlowState {
        t,
        x: u[0],
        y: u[1],
        xp: u[2],
        yp: u[3],
    }
}

pub(crate) fn to_vec(s: &FlowState) -> Vec4 {
    [s.x, s.y, s.xp, s.yp]
}

pub(crate) fn sample(cfg: &FlowConfig, t: f64, u: &Vec4) -> Sample {
    let state = to_state(t, u);
    Sample {
        state,
        obs: flow::observables(cfg, &state),
    }
}

/// `x'' + y'' + x'² + y'² - 2` from a state and its derivative vector.
pub(crate) fn step_first_integral(u: &Vec4, du: &Vec4) -> f64 {
    du[2] + du[3] + u[2] * u[2] + u[3] * u[3] - 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_validation() {
        assert!(IntegratorSettings::default().validate().is_ok());
        let bad = IntegratorSettings {
            min_step: 1.0,
            max_step: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = IntegratorSettings {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(EventSpec { y_floor: 1.0, velocity_floor: -1.0 }.validate().is_err());
        assert!(EventSpec { y_floor: -1.0, velocity_floor: 0.0 }.validate().is_err());
    }

    #[test]
    fn backward_rejects_negative_curvature() {
        let cfg = FlowConfig::with_dimension(4, CurvatureSign::Negative, 1.0).unwrap();
        let err = backward_integrate(&cfg, &IntegratorSettings::default(), &EventSpec::default()).unwrap_err();
        assert!(err.is_precondition());
    }
}
