//! Homogeneous sector of the Einstein flow with positive cosmological constant.
//!
//! The crate is organised bottom-up:
//!
//! - [`models`]: closed-form background spacetimes, homogeneous CMC gauge
//!   quantities and the scale-invariant rescaling maps.
//! - [`flow`]: the warped-product ODE system for `-dt² + a²g_M(s) + b²g_N(s)`,
//!   its first integral and the geometric observables along a trajectory.
//! - [`integrator`]: adaptive Dormand–Prince 5(4) integration with dense output
//!   and blow-up events, plus a fixed-step RK4 oracle.
//! - [`experiments`]: recollapse classification, critical-parameter bisection,
//!   late-time limits, reduced-Hamiltonian audits and parameter sweeps.
//!
//! Units are fixed so that `Λ = n(n-1)/2`, i.e. the spacetime satisfies
//! `Ric = n·g`.

// `!(a < b)` is used on purpose so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod flow;
pub mod integrator;
pub mod models;

pub use error::{Error, Result};
pub use experiments::{
    bisect_critical, classification_settings, classify, hamiltonian_audit, limit_cs, sweep,
    AuditPoint, AuditReport, AuditVerdict,
    BisectionResult, Classification, ClassificationDiagnostics, LimitEstimate, SweepRow, Verdict,
};
pub use flow::{FlowConfig, FlowState, Observables, ReducedHamiltonian};
pub use integrator::{
    backward_integrate, integrate, integrate_oracle, EventSpec, IntegratorSettings, Sample,
    StepRecord, Termination, TerminationKind, Trajectory, Trigger,
};
pub use models::{BackgroundModel, CurvatureSign, GaugeQuantities};
