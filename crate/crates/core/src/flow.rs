//! Warped-product Einstein flow `-dt² + a(t)² g_M(s) + b(t)² g_N(s)`.
//!
//! `M` and `N` are `m`-dimensional Einstein manifolds with `Ric = ±(n-1)g`,
//! `n = 2m`, and the initial metric is `s·g_M ⊕ s/(2s-1)·g_N`. In log scale
//! factors `x = log a`, `y = log b` the spatial Einstein equations read
//!
//! ```text
//! x'' = n ∓ λ_M e^{-2x} - (n/2)(x'² + x'y')
//! y'' = n ∓ λ_N e^{-2y} - (n/2)(y'² + x'y')
//! λ_M = (n-1)/s,   λ_N = (n-1)(2s-1)/s
//! ```
//!
//! (upper sign for positive curvature) and the time-time equation gives the
//! first integral `x'' + y'' + x'² + y'² = 2`.
//!
//! Slice geometry: `k = -½ ∂_t g` has eigenvalues `-x'` and `-y'` (each with
//! multiplicity `m`), hence `τ = -m(x'+y')` and `|Σ|² = (m/2)(x'-y')²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::CurvatureSign;

/// Below this value `e^{-2x}` is no longer representable.
pub const LOG_SCALE_GUARD: f64 = -300.0;

/// Relative half-width of the band around `τ² = n²` in which neither reduced
/// Hamiltonian is reported.
const GAUGE_BAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// Dimension of each factor; the spatial dimension is `n = 2m`.
    pub m: u32,
    pub sign: CurvatureSign,
    /// Coupling parameter, `s > 1/2`.
    pub s: f64,
    pub vol_m: f64,
    pub vol_n: f64,
}

impl FlowConfig {
    pub fn new(m: u32, sign: CurvatureSign, s: f64) -> Result<Self> {
        let cfg = Self {
            m,
            sign,
            s,
            vol_m: 1.0,
            vol_n: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds a configuration from the total spatial dimension `n`, which must
    /// be even.
    pub fn with_dimension(n: u32, sign: CurvatureSign, s: f64) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "spatial dimension must be an even integer >= 2, got {n}"
            )));
        }
        Self::new(n / 2, sign, s)
    }

    pub fn with_volumes(mut self, vol_m: f64, vol_n: f64) -> Result<Self> {
        self.vol_m = vol_m;
        self.vol_n = vol_n;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidConfig("half-dimension m must be >= 1".into()));
        }
        if !(self.s.is_finite() && self.s > 0.5) {
            return Err(Error::InvalidConfig(format!(
                "coupling parameter must satisfy s > 1/2, got {}",
                self.s
            )));
        }
        for (name, v) in [("vol_M", self.vol_m), ("vol_N", self.vol_n)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Spatial dimension `n = 2m`.
    pub fn n(&self) -> u32 {
        2 * self.m
    }

    fn nf(&self) -> f64 {
        f64::from(self.n())
    }

    /// Einstein constant of `g_M(s) = s·g_M`: `(n-1)/s`.
    pub fn lambda_m(&self) -> f64 {
        (self.nf() - 1.0) / self.s
    }

    /// Einstein constant of `g_N(s) = s/(2s-1)·g_N`: `(n-1)(2s-1)/s`.
    ///
    /// Written with a single division so that at `s = (n-1)/(n-2)` the
    /// product with `e^0` is exactly `n` whenever `s` itself is exact.
    pub fn lambda_n(&self) -> f64 {
        (self.nf() - 1.0) * (2.0 * self.s - 1.0) / self.s
    }

    /// Constrained initial data at `t = 0`.
    pub fn initial_state(&self) -> FlowState {
        let v = match self.sign {
            CurvatureSign::Positive => 0.0,
            CurvatureSign::Negative => std::f64::consts::SQRT_2,
        };
        FlowState {
            t: 0.0,
            x: 0.0,
            y: 0.0,
            xp: v,
            yp: v,
        }
    }

    /// `ln(vol(g_M(s)) · vol(g_N(s)))`.
    fn log_base_volume(&self) -> f64 {
        let half_m = f64::from(self.m) / 2.0;
        half_m * (self.s.ln() + (self.s / (2.0 * self.s - 1.0)).ln()) + self.vol_m.ln() + self.vol_n.ln()
    }
}

/// One point on a trajectory in log-scale-factor variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub xp: f64,
    pub yp: f64,
}

impl FlowState {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.is_finite() && self.y.is_finite() && self.xp.is_finite() && self.yp.is_finite()
    }
}

/// Reduced Hamiltonian `H∓_red`, selected by the sign of `τ² - n²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "branch", content = "value", rename_all = "snake_case")]
pub enum ReducedHamiltonian {
    /// `(τ²/n - n)^{n/2} vol(g_t)`, defined for `τ² > n²`.
    Minus(f64),
    /// `(n - τ²/n)^{n/2} vol(g_t)`, defined for `τ² < n²`.
    Plus(f64),
    /// `τ²` too close to `n²` for either branch.
    OutOfRange,
}

impl ReducedHamiltonian {
    pub fn value(&self) -> Option<f64> {
        match *self {
            ReducedHamiltonian::Minus(v) | ReducedHamiltonian::Plus(v) => Some(v),
            ReducedHamiltonian::OutOfRange => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// Mean curvature `τ = -m(x'+y')`.
    pub tau: f64,
    /// `|Σ|² = (m/2)(x'-y')²`.
    pub sigma_sq: f64,
    /// Scalar curvature of the slice metric.
    pub scalar_curv: f64,
    /// `R - |Σ|² + τ²(n-1)/n - n(n-1)`.
    pub ham_residual: f64,
    /// `x'' + y'' + x'² + y'² - 2`; NaN if the state is past the overflow guard.
    pub first_integral_residual: f64,
    /// `vol(g_t)` including the parameter scalings and base volumes.
    pub volume: f64,
    pub h_red: ReducedHamiltonian,
}

/// Second derivatives `(x'', y'')` at `state`.
pub fn rhs(cfg: &FlowConfig, state: &FlowState) -> Result<(f64, f64)> {
    accelerations(cfg, state.x, state.y, state.xp, state.yp)
}

#[inline]
pub(crate) fn accelerations(cfg: &FlowConfig, x: f64, y: f64, xp: f64, yp: f64) -> Result<(f64, f64)> {
    if !(x >= LOG_SCALE_GUARD) {
        return Err(Error::Overflow { value: x });
    }
    if !(y >= LOG_SCALE_GUARD) {
        return Err(Error::Overflow { value: y });
    }
    let n = cfg.nf();
    let half_n = 0.5 * n;
    let curv_x = cfg.lambda_m() * (-2.0 * x).exp();
    let curv_y = cfg.lambda_n() * (-2.0 * y).exp();
    let mixed = xp * yp;
    let (xpp, ypp) = match cfg.sign {
        CurvatureSign::Positive => (
            n - curv_x - half_n * (xp * xp + mixed),
            n - curv_y - half_n * (yp * yp + mixed),
        ),
        CurvatureSign::Negative => (
            n + curv_x - half_n * (xp * xp + mixed),
            n + curv_y - half_n * (yp * yp + mixed),
        ),
    };
    Ok((xpp, ypp))
}

/// `x'' + y'' + x'² + y'² - 2`, zero along constrained solutions.
pub fn first_integral_residual(state: &FlowState, xpp: f64, ypp: f64) -> f64 {
    xpp + ypp + state.xp * state.xp + state.yp * state.yp - 2.0
}

pub fn observables(cfg: &FlowConfig, state: &FlowState) -> Observables {
    let m = f64::from(cfg.m);
    let n = cfg.nf();

    let tau = -m * (state.xp + state.yp);
    let dv = state.xp - state.yp;
    let sigma_sq = 0.5 * m * dv * dv;
    let curv = cfg.lambda_m() * (-2.0 * state.x).exp() + cfg.lambda_n() * (-2.0 * state.y).exp();
    let scalar_curv = match cfg.sign {
        CurvatureSign::Positive => m * curv,
        CurvatureSign::Negative => -m * curv,
    };
    let ham_residual = scalar_curv - sigma_sq + tau * tau * (n - 1.0) / n - n * (n - 1.0);

    let first_integral_residual = match rhs(cfg, state) {
        Ok((xpp, ypp)) => first_integral_residual(state, xpp, ypp),
        Err(_) => f64::NAN,
    };

    let log_volume = m * (state.x + state.y) + cfg.log_base_volume();
    let volume = log_volume.exp();

    // The branch follows τ. The magnitude uses the constraint form
    // (|Σ|² - R)/(n-1) of τ²/n - n, which stays accurate where τ → ∓n and
    // the direct difference loses its digits to cancellation.
    let gap = tau * tau / n - n;
    let gap_constraint = (sigma_sq - scalar_curv) / (n - 1.0);
    let h_red = if gap.abs() <= GAUGE_BAND * n || !gap.is_finite() || gap * gap_constraint <= 0.0 {
        ReducedHamiltonian::OutOfRange
    } else {
        let value = (0.5 * n * gap_constraint.abs().ln() + log_volume).exp();
        if gap > 0.0 {
            ReducedHamiltonian::Minus(value)
        } else {
            ReducedHamiltonian::Plus(value)
        }
    };

    Observables {
        tau,
        sigma_sq,
        scalar_curv,
        ham_residual,
        first_integral_residual,
        volume,
        h_red,
    }
}

/// Late-time ratio `vol(M, a²g_M(s)) / vol(N, b²g_N(s))` for a given
/// `lim (x - y)`: `e^{m·L} (2s-1)^{m/2} vol_M/vol_N`.
pub fn limit_volume_ratio(cfg: &FlowConfig, x_minus_y_limit: f64) -> f64 {
    let m = f64::from(cfg.m);
    (m * x_minus_y_limit + 0.5 * m * (2.0 * cfg.s - 1.0).ln()).exp() * cfg.vol_m / cfg.vol_n
}

/// Critical couplings `((n-1)/n, (n-1)/(n-2))` of the positive family.
///
/// `None` for `n = 2`, where the upper value degenerates.
pub fn critical_thresholds(n: u32) -> Option<(f64, f64)> {
    if n <= 2 {
        return None;
    }
    let nf = f64::from(n);
    Some(((nf - 1.0) / nf, (nf - 1.0) / (nf - 2.0)))
}
