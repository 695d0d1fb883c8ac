//! Closed-form background solutions and homogeneous CMC gauge data.
//!
//! For a compact Einstein base `(M, γ)` with `Ric(γ) = ±(n-1)γ` the spacetimes
//!
//! ```text
//! Negative:  -dt² + sinh²(t) γ,   t ∈ (0, ∞),   τ(t) = -n coth(t)
//! Positive:  -dt² + cosh²(t) γ,   t ∈ ℝ,        τ(t) = -n tanh(t)
//! ```
//!
//! solve `Ric = n·g`. The negative family is a solution of the standard CMC
//! flow (time `τ`), the positive family of the reversed flow (time `-τ`).
//! Because the two gauges differ in several places (the constant in the lapse
//! equation, the admissible range of `τ`, the `g`-term in the `Σ` evolution),
//! every formula below is written out per sign instead of threading a `±1`
//! through shared expressions.
//!
//! The reduced Hamiltonian of the reversed gauge is defined on `τ ∈ (-n, n)`.
//!
//! In the scale-invariant variables `g = s(τ)g̃, N = s(τ)Ñ, Σ = s(τ)^½ Σ̃` the
//! homogeneous background becomes the fixed point `g = γ, Σ = 0, N = 1/n,
//! X = 0`. In the reversed gauge the tracefree evolution carries
//! `N(Ric - n g) + g/n`; this is the sign pattern that follows from rescaling
//! the unrescaled reversed equation with `τ²/n - n = -n s(τ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign of the Einstein constant of the spatial base metric.
///
/// The Ricci-flat case has constant mean curvature `-n` along the model and
/// cannot be expressed in either CMC gauge, so it is not representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureSign {
    Negative,
    Positive,
}

impl CurvatureSign {
    pub fn as_str(self) -> &'static str {
        match self {
            CurvatureSign::Negative => "negative",
            CurvatureSign::Positive => "positive",
        }
    }
}

impl std::fmt::Display for CurvatureSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CurvatureSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "negative" | "neg" | "-" => Ok(CurvatureSign::Negative),
            "positive" | "pos" | "+" => Ok(CurvatureSign::Positive),
            other => Err(Error::InvalidConfig(format!(
                "unknown curvature sign {other:?} (expected positive or negative)"
            ))),
        }
    }
}

fn check_dimension(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "spatial dimension must be at least 2, got {n}"
        )));
    }
    Ok(f64::from(n))
}

/// One of the two background spacetimes `-dt² + sinh²(t)γ`, `-dt² + cosh²(t)γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundModel {
    n: u32,
    sign: CurvatureSign,
}

/// Homogeneous gauge data of a background model at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeQuantities {
    pub tau: f64,
    pub lapse: f64,
    /// Conformal factor of the spatial metric relative to `γ`.
    pub scale_sq: f64,
}

impl BackgroundModel {
    pub fn new(n: u32, sign: CurvatureSign) -> Result<Self> {
        check_dimension(n)?;
        Ok(Self { n, sign })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn sign(&self) -> CurvatureSign {
        self.sign
    }

    /// Open interval of proper time on which the model is defined.
    pub fn t_domain(&self) -> (f64, f64) {
        match self.sign {
            CurvatureSign::Negative => (0.0, f64::INFINITY),
            CurvatureSign::Positive => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.t_domain();
        if t.is_finite() && t > lo && t < hi {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "t",
                value: t,
                domain: match self.sign {
                    CurvatureSign::Negative => "(0, inf)",
                    CurvatureSign::Positive => "(-inf, inf)",
                },
            })
        }
    }

    /// Warping factor `a(t)` whose square multiplies `γ`.
    pub fn scale_factor(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(match self.sign {
            CurvatureSign::Negative => t.sinh(),
            CurvatureSign::Positive => t.cosh(),
        })
    }

    /// Mean curvature of the slice `{t} × M`.
    pub fn mean_curvature(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let n = f64::from(self.n);
        Ok(match self.sign {
            CurvatureSign::Negative => -n * t.cosh() / t.sinh(),
            CurvatureSign::Positive => -n * t.tanh(),
        })
    }

    pub fn gauge_quantities(&self, t: f64) -> Result<GaugeQuantities> {
        let tau = self.mean_curvature(t)?;
        let a = self.scale_factor(t)?;
        Ok(GaugeQuantities {
            tau,
            lapse: homogeneous_lapse(self.n, tau, self.sign)?,
            scale_sq: a * a,
        })
    }
}

/// Spatially constant lapse solving the homogeneous lapse equation with `Σ = 0`.
///
/// Standard gauge: `N = n/(τ² - n²)` for `τ² > n²`.
/// Reversed gauge: `N = n/(n² - τ²)` for `τ² < n²`.
pub fn homogeneous_lapse(n: u32, tau: f64, sign: CurvatureSign) -> Result<f64> {
    let nf = check_dimension(n)?;
    let gap = (tau - nf) * (tau + nf);
    match sign {
        CurvatureSign::Negative if tau.is_finite() && gap > 0.0 => Ok(nf / gap),
        CurvatureSign::Positive if tau.is_finite() && gap < 0.0 => Ok(nf / -gap),
        CurvatureSign::Negative => Err(Error::Domain {
            what: "tau",
            value: tau,
            domain: "tau^2 > n^2",
        }),
        CurvatureSign::Positive => Err(Error::Domain {
            what: "tau",
            value: tau,
            domain: "tau^2 < n^2",
        }),
    }
}

/// Residual of the homogeneous lapse equation `0 = ∓1 + N(τ²/n - n)`.
pub fn lapse_equation_residual(n: u32, tau: f64, lapse: f64, sign: CurvatureSign) -> f64 {
    let nf = f64::from(n);
    let term = lapse * (tau * tau / nf - nf);
    match sign {
        CurvatureSign::Negative => -1.0 + term,
        CurvatureSign::Positive => 1.0 + term,
    }
}

/// Rescaling factor `s(τ)`: `(τ/n)² - 1` in the standard gauge, `1 - (τ/n)²`
/// in the reversed gauge.
pub fn rescaling_factor(n: u32, sign: CurvatureSign, tau: f64) -> Result<f64> {
    let nf = check_dimension(n)?;
    let q = tau / nf;
    let value = match sign {
        CurvatureSign::Negative => (q - 1.0) * (q + 1.0),
        CurvatureSign::Positive => (1.0 - q) * (1.0 + q),
    };
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            what: "tau",
            value: tau,
            domain: match sign {
                CurvatureSign::Negative => "tau^2 > n^2",
                CurvatureSign::Positive => "tau^2 < n^2",
            },
        })
    }
}

/// Mean curvature and rescaling factor as functions of rescaled time `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmcTime {
    pub tau: f64,
    pub rescaling: f64,
}

/// `τ(T) = -n coth(T)` (standard) or `-n tanh(T)` (reversed), together with
/// `s(τ(T))`.
///
/// The composite `s(τ(T))` equals `sinh⁻²(T)` resp. `cosh⁻²(T)` and is
/// evaluated in that form: going through the rounded `τ` loses about
/// `log₂(cosh² T)` bits to cancellation in `(τ/n)² - 1`.
pub fn cmc_time_maps(n: u32, sign: CurvatureSign, big_t: f64) -> Result<CmcTime> {
    let nf = check_dimension(n)?;
    match sign {
        CurvatureSign::Negative => {
            if !(big_t > 0.0 && big_t.is_finite()) {
                return Err(Error::Domain {
                    what: "T",
                    value: big_t,
                    domain: "(0, inf)",
                });
            }
            let sh = big_t.sinh();
            Ok(CmcTime {
                tau: -nf * big_t.cosh() / sh,
                rescaling: 1.0 / (sh * sh),
            })
        }
        CurvatureSign::Positive => {
            if !big_t.is_finite() {
                return Err(Error::Domain {
                    what: "T",
                    value: big_t,
                    domain: "(-inf, inf)",
                });
            }
            let ch = big_t.cosh();
            Ok(CmcTime {
                tau: -nf * big_t.tanh(),
                rescaling: 1.0 / (ch * ch),
            })
        }
    }
}

/// Right-hand sides of the rescaled metric and tracefree evolution equations
/// at the homogeneous background `g = γ, Σ = 0, X = 0`, reduced to the
/// coefficient of `γ`. Both vanish at the fixed point.
///
/// The lapse is obtained from the rescaled lapse equation
/// (`ΔN = ∓1 + N(|Σ|² ± n)`) rather than hard-coded.
pub fn rescaled_background_residual(n: u32, sign: CurvatureSign, big_t: f64) -> Result<(f64, f64)> {
    let nf = check_dimension(n)?;
    // Validates T against the gauge domain.
    cmc_time_maps(n, sign, big_t)?;

    let metric = 1.0;
    let sigma = 0.0;
    let sigma_sq = 0.0;
    let sigma_sigma = 0.0;

    match sign {
        CurvatureSign::Negative => {
            let lapse = 1.0 / (sigma_sq + nf);
            let ricci = -(nf - 1.0) * metric;
            let coth = big_t.cosh() / big_t.sinh();
            let pref = nf / big_t.sinh();

            let residual_g = -2.0 * coth * (1.0 - nf * lapse) * metric - pref * (2.0 * lapse * sigma);
            let residual_sigma = -nf * nf * coth * (1.0 / (nf * nf) + lapse - 2.0 * lapse / nf) * sigma
                + pref * lapse * (ricci + nf * metric - 2.0 * sigma_sigma)
                + pref * (-metric / nf);
            Ok((residual_g, residual_sigma))
        }
        CurvatureSign::Positive => {
            let lapse = 1.0 / (nf - sigma_sq);
            let ricci = (nf - 1.0) * metric;
            let tanh = big_t.tanh();
            let pref = nf / big_t.cosh();

            let residual_g = -2.0 * tanh * (1.0 - nf * lapse) * metric - pref * (2.0 * lapse * sigma);
            let residual_sigma = -nf * nf * tanh * (1.0 / (nf * nf) + lapse - 2.0 * lapse / nf) * sigma
                + pref * lapse * (ricci - nf * metric - 2.0 * sigma_sigma)
                + pref * (metric / nf);
            Ok((residual_g, residual_sigma))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const NEG: CurvatureSign = CurvatureSign::Negative;
    const POS: CurvatureSign = CurvatureSign::Positive;

    #[test]
    fn scale_factor_examples() {
        let neg = BackgroundModel::new(3, NEG).unwrap();
        let pos = BackgroundModel::new(3, POS).unwrap();
        assert_relative_eq!(neg.scale_factor(1f64.asinh()).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(pos.scale_factor(0.0).unwrap(), 1.0);
        assert_relative_eq!(neg.scale_factor(1.0).unwrap(), 1.175_201_193_643_801_4, epsilon = 1e-15);
    }

    #[test]
    fn negative_model_rejects_nonpositive_time() {
        let neg = BackgroundModel::new(3, NEG).unwrap();
        assert!(matches!(neg.scale_factor(0.0), Err(Error::Domain { .. })));
        assert!(matches!(neg.mean_curvature(-1.0), Err(Error::Domain { .. })));
        assert!(neg.scale_factor(f64::NAN).is_err());
        assert!(BackgroundModel::new(1, NEG).is_err());
    }

    #[test]
    fn mean_curvature_examples() {
        let neg = BackgroundModel::new(3, NEG).unwrap();
        let pos = BackgroundModel::new(4, POS).unwrap();
        assert_relative_eq!(
            neg.mean_curvature(1f64.asinh()).unwrap(),
            -3.0 * 2f64.sqrt(),
            epsilon = 1e-14
        );
        assert_eq!(pos.mean_curvature(0.0).unwrap(), 0.0);
        assert_relative_eq!(neg.mean_curvature(40.0).unwrap(), -3.0, epsilon = 1e-12);
    }

    #[test]
    fn mean_curvature_is_strictly_monotone() {
        let neg = BackgroundModel::new(3, NEG).unwrap();
        let pos = BackgroundModel::new(4, POS).unwrap();
        let grid = |lo: f64, hi: f64| (0..2000).map(move |i| lo + (hi - lo) * f64::from(i) / 1999.0);

        let taus: Vec<f64> = grid(0.01, 15.0).map(|t| neg.mean_curvature(t).unwrap()).collect();
        assert!(taus.windows(2).all(|w| w[1] > w[0]));
        assert!(taus.iter().all(|&tau| tau < -3.0));

        let taus: Vec<f64> = grid(-15.0, 15.0).map(|t| pos.mean_curvature(t).unwrap()).collect();
        assert!(taus.windows(2).all(|w| w[1] < w[0]));
        assert!(taus.iter().all(|&tau| tau.abs() < 4.0));
    }

    #[test]
    fn lapse_examples() {
        assert_relative_eq!(
            homogeneous_lapse(3, -3.0 * 2f64.sqrt(), NEG).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-14
        );
        assert_eq!(homogeneous_lapse(4, 0.0, POS).unwrap(), 0.25);
        let near = homogeneous_lapse(2, -2.000_000_1, NEG).unwrap();
        assert!(near.is_finite() && near > 1e6);
    }

    #[test]
    fn lapse_rejects_wrong_gauge_range() {
        assert!(matches!(homogeneous_lapse(3, -2.0, NEG), Err(Error::Domain { .. })));
        assert!(matches!(homogeneous_lapse(3, -3.0, NEG), Err(Error::Domain { .. })));
        assert!(matches!(homogeneous_lapse(3, 5.0, POS), Err(Error::Domain { .. })));
        assert!(matches!(homogeneous_lapse(3, 3.0, POS), Err(Error::Domain { .. })));
    }

    #[test]
    fn gauge_quantities_match_model() {
        let neg = BackgroundModel::new(3, NEG).unwrap();
        let g = neg.gauge_quantities(1f64.asinh()).unwrap();
        assert_relative_eq!(g.lapse, 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(g.scale_sq, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn cmc_time_examples() {
        let c = cmc_time_maps(3, NEG, 1f64.asinh()).unwrap();
        assert_relative_eq!(c.tau, -3.0 * 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(c.rescaling, 1.0, epsilon = 1e-14);

        let c = cmc_time_maps(4, POS, 0.0).unwrap();
        assert_eq!((c.tau, c.rescaling), (0.0, 1.0));

        let c = cmc_time_maps(3, NEG, 2.0).unwrap();
        assert_relative_eq!(c.tau, -3.111_944_162_182_644, epsilon = 1e-12);
        assert_relative_eq!(c.rescaling, 0.076_021_829_838_071_08, epsilon = 1e-12);

        assert!(cmc_time_maps(3, NEG, 0.0).is_err());
        assert!(cmc_time_maps(3, NEG, -1.0).is_err());
    }

    #[test]
    fn rescaling_factor_agrees_with_time_map() {
        for &t in &[0.3, 1.0, 2.0, 4.0] {
            let c = cmc_time_maps(5, NEG, t).unwrap();
            let via_tau = rescaling_factor(5, NEG, c.tau).unwrap();
            // relative conditioning of (τ/n)² - 1 is ~ 2cosh²(T)
            let bound = 8.0 * t.cosh().powi(2) * f64::EPSILON;
            assert!((via_tau / c.rescaling - 1.0).abs() <= bound, "T = {t}");

            let c = cmc_time_maps(5, POS, t).unwrap();
            let via_tau = rescaling_factor(5, POS, c.tau).unwrap();
            assert!((via_tau / c.rescaling - 1.0).abs() <= bound, "T = {t}");
        }
        assert!(rescaling_factor(3, NEG, -3.0).is_err());
        assert!(rescaling_factor(3, POS, 3.0).is_err());
    }

    #[test]
    fn rescaled_residual_examples() {
        for (n, sign, t) in [(3, NEG, 1.0), (4, POS, 0.5), (2, NEG, 3.0)] {
            let (rg, rs) = rescaled_background_residual(n, sign, t).unwrap();
            assert!(rg.abs() <= 1e-12 && rs.abs() <= 1e-12, "{n} {sign} {t}: {rg} {rs}");
        }
        assert!(rescaled_background_residual(3, NEG, 0.0).is_err());
    }

    #[test]
    fn curvature_sign_parses() {
        assert_eq!("Positive".parse::<CurvatureSign>().unwrap(), POS);
        assert_eq!("negative".parse::<CurvatureSign>().unwrap(), NEG);
        assert!("flat".parse::<CurvatureSign>().is_err());
    }

    fn ulps_from_one(x: f64) -> f64 {
        (x - 1.0).abs() / f64::EPSILON
    }

    proptest! {
        #[test]
        fn negative_time_map_identity(n in 2u32..12, t in 1e-3f64..30.0) {
            let c = cmc_time_maps(n, NEG, t).unwrap();
            let sh = t.sinh();
            prop_assert!(ulps_from_one(c.rescaling * sh * sh) <= 4.0);
        }

        #[test]
        fn positive_time_map_identity(n in 2u32..12, t in -30.0f64..30.0) {
            let c = cmc_time_maps(n, POS, t).unwrap();
            let ch = t.cosh();
            prop_assert!(ulps_from_one(c.rescaling * ch * ch) <= 4.0);
        }

        #[test]
        fn lapse_solves_lapse_equation(n in 2u32..12, q in 1.001f64..50.0, p in 0.0f64..0.999) {
            let nf = f64::from(n);
            let tau = -q * nf;
            let lapse = homogeneous_lapse(n, tau, NEG).unwrap();
            prop_assert!(lapse_equation_residual(n, tau, lapse, NEG).abs() <= 1e-12);

            let tau = p * nf;
            let lapse = homogeneous_lapse(n, tau, POS).unwrap();
            prop_assert!(lapse_equation_residual(n, tau, lapse, POS).abs() <= 1e-12);
        }

        #[test]
        fn rescaled_fixed_point(n in 2u32..10, t in 1e-3f64..20.0, pos in any::<bool>()) {
            let sign = if pos { POS } else { NEG };
            let (rg, rs) = rescaled_background_residual(n, sign, t).unwrap();
            prop_assert!(rg.abs() <= 1e-12 && rs.abs() <= 1e-12);
        }
    }
}
