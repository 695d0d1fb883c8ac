use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a closed-form quantity
    /// (including the gauge boundary `|τ| = n`).
    #[error("{what} = {value} lies outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A log scale factor fell below the exponentiation guard; the solution is
    /// at or past a blow-up.
    #[error("log scale factor {value} is below the overflow guard")]
    Overflow { value: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bisection endpoints s = {s_lo} and s = {s_hi} both classify as {verdict}")]
    Bracket { s_lo: f64, s_hi: f64, verdict: String },

    #[error("configuration is outside the convergent regime: {0}")]
    Regime(String),

    #[error("trajectory leaves the reduced-Hamiltonian gauge range at t = {t} (tau = {tau})")]
    GaugeRange { t: f64, tau: f64 },
}

impl Error {
    /// True for errors caused by the caller violating an operation's
    /// precondition, as opposed to malformed input.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::Precondition(_) | Error::Bracket { .. } | Error::Regime(_) | Error::GaugeRange { .. }
        )
    }
}
