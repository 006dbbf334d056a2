use thiserror::Error;

/// Errors raised across the engine. Variants carry enough context to be
/// reported field-by-field by the command-line harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite input `{0}`")]
    NonFinite(&'static str),

    #[error("degenerate soliton: {0}")]
    Degenerate(String),

    #[error("shallow-soliton breakdown: u_inf - A = {gap:e} is below {limit:e}")]
    ShallowSoliton { gap: f64, limit: f64 },

    #[error("background collapse: u_inf reached {value:e} at Z = {slow_z}")]
    BackgroundCollapse { value: f64, slow_z: f64 },

    #[error("history covers z in [0, {available}] but {requested} was requested")]
    CoverageGap { requested: f64, available: f64 },

    #[error("perturbation `{0}` has no pointwise evaluator")]
    NonLocal(String),

    #[error("{what}: need at least {needed}, got {got}")]
    TooFew { what: &'static str, needed: usize, got: usize },

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("unstable integration: max |u| grew to {peak:e} at z = {z}")]
    Unstable { peak: f64, z: f64 },

    #[error("boundary contamination: shelf edge reaches {edge} but the limit is {limit}")]
    BoundaryContamination { edge: f64, limit: f64 },

    #[error("plateau window too narrow on the {side} side: [{start}, {end}] holds {points} points")]
    PlateauTooNarrow { side: &'static str, start: f64, end: f64, points: usize },

    #[error("probe at T* = {probe} overtaken by a shelf edge at z = {z}")]
    ProbeOvertaken { probe: f64, z: f64 },

    #[error("no edge crossing found on the {0} side")]
    EdgeNotFound(&'static str),

    #[error("representation mismatch: {0}")]
    Representation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(name))
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    require_finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be > 0, got {value}") })
    }
}
