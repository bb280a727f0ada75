use num_complex::Complex64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("inclusion is not strictly inside the domain: gap {gap:.4} < required {required:.4}")]
    InclusionNotInterior { gap: f64, required: f64 },

    #[error("mesh too coarse: only {count} triangles inside the inclusion (need at least 8)")]
    UnresolvedInclusion { count: usize },

    #[error(
        "coefficient not positive definite on element {element}: lowest eigenvalue {eigenvalue:e}"
    )]
    NotPositiveDefinite { element: usize, eigenvalue: f64 },

    #[error("degenerate reduction: sigma0^2 + omega^2 eps0^2 = 0")]
    DegenerateReduction,

    #[error("no inclusion element has its centroid in the slab of depth {delta}")]
    EmptySlab { delta: f64 },

    #[error("singular system at pivot {pivot} (condition estimate {condition:e})")]
    Singular { pivot: usize, condition: f64 },

    #[error(
        "iterative solver stalled after {iterations} iterations (relative residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("probe exponent {exponent:.1} exceeds the overflow guard; lower tau")]
    ProbeOverflow { exponent: f64 },

    #[error(
        "Mittag-Leffler evaluation reached relative error {achieved:e} only (best value {best})"
    )]
    Accuracy { best: Complex64, achieved: f64 },

    #[error("Mittag-Leffler value at {z} exceeds the double-precision range")]
    Overflow { z: Complex64 },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("probe trace is poorly represented in the basis: relative truncation error {error:e} > {threshold:e}")]
    Truncation { error: f64, threshold: f64 },

    #[error("cone condition violated: the cone at the probe vertex meets the domain")]
    ConeCondition,

    #[error("support fit failed: {0}")]
    Fit(String),

    #[error("no transition found in [{lo}, {hi}]: both ends classify as {class}")]
    NoTransition {
        lo: f64,
        hi: f64,
        class: &'static str,
    },

    #[error("half-plane intersection is empty")]
    EmptyRegion,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NotConverged { .. }
                | Error::ProbeOverflow { .. }
                | Error::Accuracy { .. }
                | Error::Overflow { .. }
                | Error::Truncation { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::Fit(_)
                | Error::NoTransition { .. }
                | Error::EmptyRegion
                | Error::EmptySlab { .. }
                | Error::UnresolvedInclusion { .. }
        )
    }
}
