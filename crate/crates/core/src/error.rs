use thiserror::Error;

use crate::resolvent_probe::GrowthModel;

/// Every failure the toolkit can report.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite complex point ({re}, {im})")]
    NonFinitePoint { re: f64, im: f64 },

    #[error("contour is not closed: gap {gap:.3e}")]
    NotClosed { gap: f64 },

    #[error("contour is not simple: pieces {first} and {second} intersect")]
    NotSimple { first: usize, second: usize },

    #[error("contour is negatively oriented (signed area {area:.3e})")]
    NegativeOrientation { area: f64 },

    #[error("combs intersect: {0}")]
    CombsIntersect(String),

    #[error("comb rectangle {index} escapes the sector: {detail}")]
    CombEscapesSector { index: usize, detail: String },

    #[error("boundary-ambiguous query: point within {distance:.3e} of the contour")]
    BoundaryAmbiguous { distance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("resolvent pole: |z - lambda| = {distance:.3e} at z = ({re}, {im})")]
    ResolventPole { re: f64, im: f64, distance: f64 },

    #[error("resolvent defect {defect:.3e} exceeds the contract after refinement")]
    ResolventDefect { defect: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate:.6e})")]
    PowerIterationStalled { iterations: usize, last_estimate: f64 },

    #[error("model mismatch: requested fit residual {:.3e} exceeds 0.5 (alternative fit residual {:.3e})", .requested.fit_residual, .alternative.fit_residual)]
    ModelMismatch { requested: Box<GrowthModel>, alternative: Box<GrowthModel> },

    #[error("C0 bound violated at r = {r:.6e}: norm {norm:.6e} > bound {bound:.6e}")]
    RayBoundViolated { r: f64, norm: f64, bound: f64 },

    #[error("rectangle collapsed at n = {n}")]
    RectangleCollapsed { n: usize },

    #[error("weight evaluated on its branch cut (arg = {arg:.12})")]
    BranchCut { arg: f64 },

    #[error("integrand unbounded on contour: probe value {value:.3e} at z = ({re}, {im})")]
    IntegrandUnbounded { value: f64, re: f64, im: f64 },

    #[error("truncation too coarse: dropped-tail bound {bound:.3e} exceeds {limit:.3e}")]
    TruncationTooCoarse { bound: f64, limit: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate:.3e} > {tol:.3e} after {panels} panels")]
    QuadratureStalled { estimate: f64, tol: f64, panels: usize },

    #[error("densify dimension cap: dim {dim} > {cap}")]
    DensifyCap { dim: usize, cap: usize },

    #[error("containment violated: {0}")]
    ContainmentViolated(String),

    #[error("domains overlap: {0}")]
    DomainsOverlap(String),

    #[error("grid point outside the admissible region: ({re}, {im})")]
    OutsideRegion { re: f64, im: f64 },

    #[error("operator has no power bound")]
    NotPowerBounded,

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
