use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid too small: axis {axis} has {nodes} nodes, at least {min} required")]
    GridTooSmall { axis: usize, nodes: usize, min: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite field value at node {node:?}")]
    NonFinite { node: [usize; 2] },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {point:?} lies outside the grid hull")]
    OutsideHull { point: [f64; 2] },

    #[error("matrix is not symmetric positive definite (smallest eigenvalue {min_eigenvalue})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("Hessian is not positive definite at node {node:?} (x = {point:?}, det = {det})")]
    NotConvex { node: [usize; 2], point: [f64; 2], det: f64 },

    #[error("convexity lost at node {node:?} (x = {point:?}) stepping from t = {t}: det D2u = {det}")]
    ConvexityLost { node: [usize; 2], point: [f64; 2], t: f64, det: f64 },

    #[error("matrix is not orthogonal: max |A^T A - I| = {deviation:e}")]
    NotOrthogonal { deviation: f64 },

    #[error("matrix has no finite order l <= {max_order} with A^l = I and A^(l-1) != I")]
    NoFiniteOrder { max_order: usize },

    #[error("the translation vector a must be nonzero (|a| != 0)")]
    ZeroTranslation,

    #[error("symmetry order l_A = {0} but l_A >= 3 is required")]
    OrderTooSmall(usize),

    #[error("annulus [{r_min}, {r_max}] contains no evaluable grid nodes")]
    EmptyAnnulus { r_min: f64, r_max: f64 },

    #[error("radial profile must be increasing and convex: at r = {r} u_r = {u_r}, u_rr = {u_rr}")]
    NonConvexProfile { r: f64, u_r: f64, u_rr: f64 },

    #[error("condition S violated by the initial data: smallest Hessian eigenvalue {lambda_min}")]
    ConditionSViolated { lambda_min: f64 },

    #[error("a0 * b0 > 0 is required, got a0 = {a0}, b0 = {b0}")]
    OdeSignCondition { a0: f64, b0: f64 },

    #[error("exponential overflow at t = {t}")]
    Overflow { t: f64 },

    #[error("profile span [{lo}, {hi}] is not symmetric about t0 = {t0}")]
    AsymmetricSpan { lo: f64, hi: f64, t0: f64 },

    #[error("insufficient grid nesting: {0}")]
    InsufficientNesting(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for failures that arise while a computation runs (as opposed to
    /// inputs that violate an operation's preconditions).
    pub fn is_runtime(&self) -> bool {
        matches!(self, Error::ConvexityLost { .. } | Error::Overflow { .. })
    }
}
