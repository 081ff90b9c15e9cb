use thiserror::Error;

use crate::geometry::Manifold;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("wrap is only defined on tori, got {0:?}")]
    NotATorus(Manifold),

    #[error("points live on different manifolds: {0:?} vs {1:?}")]
    ManifoldMismatch(Manifold, Manifold),

    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("node budget exceeded: need {needed}, budget {budget}")]
    BudgetExceeded { needed: u128, budget: usize },

    #[error("branch depth mismatch: {0} vs {1}")]
    DepthMismatch(usize, usize),

    #[error("singular point on branch at level -{level}")]
    SingularPointOnBranch { level: usize },

    #[error("singular point on forward orbit at step {step}")]
    SingularPointOnOrbit { step: usize },

    #[error("degenerate splitting: {0}")]
    DegenerateSplitting(String),

    #[error("adapted norm sum diverges for lambda_star = {lambda_star}")]
    DivergentSum { lambda_star: f64 },

    #[error("no sample survived in the unstable disk (eps = {eps})")]
    EmptyDisk { eps: f64 },

    #[error("no stable direction at the base point")]
    NoStableDirection,

    #[error("no branch inside the basic set could be built")]
    NoInSetBranch,

    #[error("orbit did not settle in one basic set within {steps} steps")]
    NonconvergentAtBudget { steps: usize },

    #[error("point lies outside the neighbourhood")]
    PointOutsideNeighbourhood,

    #[error("cell set is not a graph over the expanding coordinate: {0}")]
    NotAGraph(String),

    #[error("basic set type {got:?} does not satisfy the precondition {required}")]
    TypePrecondition {
        got: Option<(usize, usize)>,
        required: &'static str,
    },

    #[error("singular point encountered at {0}")]
    SingularPoint(String),

    #[error("unsupported manifold for this operation: {0:?}")]
    UnsupportedManifold(Manifold),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
