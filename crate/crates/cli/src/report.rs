use endohyp::hyperbolic::HyperbolicityEstimate;
use endohyp::spectral::{
    AttractorReport, AxiomAReport, Classification, DerivativeExpansion, MetricExpansion, PurityReport,
    RepellerReport, SmoothnessReport, TypeVote,
};
use endohyp::Manifold;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sets: Vec<SetRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axiom_a: Option<AxiomAReport>,
    /// Output files next to the report, sorted.
    pub files: Vec<String>,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Report {
            tool: "endohyp".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            grid: None,
            sets: Vec::new(),
            axiom_a: None,
            files: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub manifold: Manifold,
    pub subdivisions: usize,
    pub cells: usize,
    pub edges: usize,
    pub recurrent_cells: usize,
}

/// Everything computed for one basic set. Operations that fail on a set are
/// listed in `errors` and leave their field empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetRecord {
    pub id: usize,
    pub cells: usize,
    pub type_uv: Option<(usize, usize)>,
    pub type_vote: Option<TypeVote>,
    pub classification: Classification,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attractor: Option<AttractorReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeller: Option<RepellerReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metric_expansion: Vec<MetricExpansion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative_expansion: Option<DerivativeExpansion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperbolicity: Option<HyperbolicityEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injectivity_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purity: Option<PurityReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub smoothness: Vec<SmoothnessReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}
