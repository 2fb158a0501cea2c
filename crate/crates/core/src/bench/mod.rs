//! Cost prediction, randomized comparison campaigns, and their reports.

pub mod campaign;
pub mod cost;
pub mod report;

pub use campaign::{
    run_campaign, run_emulated_campaign, summarize, AlgoRun, Campaign, CampaignConfig, CaseReport, RatioSummary,
    Summary,
};
pub use cost::{classify_shape, estimate_cost, CostEstimate, CostModel, ShapeCategory};
pub use report::{emit_report, ReportFormat};
