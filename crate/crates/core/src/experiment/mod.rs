//! Trial protocol, logs, performance indexes and campaign aggregation.

pub mod campaign;
pub mod log;
pub mod metrics;
pub mod stats;
pub mod trial;

pub use campaign::{run_campaign, write_campaign, Campaign, CampaignSetup, PopulationSpec};
pub use log::{LogRow, TrialLog};
pub use metrics::{compute_result, TrialResult};
pub use stats::sign_test;
pub use trial::{run_trial, SystemConfig, TrialConfig, TrialError, TrialOutput};
