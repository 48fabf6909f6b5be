//! Click-log replay and the experiments built on it: strategy sweeps over
//! required clicks, greedy deal selection within groups, admission control,
//! and optimizer timing. All randomness flows through label-addressed
//! streams from [`crate::rng`], so any two runs sharing a seed draw
//! identical competitor bids impression by impression regardless of which
//! strategies, thread counts, or required-click values are being compared.

mod admission;
mod bench;
mod log;
mod replay;
mod selection;

pub use admission::{admissibility_experiment, AdmissionRow};
pub use bench::{bench_optimizer, BenchRow, BenchSpec};
pub use log::{
    generate_synthetic_log, parse_click_log, write_click_log, AdRecords, ImpressionRecord,
    LogError, SyntheticLogSpec,
};
pub use replay::{
    aggregate_sweep, deal_for_ad, replay_ad, run_replays, DealTemplate, ReplayReport, ReplaySetup,
    SweepRow, TimingStats,
};
pub use selection::{selection_experiment, SelectionConfig, SelectionRow, Selector};

use std::error::Error;
use std::fmt;

use crate::bidders::BidError;
use crate::deal::DealError;
use crate::optimizer::OptimizerError;

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    Log(LogError),
    /// The ad's records could not back a valid deal (empty log section,
    /// required clicks unreachable by construction, bad template values).
    Deal { ad_id: String, source: DealError },
    Bid { ad_id: String, source: BidError },
    Optimizer(OptimizerError),
    /// An experiment precondition on its inputs failed; the message says
    /// which one.
    EmptyInput(&'static str),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Log(e) => write!(f, "{e}"),
            SimError::Deal { ad_id, source } => write!(f, "ad {ad_id}: {source}"),
            SimError::Bid { ad_id, source } => write!(f, "ad {ad_id}: {source}"),
            SimError::Optimizer(e) => write!(f, "{e}"),
            SimError::EmptyInput(what) => write!(f, "{what}"),
        }
    }
}

impl Error for SimError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        match self {
            SimError::Log(e) => Some(e),
            SimError::Deal { source, .. } => Some(source),
            SimError::Bid { source, .. } => Some(source),
            SimError::Optimizer(e) => Some(e),
            SimError::EmptyInput(_) => None,
        }
    }
}

impl From<LogError> for SimError {
    fn from(e: LogError) -> Self {
        SimError::Log(e)
    }
}

impl From<OptimizerError> for SimError {
    fn from(e: OptimizerError) -> Self {
        SimError::Optimizer(e)
    }
}
