//! Expected-profit math, bid optimization, and replay simulation for
//! group-buying deal campaigns with minimum-click guarantees.
//!
//! A deal `(m, e, rho, mu)` pays `rho` per click once at least `m` clicks
//! have arrived within `e` user visits; short of that, every impression
//! bought was wasted. This crate models the resulting expected profit as a
//! function of the bid, optimizes it in real time as the campaign state
//! evolves, and replays bidding strategies against click logs through
//! first-price auctions with sampled competitor bids:
//!
//! - [`deal`]: deal terms and mutable campaign state.
//! - [`win_model`]: win probability d(b), competitor bid samplers, payment.
//! - [`profit_math`]: binomial tail sums `phi`/`theta`, expected profit,
//!   marginal impression value, admissibility, static optimal bid.
//! - [`optimizer`]: bounded Brent maximizer, multi-start, recompute policy.
//! - [`bidders`]: the real-time strategy and the static/adaptive/random
//!   baselines.
//! - [`simulator`]: click-log parsing and generation, replays, sweeps,
//!   selection, admission, and optimizer timing experiments.
//! - [`rng`]: deterministic label-addressed random streams.
//!
//! Everything is deterministic given an experiment seed; paired comparisons
//! across strategies see identical competitor bids impression by impression.

pub mod bidders;
pub mod deal;
mod numeric;
pub mod optimizer;
pub mod profit_math;
pub mod rng;
pub mod simulator;
pub mod win_model;

pub use bidders::{BidError, BidderStrategy};
pub use deal::{Deal, DealError, DealState};
pub use optimizer::{
    brent_maximize, multi_start_maximize, next_bid, BidBounds, OptimizerConfig, OptimizerError,
};
pub use profit_math::{
    admissibility_profit, bid_objective, expected_profit, is_admissible, marginal_value,
    max_fresh_profit, phi, static_optimal_bid, theta, theta_normal_uncorrected, StateSnapshot,
    SumMode, NORMAL_APPROX_MIN_VARIANCE,
};
pub use win_model::{CompetitorDistribution, PaymentModel, WinModel, WinModelError};
