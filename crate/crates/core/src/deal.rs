//! Deal contracts and their mutable per-campaign state.

use std::error::Error;
use std::fmt;

/// A minimum-conversion ad campaign contract: the advertiser is paid
/// `pay_per_click` per click only if at least `required_clicks` clicks arrive
/// within `expiry_visits` user visits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deal {
    /// Minimum clicks (m) the campaign must win before expiry to be paid.
    pub required_clicks: u64,
    /// Campaign horizon (e) measured in user visits, at least 1.
    pub expiry_visits: u64,
    /// Payment per click (rho) once the minimum is met.
    pub pay_per_click: f64,
    /// Click-through rate (mu) of the ad.
    pub ctr: f64,
}

impl Deal {
    pub fn new(
        required_clicks: u64,
        expiry_visits: u64,
        pay_per_click: f64,
        ctr: f64,
    ) -> Result<Self, DealError> {
        if expiry_visits == 0 {
            return Err(DealError::ZeroExpiry);
        }
        if !(0.0..=1.0).contains(&ctr) {
            return Err(DealError::CtrOutOfRange(ctr));
        }
        if !pay_per_click.is_finite() || pay_per_click < 0.0 {
            return Err(DealError::InvalidPayPerClick(pay_per_click));
        }
        Ok(Deal { required_clicks, expiry_visits, pay_per_click, ctr })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DealError {
    ZeroExpiry,
    CtrOutOfRange(f64),
    InvalidPayPerClick(f64),
}

impl fmt::Display for DealError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DealError::ZeroExpiry => write!(f, "deal expiry must be at least one visit"),
            DealError::CtrOutOfRange(v) => write!(f, "ctr {v} outside [0, 1]"),
            DealError::InvalidPayPerClick(v) => {
                write!(f, "pay per click {v} must be finite and nonnegative")
            }
        }
    }
}

impl Error for DealError {}

/// Mutable campaign state accumulated while bidding a deal through a stream
/// of impression opportunities, plus the bid cache the recompute policy
/// maintains.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DealState {
    /// Elapsed user visits (t).
    pub visits: u64,
    /// Clicks won so far (c_t).
    pub clicks: u64,
    /// Total payment for impressions won so far.
    pub spend: f64,
    /// Last optimized bid, reused between recomputes.
    pub cached_bid: Option<f64>,
    /// Static single-impression bid, computed once per deal on demand.
    pub static_bid_cache: Option<f64>,
    /// Opportunities seen since the last optimization.
    pub opportunities_since_recompute: u32,
    /// Number of multi-start optimization rounds already spent on this deal.
    pub multistart_rounds_done: u32,
    /// Set when a click landed after the last optimization; forces a
    /// recompute on the next opportunity.
    pub click_since_recompute: bool,
}

impl DealState {
    pub fn fresh() -> Self {
        DealState::default()
    }

    /// Clicks still needed to meet the guarantee (r_t), saturating at zero.
    pub fn remaining_required(&self, deal: &Deal) -> u64 {
        deal.required_clicks.saturating_sub(self.clicks)
    }

    /// Visits left before expiry (u_t).
    pub fn remaining_visits(&self, deal: &Deal) -> u64 {
        deal.expiry_visits.saturating_sub(self.visits)
    }

    /// Whether the minimum-click guarantee has been met.
    pub fn tipped(&self, deal: &Deal) -> bool {
        self.clicks >= deal.required_clicks
    }
}
