//! Win-probability models mapping bids to the chance of winning a sealed-bid
//! highest-wins auction, payment rules, and competitor bid distributions for
//! the simulator.

use std::error::Error;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::numeric::normal_cdf;
use crate::optimizer::BidBounds;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Uniform { lo: f64, hi: f64, n_bidders: u32 },
    Gaussian { mean: f64, sigma: f64, n_bidders: u32 },
    Constant { p: f64 },
}

/// Probability-of-winning model d(b) for a sealed-bid auction where the
/// highest of `n_bidders` total bids (our own included) wins, with each
/// competitor drawing independently from the same distribution:
/// d(b) = CDF(b)^(n_bidders - 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinModel {
    kind: Kind,
}

impl WinModel {
    /// Competitors bid uniformly on [lo, hi).
    pub fn uniform(lo: f64, hi: f64, n_bidders: u32) -> Result<Self, WinModelError> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi || lo < 0.0 {
            return Err(WinModelError::InvalidSupport { lo, hi });
        }
        if n_bidders == 0 {
            return Err(WinModelError::ZeroBidders);
        }
        Ok(WinModel { kind: Kind::Uniform { lo, hi, n_bidders } })
    }

    /// Competitors bid normally; sampled bids are clamped at zero while d(b)
    /// keeps the untruncated CDF, so the small negative-bid mass is a modeled
    /// approximation mismatch rather than a hidden one.
    pub fn gaussian(mean: f64, sigma: f64, n_bidders: u32) -> Result<Self, WinModelError> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(WinModelError::NonPositiveSigma(sigma));
        }
        if !mean.is_finite() {
            return Err(WinModelError::InvalidSupport { lo: mean, hi: mean });
        }
        if n_bidders == 0 {
            return Err(WinModelError::ZeroBidders);
        }
        Ok(WinModel { kind: Kind::Gaussian { mean, sigma, n_bidders } })
    }

    /// Fixed win probability independent of the bid. `constant(1.0)` models
    /// selection without any competing bidders.
    pub fn constant(p: f64) -> Result<Self, WinModelError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(WinModelError::ProbabilityOutOfRange(p));
        }
        Ok(WinModel { kind: Kind::Constant { p } })
    }

    /// Probability of winning an impression at `bid`.
    pub fn win_probability(&self, bid: f64) -> f64 {
        match self.kind {
            Kind::Uniform { lo, hi, n_bidders } => {
                let cdf = ((bid - lo) / (hi - lo)).clamp(0.0, 1.0);
                cdf.powi(n_bidders as i32 - 1)
            }
            Kind::Gaussian { mean, sigma, n_bidders } => {
                normal_cdf((bid - mean) / sigma).powi(n_bidders as i32 - 1)
            }
            Kind::Constant { p } => p,
        }
    }

    /// Total number of bidders, or `None` for the constant model which does
    /// not describe an auction.
    pub fn n_bidders(&self) -> Option<u32> {
        match self.kind {
            Kind::Uniform { n_bidders, .. } | Kind::Gaussian { n_bidders, .. } => Some(n_bidders),
            Kind::Constant { .. } => None,
        }
    }

    /// Interval guaranteed to contain every profit-optimal bid: below it the
    /// win probability is zero, above it flat at one (to within ~1e-9 for the
    /// gaussian model, whose bounds are mean +- 6 sigma clamped at zero).
    pub fn bid_bounds(&self) -> Option<BidBounds> {
        match self.kind {
            Kind::Uniform { lo, hi, .. } => Some(BidBounds::new(lo, hi).expect("lo < hi")),
            Kind::Gaussian { mean, sigma, .. } => {
                let lo = (mean - 6.0 * sigma).max(0.0);
                let hi = mean + 6.0 * sigma;
                Some(BidBounds::new(lo, hi).expect("sigma > 0"))
            }
            Kind::Constant { .. } => None,
        }
    }

    /// The distribution a single competitor draws bids from, replicated
    /// `n_bidders - 1` times for the simulator's auction.
    pub fn competitor_distributions(&self) -> Result<Vec<CompetitorDistribution>, WinModelError> {
        match self.kind {
            Kind::Uniform { lo, hi, n_bidders } => {
                Ok(vec![CompetitorDistribution::Uniform { lo, hi }; n_bidders as usize - 1])
            }
            Kind::Gaussian { mean, sigma, n_bidders } => {
                Ok(vec![CompetitorDistribution::Gaussian { mean, sigma }; n_bidders as usize - 1])
            }
            Kind::Constant { .. } => Err(WinModelError::NoBidDistribution),
        }
    }

    /// One vector of competitor bids, i.i.d. from the model's single-bidder
    /// distribution. Deterministic given the rng state.
    pub fn sample_competitor_bids<R: Rng>(&self, rng: &mut R) -> Result<Vec<f64>, WinModelError> {
        let dists = self.competitor_distributions()?;
        Ok(dists.iter().map(|d| d.sample(rng)).collect())
    }
}

/// A single competitor's bid distribution. The simulator accepts an explicit
/// list of these so the actual competition can deviate from the distribution
/// a bidder's [`WinModel`] assumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompetitorDistribution {
    Uniform { lo: f64, hi: f64 },
    /// Draws are clamped at zero: bids cannot be negative.
    Gaussian { mean: f64, sigma: f64 },
}

impl CompetitorDistribution {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            CompetitorDistribution::Uniform { lo, hi } => rng.random_range(lo..hi),
            CompetitorDistribution::Gaussian { mean, sigma } => {
                let normal = Normal::new(mean, sigma).expect("sigma > 0");
                normal.sample(rng).max(0.0)
            }
        }
    }
}

/// Payment charged on winning as a function of the submitted bid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaymentModel {
    /// Pay exactly the submitted bid.
    FirstPrice,
}

impl PaymentModel {
    pub fn payment(&self, bid: f64) -> f64 {
        match self {
            PaymentModel::FirstPrice => bid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WinModelError {
    InvalidSupport { lo: f64, hi: f64 },
    NonPositiveSigma(f64),
    ProbabilityOutOfRange(f64),
    ZeroBidders,
    /// The constant model has no competitor bid distribution to sample.
    NoBidDistribution,
}

impl fmt::Display for WinModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WinModelError::InvalidSupport { lo, hi } => {
                write!(f, "invalid bid support [{lo}, {hi}]: need finite 0 <= lo < hi")
            }
            WinModelError::NonPositiveSigma(s) => write!(f, "sigma {s} must be positive"),
            WinModelError::ProbabilityOutOfRange(p) => write!(f, "probability {p} outside [0, 1]"),
            WinModelError::ZeroBidders => write!(f, "auction needs at least one bidder"),
            WinModelError::NoBidDistribution => {
                write!(f, "constant win model has no competitor bid distribution")
            }
        }
    }
}

impl Error for WinModelError {}
