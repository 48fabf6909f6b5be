//! Scalar bid optimization: Brent's bounded method (parabolic interpolation
//! with golden-section fallback) applied to the negated objective, a
//! multi-start wrapper for non-unimodal objectives, and the per-impression
//! recompute policy that decides when a cached bid is good enough.

use std::error::Error;
use std::fmt;

use rand::Rng;

use crate::deal::{Deal, DealState};

/// Interval the optimizer searches; outside it the win probability is
/// saturated, so no profit-optimal bid is excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidBounds {
    lo: f64,
    hi: f64,
}

impl BidBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self, OptimizerError> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(OptimizerError::InvalidBounds { lo, hi });
        }
        Ok(BidBounds { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, bid: f64) -> bool {
        (self.lo..=self.hi).contains(&bid)
    }
}

/// Tolerances, restart counts, and recompute-policy constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Bid-space convergence tolerance; `None` derives `bounds.width() * 1e-5`.
    pub abs_tol: Option<f64>,
    /// Iteration cap per Brent start.
    pub max_iters: u32,
    /// Number of leading opportunities per deal optimized from random
    /// multi-start points before the warm-start policy takes over.
    pub multi_start_impressions: u32,
    /// Random starting points per multi-start optimization.
    pub starts_per_impression: u32,
    /// Cached bids are reused for this many opportunities before a
    /// re-optimization is forced.
    pub recompute_interval: u32,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            abs_tol: None,
            max_iters: 100,
            multi_start_impressions: 20,
            starts_per_impression: 8,
            recompute_interval: 32,
        }
    }
}

impl OptimizerConfig {
    /// Effective bid-space tolerance for the given search interval.
    pub fn bid_tolerance(&self, bounds: &BidBounds) -> f64 {
        self.abs_tol.unwrap_or(bounds.width() * 1e-5)
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        if let Some(t) = self.abs_tol {
            if !t.is_finite() || t <= 0.0 {
                return Err(OptimizerError::InvalidConfig("abs_tol must be positive"));
            }
        }
        if self.max_iters == 0 {
            return Err(OptimizerError::InvalidConfig("max_iters must be at least 1"));
        }
        if self.starts_per_impression == 0 {
            return Err(OptimizerError::InvalidConfig("starts_per_impression must be at least 1"));
        }
        if self.recompute_interval == 0 {
            return Err(OptimizerError::InvalidConfig("recompute_interval must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerError {
    /// The objective produced NaN or infinity at this bid; the offending
    /// start is abandoned.
    NonFiniteObjective { bid: f64 },
    InvalidBounds { lo: f64, hi: f64 },
    InvalidConfig(&'static str),
    NoStarts,
    /// The deal has no remaining visits; there is nothing to bid on.
    DealExpired,
}

impl fmt::Display for OptimizerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimizerError::NonFiniteObjective { bid } => {
                write!(f, "objective is not finite at bid {bid}")
            }
            OptimizerError::InvalidBounds { lo, hi } => {
                write!(f, "invalid bid bounds [{lo}, {hi}]: need finite lo < hi")
            }
            OptimizerError::InvalidConfig(msg) => write!(f, "invalid optimizer config: {msg}"),
            OptimizerError::NoStarts => write!(f, "multi-start requires at least one start point"),
            OptimizerError::DealExpired => write!(f, "deal has expired; no visits remain"),
        }
    }
}

impl Error for OptimizerError {}

const CGOLD: f64 = 0.381_966_011_250_105_2;

/// Maximizes `f` on the bounds via Brent's method from the given start.
/// Returns the located maximizer and its objective value; a local maximum
/// only, for non-unimodal objectives pair with [`multi_start_maximize`].
/// Never evaluates `f` outside the bounds; at most `cfg.max_iters`
/// iterations.
pub fn brent_maximize<F>(
    f: &mut F,
    bounds: BidBounds,
    start: f64,
    cfg: &OptimizerConfig,
) -> Result<(f64, f64), OptimizerError>
where
    F: FnMut(f64) -> f64,
{
    let tol1 = cfg.bid_tolerance(&bounds);
    if !tol1.is_finite() || tol1 <= 0.0 {
        return Err(OptimizerError::InvalidConfig("abs_tol must be positive"));
    }
    let tol2 = 2.0 * tol1;

    // Minimize the negated objective with the classic bounded scheme.
    let mut eval = |bid: f64| -> Result<f64, OptimizerError> {
        let val = f(bid);
        if !val.is_finite() {
            return Err(OptimizerError::NonFiniteObjective { bid });
        }
        Ok(-val)
    };

    let (mut a, mut b) = (bounds.lo, bounds.hi);
    let mut x = start.clamp(a, b);
    let mut w = x;
    let mut v = x;
    let mut fx = eval(x)?;
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..cfg.max_iters {
        let xm = 0.5 * (a + b);
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut take_golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            let mut q2 = 2.0 * (q - r);
            if q2 > 0.0 {
                p = -p;
            }
            q2 = q2.abs();
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q2 * e_prev).abs() && p > q2 * (a - x) && p < q2 * (b - x) {
                d = p / q2;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                take_golden = false;
            }
        }
        if take_golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = eval(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok((x, -fx))
}

/// Best of [`brent_maximize`] over every start point, with the interval
/// endpoints evaluated directly as extra candidates (Brent's interior probes
/// never land exactly on a boundary, but clamped optima do).
/// Fails only if every start fails; the first per-start error is returned.
pub fn multi_start_maximize<F>(
    f: &mut F,
    bounds: BidBounds,
    starts: &[f64],
    cfg: &OptimizerConfig,
) -> Result<(f64, f64), OptimizerError>
where
    F: FnMut(f64) -> f64,
{
    if starts.is_empty() {
        return Err(OptimizerError::NoStarts);
    }
    let mut best: Option<(f64, f64)> = None;
    let consider = |bid: f64, val: f64, best: &mut Option<(f64, f64)>| {
        if val.is_finite() && best.map_or(true, |(_, bv)| val > bv) {
            *best = Some((bid, val));
        }
    };
    for endpoint in [bounds.lo, bounds.hi] {
        let val = f(endpoint);
        consider(endpoint, val, &mut best);
    }
    let mut first_err = None;
    let mut any_start_ok = false;
    for &start in starts {
        match brent_maximize(f, bounds, start, cfg) {
            Ok((bid, val)) => {
                any_start_ok = true;
                consider(bid, val, &mut best);
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    if !any_start_ok {
        return Err(first_err.unwrap_or(OptimizerError::NoStarts));
    }
    Ok(best.expect("at least one start succeeded"))
}

/// Produces the bid for the next impression opportunity under the
/// recompute policy:
///
/// - the first `multi_start_impressions` opportunities of a deal run a full
///   multi-start optimization from random points;
/// - afterwards the cached bid is reused as-is, except that a click since the
///   last optimization or `recompute_interval` elapsed opportunities forces a
///   single warm-started re-optimization (the warm start is the cached bid
///   jittered by up to ten tolerances to escape razor-thin plateaus);
/// - cached-path calls perform zero objective evaluations.
///
/// Updates the cache and counters in `state`.
pub fn next_bid<F, R>(
    deal: &Deal,
    state: &mut DealState,
    f: &mut F,
    bounds: BidBounds,
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> Result<f64, OptimizerError>
where
    F: FnMut(f64) -> f64,
    R: Rng,
{
    if state.remaining_visits(deal) == 0 {
        return Err(OptimizerError::DealExpired);
    }

    if state.multistart_rounds_done < cfg.multi_start_impressions {
        let starts: Vec<f64> = (0..cfg.starts_per_impression.max(1))
            .map(|_| rng.random_range(bounds.lo..=bounds.hi))
            .collect();
        let (bid, _) = multi_start_maximize(f, bounds, &starts, cfg)?;
        state.multistart_rounds_done += 1;
        state.cached_bid = Some(bid);
        state.opportunities_since_recompute = 0;
        state.click_since_recompute = false;
        return Ok(bid);
    }

    state.opportunities_since_recompute += 1;
    let due = state.click_since_recompute
        || state.opportunities_since_recompute >= cfg.recompute_interval
        || state.cached_bid.is_none();
    if !due {
        return Ok(state.cached_bid.expect("cached bid present on cached path"));
    }

    let tol = cfg.bid_tolerance(&bounds);
    let start = match state.cached_bid {
        Some(cached) => (cached + rng.random_range(-10.0 * tol..=10.0 * tol))
            .clamp(bounds.lo, bounds.hi),
        None => 0.5 * (bounds.lo + bounds.hi),
    };
    let (bid, _) = brent_maximize(f, bounds, start, cfg)?;
    state.cached_bid = Some(bid);
    state.opportunities_since_recompute = 0;
    state.click_since_recompute = false;
    Ok(bid)
}
