//! Expected-profit arithmetic for minimum-conversion deals. A campaign pays
//! `pay_per_click` per click only if at least `required_clicks` clicks arrive
//! before the visit budget runs out; spend on won impressions is sunk either
//! way. Everything here reduces to two binomial tail quantities over the
//! remaining visits, computable exactly or by normal approximation.

use rand::Rng;

use crate::deal::{Deal, DealState};
use crate::numeric::{binom_lower_sums, binom_pmf, binom_upper_sums, normal_pdf, normal_upper_tail};
use crate::optimizer::{multi_start_maximize, BidBounds, OptimizerConfig, OptimizerError};
use crate::win_model::{PaymentModel, WinModel};

/// Minimum binomial variance `u * p * (1 - p)` at which `Auto` mode trusts
/// the normal approximation; below it the exact tail-complement summation is
/// used. At this value the worst observed tail-probability error is about
/// 8e-3, inside the 0.01 budget the acceptance checks enforce.
pub const NORMAL_APPROX_MIN_VARIANCE: f64 = 64.0;

/// How the binomial tail sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumMode {
    /// Direct summation over `j = r..=u`.
    Exact,
    /// Exact complement summation over `j = 0..r`; equal to `Exact` up to
    /// rounding but cheap when `r` is far below the mean.
    Tail,
    /// Continuity-corrected normal approximation.
    Normal,
    /// `Normal` when the binomial variance reaches
    /// [`NORMAL_APPROX_MIN_VARIANCE`], otherwise `Tail`.
    #[default]
    Auto,
}

fn use_normal(remaining_visits: u64, click_prob: f64) -> bool {
    remaining_visits as f64 * click_prob * (1.0 - click_prob) >= NORMAL_APPROX_MIN_VARIANCE
}

/// P(Bin(u, p) >= r): the probability that at least `r` of the `u` remaining
/// visits convert, i.e. that the deal still tips. Signed `r` so callers can
/// shift it below zero, which means tipping is certain.
pub fn phi(r: i64, u: u64, p: f64, mode: SumMode) -> f64 {
    if r <= 0 {
        return 1.0;
    }
    let r = r as u64;
    if r > u {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    match mode {
        SumMode::Exact => binom_upper_sums(r, u, p).0.clamp(0.0, 1.0),
        SumMode::Tail => {
            let (mass_below, _) = binom_lower_sums(r - 1, u, p);
            (1.0 - mass_below).clamp(0.0, 1.0)
        }
        SumMode::Normal => {
            let mean = u as f64 * p;
            let sigma = (mean * (1.0 - p)).sqrt();
            normal_upper_tail((r as f64 - 0.5 - mean) / sigma)
        }
        SumMode::Auto => {
            let inner = if use_normal(u, p) { SumMode::Normal } else { SumMode::Tail };
            phi(r as i64, u, p, inner)
        }
    }
}

/// E[J * 1{J >= r}] for J ~ Bin(u, p): the expected number of future clicks
/// that end up paid. With nothing left to tip (`r <= 0`) every click is paid
/// and this is the unconditional mean `u * p`, exactly, in every mode.
pub fn theta(r: i64, u: u64, p: f64, mode: SumMode) -> f64 {
    let mean = u as f64 * p;
    if r <= 0 {
        return mean;
    }
    let r = r as u64;
    if r > u {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return u as f64;
    }
    match mode {
        SumMode::Exact => binom_upper_sums(r, u, p).1.max(0.0),
        SumMode::Tail => {
            let (_, weight_below) = binom_lower_sums(r - 1, u, p);
            (mean - weight_below).max(0.0)
        }
        SumMode::Normal => {
            let sigma = (mean * (1.0 - p)).sqrt();
            let z = (r as f64 - 0.5 - mean) / sigma;
            sigma * normal_pdf(z) + mean * normal_upper_tail(z)
        }
        SumMode::Auto => {
            let inner = if use_normal(u, p) { SumMode::Normal } else { SumMode::Tail };
            theta(r as i64, u, p, inner)
        }
    }
}

/// Normal form that omits the tail-probability factor on the mean term,
/// `sigma * pdf(z) + u * p` with `z = (r - u * p) / sigma`. Overstates the
/// paid-click mean whenever tipping is uncertain; kept only so accuracy
/// comparisons against the corrected `Normal` mode stay reproducible.
pub fn theta_normal_uncorrected(r: i64, u: u64, p: f64) -> f64 {
    let mean = u as f64 * p;
    if r <= 0 {
        return mean;
    }
    let r = r as u64;
    if r > u || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return u as f64;
    }
    let sigma = (mean * (1.0 - p)).sqrt();
    let z = (r as f64 - mean) / sigma;
    sigma * normal_pdf(z) + mean
}

/// The campaign counters that expected-profit formulas depend on, detached
/// from `DealState` so bid objectives can be plain `f64 -> f64` closures
/// while the state itself is mutably held elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSnapshot {
    pub clicks: u64,
    pub remaining_required: u64,
    pub remaining_visits: u64,
}

impl StateSnapshot {
    pub fn of(deal: &Deal, state: &DealState) -> Self {
        StateSnapshot {
            clicks: state.clicks,
            remaining_required: state.remaining_required(deal),
            remaining_visits: state.remaining_visits(deal),
        }
    }

    /// Snapshot of a campaign that has not started.
    pub fn fresh(deal: &Deal) -> Self {
        StateSnapshot {
            clicks: 0,
            remaining_required: deal.required_clicks,
            remaining_visits: deal.expiry_visits,
        }
    }
}

/// Expected future value of bidding `bid` on every remaining visit: revenue
/// `rho * (c * phi + theta)` minus expected future spend
/// `u * d(bid) * h(bid)`, with per-visit success probability
/// `p = ctr * d(bid)`. Sunk spend is excluded, so the maximizer of this
/// function is the optimal bid regardless of what was already spent.
pub fn bid_objective(
    deal: &Deal,
    snap: StateSnapshot,
    bid: f64,
    win: &WinModel,
    payment: &PaymentModel,
    mode: SumMode,
) -> f64 {
    let d = win.win_probability(bid);
    let p = deal.ctr * d;
    let r = snap.remaining_required as i64;
    let revenue = deal.pay_per_click
        * (snap.clicks as f64 * phi(r, snap.remaining_visits, p, mode)
            + theta(r, snap.remaining_visits, p, mode));
    revenue - snap.remaining_visits as f64 * d * payment.payment(bid)
}

/// Expected end-of-campaign profit from the given state under a constant
/// future bid: [`bid_objective`] minus the spend already sunk. With no
/// remaining requirement this reduces algebraically to
/// `c * rho + rho * ctr * u * d - spend - u * d * h` in every mode.
pub fn expected_profit(
    deal: &Deal,
    state: &DealState,
    bid: f64,
    win: &WinModel,
    payment: &PaymentModel,
    mode: SumMode,
) -> f64 {
    bid_objective(deal, StateSnapshot::of(deal, state), bid, win, payment, mode) - state.spend
}

/// Expected gain from winning (displaying) the next impression rather than
/// skipping it, before knowing whether it will be clicked, with subsequent
/// visits converting at `p = ctr * d(bid)`:
///
/// `ctr * rho * ((c + r - 1) * pmf(r - 1; u - 1, p) + phi(r - 1, u - 1, p))`
///
/// The pmf term prices the displayed impression delivering the tipping
/// click itself; the tail term prices one extra paid click in campaigns
/// that tip anyway. Zero for expired deals; `ctr * rho` once tipped.
pub fn marginal_value(
    deal: &Deal,
    snap: StateSnapshot,
    bid: f64,
    win: &WinModel,
    mode: SumMode,
) -> f64 {
    if snap.remaining_visits == 0 {
        return 0.0;
    }
    let p = deal.ctr * win.win_probability(bid);
    let r = snap.remaining_required as i64;
    let u_rest = snap.remaining_visits - 1;
    let weight = (snap.clicks + snap.remaining_required) as f64 - 1.0;
    deal.ctr
        * deal.pay_per_click
        * (weight * binom_pmf(r - 1, u_rest, p) + phi(r - 1, u_rest, p, mode))
}

/// [`expected_profit`] of a campaign that has not started, evaluated over an
/// explicit visit horizon (at admission time the log length is not yet
/// known); the quantity an admission decision maximizes over bids.
pub fn admissibility_profit(
    deal: &Deal,
    bid: f64,
    expected_visits: u64,
    win: &WinModel,
    payment: &PaymentModel,
    mode: SumMode,
) -> f64 {
    let snap = StateSnapshot {
        clicks: 0,
        remaining_required: deal.required_clicks,
        remaining_visits: expected_visits,
    };
    bid_objective(deal, snap, bid, win, payment, mode)
}

/// Maximum of [`admissibility_profit`] over the bid interval, located by
/// multi-start optimization from `cfg.starts_per_impression` random points
/// plus the interval endpoints. Returns `(best_bid, best_profit)`.
pub fn max_fresh_profit<R: Rng>(
    deal: &Deal,
    expected_visits: u64,
    win: &WinModel,
    payment: &PaymentModel,
    bounds: BidBounds,
    cfg: &OptimizerConfig,
    mode: SumMode,
    rng: &mut R,
) -> Result<(f64, f64), OptimizerError> {
    let starts: Vec<f64> = (0..cfg.starts_per_impression.max(1))
        .map(|_| rng.random_range(bounds.lo()..=bounds.hi()))
        .collect();
    let mut f = |bid: f64| admissibility_profit(deal, bid, expected_visits, win, payment, mode);
    multi_start_maximize(&mut f, bounds, &starts, cfg)
}

/// Whether the deal clears the admission bar: its best achievable expected
/// profit must strictly exceed `threshold`. Strict, so a deal whose best
/// case is exactly the bar (a hopeless deal tops out at zero by never
/// winning) is rejected.
#[allow(clippy::too_many_arguments)]
pub fn is_admissible<R: Rng>(
    deal: &Deal,
    expected_visits: u64,
    win: &WinModel,
    payment: &PaymentModel,
    bounds: BidBounds,
    cfg: &OptimizerConfig,
    mode: SumMode,
    threshold: f64,
    rng: &mut R,
) -> Result<bool, OptimizerError> {
    let (_, best) =
        max_fresh_profit(deal, expected_visits, win, payment, bounds, cfg, mode, rng)?;
    Ok(best > threshold)
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn golden_max<F: Fn(f64) -> f64>(g: &F, mut a: f64, mut b: f64, iters: u32) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    for _ in 0..iters {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
    }
    if gc >= gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

/// Bid maximizing per-impression surplus `d(b) * (pay_per_click * ctr - h(b))`,
/// the optimal constant bid for a deal with no minimum (and for any deal once
/// tipped). Searched numerically on the support extended to the break-even
/// bid `pay_per_click * ctr`, beyond which the surplus only falls; the
/// surplus is log-concave below break-even for the supported win models, so
/// a golden-section search suffices. Support endpoints are returned exactly
/// when they win, so clamped optima land on the boundary bit for bit. A deal
/// worth no more than the support minimum bids that minimum.
pub fn static_optimal_bid(
    deal: &Deal,
    win: &WinModel,
    payment: &PaymentModel,
    bounds: BidBounds,
) -> f64 {
    let k = deal.pay_per_click * deal.ctr;
    if k <= bounds.lo() {
        return bounds.lo();
    }
    let g = |b: f64| win.win_probability(b) * (k - payment.payment(b));
    let domain_hi = bounds.hi().max(k);
    let (mut best_bid, mut best_val) = golden_max(&g, bounds.lo(), domain_hi, 96);
    for endpoint in [bounds.lo(), bounds.hi(), domain_hi] {
        let val = g(endpoint);
        if val >= best_val {
            best_bid = endpoint;
            best_val = val;
        }
    }
    best_bid
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ALL_MODES: [SumMode; 4] = [SumMode::Exact, SumMode::Tail, SumMode::Normal, SumMode::Auto];

    #[test]
    fn small_case_matches_hand_computation() {
        // Binomial(4, 0.5): P(J >= 2) = 11/16, E[J * 1{J >= 2}] = 28/16.
        for mode in [SumMode::Exact, SumMode::Tail] {
            assert!((phi(2, 4, 0.5, mode) - 0.6875).abs() < 1e-14);
            assert!((theta(2, 4, 0.5, mode) - 1.75).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_inputs_short_circuit() {
        for mode in ALL_MODES {
            assert_eq!(phi(0, 1000, 0.3, mode), 1.0);
            assert_eq!(phi(-3, 100, 0.3, mode), 1.0);
            assert_eq!(phi(101, 100, 0.3, mode), 0.0);
            assert_eq!(phi(5, 100, 0.0, mode), 0.0);
            assert_eq!(phi(5, 100, 1.0, mode), 1.0);
            assert_eq!(theta(0, 50, 0.1, mode), 5.0);
            assert_eq!(theta(101, 100, 0.3, mode), 0.0);
            assert_eq!(theta(5, 100, 0.0, mode), 0.0);
            assert_eq!(theta(5, 100, 1.0, mode), 100.0);
        }
    }

    #[test]
    fn paid_click_mean_ties_to_shifted_tail() {
        // E[J * 1{J >= r}] = u * p * P(Bin(u - 1, p) >= r - 1).
        let (r, u, p) = (7i64, 300u64, 0.02);
        let direct = theta(r, u, p, SumMode::Exact);
        let shifted = u as f64 * p * phi(r - 1, u - 1, p, SumMode::Exact);
        assert!((direct - shifted).abs() < 1e-12);
        assert!((direct - 3.316_197_900_609_621).abs() < 1e-12);
    }

    #[test]
    fn tipped_deal_profit_reduces_to_linear_form_in_every_mode() {
        let deal = Deal::new(3, 5_000, 12.0, 0.004).unwrap();
        let mut state = DealState::fresh();
        state.clicks = 3;
        state.visits = 900;
        state.spend = 7.25;
        let win = WinModel::uniform(0.0, 0.05, 3).unwrap();
        let payment = PaymentModel::FirstPrice;
        let bid = 0.021;
        let d = win.win_probability(bid);
        let u = state.remaining_visits(&deal) as f64;
        let linear = deal.pay_per_click * (state.clicks as f64 + deal.ctr * d * u)
            - state.spend
            - u * d * bid;
        for mode in ALL_MODES {
            let ep = expected_profit(&deal, &state, bid, &win, &payment, mode);
            assert!((ep - linear).abs() < 1e-12, "{mode:?}: {ep} vs {linear}");
        }
    }

    #[test]
    fn single_visit_no_minimum_profit_is_the_surplus() {
        // One remaining visit, certain click, rho = 2, uniform(0, 1, n = 2)
        // at bid 0.5: d = 0.5, profit = 0.5 * (2 - 0.5).
        let deal = Deal::new(0, 1, 2.0, 1.0).unwrap();
        let state = DealState::fresh();
        let win = WinModel::uniform(0.0, 1.0, 2).unwrap();
        let ep = expected_profit(&deal, &state, 0.5, &win, &PaymentModel::FirstPrice, SumMode::Exact);
        assert!((ep - 0.75).abs() < 1e-15);
    }

    #[test]
    fn losing_bid_with_unmet_minimum_forfeits_the_spend() {
        let deal = Deal::new(5, 3_000, 15.0, 0.002).unwrap();
        let mut state = DealState::fresh();
        state.visits = 100;
        state.spend = 2.5;
        let win = WinModel::uniform(0.01, 0.1, 2).unwrap();
        let ep = expected_profit(&deal, &state, 0.01, &win, &PaymentModel::FirstPrice, SumMode::Exact);
        assert!((ep - (-2.5)).abs() < 1e-15);
    }

    #[test]
    fn objective_maximizer_ignores_sunk_spend() {
        let deal = Deal::new(5, 3_000, 15.0, 0.002).unwrap();
        let snap = StateSnapshot {
            clicks: 2,
            remaining_required: 3,
            remaining_visits: 2_000,
        };
        let win = WinModel::uniform(0.0, 0.1, 2).unwrap();
        let payment = PaymentModel::FirstPrice;
        let f = |b: f64| bid_objective(&deal, snap, b, &win, &payment, SumMode::Exact);
        let mut state = DealState::fresh();
        state.clicks = 2;
        state.visits = 1_000;
        state.spend = 4.0;
        let bid = 0.06;
        let ep = expected_profit(&deal, &state, bid, &win, &payment, SumMode::Exact);
        assert!((ep - (f(bid) - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn marginal_value_of_a_tipped_deal_is_click_revenue_rate() {
        let deal = Deal::new(4, 1_000, 15.0, 0.002).unwrap();
        let win = WinModel::uniform(0.0, 0.1, 2).unwrap();
        let snap = StateSnapshot {
            clicks: 6,
            remaining_required: 0,
            remaining_visits: 400,
        };
        for mode in ALL_MODES {
            let mv = marginal_value(&deal, snap, 0.03, &win, mode);
            assert!((mv - deal.ctr * deal.pay_per_click).abs() < 1e-15, "{mode:?}");
        }
        let expired = StateSnapshot { clicks: 6, remaining_required: 0, remaining_visits: 0 };
        assert_eq!(marginal_value(&deal, expired, 0.03, &win, SumMode::Exact), 0.0);
    }

    #[test]
    fn marginal_value_on_final_visit_prices_the_tipping_click() {
        let deal = Deal::new(4, 10, 15.0, 0.002).unwrap();
        let win = WinModel::constant(0.5).unwrap();
        let snap = StateSnapshot { clicks: 3, remaining_required: 1, remaining_visits: 1 };
        let mv = marginal_value(&deal, snap, 0.01, &win, SumMode::Exact);
        let expected = deal.ctr * deal.pay_per_click * (snap.clicks + 1) as f64;
        assert!((mv - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_ctr_deal_has_zero_marginal_value() {
        let deal = Deal::new(4, 100, 15.0, 0.0).unwrap();
        let win = WinModel::uniform(0.0, 0.1, 2).unwrap();
        let snap = StateSnapshot { clicks: 0, remaining_required: 4, remaining_visits: 100 };
        assert_eq!(marginal_value(&deal, snap, 0.05, &win, SumMode::Exact), 0.0);
    }

    #[test]
    fn static_bid_matches_closed_form_for_uniform_competitors() {
        // argmax of ((b - lo) / (hi - lo))^(n-1) * (k - b) is
        // ((n - 1) * k + lo) / n, clamped to the support.
        let payment = PaymentModel::FirstPrice;
        let cases = [
            (0.0, 1.0, 2, 1.0, 0.5, 0.25),
            (0.0, 0.1, 2, 15.0, 0.002, 0.015),
            (0.0, 0.04, 4, 10.0, 0.01, 0.04),
            (0.01, 0.05, 3, 15.0, 0.01, 0.05),
        ];
        for (lo, hi, n, rho, mu, want) in cases {
            let deal = Deal::new(0, 1_000, rho, mu).unwrap();
            let win = WinModel::uniform(lo, hi, n).unwrap();
            let bounds = win.bid_bounds().unwrap();
            let got = static_optimal_bid(&deal, &win, &payment, bounds);
            if want == lo || want == hi {
                assert_eq!(got, want, "clamped case ({lo}, {hi}, {n})");
            } else {
                assert!((got - want).abs() < 1e-9, "interior case: {got} vs {want}");
            }
        }
    }

    #[test]
    fn worthless_deal_bids_the_support_minimum() {
        let deal = Deal::new(0, 1_000, 10.0, 0.0).unwrap();
        let win = WinModel::uniform(0.0, 0.04, 4).unwrap();
        let got = static_optimal_bid(&deal, &win, &PaymentModel::FirstPrice, win.bid_bounds().unwrap());
        assert_eq!(got, 0.0);
    }

    #[test]
    fn hopeless_deal_is_inadmissible_under_a_zero_bar() {
        // Requires more clicks than visits remain; best case is never winning.
        let deal = Deal::new(50, 10, 15.0, 0.002).unwrap();
        let win = WinModel::uniform(0.0, 0.1, 2).unwrap();
        let payment = PaymentModel::FirstPrice;
        let bounds = win.bid_bounds().unwrap();
        let cfg = OptimizerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, best) = max_fresh_profit(
            &deal, deal.expiry_visits, &win, &payment, bounds, &cfg, SumMode::Auto, &mut rng,
        )
        .unwrap();
        assert_eq!(best, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(!is_admissible(
            &deal,
            deal.expiry_visits,
            &win,
            &payment,
            bounds,
            &cfg,
            SumMode::Auto,
            0.0,
            &mut rng
        )
        .unwrap());
    }

    #[test]
    fn unconditional_deal_is_admissible_under_a_zero_bar() {
        let deal = Deal::new(0, 3_000, 15.0, 0.002).unwrap();
        let win = WinModel::uniform(0.0, 0.1, 2).unwrap();
        let cfg = OptimizerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(is_admissible(
            &deal,
            deal.expiry_visits,
            &win,
            &PaymentModel::FirstPrice,
            win.bid_bounds().unwrap(),
            &cfg,
            SumMode::Auto,
            0.0,
            &mut rng
        )
        .unwrap());
    }

    #[test]
    fn nothing_clears_an_infinite_admission_bar() {
        let deal = Deal::new(0, 3_000, 15.0, 0.002).unwrap();
        let win = WinModel::uniform(0.0, 0.1, 2).unwrap();
        let cfg = OptimizerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(!is_admissible(
            &deal,
            deal.expiry_visits,
            &win,
            &PaymentModel::FirstPrice,
            win.bid_bounds().unwrap(),
            &cfg,
            SumMode::Auto,
            f64::INFINITY,
            &mut rng
        )
        .unwrap());
    }

    #[test]
    fn uncorrected_normal_form_overstates_paid_clicks() {
        let (r, u, p) = (120i64, 10_000u64, 0.01);
        let exact = theta(r, u, p, SumMode::Exact);
        let corrected = theta(r, u, p, SumMode::Normal);
        let uncorrected = theta_normal_uncorrected(r, u, p);
        assert!((corrected - exact).abs() < (uncorrected - exact).abs());
        assert!(uncorrected > exact);
    }
}
