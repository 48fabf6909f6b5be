//! Replays a logged visit sequence through the auction, one bidding strategy
//! at a time, and scores the realized deal profit.
//!
//! Random-stream addressing keeps comparisons paired: competitor bids and
//! tie breaks come from per-ad streams shared by every strategy and click
//! minimum, so two replays of the same ad differ only through the bids the
//! strategies place. Strategy-internal randomness (optimizer starts, random
//! bids) is keyed by ad, strategy, and minimum.

use std::collections::HashMap;
use std::time::Instant;

use rand::Rng;

use crate::bidders::BidderStrategy;
use crate::deal::{Deal, DealState};
use crate::optimizer::BidBounds;
use crate::profit_math::SumMode;
use crate::rng::stream;
use crate::win_model::{CompetitorDistribution, PaymentModel, WinModel};

use super::log::AdRecords;
use super::SimError;

/// Everything a replay needs besides the log itself: the win model the
/// bidders believe, the competitor pool actually sampled against, and the
/// shared seed all random streams derive from.
#[derive(Debug, Clone, Copy)]
pub struct ReplaySetup<'a> {
    pub win: &'a WinModel,
    pub pool: &'a [CompetitorDistribution],
    pub payment: PaymentModel,
    pub bounds: BidBounds,
    pub mode: SumMode,
    pub seed: u64,
}

/// Deal terms applied uniformly to every ad in a run; expiry and (unless
/// overridden) click-through rate come from each ad's log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DealTemplate {
    pub pay_per_click: f64,
    pub ctr_override: Option<f64>,
}

/// Builds the deal an ad is replayed under: expiry is the ad's log length
/// and the click-through rate is estimated from the log unless the template
/// pins one.
pub fn deal_for_ad(
    template: &DealTemplate,
    required_clicks: u64,
    ad: &AdRecords,
) -> Result<Deal, SimError> {
    let ctr = template.ctr_override.unwrap_or_else(|| ad.estimated_ctr());
    Deal::new(required_clicks, ad.records.len() as u64, template.pay_per_click, ctr)
        .map_err(|source| SimError::Deal { ad_id: ad.ad_id.clone(), source })
}

/// Wall-clock summary of the per-opportunity bid computations in one replay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingStats {
    pub samples: u64,
    pub mean_seconds: f64,
    pub p99_seconds: f64,
}

impl TimingStats {
    pub fn from_seconds(mut samples: Vec<f64>) -> Self {
        let n = samples.len();
        if n == 0 {
            return TimingStats { samples: 0, mean_seconds: 0.0, p99_seconds: 0.0 };
        }
        let mean_seconds = samples.iter().sum::<f64>() / n as f64;
        samples.sort_by(f64::total_cmp);
        let rank = (0.99 * n as f64).ceil() as usize;
        TimingStats {
            samples: n as u64,
            mean_seconds,
            p99_seconds: samples[rank.clamp(1, n) - 1],
        }
    }
}

/// Outcome of replaying one ad's log under one strategy and one minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub ad_id: String,
    pub strategy: &'static str,
    pub required_clicks: u64,
    /// Opportunities attended: the log length capped at the deal expiry.
    pub impressions: u64,
    pub wins: u64,
    pub clicks_won: u64,
    pub spend: f64,
    pub tipped: bool,
    /// Visit count at which the minimum was reached; zero for a zero
    /// minimum, absent if the deal never tipped.
    pub tip_visit: Option<u64>,
    /// Payout times clicks won minus total spend if tipped, else minus
    /// total spend.
    pub realized_profit: f64,
    /// Profit frozen at the tipping point: payout for exactly the minimum
    /// minus spend up to that visit, or minus total spend if never tipped.
    pub pre_tip_profit: f64,
    pub mean_bid: f64,
    pub optimizer_time_stats: TimingStats,
}

/// Replays one ad under one strategy, resolving each auction against
/// competitor bids drawn from the setup pool.
pub fn replay_ad(
    setup: &ReplaySetup<'_>,
    ad: &AdRecords,
    deal: &Deal,
    strategy: &BidderStrategy,
) -> Result<ReplayReport, SimError> {
    let m_label = deal.required_clicks.to_string();
    let mut bid_rng = stream(setup.seed, &["bid", &ad.ad_id, strategy.label(), &m_label]);
    let mut comp_rng = stream(setup.seed, &["competitors", &ad.ad_id]);
    let mut tie_rng = stream(setup.seed, &["tie", &ad.ad_id]);

    let mut state = DealState::fresh();
    let mut wins = 0u64;
    let mut impressions = 0u64;
    let mut bid_sum = 0.0;
    let mut timings = Vec::with_capacity(ad.records.len().min(deal.expiry_visits as usize));
    let mut tip_visit = if deal.required_clicks == 0 { Some(0) } else { None };
    let mut spend_at_tip = 0.0;

    for record in &ad.records {
        if state.remaining_visits(deal) == 0 {
            break;
        }
        let started = Instant::now();
        let bid = strategy
            .bid(deal, &mut state, setup.win, &setup.payment, setup.bounds, setup.mode, &mut bid_rng)
            .map_err(|source| SimError::Bid { ad_id: ad.ad_id.clone(), source })?;
        timings.push(started.elapsed().as_secs_f64());
        impressions += 1;
        bid_sum += bid;

        // Competitor bids are drawn every visit, win or lose, so the stream
        // position depends only on how many visits have elapsed and the
        // sampled auction environment is shared across strategies and
        // minimums.
        let mut best = f64::NEG_INFINITY;
        let mut tied_at_best = 0u32;
        for dist in setup.pool {
            let b = dist.sample(&mut comp_rng);
            if b > best {
                best = b;
                tied_at_best = 1;
            } else if b == best {
                tied_at_best += 1;
            }
        }
        let won = bid > best || (bid == best && tie_rng.random_range(0..=tied_at_best) == 0);

        state.visits += 1;
        if won {
            wins += 1;
            state.spend += setup.payment.payment(bid);
            if record.clicked {
                state.clicks += 1;
                state.click_since_recompute = true;
                if tip_visit.is_none() && state.clicks >= deal.required_clicks {
                    tip_visit = Some(state.visits);
                    spend_at_tip = state.spend;
                }
            }
        }
    }

    let tipped = state.tipped(deal);
    let realized_profit = if tipped {
        deal.pay_per_click * state.clicks as f64 - state.spend
    } else {
        -state.spend
    };
    let pre_tip_profit = if tipped {
        deal.pay_per_click * deal.required_clicks as f64 - spend_at_tip
    } else {
        -state.spend
    };
    Ok(ReplayReport {
        ad_id: ad.ad_id.clone(),
        strategy: strategy.label(),
        required_clicks: deal.required_clicks,
        impressions,
        wins,
        clicks_won: state.clicks,
        spend: state.spend,
        tipped,
        tip_visit: if tipped { tip_visit } else { None },
        realized_profit,
        pre_tip_profit,
        mean_bid: if impressions == 0 { 0.0 } else { bid_sum / impressions as f64 },
        optimizer_time_stats: TimingStats::from_seconds(timings),
    })
}

/// Replays every ad under every (minimum, strategy) pair. Report order is
/// minimum-major, then strategy, then ad, and is independent of `threads`;
/// workers share nothing but the job list, so any thread count reproduces
/// the single-threaded results.
pub fn run_replays(
    setup: &ReplaySetup<'_>,
    ads: &[AdRecords],
    template: &DealTemplate,
    m_values: &[u64],
    strategies: &[BidderStrategy],
    threads: usize,
) -> Result<Vec<ReplayReport>, SimError> {
    if ads.is_empty() {
        return Err(SimError::EmptyInput("click log contains no ads"));
    }
    let mut jobs = Vec::with_capacity(m_values.len() * strategies.len() * ads.len());
    for &m in m_values {
        for strategy in strategies {
            for ad in ads {
                jobs.push((strategy, ad, deal_for_ad(template, m, ad)?));
            }
        }
    }

    if threads <= 1 {
        return jobs
            .iter()
            .map(|(strategy, ad, deal)| replay_ad(setup, ad, deal, strategy))
            .collect();
    }

    let mut slots: Vec<Option<Result<ReplayReport, SimError>>> =
        jobs.iter().map(|_| None).collect();
    std::thread::scope(|scope| {
        let jobs = &jobs;
        let workers: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || {
                    jobs.iter()
                        .enumerate()
                        .skip(t)
                        .step_by(threads)
                        .map(|(j, (strategy, ad, deal))| (j, replay_ad(setup, ad, deal, strategy)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for worker in workers {
            for (j, result) in worker.join().expect("replay worker panicked") {
                slots[j] = Some(result);
            }
        }
    });
    slots.into_iter().map(|slot| slot.expect("job not scheduled")).collect()
}

/// Per-(minimum, strategy) aggregate over a batch of replay reports, in the
/// order the pairs first appear.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub required_clicks: u64,
    pub strategy: &'static str,
    pub ads: u64,
    pub tipped: u64,
    pub total_realized_profit: f64,
    pub mean_realized_profit: f64,
    pub mean_pre_tip_profit: f64,
    pub mean_spend: f64,
    pub mean_clicks_won: f64,
}

pub fn aggregate_sweep(reports: &[ReplayReport]) -> Vec<SweepRow> {
    struct Acc {
        ads: u64,
        tipped: u64,
        realized: f64,
        pre_tip: f64,
        spend: f64,
        clicks: f64,
    }
    let mut order: Vec<(u64, &'static str)> = Vec::new();
    let mut groups: HashMap<(u64, &'static str), Acc> = HashMap::new();
    for report in reports {
        let key = (report.required_clicks, report.strategy);
        let acc = groups.entry(key).or_insert_with(|| {
            order.push(key);
            Acc { ads: 0, tipped: 0, realized: 0.0, pre_tip: 0.0, spend: 0.0, clicks: 0.0 }
        });
        acc.ads += 1;
        acc.tipped += u64::from(report.tipped);
        acc.realized += report.realized_profit;
        acc.pre_tip += report.pre_tip_profit;
        acc.spend += report.spend;
        acc.clicks += report.clicks_won as f64;
    }
    order
        .into_iter()
        .map(|key| {
            let acc = &groups[&key];
            let n = acc.ads as f64;
            SweepRow {
                required_clicks: key.0,
                strategy: key.1,
                ads: acc.ads,
                tipped: acc.tipped,
                total_realized_profit: acc.realized,
                mean_realized_profit: acc.realized / n,
                mean_pre_tip_profit: acc.pre_tip / n,
                mean_spend: acc.spend / n,
                mean_clicks_won: acc.clicks / n,
            }
        })
        .collect()
}
