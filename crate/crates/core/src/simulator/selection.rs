//! Greedy deal selection: deals are batched into fixed-size groups, every
//! arriving visit is presented to all live deals in the group, and a
//! selector picks the single deal that enters the external auction.
//!
//! Both selectors place optimizer-driven bids; they differ only in how they
//! rank the resulting (bid, deal) pairs. Grouping, per-deal minimums, and
//! the external auction draws are keyed independently of the selector so
//! the two rankings face identical conditions.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bidders::BidderStrategy;
use crate::deal::{Deal, DealState};
use crate::optimizer::OptimizerConfig;
use crate::profit_math::{marginal_value, StateSnapshot};
use crate::rng::stream;

use super::log::AdRecords;
use super::replay::{DealTemplate, ReplaySetup};
use super::SimError;

/// Ranking rule applied to the live deals' optimized bids each visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    /// Picks the deal with the highest expected gain from winning this one
    /// display, net of its bid. Minimum-aware: deals close to tipping rank
    /// higher.
    MarginalValue,
    /// Picks the deal with the highest per-click surplus `ctr * payout`
    /// net of its bid, ignoring the minimum entirely.
    PrivateValue,
}

impl Selector {
    pub fn label(&self) -> &'static str {
        match self {
            Selector::MarginalValue => "rt_selection",
            Selector::PrivateValue => "static_selection",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    /// Deals per group; the final group may be smaller.
    pub group_size: usize,
    /// Shared visit horizon per group; each deal additionally expires when
    /// its own log runs out.
    pub total_visits: u64,
    /// Drops ads whose estimated click-through rate exceeds this before
    /// grouping.
    pub ctr_filter_max: Option<f64>,
}

/// Aggregate outcome of one (selector, minimum ceiling) run over all groups.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub selector: &'static str,
    pub m_max: u64,
    pub deals: u64,
    pub tipped: u64,
    pub total_profit: f64,
    pub mean_profit: f64,
    pub displays: u64,
    pub clicks: u64,
}

struct DealRun<'a> {
    ad: &'a AdRecords,
    deal: Deal,
    state: DealState,
    /// Next unconsumed log record; advanced only when this deal displays.
    cursor: usize,
    displays: u64,
    bid_rng: rand_chacha::ChaCha8Rng,
}

/// Runs the grouped-selection experiment for every (minimum ceiling,
/// selector) pair. Each deal draws its own required-click minimum uniformly
/// from `0..=m_max`; grouping and minimums are shared across selectors so
/// rows at equal `m_max` are paired comparisons.
pub fn selection_experiment(
    setup: &ReplaySetup<'_>,
    ads: &[AdRecords],
    template: &DealTemplate,
    m_max_values: &[u64],
    selectors: &[Selector],
    cfg: &SelectionConfig,
    opt_cfg: &OptimizerConfig,
) -> Result<Vec<SelectionRow>, SimError> {
    if cfg.group_size == 0 {
        return Err(SimError::EmptyInput("selection group size must be at least 1"));
    }
    if cfg.total_visits == 0 {
        return Err(SimError::EmptyInput("selection visit horizon must be at least 1"));
    }
    let mut eligible: Vec<&AdRecords> = ads
        .iter()
        .filter(|ad| cfg.ctr_filter_max.is_none_or(|cap| ad.estimated_ctr() <= cap))
        .collect();
    if eligible.is_empty() {
        return Err(SimError::EmptyInput("no ads remain after the click-through filter"));
    }
    eligible.shuffle(&mut stream(setup.seed, &["selection-shuffle"]));

    let mut rows = Vec::with_capacity(m_max_values.len() * selectors.len());
    for &m_max in m_max_values {
        for selector in selectors {
            let mut row = SelectionRow {
                selector: selector.label(),
                m_max,
                deals: 0,
                tipped: 0,
                total_profit: 0.0,
                mean_profit: 0.0,
                displays: 0,
                clicks: 0,
            };
            for (group_idx, group) in eligible.chunks(cfg.group_size).enumerate() {
                run_group(setup, template, m_max, *selector, cfg, opt_cfg, group_idx, group, &mut row)?;
            }
            row.mean_profit = row.total_profit / row.deals as f64;
            rows.push(row);
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn run_group(
    setup: &ReplaySetup<'_>,
    template: &DealTemplate,
    m_max: u64,
    selector: Selector,
    cfg: &SelectionConfig,
    opt_cfg: &OptimizerConfig,
    group_idx: usize,
    group: &[&AdRecords],
    row: &mut SelectionRow,
) -> Result<(), SimError> {
    let m_label = m_max.to_string();
    let group_label = group_idx.to_string();
    let mut comp_rng = stream(setup.seed, &["selection-competitors", &group_label]);
    let mut tie_rng = stream(setup.seed, &["selection-tie", &group_label]);
    let bidder = BidderStrategy::Rt(*opt_cfg);

    let mut runs: Vec<DealRun<'_>> = group
        .iter()
        .map(|ad| {
            let m = stream(setup.seed, &["selection-m", &ad.ad_id, &m_label])
                .random_range(0..=m_max);
            let ctr = template.ctr_override.unwrap_or_else(|| ad.estimated_ctr());
            let expiry = cfg.total_visits.min(ad.records.len() as u64);
            let deal = Deal::new(m, expiry, template.pay_per_click, ctr)
                .map_err(|source| SimError::Deal { ad_id: ad.ad_id.clone(), source })?;
            Ok(DealRun {
                ad,
                deal,
                state: DealState::fresh(),
                cursor: 0,
                displays: 0,
                bid_rng: stream(setup.seed, &["selection-bid", &ad.ad_id, &m_label, selector.label()]),
            })
        })
        .collect::<Result<_, SimError>>()?;

    for _ in 0..cfg.total_visits {
        let live: Vec<usize> = (0..runs.len())
            .filter(|&i| runs[i].state.remaining_visits(&runs[i].deal) > 0)
            .collect();
        if live.is_empty() {
            break;
        }

        // One competitor sample set per visit, selector-independent.
        let mut best_rival = f64::NEG_INFINITY;
        let mut tied_at_best = 0u32;
        for dist in setup.pool {
            let b = dist.sample(&mut comp_rng);
            if b > best_rival {
                best_rival = b;
                tied_at_best = 1;
            } else if b == best_rival {
                tied_at_best += 1;
            }
        }

        let mut chosen: Option<(usize, f64, f64)> = None;
        for &i in &live {
            let run = &mut runs[i];
            let snap = StateSnapshot::of(&run.deal, &run.state);
            let bid = bidder
                .bid(
                    &run.deal,
                    &mut run.state,
                    setup.win,
                    &setup.payment,
                    setup.bounds,
                    setup.mode,
                    &mut run.bid_rng,
                )
                .map_err(|source| SimError::Bid { ad_id: run.ad.ad_id.clone(), source })?;
            let score = match selector {
                Selector::MarginalValue => {
                    marginal_value(&run.deal, snap, bid, setup.win, setup.mode) - bid
                }
                Selector::PrivateValue => run.deal.ctr * run.deal.pay_per_click - bid,
            };
            if chosen.is_none_or(|(_, _, best_score)| score > best_score) {
                chosen = Some((i, bid, score));
            }
        }
        let (winner_idx, bid, _) = chosen.expect("live set is nonempty");
        let won = bid > best_rival
            || (bid == best_rival && tie_rng.random_range(0..=tied_at_best) == 0);

        for &i in &live {
            runs[i].state.visits += 1;
        }
        if won {
            let run = &mut runs[winner_idx];
            run.state.spend += setup.payment.payment(bid);
            run.displays += 1;
            let clicked = run.ad.records[run.cursor].clicked;
            run.cursor += 1;
            if clicked {
                run.state.clicks += 1;
                run.state.click_since_recompute = true;
            }
        }
    }

    for run in &runs {
        let tipped = run.state.tipped(&run.deal);
        let profit = if tipped {
            run.deal.pay_per_click * run.state.clicks as f64 - run.state.spend
        } else {
            -run.state.spend
        };
        row.deals += 1;
        row.tipped += u64::from(tipped);
        row.total_profit += profit;
        row.displays += run.displays;
        row.clicks += run.state.clicks;
    }
    Ok(())
}
