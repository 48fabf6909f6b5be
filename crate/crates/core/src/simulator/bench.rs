//! Wall-clock benchmark of the optimizer's full multi-start path across
//! required-click minimums. Every repetition starts from a fresh campaign
//! state so the cached-bid shortcut never engages.

use std::time::Instant;

use crate::deal::{Deal, DealState};
use crate::optimizer::{next_bid, BidBounds, OptimizerConfig};
use crate::profit_math::{bid_objective, StateSnapshot, SumMode};
use crate::rng::stream;
use crate::win_model::{PaymentModel, WinModel};

use super::replay::TimingStats;
use super::SimError;

/// The deal shape every benchmarked minimum shares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSpec {
    pub visits: u64,
    pub ctr: f64,
    pub pay_per_click: f64,
    pub repetitions: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub required_clicks: u64,
    pub repetitions: u32,
    pub mean_seconds: f64,
    pub p99_seconds: f64,
    /// Objective evaluations per optimization, averaged over repetitions.
    pub mean_evaluations: f64,
}

/// Times one full optimization per repetition for each minimum. Timings are
/// machine-dependent; evaluation counts are deterministic in the seed.
#[allow(clippy::too_many_arguments)]
pub fn bench_optimizer(
    spec: &BenchSpec,
    m_values: &[u64],
    win: &WinModel,
    payment: &PaymentModel,
    bounds: BidBounds,
    mode: SumMode,
    opt_cfg: &OptimizerConfig,
    seed: u64,
) -> Result<Vec<BenchRow>, SimError> {
    if spec.repetitions == 0 {
        return Err(SimError::EmptyInput("bench repetitions must be at least 1"));
    }
    let mut rows = Vec::with_capacity(m_values.len());
    for &m in m_values {
        let m_label = m.to_string();
        let deal = Deal::new(m, spec.visits, spec.pay_per_click, spec.ctr)
            .map_err(|source| SimError::Deal { ad_id: format!("bench-m{m}"), source })?;
        let snap = StateSnapshot::fresh(&deal);

        let mut timings = Vec::with_capacity(spec.repetitions as usize);
        let mut evaluations = 0u64;
        for rep in 0..spec.repetitions {
            let mut state = DealState::fresh();
            let mut rng = stream(seed, &["bench", &m_label, &rep.to_string()]);
            let mut evals_this_rep = 0u64;
            let mut f = |bid: f64| {
                evals_this_rep += 1;
                bid_objective(&deal, snap, bid, win, payment, mode)
            };
            let started = Instant::now();
            next_bid(&deal, &mut state, &mut f, bounds, opt_cfg, &mut rng)?;
            timings.push(started.elapsed().as_secs_f64());
            evaluations += evals_this_rep;
        }
        let stats = TimingStats::from_seconds(timings);
        rows.push(BenchRow {
            required_clicks: m,
            repetitions: spec.repetitions,
            mean_seconds: stats.mean_seconds,
            p99_seconds: stats.p99_seconds,
            mean_evaluations: evaluations as f64 / spec.repetitions as f64,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_times_fresh_optimizations() {
        let win = WinModel::uniform(0.0, 0.04, 4).unwrap();
        let spec = BenchSpec { visits: 5_000, ctr: 0.01, pay_per_click: 10.0, repetitions: 20 };
        let rows = bench_optimizer(
            &spec,
            &[0, 25, 100],
            &win,
            &PaymentModel::FirstPrice,
            win.bid_bounds().unwrap(),
            SumMode::Auto,
            &OptimizerConfig::default(),
            7,
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert_eq!(row.repetitions, 20);
            assert!(row.mean_seconds > 0.0);
            assert!(row.p99_seconds >= row.mean_seconds * 0.5);
            // Eight Brent starts, each needing several evaluations.
            assert!(row.mean_evaluations >= 16.0);
        }
    }

    #[test]
    fn evaluation_counts_are_seed_deterministic() {
        let win = WinModel::uniform(0.0, 0.04, 4).unwrap();
        let spec = BenchSpec { visits: 2_000, ctr: 0.01, pay_per_click: 10.0, repetitions: 5 };
        let run = |seed| {
            bench_optimizer(
                &spec,
                &[50],
                &win,
                &PaymentModel::FirstPrice,
                win.bid_bounds().unwrap(),
                SumMode::Auto,
                &OptimizerConfig::default(),
                seed,
            )
            .unwrap()[0]
                .mean_evaluations
        };
        assert_eq!(run(3), run(3));
    }

    #[test]
    fn zero_repetitions_is_rejected() {
        let win = WinModel::uniform(0.0, 0.04, 4).unwrap();
        let spec = BenchSpec { visits: 100, ctr: 0.01, pay_per_click: 1.0, repetitions: 0 };
        assert!(bench_optimizer(
            &spec,
            &[1],
            &win,
            &PaymentModel::FirstPrice,
            win.bid_bounds().unwrap(),
            SumMode::Auto,
            &OptimizerConfig::default(),
            0,
        )
        .is_err());
    }
}
