//! Admission control: before replaying, each (ad, minimum) deal is screened
//! by maximizing its fresh-state expected profit over the bid range and
//! admitting it only when that optimum clears a threshold. Reports compare
//! the realized profit of the full slate against the admitted slate.

use std::collections::HashMap;

use crate::bidders::BidderStrategy;
use crate::optimizer::OptimizerConfig;
use crate::profit_math::is_admissible;
use crate::rng::stream;

use super::log::AdRecords;
use super::replay::{deal_for_ad, run_replays, DealTemplate, ReplayReport, ReplaySetup};
use super::SimError;

/// Per-(minimum, strategy) comparison of the unfiltered slate against the
/// admitted subset.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionRow {
    pub required_clicks: u64,
    pub strategy: &'static str,
    pub ads: u64,
    pub admitted: u64,
    pub total_profit_all: f64,
    pub total_profit_admitted: f64,
    pub mean_profit_all: f64,
    /// Zero when nothing was admitted.
    pub mean_profit_admitted: f64,
}

/// Replays every ad under every (minimum, strategy) pair and splits the
/// profit aggregates by the admission decision. The decision is a property
/// of the (ad, minimum) deal alone: the fresh-state optimum is evaluated at
/// the ad's full log horizon and compared strictly against `threshold`.
#[allow(clippy::too_many_arguments)]
pub fn admissibility_experiment(
    setup: &ReplaySetup<'_>,
    ads: &[AdRecords],
    template: &DealTemplate,
    m_values: &[u64],
    strategies: &[BidderStrategy],
    opt_cfg: &OptimizerConfig,
    threshold: f64,
    threads: usize,
) -> Result<(Vec<ReplayReport>, Vec<AdmissionRow>), SimError> {
    let reports = run_replays(setup, ads, template, m_values, strategies, threads)?;

    let mut admitted: HashMap<(u64, &str), bool> = HashMap::new();
    for &m in m_values {
        let m_label = m.to_string();
        for ad in ads {
            let deal = deal_for_ad(template, m, ad)?;
            let mut rng = stream(setup.seed, &["admit", &ad.ad_id, &m_label]);
            let decision = is_admissible(
                &deal,
                ad.records.len() as u64,
                setup.win,
                &setup.payment,
                setup.bounds,
                opt_cfg,
                setup.mode,
                threshold,
                &mut rng,
            )?;
            admitted.insert((m, ad.ad_id.as_str()), decision);
        }
    }

    let mut rows = Vec::with_capacity(m_values.len() * strategies.len());
    for &m in m_values {
        for strategy in strategies {
            let label = strategy.label();
            let mut row = AdmissionRow {
                required_clicks: m,
                strategy: label,
                ads: 0,
                admitted: 0,
                total_profit_all: 0.0,
                total_profit_admitted: 0.0,
                mean_profit_all: 0.0,
                mean_profit_admitted: 0.0,
            };
            for report in reports
                .iter()
                .filter(|r| r.required_clicks == m && r.strategy == label)
            {
                row.ads += 1;
                row.total_profit_all += report.realized_profit;
                if admitted[&(m, report.ad_id.as_str())] {
                    row.admitted += 1;
                    row.total_profit_admitted += report.realized_profit;
                }
            }
            if row.ads > 0 {
                row.mean_profit_all = row.total_profit_all / row.ads as f64;
            }
            if row.admitted > 0 {
                row.mean_profit_admitted = row.total_profit_admitted / row.admitted as f64;
            }
            rows.push(row);
        }
    }
    Ok((reports, rows))
}
