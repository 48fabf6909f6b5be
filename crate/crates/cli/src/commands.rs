//! Experiment dispatch: each command resolves its config blocks, runs the
//! core operation, and writes one report table. Report files are a pure
//! function of (config, input files, seed); wall-clock timing goes to
//! standard output only.

use std::collections::HashMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use dealbid_core::simulator::{
    admissibility_experiment, aggregate_sweep, bench_optimizer, generate_synthetic_log,
    parse_click_log, run_replays, selection_experiment, write_click_log, AdRecords, BenchSpec,
    DealTemplate, ReplayReport, ReplaySetup, SelectionConfig, Selector,
};
use dealbid_core::{expected_profit, Deal, DealState, SumMode};

use crate::config::RunConfig;
use crate::output::{resolve_out_path, write_text, Field, Table};

/// Flags shared by every subcommand, already parsed.
pub struct Invocation {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: usize,
    pub summary: bool,
}

/// Config plus the command-line overrides applied to it.
struct Run {
    cfg: RunConfig,
    seed: u64,
    out: PathBuf,
}

impl Run {
    fn prepare(inv: &Invocation) -> Result<Run> {
        let cfg = RunConfig::load(&inv.config)?;
        let seed = inv.seed.unwrap_or(cfg.seed);
        let out = resolve_out_path(inv.out.as_deref().unwrap_or(&cfg.out));
        Ok(Run { cfg, seed, out })
    }

    /// The click log: read from disk or generated from the synthetic spec.
    fn ads(&self) -> Result<Vec<AdRecords>> {
        match (&self.cfg.log, &self.cfg.synthetic) {
            (Some(_), Some(_)) => bail!("config must set exactly one of `log` and `synthetic`"),
            (None, None) => bail!("config must set one of `log` and `synthetic`"),
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read click log {}", path.display()))?;
                parse_click_log(&text).with_context(|| path.display().to_string())
            }
            (None, Some(block)) => {
                generate_synthetic_log(&block.to_core(), self.seed).context("synthetic log spec")
            }
        }
    }

    fn template(&self) -> Result<DealTemplate> {
        let deal = self.cfg.deal_template()?;
        Ok(DealTemplate { pay_per_click: deal.pay_per_click, ctr_override: deal.ctr_override })
    }
}

const REPLAY_HEADER: &str = "m,strategy,ad_id,impressions,wins,clicks_won,spend,tipped,tip_visit,\
                             realized_profit,pre_tip_profit,mean_bid";

/// Per-ad replay outcomes plus one aggregate row (ad_id `ALL`) per
/// (required clicks, strategy) pair.
pub fn replay(inv: &Invocation) -> Result<()> {
    let run = Run::prepare(inv)?;
    let reports = run_configured_replays(&run, inv.threads)?;

    let mut table = Table::new(REPLAY_HEADER);
    for r in &reports {
        table.row(&[
            Field::Int(r.required_clicks),
            Field::Str(r.strategy),
            Field::Str(&r.ad_id),
            Field::Int(r.impressions),
            Field::Int(r.wins),
            Field::Int(r.clicks_won),
            Field::Float(r.spend),
            Field::Bool(r.tipped),
            Field::OptInt(r.tip_visit),
            Field::Float(r.realized_profit),
            Field::Float(r.pre_tip_profit),
            Field::Float(r.mean_bid),
        ]);
    }
    for agg in aggregate_replay_rows(&reports) {
        table.row(&[
            Field::Int(agg.m),
            Field::Str(agg.strategy),
            Field::Str("ALL"),
            Field::Int(agg.impressions),
            Field::Int(agg.wins),
            Field::Int(agg.clicks_won),
            Field::Float(agg.spend),
            Field::Int(agg.tipped),
            Field::OptInt(None),
            Field::Float(agg.realized_profit),
            Field::Float(agg.pre_tip_profit),
            Field::Float(agg.mean_bid),
        ]);
    }
    table.write(&run.out)?;

    if inv.summary {
        print_sweep_summary(&reports);
    }
    Ok(())
}

const SWEEP_HEADER: &str = "m,strategy,ads,tipped,total_realized_profit,mean_realized_profit,\
                            mean_pre_tip_profit,mean_spend,mean_clicks_won";

/// Aggregate replay outcomes per (required clicks, strategy).
pub fn sweep(inv: &Invocation) -> Result<()> {
    let run = Run::prepare(inv)?;
    let reports = run_configured_replays(&run, inv.threads)?;

    let mut table = Table::new(SWEEP_HEADER);
    for row in aggregate_sweep(&reports) {
        table.row(&[
            Field::Int(row.required_clicks),
            Field::Str(row.strategy),
            Field::Int(row.ads),
            Field::Int(row.tipped),
            Field::Float(row.total_realized_profit),
            Field::Float(row.mean_realized_profit),
            Field::Float(row.mean_pre_tip_profit),
            Field::Float(row.mean_spend),
            Field::Float(row.mean_clicks_won),
        ]);
    }
    table.write(&run.out)?;

    if inv.summary {
        print_sweep_summary(&reports);
    }
    Ok(())
}

const SELECT_HEADER: &str = "selector,m_max,deals,tipped,total_profit,mean_profit,displays,clicks";

/// Group ads and let each selector pick the deal that bids on every visit.
pub fn select(inv: &Invocation) -> Result<()> {
    let run = Run::prepare(inv)?;
    let cfg = &run.cfg;
    let ads = run.ads()?;
    let template = run.template()?;
    let block = cfg.selection.as_ref().context("config needs a `selection` block")?;
    if block.m_max_values.is_empty() {
        bail!("selection.m_max_values must list at least one value");
    }
    let win = cfg.win_model()?;
    let pool = cfg.competitor_pool(&win)?;
    let bounds = cfg.bid_bounds(&win)?;
    let opt = cfg.optimizer.to_core()?;
    let setup = ReplaySetup {
        win: &win,
        pool: &pool,
        payment: cfg.payment.to_core(),
        bounds,
        mode: cfg.mode.to_core(),
        seed: run.seed,
    };
    let selection = SelectionConfig {
        group_size: block.group_size,
        total_visits: block.total_visits,
        ctr_filter_max: block.ctr_filter_max,
    };
    let rows = selection_experiment(
        &setup,
        &ads,
        &template,
        &block.m_max_values,
        &[Selector::MarginalValue, Selector::PrivateValue],
        &selection,
        &opt,
    )?;

    let mut table = Table::new(SELECT_HEADER);
    for row in &rows {
        table.row(&[
            Field::Str(row.selector),
            Field::Int(row.m_max),
            Field::Int(row.deals),
            Field::Int(row.tipped),
            Field::Float(row.total_profit),
            Field::Float(row.mean_profit),
            Field::Int(row.displays),
            Field::Int(row.clicks),
        ]);
    }
    table.write(&run.out)?;

    if inv.summary {
        for row in &rows {
            println!(
                "selector={} m_max={} deals={} tipped={} total_profit={} mean_profit={}",
                row.selector, row.m_max, row.deals, row.tipped, row.total_profit, row.mean_profit
            );
        }
    }
    Ok(())
}

const ADMIT_HEADER: &str = "m,strategy,ads,admitted,total_profit_all,total_profit_admitted,\
                            mean_profit_all,mean_profit_admitted";

/// Replay with an admissibility filter; reports profit with and without it.
pub fn admit(inv: &Invocation) -> Result<()> {
    let run = Run::prepare(inv)?;
    let cfg = &run.cfg;
    let ads = run.ads()?;
    let deal = cfg.deal()?;
    let template = run.template()?;
    let win = cfg.win_model()?;
    let pool = cfg.competitor_pool(&win)?;
    let bounds = cfg.bid_bounds(&win)?;
    let opt = cfg.optimizer.to_core()?;
    let strategies = cfg.strategies(&opt)?;
    let threshold = cfg.admission_threshold.unwrap_or(0.0);
    if !threshold.is_finite() {
        bail!("admission_threshold must be finite");
    }
    let setup = ReplaySetup {
        win: &win,
        pool: &pool,
        payment: cfg.payment.to_core(),
        bounds,
        mode: cfg.mode.to_core(),
        seed: run.seed,
    };
    let (_, rows) = admissibility_experiment(
        &setup,
        &ads,
        &template,
        &deal.m_values,
        &strategies,
        &opt,
        threshold,
        inv.threads,
    )?;

    let mut table = Table::new(ADMIT_HEADER);
    for row in &rows {
        table.row(&[
            Field::Int(row.required_clicks),
            Field::Str(row.strategy),
            Field::Int(row.ads),
            Field::Int(row.admitted),
            Field::Float(row.total_profit_all),
            Field::Float(row.total_profit_admitted),
            Field::Float(row.mean_profit_all),
            Field::Float(row.mean_profit_admitted),
        ]);
    }
    table.write(&run.out)?;

    if inv.summary {
        for row in &rows {
            println!(
                "m={} strategy={} admitted={}/{} total_all={} total_admitted={} mean_all={} mean_admitted={}",
                row.required_clicks,
                row.strategy,
                row.admitted,
                row.ads,
                row.total_profit_all,
                row.total_profit_admitted,
                row.mean_profit_all,
                row.mean_profit_admitted
            );
        }
    }
    Ok(())
}

const BENCH_HEADER: &str = "m,repetitions,mean_evaluations";

/// Time the full bid optimization across required-clicks values. The report
/// file keeps only the deterministic columns; measured times print to
/// standard output.
pub fn bench(inv: &Invocation) -> Result<()> {
    let run = Run::prepare(inv)?;
    let cfg = &run.cfg;
    let block = cfg.bench.as_ref().context("config needs a `bench` block")?;
    if block.m_values.is_empty() {
        bail!("bench.m_values must list at least one value");
    }
    let win = cfg.win_model()?;
    let bounds = cfg.bid_bounds(&win)?;
    let opt = cfg.optimizer.to_core()?;
    let spec = BenchSpec {
        visits: block.visits,
        ctr: block.ctr,
        pay_per_click: block.pay_per_click,
        repetitions: block.repetitions,
    };
    let rows = bench_optimizer(
        &spec,
        &block.m_values,
        &win,
        &cfg.payment.to_core(),
        bounds,
        cfg.mode.to_core(),
        &opt,
        run.seed,
    )?;

    let mut table = Table::new(BENCH_HEADER);
    for row in &rows {
        table.row(&[
            Field::Int(row.required_clicks),
            Field::Int(row.repetitions as u64),
            Field::Float(row.mean_evaluations),
        ]);
    }
    table.write(&run.out)?;

    for row in &rows {
        println!(
            "bench m={}: mean {:.4} ms, p99 {:.4} ms, {:.1} evaluations over {} runs",
            row.required_clicks,
            row.mean_seconds * 1e3,
            row.p99_seconds * 1e3,
            row.mean_evaluations,
            row.repetitions
        );
    }
    Ok(())
}

/// Write a synthetic click log in the replayable format.
pub fn gen_log(inv: &Invocation) -> Result<()> {
    let run = Run::prepare(inv)?;
    let block =
        run.cfg.synthetic.as_ref().context("config needs a `synthetic` block")?;
    let ads = generate_synthetic_log(&block.to_core(), run.seed).context("synthetic log spec")?;
    write_text(&run.out, &write_click_log(&ads))?;

    if inv.summary {
        let impressions: usize = ads.iter().map(|a| a.records.len()).sum();
        let clicks: u64 = ads.iter().map(|a| a.clicks()).sum();
        println!("ads={} impressions={impressions} clicks={clicks}", ads.len());
    }
    Ok(())
}

const CURVE_HEADER: &str = "bid,expected_profit_exact,expected_profit_normal";

/// Evaluate the expected-profit objective for one frozen campaign state on a
/// bid grid, in both the exact and normal-approximation modes.
pub fn objective_curve(inv: &Invocation) -> Result<()> {
    let run = Run::prepare(inv)?;
    let cfg = &run.cfg;
    let block =
        cfg.objective_curve.as_ref().context("config needs an `objective_curve` block")?;
    let win = cfg.win_model()?;
    let payment = cfg.payment.to_core();

    let minimum = block
        .clicks
        .checked_add(block.remaining_required)
        .context("clicks + remaining_required overflows")?;
    let deal = Deal::new(minimum, block.remaining_visits, block.pay_per_click, block.ctr)
        .context("invalid objective_curve state")?;
    let mut state = DealState::fresh();
    state.clicks = block.clicks;
    state.spend = block.spend;

    let grid = &block.grid;
    if grid.points == 0 {
        bail!("objective_curve.grid.points must be at least 1");
    }
    if !(grid.lo.is_finite() && grid.hi.is_finite()) || grid.lo > grid.hi || grid.lo < 0.0 {
        bail!("objective_curve.grid interval [{}, {}] needs finite 0 <= lo <= hi", grid.lo, grid.hi);
    }
    let bids: Vec<f64> = if grid.lo == grid.hi || grid.points == 1 {
        vec![grid.lo]
    } else {
        (0..grid.points)
            .map(|i| grid.lo + (grid.hi - grid.lo) * i as f64 / (grid.points - 1) as f64)
            .collect()
    };

    let mut table = Table::new(CURVE_HEADER);
    for &bid in &bids {
        table.row(&[
            Field::Float(bid),
            Field::Float(expected_profit(&deal, &state, bid, &win, &payment, SumMode::Exact)),
            Field::Float(expected_profit(&deal, &state, bid, &win, &payment, SumMode::Normal)),
        ]);
    }
    table.write(&run.out)?;

    if inv.summary {
        println!("rows={}", bids.len());
    }
    Ok(())
}

/// Shared replay driver for the `replay` and `sweep` commands.
fn run_configured_replays(run: &Run, threads: usize) -> Result<Vec<ReplayReport>> {
    let cfg = &run.cfg;
    let ads = run.ads()?;
    let deal = cfg.deal()?;
    let template = run.template()?;
    let win = cfg.win_model()?;
    let pool = cfg.competitor_pool(&win)?;
    let bounds = cfg.bid_bounds(&win)?;
    let opt = cfg.optimizer.to_core()?;
    let strategies = cfg.strategies(&opt)?;
    let setup = ReplaySetup {
        win: &win,
        pool: &pool,
        payment: cfg.payment.to_core(),
        bounds,
        mode: cfg.mode.to_core(),
        seed: run.seed,
    };
    let reports =
        run_replays(&setup, &ads, &template, &deal.m_values, &strategies, threads)?;
    Ok(reports)
}

struct AggregateRow {
    m: u64,
    strategy: &'static str,
    impressions: u64,
    wins: u64,
    clicks_won: u64,
    spend: f64,
    tipped: u64,
    realized_profit: f64,
    pre_tip_profit: f64,
    mean_bid: f64,
}

/// Sums the per-ad reports per (required clicks, strategy) in encounter
/// order; the mean bid is weighted by opportunities attended.
fn aggregate_replay_rows(reports: &[ReplayReport]) -> Vec<AggregateRow> {
    let mut order: Vec<(u64, &'static str)> = Vec::new();
    let mut rows: HashMap<(u64, &'static str), AggregateRow> = HashMap::new();
    for r in reports {
        let key = (r.required_clicks, r.strategy);
        let agg = rows.entry(key).or_insert_with(|| {
            order.push(key);
            AggregateRow {
                m: r.required_clicks,
                strategy: r.strategy,
                impressions: 0,
                wins: 0,
                clicks_won: 0,
                spend: 0.0,
                tipped: 0,
                realized_profit: 0.0,
                pre_tip_profit: 0.0,
                mean_bid: 0.0,
            }
        });
        agg.impressions += r.impressions;
        agg.wins += r.wins;
        agg.clicks_won += r.clicks_won;
        agg.spend += r.spend;
        agg.tipped += u64::from(r.tipped);
        agg.realized_profit += r.realized_profit;
        agg.pre_tip_profit += r.pre_tip_profit;
        agg.mean_bid += r.mean_bid * r.impressions as f64;
    }
    order
        .into_iter()
        .map(|key| {
            let mut agg = rows.remove(&key).expect("keyed by encounter order");
            if agg.impressions > 0 {
                agg.mean_bid /= agg.impressions as f64;
            }
            agg
        })
        .collect()
}

fn print_sweep_summary(reports: &[ReplayReport]) {
    for row in aggregate_sweep(reports) {
        println!(
            "m={} strategy={} ads={} tipped={} total_profit={} mean_profit={}",
            row.required_clicks,
            row.strategy,
            row.ads,
            row.tipped,
            row.total_realized_profit,
            row.mean_realized_profit
        );
    }
}
