//! Run-configuration schema. One JSON file describes one experiment; the
//! whole file is validated up front (unknown keys rejected) and converted
//! into core types before any computation starts.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use dealbid_core::simulator::SyntheticLogSpec;
use dealbid_core::{
    BidBounds, BidderStrategy, CompetitorDistribution, OptimizerConfig, PaymentModel, SumMode,
    WinModel,
};

/// Top-level configuration. Commands use the blocks they need and reject
/// configs missing them; unrelated blocks are allowed so one file can drive
/// several commands.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Path to a click-log file. Exactly one of `log` and `synthetic`.
    pub log: Option<PathBuf>,
    /// Generate the click log in memory instead of reading one.
    pub synthetic: Option<SyntheticBlock>,
    #[serde(default)]
    pub seed: u64,
    /// Report file this run writes.
    pub out: PathBuf,
    pub deal: Option<DealBlock>,
    pub win_model: Option<WinModelSpec>,
    /// Actual competition faced in replays. Defaults to the competitors the
    /// win model assumes; set explicitly to model a mis-specified market.
    pub competitor_pool: Option<Vec<CompetitorSpec>>,
    /// Search interval override; required for win models without
    /// bid-dependent support (`constant`).
    pub bid_bounds: Option<BoundsBlock>,
    #[serde(default)]
    pub payment: PaymentSpec,
    #[serde(default)]
    pub mode: ModeSpec,
    #[serde(default)]
    pub optimizer: OptimizerBlock,
    pub strategies: Option<Vec<StrategySpec>>,
    /// Minimum optimized fresh expected profit a deal must strictly exceed
    /// to be admitted (`admit` command).
    pub admission_threshold: Option<f64>,
    pub selection: Option<SelectionBlock>,
    pub bench: Option<BenchBlock>,
    pub objective_curve: Option<CurveBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticBlock {
    pub n_ads: u32,
    pub impressions_min: u64,
    pub impressions_max: u64,
    pub ctr_lo: f64,
    pub ctr_hi: f64,
}

impl SyntheticBlock {
    pub fn to_core(&self) -> SyntheticLogSpec {
        SyntheticLogSpec {
            n_ads: self.n_ads,
            impressions_min: self.impressions_min,
            impressions_max: self.impressions_max,
            ctr_lo: self.ctr_lo,
            ctr_hi: self.ctr_hi,
        }
    }
}

/// Deal template applied to every ad, swept over `m_values` (the selection
/// command draws its minimums elsewhere and ignores the sweep list).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DealBlock {
    #[serde(default)]
    pub m_values: Vec<u64>,
    pub pay_per_click: f64,
    /// Fixed click-through rate; omit to estimate per ad from its log.
    pub ctr_override: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum WinModelSpec {
    Uniform { lo: f64, hi: f64, n_bidders: u32 },
    Gaussian { mean: f64, sigma: f64, n_bidders: u32 },
    Constant { p: f64 },
}

impl WinModelSpec {
    pub fn to_core(&self) -> Result<WinModel> {
        let model = match *self {
            WinModelSpec::Uniform { lo, hi, n_bidders } => WinModel::uniform(lo, hi, n_bidders),
            WinModelSpec::Gaussian { mean, sigma, n_bidders } => {
                WinModel::gaussian(mean, sigma, n_bidders)
            }
            WinModelSpec::Constant { p } => WinModel::constant(p),
        };
        model.context("invalid win_model")
    }
}

/// A single competitor in the auction pool.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum CompetitorSpec {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, sigma: f64 },
}

impl CompetitorSpec {
    pub fn to_core(&self) -> Result<CompetitorDistribution> {
        match *self {
            CompetitorSpec::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) || lo >= hi || lo < 0.0 {
                    bail!("competitor uniform support [{lo}, {hi}] needs finite 0 <= lo < hi");
                }
                Ok(CompetitorDistribution::Uniform { lo, hi })
            }
            CompetitorSpec::Gaussian { mean, sigma } => {
                if !sigma.is_finite() || sigma <= 0.0 {
                    bail!("competitor gaussian sigma {sigma} must be positive");
                }
                Ok(CompetitorDistribution::Gaussian { mean, sigma })
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsBlock {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum PaymentSpec {
    #[default]
    FirstPrice,
}

impl PaymentSpec {
    pub fn to_core(&self) -> PaymentModel {
        match self {
            PaymentSpec::FirstPrice => PaymentModel::FirstPrice,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ModeSpec {
    Exact,
    Tail,
    Normal,
    #[default]
    Auto,
}

impl ModeSpec {
    pub fn to_core(&self) -> SumMode {
        match self {
            ModeSpec::Exact => SumMode::Exact,
            ModeSpec::Tail => SumMode::Tail,
            ModeSpec::Normal => SumMode::Normal,
            ModeSpec::Auto => SumMode::Auto,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerBlock {
    pub abs_tol: Option<f64>,
    pub max_iters: u32,
    pub multi_start_impressions: u32,
    pub starts_per_impression: u32,
    pub recompute_interval: u32,
}

impl Default for OptimizerBlock {
    fn default() -> Self {
        let core = OptimizerConfig::default();
        OptimizerBlock {
            abs_tol: core.abs_tol,
            max_iters: core.max_iters,
            multi_start_impressions: core.multi_start_impressions,
            starts_per_impression: core.starts_per_impression,
            recompute_interval: core.recompute_interval,
        }
    }
}

impl OptimizerBlock {
    pub fn to_core(&self) -> Result<OptimizerConfig> {
        let cfg = OptimizerConfig {
            abs_tol: self.abs_tol,
            max_iters: self.max_iters,
            multi_start_impressions: self.multi_start_impressions,
            starts_per_impression: self.starts_per_impression,
            recompute_interval: self.recompute_interval,
        };
        cfg.validate().context("invalid optimizer block")?;
        Ok(cfg)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum StrategySpec {
    Rt,
    Static,
    Adaptive,
    Random { lo: f64, hi: f64 },
}

impl StrategySpec {
    pub fn to_core(&self, opt: &OptimizerConfig) -> Result<BidderStrategy> {
        match *self {
            StrategySpec::Rt => Ok(BidderStrategy::Rt(*opt)),
            StrategySpec::Static => Ok(BidderStrategy::StaticOptimal),
            StrategySpec::Adaptive => Ok(BidderStrategy::Adaptive),
            StrategySpec::Random { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) || lo >= hi || lo < 0.0 {
                    bail!("random strategy support [{lo}, {hi}] needs finite 0 <= lo < hi");
                }
                Ok(BidderStrategy::Random { lo, hi })
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionBlock {
    pub m_max_values: Vec<u64>,
    pub group_size: usize,
    pub total_visits: u64,
    /// Drop ads with an estimated click-through rate above this before
    /// grouping.
    pub ctr_filter_max: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchBlock {
    pub m_values: Vec<u64>,
    pub visits: u64,
    pub ctr: f64,
    pub pay_per_click: f64,
    pub repetitions: u32,
}

/// A frozen campaign state and a bid grid to evaluate the objective on.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveBlock {
    pub clicks: u64,
    pub remaining_required: u64,
    pub remaining_visits: u64,
    #[serde(default)]
    pub spend: f64,
    pub pay_per_click: f64,
    pub ctr: f64,
    pub grid: GridBlock,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub lo: f64,
    pub hi: f64,
    pub points: u32,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn deal_template(&self) -> Result<&DealBlock> {
        self.deal.as_ref().context("config needs a `deal` block")
    }

    pub fn deal(&self) -> Result<&DealBlock> {
        let block = self.deal_template()?;
        if block.m_values.is_empty() {
            bail!("deal.m_values must list at least one required-clicks value");
        }
        Ok(block)
    }

    pub fn win_model(&self) -> Result<WinModel> {
        self.win_model.as_ref().context("config needs a `win_model` block")?.to_core()
    }

    /// The bid search interval: the explicit override if present, otherwise
    /// the support the win model implies.
    pub fn bid_bounds(&self, win: &WinModel) -> Result<BidBounds> {
        match &self.bid_bounds {
            Some(b) => BidBounds::new(b.lo, b.hi).context("invalid bid_bounds"),
            None => win
                .bid_bounds()
                .context("win_model implies no bid interval; add a `bid_bounds` block"),
        }
    }

    /// Competitors faced in simulated auctions.
    pub fn competitor_pool(&self, win: &WinModel) -> Result<Vec<CompetitorDistribution>> {
        match &self.competitor_pool {
            Some(specs) => specs.iter().map(CompetitorSpec::to_core).collect(),
            None => win
                .competitor_distributions()
                .context("win_model implies no competitors; add a `competitor_pool` block"),
        }
    }

    pub fn strategies(&self, opt: &OptimizerConfig) -> Result<Vec<BidderStrategy>> {
        let specs =
            self.strategies.as_ref().context("config needs a `strategies` list")?;
        if specs.is_empty() {
            bail!("strategies list must not be empty");
        }
        specs.iter().map(|s| s.to_core(opt)).collect()
    }
}
