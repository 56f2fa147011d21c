//! Scenarios, the Monte Carlo driver and scenario comparisons.
//!
//! Run `r` of a scenario is keyed by `(seed, r)` alone. The key picks the
//! initial node and the per-node uniforms, so every `p` in the grid replays
//! the same randomness and results do not depend on the thread count.

use estnet_core::cascade::{effective_outputs, stream, KeyedUniforms, ProductMode, Propagation};
use estnet_core::domain::firm_network_from;
use estnet_core::{Economy, FirmProductRule, ProductionNetwork, RegionId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::stats::{welch, Summary};
use crate::{Error, Result};

/// Counter reserved for the initial-node draw; node uniforms use counters `0..n`.
const INITIAL_COUNTER: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkRef {
    Firm,
    Establishment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialFilter {
    #[default]
    All,
    Region {
        region: RegionId,
    },
    NotRegion {
        region: RegionId,
    },
}

impl InitialFilter {
    pub fn candidates(&self, net: &ProductionNetwork) -> Vec<u32> {
        (0..net.len())
            .filter(|&v| match *self {
                InitialFilter::All => true,
                InitialFilter::Region { region } => net.region(v) == region,
                InitialFilter::NotRegion { region } => net.region(v) != region,
            })
            .map(|v| v as u32)
            .collect()
    }
}

pub const DEFAULT_P_GRID: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

fn default_p_grid() -> Vec<f64> {
    DEFAULT_P_GRID.to_vec()
}

fn default_runs() -> u64 {
    100_000
}

fn default_rule() -> FirmProductRule {
    FirmProductRule::Industry
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeScenario {
    /// Label used in output files; generated from the other fields if empty.
    #[serde(default)]
    pub name: String,
    pub network_ref: NetworkRef,
    pub product_mode: ProductMode,
    #[serde(default = "default_rule")]
    pub firm_product_rule: FirmProductRule,
    #[serde(default)]
    pub initial_filter: InitialFilter,
    #[serde(default = "default_p_grid")]
    pub p_grid: Vec<f64>,
    #[serde(default = "default_runs")]
    pub runs: u64,
    #[serde(default)]
    pub seed: u64,
}

impl CascadeScenario {
    pub fn label(&self) -> String {
        if !self.name.is_empty() {
            return self.name.clone();
        }
        let net = match (self.network_ref, self.firm_product_rule) {
            (NetworkRef::Establishment, _) => "establishment",
            (NetworkRef::Firm, FirmProductRule::Industry) => "firm",
            (NetworkRef::Firm, FirmProductRule::Union) => "firm_union",
        };
        let filter = match self.initial_filter {
            InitialFilter::All => String::new(),
            InitialFilter::Region { region } => format!("/region_{region}"),
            InitialFilter::NotRegion { region } => format!("/not_region_{region}"),
        };
        format!("{net}/{}{filter}", self.product_mode.name())
    }

    /// Probabilities must lie in `[0, 1]`; `p = 0` is accepted as a baseline.
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.p_grid.is_empty() {
            return Err(Error::Config("p_grid is empty".into()));
        }
        if let Some(p) = self.p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!("p_grid value {p} outside [0, 1]")));
        }
        Ok(())
    }
}

/// The networks a scenario can refer to.
#[derive(Debug, Clone)]
pub struct NetBundle {
    firm_industry: ProductionNetwork,
    firm_union: ProductionNetwork,
    establishment: Option<ProductionNetwork>,
}

impl NetBundle {
    pub fn new(economy: &Economy, establishment: Option<ProductionNetwork>) -> Self {
        Self {
            firm_industry: firm_network_from(economy, FirmProductRule::Industry),
            firm_union: firm_network_from(economy, FirmProductRule::Union),
            establishment,
        }
    }

    pub fn network(&self, which: NetworkRef, rule: FirmProductRule) -> Result<&ProductionNetwork> {
        match (which, rule) {
            (NetworkRef::Firm, FirmProductRule::Industry) => Ok(&self.firm_industry),
            (NetworkRef::Firm, FirmProductRule::Union) => Ok(&self.firm_union),
            (NetworkRef::Establishment, _) => self
                .establishment
                .as_ref()
                .ok_or_else(|| Error::State("no establishment network available; run `build` first".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: u64,
    pub initial_node: u32,
    pub final_inactive: u32,
    pub rounds: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub p: f64,
    pub n_runs: u64,
    pub total_nodes: usize,
    pub mean_inactive_fraction: f64,
    pub standard_error: f64,
    pub summary: Summary,
    /// The first `retain_cap` runs, in run order.
    pub records: Vec<RunRecord>,
}

impl CellStats {
    pub fn fractions(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.total_nodes as f64;
        self.records.iter().map(move |r| f64::from(r.final_inactive) / n)
    }

    pub fn is_complete(&self) -> bool {
        self.records.len() as u64 == self.n_runs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStatistics {
    pub scenario: CascadeScenario,
    pub label: String,
    pub total_nodes: usize,
    /// One cell per `p_grid` entry, in grid order.
    pub cells: Vec<CellStats>,
}

impl RunStatistics {
    pub fn cell(&self, p: f64) -> Option<&CellStats> {
        self.cells.iter().find(|c| c.p == p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Per-run records kept in memory per cell; the sink sees every run.
    pub retain_cap: usize,
    /// Runs per parallel work item. Does not affect results.
    pub block: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { retain_cap: 1_000_000, block: 2048 }
    }
}

/// Receives every run in order: grid order, then run index.
pub trait RunSink {
    fn record(&mut self, scenario: &str, p: f64, total_nodes: usize, run: &RunRecord) -> Result<()>;
}

/// Discards records.
pub struct NoSink;

impl RunSink for NoSink {
    fn record(&mut self, _: &str, _: f64, _: usize, _: &RunRecord) -> Result<()> {
        Ok(())
    }
}

pub fn run_scenario(
    bundle: &NetBundle,
    scenario: &CascadeScenario,
    options: &RunOptions,
    sink: &mut dyn RunSink,
) -> Result<RunStatistics> {
    scenario.validate()?;
    let net = bundle.network(scenario.network_ref, scenario.firm_product_rule)?;
    let candidates = scenario.initial_filter.candidates(net);
    if candidates.is_empty() {
        return Err(Error::Config(format!("initial filter {:?} selects no nodes", scenario.initial_filter)));
    }
    let eff = effective_outputs(net, scenario.product_mode);
    let engine = Propagation::new(net, &eff)?;
    let label = scenario.label();
    let n = net.len();
    let block = options.block.max(1);
    // Blocks handed to rayon at once; bounds memory for large run counts.
    let wave = (rayon::current_num_threads() as u64 * 8).max(8) * block;

    let mut cells = Vec::with_capacity(scenario.p_grid.len());
    for &p in &scenario.p_grid {
        let mut summary = Summary::default();
        let mut records = Vec::with_capacity(options.retain_cap.min(scenario.runs as usize));
        let mut start = 0;
        while start < scenario.runs {
            let end = (start + wave).min(scenario.runs);
            let starts: Vec<u64> = (start..end).step_by(block as usize).collect();
            let blocks = starts
                .into_par_iter()
                .map_init(
                    || engine.workspace(),
                    |ws, b| {
                        (b..(b + block).min(end))
                            .map(|r| {
                                let key = stream::stream_key(scenario.seed, r);
                                let pick = stream::index(stream::word(key, INITIAL_COUNTER), candidates.len());
                                let initial = candidates[pick] as usize;
                                let s = engine.run(ws, &[initial], p, &KeyedUniforms::new(key))?;
                                Ok(RunRecord {
                                    run_index: r,
                                    initial_node: initial as u32,
                                    final_inactive: s.final_inactive as u32,
                                    rounds: s.rounds as u32,
                                })
                            })
                            .collect::<Result<Vec<_>>>()
                    },
                )
                .collect::<Result<Vec<_>>>()?;
            for rec in blocks.iter().flatten() {
                summary.push(f64::from(rec.final_inactive) / n as f64);
                sink.record(&label, p, n, rec)?;
                if records.len() < options.retain_cap {
                    records.push(*rec);
                }
            }
            start = end;
        }
        cells.push(CellStats {
            p,
            n_runs: scenario.runs,
            total_nodes: n,
            mean_inactive_fraction: summary.mean(),
            standard_error: summary.standard_error(),
            summary,
            records,
        });
    }
    Ok(RunStatistics { scenario: scenario.clone(), label, total_nodes: n, cells })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub scenario_a: String,
    pub scenario_b: String,
    pub p: f64,
    pub welch_t: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub significant_at_0_05: bool,
}

/// Welch's t-test on the per-run inactive fractions of both sides at `p`.
pub fn compare(a: &RunStatistics, b: &RunStatistics, p: f64) -> Result<ComparisonResult> {
    let cell = |s: &RunStatistics| -> Result<Summary> {
        let c = s.cell(p).ok_or_else(|| Error::State(format!("scenario {} has no cell at p = {p}", s.label)))?;
        if !c.is_complete() {
            return Err(Error::State(format!(
                "scenario {} retained {} of {} runs at p = {p}; raise the retain cap",
                s.label,
                c.records.len(),
                c.n_runs
            )));
        }
        Ok(c.fractions().collect())
    };
    let w = welch(&cell(a)?, &cell(b)?);
    Ok(ComparisonResult {
        scenario_a: a.label.clone(),
        scenario_b: b.label.clone(),
        p,
        welch_t: w.t,
        degrees_of_freedom: w.dof,
        p_value: w.p_value,
        significant_at_0_05: w.p_value < 0.05,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    EstVsFirm,
    Substitutability,
    Regional,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::EstVsFirm => "est-vs-firm",
            Suite::Substitutability => "substitutability",
            Suite::Regional => "regional",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub p_grid: Vec<f64>,
    pub runs: u64,
    pub seed: u64,
    pub hub_region: RegionId,
    pub options: RunOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            p_grid: default_p_grid(),
            runs: default_runs(),
            seed: 0,
            hub_region: RegionId(0),
            options: RunOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub stats: Vec<RunStatistics>,
    pub comparisons: Vec<ComparisonResult>,
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Scenarios of a suite and the index pairs it compares.
pub fn suite_scenarios(suite: Suite, config: &SuiteConfig) -> (Vec<CascadeScenario>, Vec<(usize, usize)>) {
    let make = |name: &str, network_ref, product_mode, firm_product_rule, initial_filter| CascadeScenario {
        name: name.to_owned(),
        network_ref,
        product_mode,
        firm_product_rule,
        initial_filter,
        p_grid: config.p_grid.clone(),
        runs: config.runs,
        // Independent streams per scenario, stable under reordering.
        seed: stream::stream_key(config.seed, fnv1a(name)),
    };
    use InitialFilter::*;
    use NetworkRef::*;
    use ProductMode::*;
    let hub = config.hub_region;
    match suite {
        Suite::EstVsFirm => (
            vec![
                make("establishment", Establishment, IndustryAsProduct, FirmProductRule::Industry, All),
                make("firm", Firm, IndustryAsProduct, FirmProductRule::Industry, All),
            ],
            vec![(0, 1)],
        ),
        Suite::Substitutability => {
            let modes = [UniquePerNode, Actual, IndustryAsProduct, SingleShared];
            let scenarios =
                modes.iter().map(|&m| make(m.name(), Establishment, m, FirmProductRule::Industry, All)).collect();
            let pairs = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).collect();
            (scenarios, pairs)
        }
        Suite::Regional => (
            vec![
                make("firm_hub", Firm, Actual, FirmProductRule::Union, Region { region: hub }),
                make("firm_non_hub", Firm, Actual, FirmProductRule::Union, NotRegion { region: hub }),
                make("establishment_hub", Establishment, Actual, FirmProductRule::Industry, Region { region: hub }),
                make(
                    "establishment_non_hub",
                    Establishment,
                    Actual,
                    FirmProductRule::Industry,
                    NotRegion { region: hub },
                ),
            ],
            vec![(0, 1), (2, 3)],
        ),
    }
}

pub fn experiment_suite(
    bundle: &NetBundle,
    suite: Suite,
    config: &SuiteConfig,
    sink: &mut dyn RunSink,
) -> Result<SuiteReport> {
    let (scenarios, pairs) = suite_scenarios(suite, config);
    let stats = scenarios.iter().map(|s| run_scenario(bundle, s, &config.options, sink)).collect::<Result<Vec<_>>>()?;
    let mut comparisons = Vec::new();
    for &(a, b) in &pairs {
        for &p in &config.p_grid {
            comparisons.push(compare(&stats[a], &stats[b], p)?);
        }
    }
    Ok(SuiteReport { suite, stats, comparisons })
}
