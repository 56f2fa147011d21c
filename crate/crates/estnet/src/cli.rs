//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use estnet_core::builder::{BuildConfig, PriorityScope};
use estnet_core::domain::firm_network_from;
use estnet_core::netgen::{degree_report, generate, GeneratorConfig};
use estnet_core::{FirmProductRule, RegionId};
use serde::de::DeserializeOwned;

use crate::build::build_network;
use crate::experiment::{
    experiment_suite, run_scenario, CascadeScenario, NetBundle, NoSink, RunOptions, RunSink, Suite, SuiteConfig,
};
use crate::ingest::{load_economy, save_economy, save_est_links, IngestManifest, LoadedEconomy, EST_LINKS_FILE};
use crate::output::{write_aggregate, write_degree_reports, write_recipes, write_ttests, RunsCsv};
use crate::{Error, Result};

pub const THREADS_ENV: &str = "ESTNET_THREADS";

#[derive(Debug, Parser)]
#[command(name = "estnet", version, about = "Establishment-level production networks and disruption cascades")]
pub struct Cli {
    /// Master seed; overrides the seed in config files.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads, 0 = all cores. ESTNET_THREADS takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic economy (firms, establishments, firm links).
    Generate {
        /// Generator configuration (JSON); defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Infer recipes and build the establishment network.
    Build {
        #[command(flatten)]
        economy: EconomyArg,
        /// Recipe admission threshold as a fraction of producers.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_enum)]
        priority_scope: Option<ScopeArg>,
        /// Per-client uncovered input lists kept in build_report.json.
        #[arg(long)]
        clip_report: Option<usize>,
    },
    /// Run one cascade scenario.
    Simulate {
        #[command(flatten)]
        economy: EconomyArg,
        /// Scenario file (JSON).
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        runs: Option<u64>,
        #[command(flatten)]
        output: RunOutputArgs,
    },
    /// Run a comparison suite.
    Experiment {
        #[command(flatten)]
        economy: EconomyArg,
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 100_000)]
        runs: u64,
        #[arg(long, value_delimiter = ',', default_values_t = crate::experiment::DEFAULT_P_GRID)]
        p_grid: Vec<f64>,
        /// Region label of the hub for the regional suite; defaults to the
        /// region with the most firms.
        #[arg(long)]
        hub_region: Option<String>,
        #[command(flatten)]
        output: RunOutputArgs,
    },
    /// Degree statistics of the firm and establishment networks.
    Stats {
        #[command(flatten)]
        economy: EconomyArg,
    },
}

#[derive(Debug, Args)]
pub struct EconomyArg {
    /// Economy directory or JSON manifest; defaults to --out-dir.
    #[arg(long)]
    pub economy: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunOutputArgs {
    /// Skip writing runs.csv.
    #[arg(long)]
    pub no_runs_csv: bool,
    /// Per-run records kept in memory per cell (needed for t-tests).
    #[arg(long, default_value_t = 1_000_000)]
    pub retain_cap: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScopeArg {
    Global,
    PerInstance,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    EstVsFirm,
    Substitutability,
    Regional,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::EstVsFirm => Suite::EstVsFirm,
            SuiteArg::Substitutability => Suite::Substitutability,
            SuiteArg::Regional => Suite::Regional,
        }
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_count(flag: usize) -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Config(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(flag),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let threads = thread_count(cli.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load(cli: &Cli, arg: &EconomyArg) -> Result<LoadedEconomy> {
    let path = arg.economy.as_deref().unwrap_or(&cli.out_dir);
    let manifest = if path.is_file() { IngestManifest::from_json(path)? } else { IngestManifest::in_dir(path) };
    let loaded = load_economy(&manifest)?;
    for w in loaded.report.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(loaded)
}

/// The establishment network from the economy files, built on the fly with
/// default settings if no establishment links were given.
fn bundle(loaded: &LoadedEconomy) -> Result<NetBundle> {
    let est = match loaded.establishment_network()? {
        Some(net) => net,
        None => {
            eprintln!("note: no {EST_LINKS_FILE}; building the establishment network with default settings");
            build_network(&loaded.economy, &BuildConfig::default())?.network
        }
    };
    Ok(NetBundle::new(&loaded.economy, Some(est)))
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| Error::io(&cli.out_dir, e))?;
    Ok(&cli.out_dir)
}

fn runs_sink(cli: &Cli, output: &RunOutputArgs, suite: &str) -> Result<Option<RunsCsv>> {
    if output.no_runs_csv {
        return Ok(None);
    }
    RunsCsv::create(&out_dir(cli)?.join("runs.csv"), suite).map(Some)
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate { config } => {
            let mut cfg: GeneratorConfig = match config {
                Some(path) => read_json(path)?,
                None => GeneratorConfig::default(),
            };
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            cfg.validate()?;
            let economy = generate(&cfg)?;
            save_economy(out_dir(cli)?, &economy)?;
            println!(
                "generated {} firms, {} establishments, {} firm links",
                economy.n_firms(),
                economy.n_establishments(),
                economy.firm_links.len()
            );
        }
        Command::Build { economy, threshold, priority_scope, clip_report } => {
            let mut config = BuildConfig::default();
            if let Some(t) = threshold {
                config.recipe.threshold_fraction = *t;
            }
            config.recipe.validate()?;
            if let Some(scope) = priority_scope {
                config.priority_scope = match scope {
                    ScopeArg::Global => PriorityScope::Global,
                    ScopeArg::PerInstance => PriorityScope::PerInstance,
                };
            }
            if let Some(limit) = clip_report {
                config.uncovered_sample_limit = *limit;
            }
            let loaded = load(cli, economy)?;
            let built = build_network(&loaded.economy, &config)?;
            let dir = out_dir(cli)?;
            save_est_links(&dir.join(EST_LINKS_FILE), &built.network)?;
            write_recipes(&dir.join("recipes.csv"), &loaded.economy, &built.recipes)?;
            write_json(&dir.join("build_report.json"), &built.report)?;
            println!(
                "built {} establishment links from {} candidates",
                built.report.final_edge_count, built.report.candidate_edge_count
            );
        }
        Command::Simulate { economy, scenario, runs, output } => {
            let mut sc: CascadeScenario = read_json(scenario)?;
            if let Some(seed) = cli.seed {
                sc.seed = seed;
            }
            if let Some(runs) = runs {
                sc.runs = *runs;
            }
            sc.validate()?;
            let loaded = load(cli, economy)?;
            let bundle = if sc.network_ref == crate::experiment::NetworkRef::Establishment {
                bundle(&loaded)?
            } else {
                NetBundle::new(&loaded.economy, None)
            };
            let options = RunOptions { retain_cap: output.retain_cap, ..RunOptions::default() };
            let mut sink = runs_sink(cli, output, "simulate")?;
            let stats = with_sink(&mut sink, |s| run_scenario(&bundle, &sc, &options, s))?;
            if let Some(sink) = sink {
                sink.finish()?;
            }
            write_aggregate(&out_dir(cli)?.join("aggregate.csv"), "simulate", &[stats])?;
        }
        Command::Experiment { economy, suite, runs, p_grid, hub_region, output } => {
            let suite = Suite::from(*suite);
            let probe = CascadeScenario {
                name: String::new(),
                network_ref: crate::experiment::NetworkRef::Firm,
                product_mode: estnet_core::cascade::ProductMode::Actual,
                firm_product_rule: FirmProductRule::Industry,
                initial_filter: Default::default(),
                p_grid: p_grid.clone(),
                runs: *runs,
                seed: 0,
            };
            probe.validate()?;
            let loaded = load(cli, economy)?;
            let hub = match hub_region {
                Some(label) => RegionId::from_index(
                    loaded
                        .economy
                        .region_labels
                        .iter()
                        .position(|l| l == label)
                        .ok_or_else(|| Error::Config(format!("unknown region label `{label}`")))?,
                ),
                None => busiest_region(&loaded),
            };
            let bundle = bundle(&loaded)?;
            let config = SuiteConfig {
                p_grid: p_grid.clone(),
                runs: *runs,
                seed: cli.seed.unwrap_or(0),
                hub_region: hub,
                options: RunOptions { retain_cap: output.retain_cap, ..RunOptions::default() },
            };
            let mut sink = runs_sink(cli, output, suite.name())?;
            let report = with_sink(&mut sink, |s| experiment_suite(&bundle, suite, &config, s))?;
            if let Some(sink) = sink {
                sink.finish()?;
            }
            let dir = out_dir(cli)?;
            write_aggregate(&dir.join("aggregate.csv"), suite.name(), &report.stats)?;
            write_ttests(&dir.join("ttests.csv"), suite.name(), &report.comparisons)?;
        }
        Command::Stats { economy } => {
            let loaded = load(cli, economy)?;
            let mut reports =
                vec![("firm", degree_report(&firm_network_from(&loaded.economy, FirmProductRule::Industry)))];
            if let Some(net) = loaded.establishment_network()? {
                reports.push(("establishment", degree_report(&net)));
            }
            write_degree_reports(out_dir(cli)?, &reports, &loaded.economy)?;
        }
    }
    Ok(())
}

fn with_sink<T>(sink: &mut Option<RunsCsv>, f: impl FnOnce(&mut dyn RunSink) -> Result<T>) -> Result<T> {
    match sink {
        Some(s) => f(s),
        None => f(&mut NoSink),
    }
}

/// The region holding the most firm headquarters (lowest id on ties).
fn busiest_region(loaded: &LoadedEconomy) -> RegionId {
    let mut counts = vec![0usize; loaded.economy.n_regions()];
    for f in &loaded.economy.firms {
        counts[f.region.index()] += 1;
    }
    let best = counts.iter().enumerate().max_by_key(|&(i, &c)| (c, std::cmp::Reverse(i))).map_or(0, |(i, _)| i);
    RegionId::from_index(best)
}
