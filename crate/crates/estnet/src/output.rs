//! Report files. Every writer is byte-deterministic for equal inputs.

use std::fs::File;
use std::path::{Path, PathBuf};

use estnet_core::netgen::DegreeReport;
use estnet_core::recipe::RecipeBook;
use estnet_core::Economy;

use crate::experiment::{ComparisonResult, RunRecord, RunSink, RunStatistics};
use crate::ingest::{csv_writer, write_rows};
use crate::{Error, Result};

pub const AGGREGATE_HEADER: [&str; 6] =
    ["suite", "scenario", "p", "mean_inactive_fraction", "standard_error", "n_runs"];
pub const RUNS_HEADER: [&str; 8] =
    ["suite", "scenario", "p", "run_index", "initial_node", "final_inactive", "total_nodes", "rounds"];
pub const TTESTS_HEADER: [&str; 7] = ["suite", "scenario_a", "scenario_b", "p", "t_statistic", "dof", "p_value"];

pub fn write_recipes(path: &Path, economy: &Economy, book: &RecipeBook) -> Result<()> {
    let label = |p: estnet_core::ProductId| economy.product_labels[p.index()].clone();
    write_rows(
        path,
        &["output_product", "input_product", "producer_count", "observation_count", "admitted"],
        book.rows()
            .map(|(g, h, e, obs, admitted)| [label(g), label(h), e.to_string(), obs.to_string(), admitted.to_string()]),
    )
}

pub fn write_aggregate(path: &Path, suite: &str, stats: &[RunStatistics]) -> Result<()> {
    write_rows(
        path,
        &AGGREGATE_HEADER,
        stats.iter().flat_map(|s| {
            s.cells.iter().map(move |c| {
                [
                    suite.to_owned(),
                    s.label.clone(),
                    c.p.to_string(),
                    c.mean_inactive_fraction.to_string(),
                    c.standard_error.to_string(),
                    c.n_runs.to_string(),
                ]
            })
        }),
    )
}

pub fn write_ttests(path: &Path, suite: &str, comparisons: &[ComparisonResult]) -> Result<()> {
    write_rows(
        path,
        &TTESTS_HEADER,
        comparisons.iter().map(|c| {
            [
                suite.to_owned(),
                c.scenario_a.clone(),
                c.scenario_b.clone(),
                c.p.to_string(),
                c.welch_t.to_string(),
                c.degrees_of_freedom.to_string(),
                c.p_value.to_string(),
            ]
        }),
    )
}

/// Streams every run to `runs.csv` as it is aggregated.
pub struct RunsCsv {
    path: PathBuf,
    suite: String,
    writer: csv::Writer<File>,
}

impl RunsCsv {
    pub fn create(path: &Path, suite: &str) -> Result<Self> {
        let mut writer = csv_writer(path)?;
        writer.write_record(RUNS_HEADER).map_err(|e| Error::csv(path, e))?;
        Ok(Self { path: path.to_path_buf(), suite: suite.to_owned(), writer })
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

impl RunSink for RunsCsv {
    fn record(&mut self, scenario: &str, p: f64, total_nodes: usize, run: &RunRecord) -> Result<()> {
        self.writer
            .write_record([
                self.suite.as_str(),
                scenario,
                &p.to_string(),
                &run.run_index.to_string(),
                &run.initial_node.to_string(),
                &run.final_inactive.to_string(),
                &total_nodes.to_string(),
                &run.rounds.to_string(),
            ])
            .map_err(|e| Error::csv(&self.path, e))
    }
}

/// `degree_summary.csv`, `degree_histogram.csv` and `region_out_degree.csv`.
pub fn write_degree_reports(dir: &Path, reports: &[(&str, DegreeReport)], economy: &Economy) -> Result<()> {
    write_rows(
        &dir.join("degree_summary.csv"),
        &["network", "nodes", "edges", "p90_degree", "avg_links_per_node"],
        reports.iter().map(|(name, r)| {
            [
                (*name).to_owned(),
                r.nodes.to_string(),
                r.edges.to_string(),
                r.p90_degree.to_string(),
                r.avg_links_per_node.to_string(),
            ]
        }),
    )?;
    write_rows(
        &dir.join("degree_histogram.csv"),
        &["network", "degree", "count"],
        reports.iter().flat_map(|(name, r)| {
            r.histogram
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(move |(d, c)| [(*name).to_owned(), d.to_string(), c.to_string()])
        }),
    )?;
    write_rows(
        &dir.join("region_out_degree.csv"),
        &["network", "region", "nodes", "mean_out_degree"],
        reports.iter().flat_map(|(name, r)| {
            r.region_out_degree.iter().map(move |x| {
                [
                    (*name).to_owned(),
                    economy.region_labels[x.region.index()].clone(),
                    x.nodes.to_string(),
                    x.mean_out_degree.to_string(),
                ]
            })
        }),
    )
}
