use estnet::experiment::{
    compare, experiment_suite, run_scenario, suite_scenarios, CascadeScenario, InitialFilter, NetBundle, NetworkRef,
    NoSink, RunOptions, RunRecord, RunSink, Suite, SuiteConfig,
};
use estnet::stats::welch_samples;
use estnet::Error;
use estnet_core::builder::{build_establishment_network, BuildConfig};
use estnet_core::cascade::ProductMode;
use estnet_core::netgen::{generate, GeneratorConfig};
use estnet_core::{
    Economy, Establishment, EstablishmentId, Firm, FirmId, FirmProductRule, IndustryId, ProductId, ProductionNetwork,
    RegionId,
};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

/// `n` single-establishment firms, all making product 0, linked in a cycle.
fn cycle(n: usize) -> NetBundle {
    let firms = (0..n)
        .map(|i| Firm {
            id: FirmId::from_index(i),
            region: RegionId(0),
            industry: IndustryId(0),
            establishments: vec![EstablishmentId::from_index(i)],
        })
        .collect();
    let ests = (0..n)
        .map(|i| Establishment {
            id: EstablishmentId::from_index(i),
            firm: FirmId::from_index(i),
            region: RegionId(0),
            industry: IndustryId(0),
            products: vec![ProductId(0)],
        })
        .collect();
    let links = (0..n).map(|i| (FirmId::from_index(i), FirmId::from_index((i + 1) % n))).collect();
    let eco = Economy::new(firms, ests, links, vec!["R".into()], vec!["I".into()], vec!["P".into()]).unwrap();
    let net = ProductionNetwork::from_establishments(&eco, (0..n).map(|i| (i, (i + 1) % n)).collect()).unwrap();
    NetBundle::new(&eco, Some(net))
}

fn generated() -> NetBundle {
    let eco = generate(&GeneratorConfig { n_firms: 400, seed: 8, ..Default::default() }).unwrap();
    let (net, _) = build_establishment_network(&eco, &BuildConfig::default()).unwrap();
    NetBundle::new(&eco, Some(net))
}

fn scenario(mode: ProductMode, p_grid: &[f64], runs: u64) -> CascadeScenario {
    CascadeScenario {
        name: String::new(),
        network_ref: NetworkRef::Establishment,
        product_mode: mode,
        firm_product_rule: FirmProductRule::Industry,
        initial_filter: InitialFilter::All,
        p_grid: p_grid.to_vec(),
        runs,
        seed: 17,
    }
}

#[test]
fn zero_probability_inactivates_only_the_seed() {
    let bundle = generated();
    let n = bundle.network(NetworkRef::Establishment, FirmProductRule::Industry).unwrap().len();
    let stats =
        run_scenario(&bundle, &scenario(ProductMode::Actual, &[0.0], 1000), &RunOptions::default(), &mut NoSink)
            .unwrap();
    let c = &stats.cells[0];
    assert_eq!(c.mean_inactive_fraction, 1.0 / n as f64);
    assert_eq!(c.standard_error, 0.0);
    assert_eq!(c.n_runs, 1000);
}

#[test]
fn shared_cycle_matches_exact_expectation() {
    use estnet_core::cascade::{effective_outputs, exact_distribution};
    let bundle = cycle(3);
    let net = bundle.network(NetworkRef::Establishment, FirmProductRule::Industry).unwrap();
    let stats = run_scenario(
        &bundle,
        &scenario(ProductMode::SingleShared, &[1.0, 0.5], 20_000),
        &RunOptions::default(),
        &mut NoSink,
    )
    .unwrap();
    for cell in &stats.cells {
        let eff = effective_outputs(net, ProductMode::SingleShared);
        // Every node is equivalent, so node 0 as the seed stands for all.
        let exact = exact_distribution(net, &eff, &[0], cell.p).unwrap().expected_inactive / 3.0;
        assert!(
            (cell.mean_inactive_fraction - exact).abs() <= 3.0 * cell.standard_error + 1e-12,
            "p={}: {} vs {exact}",
            cell.p,
            cell.mean_inactive_fraction
        );
    }
}

#[test]
fn identical_inputs_identical_statistics_across_threads_and_blocks() {
    let bundle = generated();
    let sc = scenario(ProductMode::Actual, &[0.4, 1.0], 3000);
    let reference = run_scenario(&bundle, &sc, &RunOptions::default(), &mut NoSink).unwrap();
    for threads in [1, 3] {
        for block in [1, 7, 2048] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let opts = RunOptions { block, ..RunOptions::default() };
            let got = pool.install(|| run_scenario(&bundle, &sc, &opts, &mut NoSink)).unwrap();
            assert_eq!(got, reference, "threads={threads} block={block}");
        }
    }
}

struct Collect(Vec<(String, f64, RunRecord)>);

impl RunSink for Collect {
    fn record(&mut self, scenario: &str, p: f64, _: usize, run: &RunRecord) -> estnet::Result<()> {
        self.0.push((scenario.to_owned(), p, *run));
        Ok(())
    }
}

#[test]
fn sink_sees_every_run_beyond_the_retain_cap() {
    let bundle = generated();
    let sc = scenario(ProductMode::Actual, &[0.2, 0.6], 500);
    let mut sink = Collect(Vec::new());
    let stats = run_scenario(&bundle, &sc, &RunOptions { retain_cap: 100, block: 64 }, &mut sink).unwrap();
    assert_eq!(sink.0.len(), 1000);
    for (i, (_, p, r)) in sink.0.iter().enumerate() {
        assert_eq!(*p, sc.p_grid[i / 500]);
        assert_eq!(r.run_index, (i % 500) as u64);
    }
    assert_eq!(stats.cells[0].records.len(), 100);
    assert!(!stats.cells[0].is_complete());
    assert!(matches!(compare(&stats, &stats, 0.2), Err(Error::State(_))));
    assert!(matches!(compare(&stats, &stats, 0.3), Err(Error::State(_))));
}

#[test]
fn comparing_a_scenario_with_itself() {
    let bundle = generated();
    let stats =
        run_scenario(&bundle, &scenario(ProductMode::Actual, &[0.8], 2000), &RunOptions::default(), &mut NoSink)
            .unwrap();
    let c = compare(&stats, &stats, 0.8).unwrap();
    assert_eq!(c.welch_t, 0.0);
    assert_eq!(c.p_value, 1.0);
    assert!(!c.significant_at_0_05);
}

#[test]
fn welch_rejection_rate_is_calibrated() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let (a, b) = (Normal::new(1.0, 1.0).unwrap(), Normal::new(1.0, 3.0).unwrap());
    let trials = 10_000;
    let mut rejected = 0;
    for _ in 0..trials {
        let xs: Vec<f64> = (0..20).map(|_| a.sample(&mut rng)).collect();
        let ys: Vec<f64> = (0..35).map(|_| b.sample(&mut rng)).collect();
        let r = welch_samples(&xs, &ys);
        assert!((0.0..=1.0).contains(&r.p_value));
        if r.p_value < 0.05 {
            rejected += 1;
        }
    }
    let rate = f64::from(rejected) / f64::from(trials);
    assert!((0.04..=0.06).contains(&rate), "rejection rate {rate}");
}

#[test]
fn standard_error_halves_when_runs_quadruple() {
    let bundle = generated();
    let small =
        run_scenario(&bundle, &scenario(ProductMode::UniquePerNode, &[0.6], 5000), &RunOptions::default(), &mut NoSink)
            .unwrap();
    let mut sc = scenario(ProductMode::UniquePerNode, &[0.6], 20_000);
    sc.seed = 99;
    let large = run_scenario(&bundle, &sc, &RunOptions::default(), &mut NoSink).unwrap();
    let ratio = small.cells[0].standard_error / large.cells[0].standard_error;
    assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn suites_have_the_documented_shape() {
    let cfg = SuiteConfig { runs: 10, ..SuiteConfig::default() };
    let (s, pairs) = suite_scenarios(Suite::Substitutability, &cfg);
    assert_eq!(s.len(), 4);
    assert_eq!(pairs.len(), 6);
    let (s, pairs) = suite_scenarios(Suite::EstVsFirm, &cfg);
    assert_eq!(s.len(), 2);
    assert_eq!(pairs, [(0, 1)]);
    let (s, _) = suite_scenarios(Suite::Regional, &cfg);
    assert_eq!(s.len(), 4);
    let mut seeds: Vec<u64> = s.iter().map(|x| x.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), 4);

    let bundle = generated();
    let report = experiment_suite(&bundle, Suite::Substitutability, &cfg, &mut NoSink).unwrap();
    for p in cfg.p_grid.iter() {
        assert_eq!(report.stats.iter().filter(|s| s.cell(*p).is_some()).count(), 4);
    }
    assert_eq!(report.comparisons.len(), 6 * cfg.p_grid.len());
    let report = experiment_suite(&bundle, Suite::EstVsFirm, &cfg, &mut NoSink).unwrap();
    assert_eq!(report.stats.iter().map(|s| s.cells.len()).sum::<usize>(), 2 * cfg.p_grid.len());
}

#[test]
fn cells_do_not_depend_on_execution_order() {
    let bundle = generated();
    let cfg = SuiteConfig { runs: 400, ..SuiteConfig::default() };
    let (scenarios, _) = suite_scenarios(Suite::Regional, &cfg);
    let forward: Vec<_> =
        scenarios.iter().map(|s| run_scenario(&bundle, s, &cfg.options, &mut NoSink).unwrap()).collect();
    let mut backward: Vec<_> =
        scenarios.iter().rev().map(|s| run_scenario(&bundle, s, &cfg.options, &mut NoSink).unwrap()).collect();
    backward.reverse();
    assert_eq!(forward, backward);
}

#[test]
fn empty_initial_filter_is_a_config_error() {
    let bundle = cycle(4);
    let mut sc = scenario(ProductMode::Actual, &[0.5], 10);
    sc.initial_filter = InitialFilter::Region { region: RegionId(3) };
    assert!(matches!(run_scenario(&bundle, &sc, &RunOptions::default(), &mut NoSink), Err(Error::Config(_))));
    sc.initial_filter = InitialFilter::All;
    sc.p_grid = vec![1.5];
    assert!(matches!(run_scenario(&bundle, &sc, &RunOptions::default(), &mut NoSink), Err(Error::Config(_))));
    sc.p_grid = vec![0.5];
    sc.runs = 0;
    assert!(matches!(run_scenario(&bundle, &sc, &RunOptions::default(), &mut NoSink), Err(Error::Config(_))));
}

#[test]
fn region_filters_pick_matching_initial_nodes() {
    let bundle = generated();
    let net = bundle.network(NetworkRef::Firm, FirmProductRule::Union).unwrap();
    let mut sc = scenario(ProductMode::Actual, &[0.5], 300);
    sc.network_ref = NetworkRef::Firm;
    sc.firm_product_rule = FirmProductRule::Union;
    sc.initial_filter = InitialFilter::Region { region: RegionId(0) };
    let stats = run_scenario(&bundle, &sc, &RunOptions::default(), &mut NoSink).unwrap();
    assert!(stats.cells[0].records.iter().all(|r| net.region(r.initial_node as usize) == RegionId(0)));
    sc.initial_filter = InitialFilter::NotRegion { region: RegionId(0) };
    let stats = run_scenario(&bundle, &sc, &RunOptions::default(), &mut NoSink).unwrap();
    assert!(stats.cells[0].records.iter().all(|r| net.region(r.initial_node as usize) != RegionId(0)));
}
