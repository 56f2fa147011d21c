//! Synthetic economies.
//!
//! Firms get power-law trade propensities, a headquarters region (with a
//! configurable hub region) and one or more establishments. Every industry
//! owns a disjoint, contiguous block of products, and establishments draw
//! their products from the block of their own industry, so products are a
//! strict refinement of industries. Firm links follow a small per-industry
//! supplier pattern plus some noise; establishment links are never generated.

use alloc::{collections::BTreeSet, format, string::String, vec, vec::Vec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    Economy, Establishment, EstablishmentId, Firm, FirmId, IndustryId, ProductId, ProductionNetwork, RegionId,
};
use crate::{Error, Result};

/// A distribution over counts `>= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountDistribution {
    Point {
        value: u32,
    },
    /// `P(k) ∝ k^-exponent` for `k` in `1..=max`.
    Zipf {
        exponent: f64,
        max: u32,
    },
}

impl CountDistribution {
    fn validate(&self, what: &str) -> Result<()> {
        match *self {
            CountDistribution::Point { value } if value >= 1 => Ok(()),
            CountDistribution::Zipf { exponent, max } if exponent > 1.0 && max >= 1 => Ok(()),
            _ => Err(Error::Config(format!("{what}: invalid count distribution {self:?}"))),
        }
    }

    fn weights(&self) -> Vec<f64> {
        match *self {
            CountDistribution::Point { value } => {
                let mut w = vec![0.0; value as usize];
                w[value as usize - 1] = 1.0;
                w
            }
            CountDistribution::Zipf { exponent, max } => {
                (1..=max).map(|k| libm::pow(f64::from(k), -exponent)).collect()
            }
        }
    }

    /// Analytic mean.
    pub fn mean(&self) -> f64 {
        let w = self.weights();
        let total: f64 = w.iter().sum();
        w.iter().enumerate().map(|(k, w)| (k + 1) as f64 * w).sum::<f64>() / total
    }

    fn sampler(&self) -> CountSampler {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = self
            .weights()
            .into_iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        for c in &mut cdf {
            *c /= acc;
        }
        CountSampler { cdf }
    }
}

struct CountSampler {
    cdf: Vec<f64>,
}

impl CountSampler {
    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        (self.cdf.partition_point(|&c| c <= u) + 1).min(self.cdf.len())
    }
}

/// Inverse-CDF sampling proportional to non-negative weights.
struct WeightedIndex {
    cumulative: Vec<f64>,
}

impl WeightedIndex {
    fn new(weights: impl IntoIterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        Self {
            cumulative: weights
                .into_iter()
                .map(|w| {
                    acc += w;
                    acc
                })
                .collect(),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty weights");
        let x = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= x).min(self.cumulative.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_firms: usize,
    pub establishments_per_firm: CountDistribution,
    pub products_per_establishment: CountDistribution,
    pub n_products: usize,
    pub n_industries: usize,
    pub n_regions: usize,
    pub hub_region: RegionId,
    /// Probability that a firm's headquarters is in the hub region.
    pub hub_region_share: f64,
    /// Out-degree propensity multiplier for hub-region firms.
    pub hub_extra_out_degree_factor: f64,
    /// Tail exponent of the firm trade propensities.
    pub firm_degree_exponent: f64,
    pub mean_firm_out_degree: f64,
    pub seed: u64,
    /// Supplier industries each client industry buys from.
    pub supplier_industries_per_industry: usize,
    /// Share of links whose supplier ignores the industry pattern.
    pub off_pattern_link_share: f64,
    /// Probability that a non-headquarters establishment gets a random
    /// industry instead of its firm's.
    pub establishment_industry_diversity: f64,
    /// Link propensity is multiplied by `establishments ^ size_degree_coupling`,
    /// so larger firms trade more.
    pub size_degree_coupling: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_firms: 1000,
            establishments_per_firm: CountDistribution::Zipf { exponent: 2.5, max: 20 },
            products_per_establishment: CountDistribution::Zipf { exponent: 2.0, max: 5 },
            n_products: 100,
            n_industries: 20,
            n_regions: 10,
            hub_region: RegionId(0),
            hub_region_share: 0.3,
            hub_extra_out_degree_factor: 2.0,
            firm_degree_exponent: 2.3,
            mean_firm_out_degree: 3.0,
            seed: 0,
            supplier_industries_per_industry: 3,
            off_pattern_link_share: 0.2,
            establishment_industry_diversity: 0.5,
            size_degree_coupling: 0.5,
        }
    }
}

impl GeneratorConfig {
    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.n_firms == 0 || self.n_products == 0 || self.n_industries == 0 || self.n_regions == 0 {
            return err("n_firms, n_products, n_industries and n_regions must be at least 1".into());
        }
        if self.n_products < self.n_industries {
            return err(format!(
                "n_products ({}) must be at least n_industries ({}) so every industry owns a product",
                self.n_products, self.n_industries
            ));
        }
        if self.hub_region.index() >= self.n_regions {
            return err(format!("hub_region {} is not below n_regions", self.hub_region));
        }
        for (name, v) in [
            ("hub_region_share", self.hub_region_share),
            ("off_pattern_link_share", self.off_pattern_link_share),
            ("establishment_industry_diversity", self.establishment_industry_diversity),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return err(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.hub_extra_out_degree_factor >= 1.0) {
            return err("hub_extra_out_degree_factor must be at least 1".into());
        }
        if !(self.firm_degree_exponent > 1.0) {
            return err("firm_degree_exponent must exceed 1".into());
        }
        if !(self.size_degree_coupling >= 0.0) {
            return err("size_degree_coupling must be non-negative".into());
        }
        if self.supplier_industries_per_industry == 0 {
            return err("supplier_industries_per_industry must be at least 1".into());
        }
        if !(self.mean_firm_out_degree >= 0.0) {
            return err("mean_firm_out_degree must be non-negative".into());
        }
        let max_links = self.n_firms as f64 * (self.n_firms as f64 - 1.0);
        if self.target_links() as f64 > max_links {
            return err(format!(
                "mean out-degree {} is unreachable with {} firms",
                self.mean_firm_out_degree, self.n_firms
            ));
        }
        self.establishments_per_firm.validate("establishments_per_firm")?;
        self.products_per_establishment.validate("products_per_establishment")
    }

    fn target_links(&self) -> usize {
        libm::round(self.mean_firm_out_degree * self.n_firms as f64) as usize
    }

    fn product_block(&self, industry: usize) -> core::ops::Range<usize> {
        let (np, ni) = (self.n_products, self.n_industries);
        industry * np / ni..(industry + 1) * np / ni
    }
}

/// Deterministic for a given configuration (including its seed).
pub fn generate(config: &GeneratorConfig) -> Result<Economy> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_firms;
    let hub = config.hub_region.index();

    let mut other_regions: Vec<usize> = (0..config.n_regions).filter(|&r| r != hub).collect();
    if other_regions.is_empty() {
        other_regions.push(hub);
    }
    let est_count = config.establishments_per_firm.sampler();
    let product_count = config.products_per_establishment.sampler();

    let mut firms = Vec::with_capacity(n);
    let mut establishments = Vec::new();
    let mut pool = Vec::new();
    for f in 0..n {
        let region = if rng.random_bool(config.hub_region_share) {
            hub
        } else {
            other_regions[rng.random_range(0..other_regions.len())]
        };
        let industry = rng.random_range(0..config.n_industries);
        let k = est_count.sample(&mut rng);
        let mut ids = Vec::with_capacity(k);
        for e in 0..k {
            let (est_region, est_industry) = if e == 0 {
                (region, industry)
            } else {
                let ind = if rng.random_bool(config.establishment_industry_diversity) {
                    rng.random_range(0..config.n_industries)
                } else {
                    industry
                };
                (rng.random_range(0..config.n_regions), ind)
            };
            pool.clear();
            pool.extend(config.product_block(est_industry));
            let m = product_count.sample(&mut rng).min(pool.len());
            for i in 0..m {
                let j = rng.random_range(i..pool.len());
                pool.swap(i, j);
            }
            let id = EstablishmentId::from_index(establishments.len());
            establishments.push(Establishment {
                id,
                firm: FirmId::from_index(f),
                region: RegionId::from_index(est_region),
                industry: IndustryId::from_index(est_industry),
                products: pool[..m].iter().map(|&p| ProductId::from_index(p)).collect(),
            });
            ids.push(id);
        }
        firms.push(Firm {
            id: FirmId::from_index(f),
            region: RegionId::from_index(region),
            industry: IndustryId::from_index(industry),
            establishments: ids,
        });
    }

    let firm_links = generate_links(config, &firms, &mut rng)?;
    Economy::new(
        firms,
        establishments,
        firm_links,
        (0..config.n_regions).map(|i| format!("R{i}")).collect(),
        (0..config.n_industries).map(|i| format!("I{i}")).collect(),
        (0..config.n_products).map(|i| format!("P{i}")).collect(),
    )
}

fn generate_links(config: &GeneratorConfig, firms: &[Firm], rng: &mut ChaCha8Rng) -> Result<Vec<(FirmId, FirmId)>> {
    let n = firms.len();
    let target = config.target_links();
    if target == 0 || n < 2 {
        return Ok(Vec::new());
    }

    let tail = 1.0 / (config.firm_degree_exponent - 1.0);
    let size: Vec<f64> = firms
        .iter()
        .map(|f| {
            let scale = libm::pow(f.establishments.len() as f64, config.size_degree_coupling);
            scale * libm::pow(1.0 - rng.random::<f64>(), -tail)
        })
        .collect();
    let mut out_w: Vec<f64> = size
        .iter()
        .zip(firms)
        .map(|(s, f)| if f.region == config.hub_region { s * config.hub_extra_out_degree_factor } else { *s })
        .collect();
    let mut in_w = size;
    // Keep every expected degree below half the other firms.
    for w in [&mut out_w, &mut in_w] {
        let total: f64 = w.iter().sum();
        let cap = total * (n - 1) as f64 / (2.0 * target as f64);
        w.iter_mut().for_each(|x| *x = x.min(cap));
    }

    let mut pattern = Vec::with_capacity(config.n_industries);
    for _ in 0..config.n_industries {
        let k = config.supplier_industries_per_industry.min(config.n_industries);
        let mut chosen = BTreeSet::new();
        while chosen.len() < k {
            chosen.insert(rng.random_range(0..config.n_industries));
        }
        pattern.push(chosen.into_iter().collect::<Vec<_>>());
    }
    let mut by_industry: Vec<Vec<usize>> = vec![Vec::new(); config.n_industries];
    for (i, f) in firms.iter().enumerate() {
        by_industry[f.industry.index()].push(i);
    }
    let industry_tables: Vec<Option<WeightedIndex>> = by_industry
        .iter()
        .map(|members| (!members.is_empty()).then(|| WeightedIndex::new(members.iter().map(|&i| out_w[i]))))
        .collect();
    let any_supplier = WeightedIndex::new(out_w.iter().copied());
    let any_client = WeightedIndex::new(in_w.iter().copied());

    let mut links = BTreeSet::new();
    let max_attempts = 50 * target + 10_000;
    let mut attempts = 0;
    while links.len() < target {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Config(format!(
                "placed only {} of {target} firm links; lower mean_firm_out_degree",
                links.len()
            )));
        }
        let client = any_client.sample(rng);
        let supplier = if rng.random_bool(config.off_pattern_link_share) {
            any_supplier.sample(rng)
        } else {
            let options = &pattern[firms[client].industry.index()];
            let ind = options[rng.random_range(0..options.len())];
            match &industry_tables[ind] {
                Some(table) => by_industry[ind][table.sample(rng)],
                None => any_supplier.sample(rng),
            }
        };
        if supplier != client {
            links.insert((FirmId::from_index(supplier), FirmId::from_index(client)));
        }
    }
    Ok(links.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionOutDegree {
    pub region: RegionId,
    pub nodes: usize,
    pub mean_out_degree: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub nodes: usize,
    pub edges: usize,
    /// `histogram[d]` = nodes with undirected degree `d` (in + out).
    pub histogram: Vec<usize>,
    /// Nearest-rank 90th percentile of the undirected degree.
    pub p90_degree: usize,
    /// Undirected degree averaged over nodes, `2 * edges / nodes`.
    pub avg_links_per_node: f64,
    /// Regions with at least one node, ascending.
    pub region_out_degree: Vec<RegionOutDegree>,
}

pub fn degree_report(net: &ProductionNetwork) -> DegreeReport {
    let n = net.len();
    let mut degrees: Vec<usize> = (0..n).map(|v| net.clients(v).len() + net.suppliers(v).len()).collect();
    let max = degrees.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0; max + 1];
    for &d in &degrees {
        histogram[d] += 1;
    }
    degrees.sort_unstable();
    let p90_degree = if n == 0 { 0 } else { degrees[(9 * n).div_ceil(10) - 1] };

    let mut per_region: Vec<(usize, usize)> = Vec::new();
    for v in 0..n {
        let r = net.region(v).index();
        if per_region.len() <= r {
            per_region.resize(r + 1, (0, 0));
        }
        per_region[r].0 += 1;
        per_region[r].1 += net.clients(v).len();
    }
    let region_out_degree = per_region
        .into_iter()
        .enumerate()
        .filter(|(_, (nodes, _))| *nodes > 0)
        .map(|(r, (nodes, out))| RegionOutDegree {
            region: RegionId::from_index(r),
            nodes,
            mean_out_degree: out as f64 / nodes as f64,
        })
        .collect();
    DegreeReport {
        nodes: n,
        edges: net.edge_count(),
        histogram,
        p90_degree,
        avg_links_per_node: if n == 0 { 0.0 } else { 2.0 * net.edge_count() as f64 / n as f64 },
        region_out_degree,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::network;

    fn small() -> GeneratorConfig {
        GeneratorConfig {
            n_firms: 10,
            establishments_per_firm: CountDistribution::Point { value: 1 },
            mean_firm_out_degree: 2.0,
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn point_mass_counts() {
        let eco = generate(&small()).unwrap();
        assert_eq!(eco.n_firms(), 10);
        assert_eq!(eco.n_establishments(), 10);
        assert_eq!(eco.firm_links.len(), 20);
        eco.validate().unwrap();
    }

    #[test]
    fn same_seed_same_economy() {
        let cfg = GeneratorConfig { n_firms: 300, seed: 11, ..Default::default() };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = GeneratorConfig { seed: 12, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn products_nest_in_industries() {
        let cfg = GeneratorConfig { n_firms: 200, n_products: 50, n_industries: 10, ..Default::default() };
        let eco = generate(&cfg).unwrap();
        for e in &eco.establishments {
            let block = cfg.product_block(e.industry.index());
            assert!(e.products.iter().all(|p| block.contains(&p.index())));
        }
        for f in &eco.firms {
            assert_eq!(eco.establishment(f.establishments[0]).industry, f.industry);
            assert_eq!(eco.establishment(f.establishments[0]).region, f.region);
        }
    }

    #[test]
    fn unreachable_degree_is_a_config_error() {
        let cfg = GeneratorConfig { n_firms: 5, mean_firm_out_degree: 4.5, ..small() };
        assert!(matches!(generate(&cfg), Err(Error::Config(_))));
        let cfg = GeneratorConfig { firm_degree_exponent: 1.0, ..small() };
        assert!(generate(&cfg).is_err());
        let cfg = GeneratorConfig { hub_region: RegionId(99), ..small() };
        assert!(generate(&cfg).is_err());
        let cfg = GeneratorConfig { n_products: 3, n_industries: 4, ..small() };
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn zipf_mean_by_summation() {
        let d = CountDistribution::Zipf { exponent: 2.0, max: 3 };
        // (1 + 2/4 + 3/9) / (1 + 1/4 + 1/9)
        let expect = (1.0 + 0.5 + 1.0 / 3.0) / (1.0 + 0.25 + 1.0 / 9.0);
        assert!((d.mean() - expect).abs() < 1e-12);
        assert_eq!(CountDistribution::Point { value: 4 }.mean(), 4.0);
    }

    #[test]
    fn degree_report_cycle_and_star() {
        let cycle = network(&[&[0], &[0], &[0]], &[(0, 1), (1, 2), (2, 0)]);
        let r = degree_report(&cycle);
        assert_eq!(r.histogram, [0, 0, 3]);
        assert_eq!(r.avg_links_per_node, 2.0);

        let edges: Vec<_> = (1..10).map(|l| (0, l)).collect();
        let star = network(&[&[0u32][..]; 10], &edges);
        let r = degree_report(&star);
        assert_eq!(r.p90_degree, 1);
        assert_eq!(r.histogram[1], 9);
        assert_eq!(r.histogram[9], 1);
        assert_eq!(r.region_out_degree[0].mean_out_degree, 0.9);

        let empty = network(&[&[0u32][..]; 4], &[]);
        let r = degree_report(&empty);
        assert_eq!(r.histogram, [4]);
        assert_eq!(r.p90_degree, 0);
    }
}
