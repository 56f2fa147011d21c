//! Establishment network construction: complete expansion, recipe cutoff and
//! one set cover instance per client establishment.

use alloc::{collections::BTreeMap, vec::Vec};

use serde::{Deserialize, Serialize};

use crate::cover::{self, Candidate, CoverInstance, DensePriorities, Priorities};
use crate::domain::{Csr, Economy, EstablishmentId, FirmId, ProductId, ProductionNetwork};
use crate::recipe::{self, RecipeBook, RecipeConfig};
use crate::Result;

/// Whether candidate priorities persist from one client instance to the next.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityScope {
    /// One priority table for the whole build; clients are solved in ascending id order.
    #[default]
    Global,
    /// Every client starts from all-zero priorities.
    PerInstance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildConfig {
    pub recipe: RecipeConfig,
    pub priority_scope: PriorityScope,
    /// How many per-client shortfall lists the report keeps.
    pub uncovered_sample_limit: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self { recipe: RecipeConfig::default(), priority_scope: PriorityScope::Global, uncovered_sample_limit: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UncoveredInputs {
    pub client: EstablishmentId,
    pub inputs: Vec<ProductId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub candidate_edge_count: u64,
    pub observed_recipe_pairs: usize,
    pub admitted_recipe_pairs: usize,
    pub final_edge_count: usize,
    /// Clients whose recipe asks for inputs none of their candidate suppliers offer.
    pub clients_with_uncovered_inputs: usize,
    pub uncovered_samples: Vec<UncoveredInputs>,
    pub firm_link_count: usize,
    /// Distinct firm pairs obtained by projecting establishment edges onto firms.
    pub projected_firm_link_count: usize,
}

/// The outcome of one client's cover instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientResult {
    pub client: EstablishmentId,
    /// Chosen supplier establishments, sorted.
    pub suppliers: Vec<EstablishmentId>,
    /// Required inputs outside every candidate's offer.
    pub shortfall: Vec<ProductId>,
}

/// Shared, read-only state for solving client instances.
pub struct BuildContext<'a> {
    economy: &'a Economy,
    recipes: RecipeBook,
    supplier_firms: Csr<FirmId>,
    offers: Vec<Vec<ProductId>>,
    candidate_edge_count: u64,
}

impl<'a> BuildContext<'a> {
    pub fn new(economy: &'a Economy, config: &BuildConfig) -> Result<Self> {
        let recipes = recipe::infer_recipes(economy, &config.recipe)?;
        let supplier_firms = economy.supplier_firms();
        let offers = supplier_firms.iter().map(|row| recipe::offered_products(economy, row)).collect();
        Ok(Self {
            economy,
            recipes,
            supplier_firms,
            offers,
            candidate_edge_count: recipe::complete_expansion_len(economy),
        })
    }

    pub fn recipes(&self) -> &RecipeBook {
        &self.recipes
    }

    /// The cover instance for `client` and the required inputs that no
    /// candidate offers (clipped out of the universe).
    pub fn instance(&self, client: EstablishmentId) -> (CoverInstance, Vec<ProductId>) {
        let est = self.economy.establishment(client);
        let offered = &self.offers[est.firm.index()];
        let mut required: Vec<ProductId> =
            est.products.iter().flat_map(|&g| self.recipes.admitted(g).iter().copied()).collect();
        required.sort_unstable();
        required.dedup();
        let (universe, shortfall): (Vec<_>, Vec<_>) =
            required.into_iter().partition(|p| offered.binary_search(p).is_ok());

        let candidates = self
            .supplier_firms
            .row(est.firm.index())
            .iter()
            .flat_map(|&f| self.economy.firm(f).establishments.iter())
            .map(|&s| {
                let supplier = self.economy.establishment(s);
                Candidate {
                    id: s,
                    group: supplier.firm,
                    offer: supplier.products.iter().copied().filter(|p| universe.binary_search(p).is_ok()).collect(),
                }
            })
            .collect();
        let instance = CoverInstance::new(universe, candidates).expect("an establishment belongs to one firm");
        (instance, shortfall)
    }

    pub fn solve_client<P: Priorities>(&self, client: EstablishmentId, priorities: &mut P) -> ClientResult {
        let (instance, shortfall) = self.instance(client);
        let solution = cover::solve_greedy(&instance, priorities);
        debug_assert!(solution.uncovered.is_empty());
        ClientResult { client, suppliers: solution.chosen, shortfall }
    }

    /// Assembles the network and report from per-client results (any order).
    pub fn finish(
        &self,
        mut results: Vec<ClientResult>,
        config: &BuildConfig,
    ) -> Result<(ProductionNetwork, BuildReport)> {
        results.sort_by_key(|r| r.client);
        let mut edges = Vec::new();
        let mut firm_pairs = BTreeMap::new();
        let mut clients_with_uncovered_inputs = 0;
        let mut uncovered_samples = Vec::new();
        for r in results {
            let client_firm = self.economy.establishment(r.client).firm;
            for &s in &r.suppliers {
                edges.push((s.index(), r.client.index()));
                firm_pairs.insert((self.economy.establishment(s).firm, client_firm), ());
            }
            if !r.shortfall.is_empty() {
                clients_with_uncovered_inputs += 1;
                if uncovered_samples.len() < config.uncovered_sample_limit {
                    uncovered_samples.push(UncoveredInputs { client: r.client, inputs: r.shortfall });
                }
            }
        }
        let final_edge_count = edges.len();
        let network = ProductionNetwork::from_establishments(self.economy, edges)?;
        let report = BuildReport {
            candidate_edge_count: self.candidate_edge_count,
            observed_recipe_pairs: self.recipes.observed_pairs(),
            admitted_recipe_pairs: self.recipes.admitted_pairs(),
            final_edge_count,
            clients_with_uncovered_inputs,
            uncovered_samples,
            firm_link_count: self.economy.firm_links.len(),
            projected_firm_link_count: firm_pairs.len(),
        };
        Ok((network, report))
    }
}

/// Sequential build. Clients are solved in ascending id order.
pub fn build_establishment_network(
    economy: &Economy,
    config: &BuildConfig,
) -> Result<(ProductionNetwork, BuildReport)> {
    let ctx = BuildContext::new(economy, config)?;
    let clients = (0..economy.n_establishments()).map(EstablishmentId::from_index);
    let results = match config.priority_scope {
        PriorityScope::Global => {
            let mut priorities = DensePriorities::new(economy.n_establishments());
            clients.map(|c| ctx.solve_client(c, &mut priorities)).collect()
        }
        PriorityScope::PerInstance => clients.map(|c| ctx.solve_client(c, &mut BTreeMap::new())).collect(),
    };
    ctx.finish(results, config)
}
