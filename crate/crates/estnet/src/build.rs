//! Establishment network construction with parallel per-instance solving.

use std::collections::BTreeMap;

use estnet_core::builder::{BuildConfig, BuildContext, BuildReport, PriorityScope};
use estnet_core::cover::DensePriorities;
use estnet_core::recipe::RecipeBook;
use estnet_core::{Economy, EstablishmentId, ProductionNetwork};
use rayon::prelude::*;

use crate::Result;

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub network: ProductionNetwork,
    pub report: BuildReport,
    pub recipes: RecipeBook,
}

/// Same result as the core builder. With per-instance priorities the client
/// instances are independent and solved in parallel; global priorities keep
/// the sequential client order.
pub fn build_network(economy: &Economy, config: &BuildConfig) -> Result<BuildOutput> {
    let ctx = BuildContext::new(economy, config)?;
    let clients = 0..economy.n_establishments();
    let results = match config.priority_scope {
        PriorityScope::Global => {
            let mut priorities = DensePriorities::new(economy.n_establishments());
            clients.map(|c| ctx.solve_client(EstablishmentId::from_index(c), &mut priorities)).collect()
        }
        PriorityScope::PerInstance => clients
            .into_par_iter()
            .map(|c| ctx.solve_client(EstablishmentId::from_index(c), &mut BTreeMap::new()))
            .collect(),
    };
    let (network, report) = ctx.finish(results, config)?;
    Ok(BuildOutput { network, report, recipes: ctx.recipes().clone() })
}
