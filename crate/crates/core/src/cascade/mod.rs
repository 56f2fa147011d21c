//! Probabilistic disruption cascades over a [`ProductionNetwork`].
//!
//! Entities are active or inactive, and inactivity is absorbing. In each
//! round, every active client with at least one supplier that fell in the
//! previous round is exposed. For every product `q` offered by those newly
//! fallen suppliers, the client loses `q` with probability
//! `p * (inactive q-suppliers / all q-suppliers)`. The client falls when it
//! loses any product, so its round probability is
//! `1 - prod_q (1 - p_q)`.
//!
//! [`product_shock_prob`] and [`client_shock_prob`] evaluate these formulas
//! directly from the graph; [`Propagation`] is the indexed engine used for
//! Monte Carlo, and [`exact_distribution`] enumerates the Markov chain on
//! small networks.

mod engine;
mod exact;
pub mod stream;

use alloc::{vec, vec::Vec};

use serde::{Deserialize, Serialize};

use crate::domain::{Csr, ProductId, ProductionNetwork};
use crate::{Error, Result};

pub use engine::{run_cascade, CascadeOutcome, KeyedUniforms, Propagation, RunSummary, Uniforms, Workspace};
pub use exact::{exact_distribution, ExactDistribution, EXACT_NODE_LIMIT};

/// Which product sets the cascade sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductMode {
    /// Outputs as stored in the network.
    Actual,
    /// Each node outputs its primary industry as a single pseudo-product.
    IndustryAsProduct,
    /// Each node outputs a product nobody else makes.
    UniquePerNode,
    /// Every node outputs the same product.
    SingleShared,
}

impl ProductMode {
    pub const ALL: [ProductMode; 4] =
        [ProductMode::Actual, ProductMode::IndustryAsProduct, ProductMode::UniquePerNode, ProductMode::SingleShared];

    pub fn name(self) -> &'static str {
        match self {
            ProductMode::Actual => "actual",
            ProductMode::IndustryAsProduct => "industry",
            ProductMode::UniquePerNode => "unique",
            ProductMode::SingleShared => "shared",
        }
    }
}

/// Per-node product sets as seen by the cascade. Pseudo-products of the
/// non-actual modes live in their own id space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectiveOutputs(Csr<ProductId>);

impl EffectiveOutputs {
    pub fn from_rows(rows: Vec<Vec<ProductId>>) -> Self {
        Self(Csr::from_rows(
            rows.into_iter()
                .map(|mut r| {
                    r.sort_unstable();
                    r.dedup();
                    r
                })
                .collect(),
        ))
    }

    #[inline]
    pub fn of(&self, v: usize) -> &[ProductId] {
        self.0.row(v)
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn effective_outputs(net: &ProductionNetwork, mode: ProductMode) -> EffectiveOutputs {
    let rows = (0..net.len())
        .map(|v| match mode {
            ProductMode::Actual => net.outputs(v).to_vec(),
            ProductMode::IndustryAsProduct => vec![ProductId(net.industry(v).0)],
            ProductMode::UniquePerNode => vec![ProductId::from_index(v)],
            ProductMode::SingleShared => vec![ProductId(0)],
        })
        .collect();
    EffectiveOutputs::from_rows(rows)
}

/// A snapshot of the cascade at the start of round `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeState {
    pub active: Vec<bool>,
    /// Nodes that fell in the previous round, sorted.
    pub newly_inactive: Vec<usize>,
    pub t: usize,
}

impl CascadeState {
    /// Everything active except `initial`, which forms the first frontier.
    pub fn initial(n: usize, initial: &[usize]) -> Result<Self> {
        let mut active = vec![true; n];
        let mut newly_inactive = initial.to_vec();
        newly_inactive.sort_unstable();
        newly_inactive.dedup();
        for &v in &newly_inactive {
            *active.get_mut(v).ok_or(Error::InvalidNode { node: v, len: n })? = false;
        }
        Ok(Self { active, newly_inactive, t: 1 })
    }
}

/// Probability that `v` loses product `q` this round: `p` times the
/// fraction of its `q`-suppliers that are inactive.
pub fn product_shock_prob(
    v: usize,
    q: ProductId,
    state: &CascadeState,
    net: &ProductionNetwork,
    eff: &EffectiveOutputs,
    p: f64,
) -> Result<f64> {
    net.check_node(v)?;
    let (mut total, mut active) = (0u32, 0u32);
    for &j in net.suppliers(v) {
        let j = j as usize;
        if eff.of(j).contains(&q) {
            total += 1;
            if state.active[j] {
                active += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::Contract("product is not supplied to this node"));
    }
    Ok(p * (1.0 - f64::from(active) / f64::from(total)))
}

/// Probability that active client `v` falls this round, given the suppliers
/// in `state.newly_inactive`.
pub fn client_shock_prob(
    v: usize,
    state: &CascadeState,
    net: &ProductionNetwork,
    eff: &EffectiveOutputs,
    p: f64,
) -> Result<f64> {
    net.check_node(v)?;
    if !state.active[v] {
        return Err(Error::Contract("client must be active"));
    }
    let frontier: Vec<usize> = net
        .suppliers(v)
        .iter()
        .map(|&j| j as usize)
        .filter(|j| state.newly_inactive.binary_search(j).is_ok())
        .collect();
    if frontier.is_empty() {
        return Err(Error::Contract("client has no newly inactive supplier"));
    }
    let mut products: Vec<ProductId> = frontier.iter().flat_map(|&j| eff.of(j).iter().copied()).collect();
    products.sort_unstable();
    products.dedup();
    let mut survive = 1.0;
    for q in products {
        survive *= 1.0 - product_shock_prob(v, q, state, net, eff, p)?;
    }
    Ok(1.0 - survive)
}
