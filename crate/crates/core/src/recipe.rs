//! Recipe inference: which input products does each output product need?
//!
//! Every establishment of a supplier firm is treated as a potential supplier
//! of every establishment of a client firm. For an output product `g` made by
//! `e(g)` establishments, an input `h` is counted once per producer of `g` that
//! has at least one such candidate supplier offering `h`. The input is admitted
//! when that count is strictly greater than `threshold_fraction * e(g)`.

use alloc::{format, vec, vec::Vec};

use serde::{Deserialize, Serialize};

use crate::domain::{Csr, Economy, EstablishmentId, FirmId, ProductId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecipeConfig {
    pub threshold_fraction: f64,
}

impl Default for RecipeConfig {
    fn default() -> Self {
        Self { threshold_fraction: 0.5 }
    }
}

impl RecipeConfig {
    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.threshold_fraction) {
            Ok(())
        } else {
            Err(Error::Config(format!("threshold_fraction must lie in [0, 1], got {}", self.threshold_fraction)))
        }
    }
}

/// Observation counts and admitted inputs, indexed by output product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeBook {
    threshold_fraction: f64,
    producer_count: Vec<u32>,
    /// Per output product: `(input, observation_count)` sorted by input.
    entries: Csr<(ProductId, u32)>,
    admitted: Csr<ProductId>,
}

impl RecipeBook {
    pub fn threshold_fraction(&self) -> f64 {
        self.threshold_fraction
    }

    pub fn n_products(&self) -> usize {
        self.producer_count.len()
    }

    /// `e(g)`: number of establishments producing `g`.
    pub fn producer_count(&self, g: ProductId) -> u32 {
        self.producer_count[g.index()]
    }

    pub fn entries(&self, g: ProductId) -> &[(ProductId, u32)] {
        self.entries.row(g.index())
    }

    pub fn observations(&self, g: ProductId, h: ProductId) -> u32 {
        let row = self.entries(g);
        row.binary_search_by_key(&h, |&(p, _)| p).map_or(0, |i| row[i].1)
    }

    /// Admitted inputs of `g`, sorted.
    pub fn admitted(&self, g: ProductId) -> &[ProductId] {
        self.admitted.row(g.index())
    }

    pub fn is_admitted(&self, g: ProductId, h: ProductId) -> bool {
        self.admitted(g).binary_search(&h).is_ok()
    }

    pub fn observed_pairs(&self) -> usize {
        self.entries.items().len()
    }

    pub fn admitted_pairs(&self) -> usize {
        self.admitted.items().len()
    }

    /// `(output, input, producer_count, observation_count, admitted)` rows in
    /// `(output, input)` order.
    pub fn rows(&self) -> impl Iterator<Item = (ProductId, ProductId, u32, u32, bool)> + '_ {
        (0..self.n_products()).flat_map(move |g| {
            let g = ProductId::from_index(g);
            self.entries(g).iter().map(move |&(h, obs)| (g, h, self.producer_count(g), obs, self.is_admitted(g, h)))
        })
    }
}

/// Every `(supplier establishment, client establishment)` pair implied by the
/// firm links, streamed in firm-link order.
pub fn complete_expansion(economy: &Economy) -> impl Iterator<Item = (EstablishmentId, EstablishmentId)> + '_ {
    economy.firm_links.iter().flat_map(move |&(s, c)| {
        let clients = &economy.firm(c).establishments;
        economy.firm(s).establishments.iter().flat_map(move |&se| clients.iter().map(move |&ce| (se, ce)))
    })
}

/// Number of candidate edges `complete_expansion` yields, without walking them.
pub fn complete_expansion_len(economy: &Economy) -> u64 {
    economy
        .firm_links
        .iter()
        .map(|&(s, c)| economy.firm(s).establishments.len() as u64 * economy.firm(c).establishments.len() as u64)
        .sum()
}

/// Products offered to a client firm by all establishments of its suppliers, sorted.
pub fn offered_products(economy: &Economy, suppliers: &[FirmId]) -> Vec<ProductId> {
    let mut offer: Vec<ProductId> = suppliers
        .iter()
        .flat_map(|&s| economy.firm(s).establishments.iter())
        .flat_map(|&e| economy.establishment(e).products.iter().copied())
        .collect();
    offer.sort_unstable();
    offer.dedup();
    offer
}

pub fn infer_recipes(economy: &Economy, config: &RecipeConfig) -> Result<RecipeBook> {
    config.validate()?;
    let np = economy.n_products();
    let suppliers = economy.supplier_firms();
    let offers: Vec<Vec<ProductId>> = suppliers.iter().map(|row| offered_products(economy, row)).collect();

    let mut producers = vec![Vec::new(); np];
    for est in &economy.establishments {
        for &g in &est.products {
            producers[g.index()].push(est.firm);
        }
    }

    let mut counts = vec![0u32; np];
    let mut touched = Vec::new();
    let mut entries = Vec::with_capacity(np);
    let mut admitted = Vec::with_capacity(np);
    let mut producer_count = Vec::with_capacity(np);
    for firms in &producers {
        for firm in firms {
            for &h in &offers[firm.index()] {
                if counts[h.index()] == 0 {
                    touched.push(h);
                }
                counts[h.index()] += 1;
            }
        }
        touched.sort_unstable();
        let e = firms.len() as u32;
        let cutoff = config.threshold_fraction * f64::from(e);
        let row: Vec<(ProductId, u32)> = touched.iter().map(|&h| (h, counts[h.index()])).collect();
        admitted.push(row.iter().filter(|&&(_, obs)| f64::from(obs) > cutoff).map(|&(h, _)| h).collect());
        entries.push(row);
        producer_count.push(e);
        for h in touched.drain(..) {
            counts[h.index()] = 0;
        }
    }

    Ok(RecipeBook {
        threshold_fraction: config.threshold_fraction,
        producer_count,
        entries: Csr::from_rows(entries),
        admitted: Csr::from_rows(admitted),
    })
}
