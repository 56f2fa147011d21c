#![allow(dead_code)]

use estnet_core::{Economy, Establishment, EstablishmentId, Firm, FirmId, IndustryId, ProductId, RegionId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random small economy: up to `max_firms` firms with 1..=3 establishments
/// each, products drawn from `0..n_products`, links with probability `density`.
pub fn random_economy(seed: u64, max_firms: usize, n_products: usize, density: f64) -> Economy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_firms = rng.random_range(1..=max_firms);
    let mut firms = Vec::new();
    let mut ests = Vec::new();
    for f in 0..n_firms {
        let k = rng.random_range(1..=3);
        let mut ids = Vec::new();
        for _ in 0..k {
            let id = EstablishmentId::from_index(ests.len());
            let m = rng.random_range(1..=3);
            let products = (0..m).map(|_| ProductId::from_index(rng.random_range(0..n_products))).collect();
            ests.push(Establishment {
                id,
                firm: FirmId::from_index(f),
                region: RegionId(rng.random_range(0..2)),
                industry: IndustryId(rng.random_range(0..3)),
                products,
            });
            ids.push(id);
        }
        firms.push(Firm {
            id: FirmId::from_index(f),
            region: RegionId(rng.random_range(0..2)),
            industry: IndustryId(rng.random_range(0..3)),
            establishments: ids,
        });
    }
    let mut links = Vec::new();
    for s in 0..n_firms {
        for c in 0..n_firms {
            if s != c && rng.random_bool(density) {
                links.push((FirmId::from_index(s), FirmId::from_index(c)));
            }
        }
    }
    Economy::new(
        firms,
        ests,
        links,
        vec!["north".into(), "south".into()],
        vec!["a".into(), "b".into(), "c".into()],
        (0..n_products).map(|p| format!("P{p}")).collect(),
    )
    .unwrap()
}
