use estnet_core::cascade::{
    client_shock_prob, effective_outputs, exact_distribution, CascadeState, KeyedUniforms, ProductMode, Propagation,
};
use estnet_core::{EntityKind, FirmId, IndustryId, NodeAttrs, ProductId, ProductionNetwork, RegionId};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_network(seed: u64, max_nodes: usize) -> ProductionNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_nodes);
    let density = rng.random_range(0.2..0.7);
    let nodes = (0..n)
        .map(|v| {
            let k = rng.random_range(1..=2);
            NodeAttrs {
                outputs: (0..k)
                    .map(|_| ProductId(rng.random_range(0..3)))
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .collect(),
                region: RegionId(0),
                firm: FirmId(v as u32),
                industry: IndustryId(rng.random_range(0..2)),
            }
        })
        .collect();
    let mut edges = Vec::new();
    for s in 0..n {
        for c in 0..n {
            if s != c && rng.random_bool(density) {
                edges.push((s, c));
            }
        }
    }
    ProductionNetwork::new(EntityKind::Firm, nodes, edges).unwrap()
}

/// Independent-cascade marginals by enumerating every live-edge subgraph.
fn live_edge_marginals(net: &ProductionNetwork, seed: usize, p: f64) -> Vec<f64> {
    let edges: Vec<_> = net.edges().collect();
    let mut marg = vec![0.0; net.len()];
    for mask in 0u32..(1 << edges.len()) {
        let k = mask.count_ones() as i32;
        let w = p.powi(k) * (1.0 - p).powi(edges.len() as i32 - k);
        let mut reached = vec![false; net.len()];
        reached[seed] = true;
        let mut stack = vec![seed];
        while let Some(v) = stack.pop() {
            for (e, &(s, c)) in edges.iter().enumerate() {
                if s == v && mask & (1 << e) != 0 && !reached[c] {
                    reached[c] = true;
                    stack.push(c);
                }
            }
        }
        for (m, r) in marg.iter_mut().zip(reached) {
            if r {
                *m += w;
            }
        }
    }
    marg
}

#[test]
fn engine_matches_exact_chain_in_every_mode() {
    const RUNS: u64 = 20_000;
    for seed in 0..30u64 {
        let net = random_network(seed, 6);
        for mode in ProductMode::ALL {
            let eff = effective_outputs(&net, mode);
            let engine = Propagation::new(&net, &eff).unwrap();
            let mut ws = engine.workspace();
            for p in [0.3, 0.8] {
                let exact = exact_distribution(&net, &eff, &[0], p).unwrap();
                let second: f64 = exact.final_sets.iter().map(|(s, w)| w * f64::from(s.count_ones()).powi(2)).sum();
                let var = (second - exact.expected_inactive.powi(2)).max(0.0);
                let mut sum = 0.0;
                let mut hits = vec![0u64; net.len()];
                for r in 0..RUNS {
                    let s = engine.run(&mut ws, &[0], p, &KeyedUniforms::for_run(seed, r)).unwrap();
                    sum += s.final_inactive as f64;
                    for (h, &i) in hits.iter_mut().zip(ws.inactive_mask()) {
                        *h += u64::from(i);
                    }
                }
                let mean = sum / RUNS as f64;
                let se = (var / RUNS as f64).sqrt();
                assert!(
                    (mean - exact.expected_inactive).abs() <= 5.0 * se + 1e-9,
                    "seed={seed} mode={} p={p}: {mean} vs {}",
                    mode.name(),
                    exact.expected_inactive
                );
                for (v, &h) in hits.iter().enumerate() {
                    let m = exact.marginals[v];
                    let se = (m * (1.0 - m)).max(0.0).sqrt() / (RUNS as f64).sqrt();
                    let got = h as f64 / RUNS as f64;
                    assert!((got - m).abs() <= 5.0 * se + 1e-9, "node {v}: {got} vs {m}");
                }
            }
        }
    }
}

#[test]
fn unique_products_reduce_to_independent_cascade() {
    for seed in 100..160u64 {
        let net = random_network(seed, 5);
        if net.edge_count() > 14 {
            continue;
        }
        let eff = effective_outputs(&net, ProductMode::UniquePerNode);
        for p in [0.1, 0.5, 0.9] {
            let exact = exact_distribution(&net, &eff, &[0], p).unwrap();
            let ic = live_edge_marginals(&net, 0, p);
            for (v, (m, r)) in exact.marginals.iter().zip(&ic).enumerate() {
                assert!((m - r).abs() < 1e-12, "seed={seed} v={v}");
            }
        }
    }
}

#[test]
fn engine_without_exposure_stops_at_seed() {
    let net = random_network(7, 6);
    let eff = effective_outputs(&net, ProductMode::Actual);
    let engine = Propagation::new(&net, &eff).unwrap();
    let mut ws = engine.workspace();
    for r in 0..100 {
        let s = engine.run(&mut ws, &[1], 0.0, &KeyedUniforms::for_run(3, r)).unwrap();
        assert_eq!(s.final_inactive, 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn run_invariants(seed in any::<u64>(), run in any::<u64>(), p in 0.0f64..=1.0, mode_ix in 0usize..4) {
        let net = random_network(seed, 12);
        let eff = effective_outputs(&net, ProductMode::ALL[mode_ix]);
        let engine = Propagation::new(&net, &eff).unwrap();
        let mut ws = engine.workspace();
        let s = engine.run(&mut ws, &[0], p, &KeyedUniforms::for_run(seed, run)).unwrap();
        let mask = ws.inactive_mask().to_vec();
        prop_assert!(mask[0]);
        prop_assert_eq!(mask.iter().filter(|&&b| b).count(), s.final_inactive);
        prop_assert!(s.final_inactive <= net.len());
        prop_assert!(s.rounds < net.len());
        // Every fallen node other than the seed has an inactive supplier.
        for v in 1..net.len() {
            if mask[v] {
                prop_assert!(net.suppliers(v).iter().any(|&j| mask[j as usize]));
            }
        }
        // Rerunning with the same key is bit-identical.
        let again = engine.run(&mut ws, &[0], p, &KeyedUniforms::for_run(seed, run)).unwrap();
        prop_assert_eq!(again, s);
        prop_assert_eq!(ws.inactive_mask(), &mask[..]);
    }

    #[test]
    fn round_probability_is_a_probability(seed in any::<u64>(), p in 0.0f64..=1.0, mode_ix in 0usize..4) {
        let net = random_network(seed, 8);
        let eff = effective_outputs(&net, ProductMode::ALL[mode_ix]);
        let st = CascadeState::initial(net.len(), &[0]).unwrap();
        for &v in net.clients(0) {
            let rho = client_shock_prob(v as usize, &st, &net, &eff, p).unwrap();
            prop_assert!((0.0..=1.0).contains(&rho));
            let full = client_shock_prob(v as usize, &st, &net, &eff, 1.0).unwrap();
            prop_assert!(rho <= full + 1e-12);
        }
    }
}
