use alloc::{vec, vec::Vec};

use rand::RngCore;

use super::{stream, EffectiveOutputs};
use crate::domain::{Csr, ProductId, ProductionNetwork};
use crate::{Error, Result};

/// Per-node uniforms for one run. The same node must always get the same value.
pub trait Uniforms {
    fn node_uniform(&self, node: usize) -> f64;
}

/// Uniforms hashed from a run key and the node index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyedUniforms {
    key: u64,
}

impl KeyedUniforms {
    pub fn new(key: u64) -> Self {
        Self { key }
    }

    pub fn for_run(seed: u64, run: u64) -> Self {
        Self::new(stream::stream_key(seed, run))
    }
}

impl Uniforms for KeyedUniforms {
    #[inline]
    fn node_uniform(&self, node: usize) -> f64 {
        stream::unit(stream::word(self.key, node as u64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub final_inactive: usize,
    /// Rounds in which at least one client was exposed.
    pub rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeOutcome {
    pub final_inactive: usize,
    pub rounds: usize,
    pub inactive_mask: Vec<bool>,
}

/// A network indexed for fast cascades.
///
/// Every client `v` gets one slot per distinct product among its suppliers'
/// outputs, holding the number of suppliers of that product. Every out-edge
/// `j -> v` lists the slots of `v` that `j` feeds.
///
/// A run draws one uniform `u_v` per node. Exposure `k` of `v` with round
/// probability `rho_k` makes `v` fall when `u_v < 1 - prod_{i<=k}(1 - rho_i)`,
/// which gives conditional probability `rho_k` given survival so far. Keying
/// `u_v` by node rather than by draw order keeps runs with equal keys coupled
/// across different `p`.
#[derive(Debug, Clone)]
pub struct Propagation<'a> {
    net: &'a ProductionNetwork,
    slot_supply: Vec<u32>,
    edge_slots: Csr<u32>,
}

impl<'a> Propagation<'a> {
    pub fn new(net: &'a ProductionNetwork, eff: &EffectiveOutputs) -> Result<Self> {
        if eff.len() != net.len() {
            return Err(Error::Contract("effective outputs must cover every node"));
        }
        let n = net.len();
        let mut slot_base = Vec::with_capacity(n + 1);
        let mut slot_products: Vec<ProductId> = Vec::new();
        let mut slot_supply = Vec::new();
        let mut scratch = Vec::new();
        for v in 0..n {
            slot_base.push(slot_products.len());
            scratch.clear();
            scratch.extend(net.suppliers(v).iter().flat_map(|&j| eff.of(j as usize).iter().copied()));
            scratch.sort_unstable();
            for run in scratch.chunk_by(|a, b| a == b) {
                slot_products.push(run[0]);
                slot_supply.push(run.len() as u32);
            }
        }
        slot_base.push(slot_products.len());

        let mut rows = Vec::with_capacity(net.edge_count());
        for (s, c) in net.edges() {
            let products = &slot_products[slot_base[c]..slot_base[c + 1]];
            rows.push(
                eff.of(s)
                    .iter()
                    .map(|q| {
                        let k = products.binary_search(q).expect("supplier output has a slot");
                        (slot_base[c] + k) as u32
                    })
                    .collect(),
            );
        }
        Ok(Self { net, slot_supply, edge_slots: Csr::from_rows(rows) })
    }

    pub fn network(&self) -> &'a ProductionNetwork {
        self.net
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            inactive: vec![false; self.net.len()],
            fallen: Vec::new(),
            slot_inactive: vec![0; self.slot_supply.len()],
            touched_slots: Vec::new(),
            survival: vec![1.0; self.net.len()],
            exposed: Vec::new(),
            frontier: Vec::new(),
            next: Vec::new(),
            touched_clients: Vec::new(),
            exposures: Vec::new(),
            pending: vec![1.0; self.net.len()],
            client_stamp: vec![0; self.net.len()],
            slot_stamp: vec![0; self.slot_supply.len()],
            stamp: 0,
        }
    }

    /// One cascade from `initial`. The workspace is reset first; afterwards it
    /// holds the final inactive mask.
    pub fn run<U: Uniforms>(&self, ws: &mut Workspace, initial: &[usize], p: f64, uniforms: &U) -> Result<RunSummary> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(alloc::format!("propagation probability {p} outside [0, 1]")));
        }
        if initial.is_empty() {
            return Err(Error::Contract("a cascade needs at least one initial node"));
        }
        for &v in initial {
            self.net.check_node(v)?;
        }
        ws.reset();
        for &v in initial {
            if !ws.inactive[v] {
                ws.inactive[v] = true;
                ws.fallen.push(v as u32);
                ws.frontier.push(v as u32);
            }
        }
        let mut rounds = 0;
        loop {
            // Pass 1: count the frontier as inactive in every slot it feeds at
            // still-active clients, and note each (client, slot) exposure once.
            let stamp = ws.next_stamp();
            ws.touched_clients.clear();
            ws.exposures.clear();
            for &i in &ws.frontier {
                let i = i as usize;
                let start = self.net.client_edge_start(i);
                for (k, &v) in self.net.clients(i).iter().enumerate() {
                    if ws.inactive[v as usize] {
                        continue;
                    }
                    if ws.client_stamp[v as usize] != stamp {
                        ws.client_stamp[v as usize] = stamp;
                        ws.touched_clients.push(v);
                    }
                    for &s in self.edge_slots.row(start + k) {
                        let su = s as usize;
                        if ws.slot_inactive[su] == 0 {
                            ws.touched_slots.push(s);
                        }
                        ws.slot_inactive[su] += 1;
                        if ws.slot_stamp[su] != stamp {
                            ws.slot_stamp[su] = stamp;
                            ws.exposures.push((v, s));
                        }
                    }
                }
            }
            if ws.touched_clients.is_empty() {
                break;
            }
            rounds += 1;

            // Pass 2: per-client survival of this round over its exposed slots.
            for &v in &ws.touched_clients {
                ws.pending[v as usize] = 1.0;
            }
            for &(v, s) in &ws.exposures {
                let s = s as usize;
                let fraction = f64::from(ws.slot_inactive[s]) / f64::from(self.slot_supply[s]);
                ws.pending[v as usize] *= 1.0 - p * fraction;
            }

            // Pass 3: decide falls against the cumulative survival.
            ws.next.clear();
            for &v in &ws.touched_clients {
                let v = v as usize;
                let survive = ws.pending[v];
                if survive >= 1.0 {
                    continue;
                }
                if ws.survival[v] == 1.0 {
                    ws.exposed.push(v as u32);
                }
                ws.survival[v] *= survive;
                if uniforms.node_uniform(v) < 1.0 - ws.survival[v] {
                    ws.inactive[v] = true;
                    ws.fallen.push(v as u32);
                    ws.next.push(v as u32);
                }
            }
            core::mem::swap(&mut ws.frontier, &mut ws.next);
        }
        Ok(RunSummary { final_inactive: ws.fallen.len(), rounds })
    }
}

/// Scratch buffers for [`Propagation::run`]; one per thread.
#[derive(Debug, Clone)]
pub struct Workspace {
    inactive: Vec<bool>,
    fallen: Vec<u32>,
    slot_inactive: Vec<u32>,
    touched_slots: Vec<u32>,
    survival: Vec<f64>,
    exposed: Vec<u32>,
    frontier: Vec<u32>,
    next: Vec<u32>,
    touched_clients: Vec<u32>,
    exposures: Vec<(u32, u32)>,
    pending: Vec<f64>,
    client_stamp: Vec<u32>,
    slot_stamp: Vec<u32>,
    stamp: u32,
}

impl Workspace {
    /// A fresh round marker; stamp arrays are cleared on wrap-around.
    fn next_stamp(&mut self) -> u32 {
        if self.stamp == u32::MAX {
            self.client_stamp.iter_mut().for_each(|x| *x = 0);
            self.slot_stamp.iter_mut().for_each(|x| *x = 0);
            self.stamp = 0;
        }
        self.stamp += 1;
        self.stamp
    }

    fn reset(&mut self) {
        for v in self.fallen.drain(..) {
            self.inactive[v as usize] = false;
        }
        for s in self.touched_slots.drain(..) {
            self.slot_inactive[s as usize] = 0;
        }
        for v in self.exposed.drain(..) {
            self.survival[v as usize] = 1.0;
        }
        self.frontier.clear();
        self.next.clear();
    }

    /// Final status of the last run (`true` = inactive).
    pub fn inactive_mask(&self) -> &[bool] {
        &self.inactive
    }

    /// Nodes that fell in the last run, in the order they fell.
    pub fn fallen(&self) -> impl Iterator<Item = usize> + '_ {
        self.fallen.iter().map(|&v| v as usize)
    }
}

/// Single cascade with node uniforms keyed by one word drawn from `rng`.
pub fn run_cascade<R: RngCore + ?Sized>(
    net: &ProductionNetwork,
    eff: &EffectiveOutputs,
    initial: &[usize],
    p: f64,
    rng: &mut R,
) -> Result<CascadeOutcome> {
    let engine = Propagation::new(net, eff)?;
    let mut ws = engine.workspace();
    let uniforms = KeyedUniforms::new(rng.next_u64());
    let summary = engine.run(&mut ws, initial, p, &uniforms)?;
    Ok(CascadeOutcome {
        final_inactive: summary.final_inactive,
        rounds: summary.rounds,
        inactive_mask: ws.inactive.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{effective_outputs, ProductMode};
    use crate::domain::fixtures::network;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_chain() {
        let net = network(&[&[0], &[1], &[2]], &[(0, 1), (1, 2)]);
        let eff = effective_outputs(&net, ProductMode::UniquePerNode);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = run_cascade(&net, &eff, &[0], 1.0, &mut rng).unwrap();
        assert_eq!(out.final_inactive, 3);
        assert_eq!(out.rounds, 2);
        assert_eq!(out.inactive_mask, [true, true, true]);
    }

    #[test]
    fn zero_probability_stops_at_seed() {
        let net = network(&[&[0], &[0], &[0]], &[(0, 1), (1, 2), (0, 2)]);
        for mode in ProductMode::ALL {
            let eff = effective_outputs(&net, mode);
            let out = run_cascade(&net, &eff, &[0], 0.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
            assert_eq!(out.final_inactive, 1);
        }
    }

    #[test]
    fn half_substituted_supplier() {
        // Node 2 buys the shared product from 0 and 1; 0 fails.
        let net = network(&[&[0], &[0], &[0]], &[(0, 2), (1, 2)]);
        let eff = effective_outputs(&net, ProductMode::SingleShared);
        let engine = Propagation::new(&net, &eff).unwrap();
        let mut ws = engine.workspace();
        let runs = 100_000;
        let mut hits = 0;
        for r in 0..runs {
            let s = engine.run(&mut ws, &[0], 1.0, &KeyedUniforms::for_run(9, r)).unwrap();
            hits += usize::from(ws.inactive_mask()[2]);
            assert!(s.final_inactive <= 2);
        }
        let freq = hits as f64 / runs as f64;
        let se = (0.25 / runs as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * se, "freq {freq}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let net = network(&[&[0], &[0]], &[(0, 1)]);
        let eff = effective_outputs(&net, ProductMode::Actual);
        let engine = Propagation::new(&net, &eff).unwrap();
        let mut ws = engine.workspace();
        let u = KeyedUniforms::new(0);
        assert!(engine.run(&mut ws, &[2], 0.5, &u).is_err());
        assert!(engine.run(&mut ws, &[], 0.5, &u).is_err());
        assert!(engine.run(&mut ws, &[0], 1.5, &u).is_err());
    }

    #[test]
    fn workspace_reuse_matches_fresh() {
        let net = network(&[&[0], &[1], &[0, 1], &[2], &[0]], &[(0, 2), (1, 2), (2, 3), (4, 3), (3, 0), (1, 4)]);
        let eff = effective_outputs(&net, ProductMode::Actual);
        let engine = Propagation::new(&net, &eff).unwrap();
        let mut shared = engine.workspace();
        for r in 0..200 {
            let u = KeyedUniforms::for_run(5, r);
            let start = (r % 5) as usize;
            let a = engine.run(&mut shared, &[start], 0.7, &u).unwrap();
            let mut fresh = engine.workspace();
            let b = engine.run(&mut fresh, &[start], 0.7, &u).unwrap();
            assert_eq!(a, b);
            assert_eq!(shared.inactive_mask(), fresh.inactive_mask());
        }
    }
}
