//! Exact cascade distribution on small networks by enumerating the
//! round-by-round Markov chain over `(inactive set, newly inactive set)`.
//! Round probabilities come from [`client_shock_prob`], not from the engine.

use alloc::{collections::BTreeMap, vec, vec::Vec};

use super::{client_shock_prob, CascadeState, EffectiveOutputs};
use crate::domain::ProductionNetwork;
use crate::{Error, Result};

pub const EXACT_NODE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    /// Probability that each node ends inactive.
    pub marginals: Vec<f64>,
    pub expected_inactive: f64,
    /// Probability of each final inactive set (bit `v` set = node `v` inactive).
    pub final_sets: BTreeMap<u32, f64>,
}

pub fn exact_distribution(
    net: &ProductionNetwork,
    eff: &EffectiveOutputs,
    initial: &[usize],
    p: f64,
) -> Result<ExactDistribution> {
    let n = net.len();
    if n > EXACT_NODE_LIMIT {
        return Err(Error::TooLarge { size: n, limit: EXACT_NODE_LIMIT });
    }
    if initial.is_empty() {
        return Err(Error::Contract("a cascade needs at least one initial node"));
    }
    let mut start = 0u32;
    for &v in initial {
        net.check_node(v)?;
        start |= 1 << v;
    }

    let mut frontier: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    frontier.insert((start, start), 1.0);
    let mut final_sets: BTreeMap<u32, f64> = BTreeMap::new();
    while !frontier.is_empty() {
        let mut next: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for ((inactive, newly), prob) in frontier {
            let state = CascadeState {
                active: (0..n).map(|v| inactive & (1 << v) == 0).collect(),
                newly_inactive: (0..n).filter(|v| newly & (1 << v) != 0).collect(),
                t: 0,
            };
            let exposed: Vec<(usize, f64)> = (0..n)
                .filter(|&v| state.active[v] && net.suppliers(v).iter().any(|&j| newly & (1 << j) != 0))
                .map(|v| Ok((v, client_shock_prob(v, &state, net, eff, p)?)))
                .collect::<Result<_>>()?;
            if exposed.is_empty() {
                *final_sets.entry(inactive).or_insert(0.0) += prob;
                continue;
            }
            for pick in 0u32..(1 << exposed.len()) {
                let mut w = prob;
                let mut fell = 0u32;
                for (k, &(v, rho)) in exposed.iter().enumerate() {
                    if pick & (1 << k) != 0 {
                        w *= rho;
                        fell |= 1 << v;
                    } else {
                        w *= 1.0 - rho;
                    }
                }
                if w == 0.0 {
                    continue;
                }
                if fell == 0 {
                    *final_sets.entry(inactive).or_insert(0.0) += w;
                } else {
                    *next.entry((inactive | fell, fell)).or_insert(0.0) += w;
                }
            }
        }
        frontier = next;
    }

    let mut marginals = vec![0.0; n];
    let mut expected_inactive = 0.0;
    for (&set, &prob) in &final_sets {
        expected_inactive += prob * f64::from(set.count_ones());
        for (v, m) in marginals.iter_mut().enumerate() {
            if set & (1 << v) != 0 {
                *m += prob;
            }
        }
    }
    Ok(ExactDistribution { marginals, expected_inactive, final_sets })
}
