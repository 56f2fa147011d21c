//! Set cover with groups and priorities.
//!
//! A client establishment needs a universe of input products. Each candidate
//! supplier establishment offers a subset and belongs to a group (its firm).
//! A solution covers every coverable element and picks at least one candidate
//! from every group. When a candidate is picked, the priority of every other
//! candidate in its group drops by one, and among equally useful candidates
//! the lower priority value wins.

use alloc::{collections::BTreeMap, vec, vec::Vec};

use serde::{Deserialize, Serialize};

use crate::domain::{EstablishmentId, FirmId, ProductId};
use crate::{Error, Result};

/// Largest candidate count [`solve_exact`] accepts.
pub const EXACT_CANDIDATE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: EstablishmentId,
    pub group: FirmId,
    pub offer: Vec<ProductId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverInstance {
    universe: Vec<ProductId>,
    candidates: Vec<Candidate>,
}

impl CoverInstance {
    /// Sorts the universe and clips every offer to it. Candidate ids must be distinct.
    pub fn new(mut universe: Vec<ProductId>, mut candidates: Vec<Candidate>) -> Result<Self> {
        universe.sort_unstable();
        universe.dedup();
        for c in &mut candidates {
            c.offer.sort_unstable();
            c.offer.dedup();
            c.offer.retain(|p| universe.binary_search(p).is_ok());
        }
        let mut ids: Vec<_> = candidates.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Contract("cover candidates must have distinct ids"));
        }
        Ok(Self { universe, candidates })
    }

    pub fn universe(&self) -> &[ProductId] {
        &self.universe
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    /// Candidate indices per group, groups in ascending id order.
    fn groups(&self) -> BTreeMap<FirmId, Vec<usize>> {
        let mut groups: BTreeMap<FirmId, Vec<usize>> = BTreeMap::new();
        for (i, c) in self.candidates.iter().enumerate() {
            groups.entry(c.group).or_default().push(i);
        }
        groups
    }

    /// Offers as indices into the universe.
    fn offer_indices(&self) -> Vec<Vec<usize>> {
        self.candidates
            .iter()
            .map(|c| c.offer.iter().map(|p| self.universe.binary_search(p).expect("offers are clipped")).collect())
            .collect()
    }

    /// Universe elements no candidate offers.
    pub fn uncoverable(&self) -> Vec<ProductId> {
        let mut offered = vec![false; self.universe.len()];
        for offer in self.offer_indices() {
            for x in offer {
                offered[x] = true;
            }
        }
        self.universe.iter().zip(&offered).filter(|(_, &o)| !o).map(|(&p, _)| p).collect()
    }

    /// Checks both solution invariants: the chosen offers cover everything
    /// coverable, `uncovered` is exactly the rest, and every group is represented.
    pub fn is_valid_solution(&self, solution: &CoverSolution) -> bool {
        let mut covered = vec![false; self.universe.len()];
        let offers = self.offer_indices();
        let mut represented = BTreeMap::new();
        for &id in &solution.chosen {
            let Some(i) = self.candidates.iter().position(|c| c.id == id) else {
                return false;
            };
            represented.insert(self.candidates[i].group, ());
            for &x in &offers[i] {
                covered[x] = true;
            }
        }
        let missing: Vec<ProductId> =
            self.universe.iter().zip(&covered).filter(|(_, &c)| !c).map(|(&p, _)| p).collect();
        missing == solution.uncovered
            && missing == self.uncoverable()
            && self.groups().keys().all(|g| represented.contains_key(g))
    }
}

/// Priority values keyed by establishment. Unknown establishments start at 0.
pub trait Priorities {
    fn priority(&self, id: EstablishmentId) -> i64;
    fn decrement(&mut self, id: EstablishmentId);
}

impl Priorities for BTreeMap<EstablishmentId, i64> {
    fn priority(&self, id: EstablishmentId) -> i64 {
        self.get(&id).copied().unwrap_or(0)
    }

    fn decrement(&mut self, id: EstablishmentId) {
        *self.entry(id).or_insert(0) -= 1;
    }
}

/// Array-backed priorities over a dense establishment id range.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DensePriorities(Vec<i64>);

impl DensePriorities {
    pub fn new(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }
}

impl Priorities for DensePriorities {
    fn priority(&self, id: EstablishmentId) -> i64 {
        self.0[id.index()]
    }

    fn decrement(&mut self, id: EstablishmentId) {
        self.0[id.index()] -= 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverSolution {
    /// Chosen candidates, sorted by id.
    pub chosen: Vec<EstablishmentId>,
    /// Universe elements no candidate offers.
    pub uncovered: Vec<ProductId>,
}

struct Selection<'a, P> {
    instance: &'a CoverInstance,
    groups: BTreeMap<FirmId, Vec<usize>>,
    chosen: Vec<bool>,
    priorities: &'a mut P,
}

impl<P: Priorities> Selection<'_, P> {
    fn select(&mut self, i: usize) {
        self.chosen[i] = true;
        let c = &self.instance.candidates[i];
        for &mate in &self.groups[&c.group] {
            if mate != i {
                self.priorities.decrement(self.instance.candidates[mate].id);
            }
        }
    }

    /// Ordering key: larger `score` first, then lower priority, then lower id.
    fn better(&self, a: (usize, usize), b: (usize, usize)) -> bool {
        let (ca, cb) = (&self.instance.candidates[a.0], &self.instance.candidates[b.0]);
        let ka = (core::cmp::Reverse(a.1), self.priorities.priority(ca.id), ca.id);
        let kb = (core::cmp::Reverse(b.1), self.priorities.priority(cb.id), cb.id);
        ka < kb
    }
}

/// Greedy cover followed by group repair.
///
/// The covering phase repeatedly takes the candidate covering the most
/// still-uncovered elements until nothing new can be covered. The repair
/// phase then visits groups in ascending id order and, for each group with
/// nothing chosen, takes its candidate with the largest offer. Ties are
/// broken by lower priority value, then lower establishment id.
pub fn solve_greedy<P: Priorities>(instance: &CoverInstance, priorities: &mut P) -> CoverSolution {
    let offers = instance.offer_indices();
    let n = instance.candidates.len();
    let mut sel = Selection { instance, groups: instance.groups(), chosen: vec![false; n], priorities };
    let mut covered = vec![false; instance.universe.len()];

    loop {
        let mut best: Option<(usize, usize)> = None;
        for (i, offer) in offers.iter().enumerate() {
            if sel.chosen[i] {
                continue;
            }
            let gain = offer.iter().filter(|&&x| !covered[x]).count();
            if gain > 0 && best.is_none_or(|b| sel.better((i, gain), b)) {
                best = Some((i, gain));
            }
        }
        let Some((i, _)) = best else { break };
        for &x in &offers[i] {
            covered[x] = true;
        }
        sel.select(i);
    }

    let groups: Vec<Vec<usize>> = sel.groups.values().cloned().collect();
    for members in groups {
        if members.iter().any(|&i| sel.chosen[i]) {
            continue;
        }
        let mut best = (members[0], offers[members[0]].len());
        for &i in &members[1..] {
            if sel.better((i, offers[i].len()), best) {
                best = (i, offers[i].len());
            }
        }
        sel.select(best.0);
    }

    let mut chosen: Vec<EstablishmentId> =
        (0..n).filter(|&i| sel.chosen[i]).map(|i| instance.candidates[i].id).collect();
    chosen.sort_unstable();
    let uncovered = instance.universe.iter().zip(&covered).filter(|(_, &c)| !c).map(|(&p, _)| p).collect();
    CoverSolution { chosen, uncovered }
}

/// Minimum-cardinality group-feasible cover by exhaustive search.
///
/// Subsets are visited by size, then in lexicographic order of their sorted
/// id sequence, so the first feasible subset is also the tie-break winner.
/// Priorities play no part.
pub fn solve_exact(instance: &CoverInstance) -> Result<CoverSolution> {
    let m = instance.candidates.len();
    if m > EXACT_CANDIDATE_LIMIT {
        return Err(Error::TooLarge { size: m, limit: EXACT_CANDIDATE_LIMIT });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| instance.candidates[i].id);

    let words = instance.universe.len().div_ceil(64).max(1);
    let offers = instance.offer_indices();
    let masks: Vec<Vec<u64>> = order
        .iter()
        .map(|&i| {
            let mut mask = vec![0u64; words];
            for &x in &offers[i] {
                mask[x / 64] |= 1 << (x % 64);
            }
            mask
        })
        .collect();
    let mut target = vec![0u64; words];
    for mask in &masks {
        for (t, w) in target.iter_mut().zip(mask) {
            *t |= w;
        }
    }
    let group_index: BTreeMap<FirmId, usize> = instance.groups().keys().enumerate().map(|(k, &g)| (g, k)).collect();
    let group_bits: Vec<u32> = order.iter().map(|&i| 1u32 << group_index[&instance.candidates[i].group]).collect();
    let all_groups = if group_index.is_empty() { 0 } else { u32::MAX >> (32 - group_index.len()) };

    let mut acc = vec![0u64; words];
    for k in 0..=m {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            acc.iter_mut().for_each(|w| *w = 0);
            let mut groups = 0u32;
            for &j in &idx {
                groups |= group_bits[j];
                for (a, w) in acc.iter_mut().zip(&masks[j]) {
                    *a |= w;
                }
            }
            if groups == all_groups && acc == target {
                let chosen = idx.iter().map(|&j| instance.candidates[order[j]].id).collect();
                return Ok(CoverSolution { chosen, uncovered: instance.uncoverable() });
            }
            if !next_combination(&mut idx, m) {
                break;
            }
        }
    }
    unreachable!("choosing every candidate is always feasible")
}

/// Advances `idx` (strictly increasing, values < n) to the next combination
/// in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let Some(pos) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
        return false;
    };
    idx[pos] += 1;
    for i in pos + 1..k {
        idx[i] = idx[i - 1] + 1;
    }
    true
}
