use std::collections::{BTreeMap, BTreeSet};

use estnet_core::cover::{solve_exact, solve_greedy, Candidate, CoverInstance, DensePriorities, Priorities};
use estnet_core::{EstablishmentId, FirmId, ProductId};
use proptest::prelude::*;

fn instance_strategy() -> impl Strategy<Value = CoverInstance> {
    let candidate = (0u32..4, prop::collection::btree_set(0u32..10, 0..5));
    (prop::collection::btree_set(0u32..10, 0..9), prop::collection::vec(candidate, 1..12)).prop_map(
        |(universe, cands)| {
            let candidates = cands
                .into_iter()
                .enumerate()
                .map(|(i, (group, offer))| Candidate {
                    id: EstablishmentId(i as u32 * 3 % 37),
                    group: FirmId(group),
                    offer: offer.into_iter().map(ProductId).collect(),
                })
                .collect();
            CoverInstance::new(universe.into_iter().map(ProductId).collect(), candidates).unwrap()
        },
    )
}

/// Straightforward restatement of the selection rule, one step at a time.
fn reference_greedy(inst: &CoverInstance, prio: &mut BTreeMap<EstablishmentId, i64>) -> BTreeSet<EstablishmentId> {
    let cands = inst.candidates();
    let universe: BTreeSet<ProductId> = inst.universe().iter().copied().collect();
    let mut covered = BTreeSet::new();
    let mut chosen = BTreeSet::new();
    let pick = |chosen: &mut BTreeSet<EstablishmentId>, prio: &mut BTreeMap<EstablishmentId, i64>, c: &Candidate| {
        chosen.insert(c.id);
        for m in cands.iter().filter(|m| m.group == c.group && m.id != c.id) {
            *prio.entry(m.id).or_insert(0) -= 1;
        }
    };
    loop {
        let best = cands
            .iter()
            .filter(|c| !chosen.contains(&c.id))
            .map(|c| {
                let gain = c.offer.iter().filter(|h| universe.contains(h) && !covered.contains(*h)).count();
                (gain, c)
            })
            .filter(|(gain, _)| *gain > 0)
            .min_by_key(|(gain, c)| (std::cmp::Reverse(*gain), prio.priority(c.id), c.id));
        let Some((_, c)) = best else { break };
        covered.extend(c.offer.iter().filter(|h| universe.contains(h)).copied());
        pick(&mut chosen, prio, c);
    }
    let groups: BTreeSet<FirmId> = cands.iter().map(|c| c.group).collect();
    for g in groups {
        if cands.iter().any(|c| c.group == g && chosen.contains(&c.id)) {
            continue;
        }
        let c = cands
            .iter()
            .filter(|c| c.group == g)
            .min_by_key(|c| {
                let size = c.offer.iter().filter(|h| universe.contains(h)).count();
                (std::cmp::Reverse(size), prio.priority(c.id), c.id)
            })
            .unwrap();
        pick(&mut chosen, prio, c);
    }
    chosen
}

fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn greedy_is_valid_and_within_bounds(inst in instance_strategy()) {
        let greedy = solve_greedy(&inst, &mut BTreeMap::new());
        prop_assert!(inst.is_valid_solution(&greedy));
        prop_assert_eq!(&greedy.uncovered, &inst.uncoverable());
        let opt = solve_exact(&inst).unwrap();
        prop_assert!(inst.is_valid_solution(&opt));
        prop_assert!(opt.chosen.len() <= greedy.chosen.len());
        let bound = (harmonic(inst.universe().len().max(1)) + 1.0) * opt.chosen.len() as f64;
        prop_assert!(greedy.chosen.len() as f64 <= bound + 1e-9);
    }

    #[test]
    fn greedy_matches_reference(inst in instance_strategy(), seed_prio in prop::collection::vec(-2i64..=0, 40)) {
        let mut prio: BTreeMap<EstablishmentId, i64> =
            (0..40).map(|i| (EstablishmentId(i), seed_prio[i as usize])).collect();
        let mut ref_prio = prio.clone();
        let got = solve_greedy(&inst, &mut prio);
        let want = reference_greedy(&inst, &mut ref_prio);
        prop_assert_eq!(got.chosen.iter().copied().collect::<BTreeSet<_>>(), want);
        prop_assert_eq!(prio, ref_prio);
    }

    #[test]
    fn greedy_is_deterministic_and_backend_independent(inst in instance_strategy()) {
        let a = solve_greedy(&inst, &mut BTreeMap::new());
        let b = solve_greedy(&inst, &mut BTreeMap::new());
        let mut dense = DensePriorities::new(40);
        let c = solve_greedy(&inst, &mut dense);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &c);
        prop_assert!(a.chosen.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn unchosen_priority_counts_group_mate_selections(inst in instance_strategy()) {
        let mut prio = BTreeMap::new();
        let sol = solve_greedy(&inst, &mut prio);
        let chosen: BTreeSet<_> = sol.chosen.iter().copied().collect();
        for c in inst.candidates() {
            let mates = inst
                .candidates()
                .iter()
                .filter(|m| m.group == c.group && m.id != c.id && chosen.contains(&m.id))
                .count() as i64;
            prop_assert_eq!(prio.priority(c.id), -mates);
        }
    }

    #[test]
    fn exact_is_minimal(inst in instance_strategy()) {
        let opt = solve_exact(&inst).unwrap();
        // No smaller subset is feasible: every subset of size |opt| - 1 fails.
        let cands = inst.candidates();
        let k = opt.chosen.len();
        if k > 0 && cands.len() <= 11 {
            for mask in 0u32..(1 << cands.len()) {
                if mask.count_ones() as usize == k - 1 {
                    let chosen: Vec<_> = {
                        let mut v: Vec<_> = (0..cands.len())
                            .filter(|i| mask & (1 << i) != 0)
                            .map(|i| cands[i].id)
                            .collect();
                        v.sort_unstable();
                        v
                    };
                    let sol = estnet_core::cover::CoverSolution { chosen, uncovered: inst.uncoverable() };
                    prop_assert!(!inst.is_valid_solution(&sol));
                }
            }
        }
    }
}
