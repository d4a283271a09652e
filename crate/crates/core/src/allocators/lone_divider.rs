//! Lone divider for top-`n` instances: partial EFX allocations meeting the
//! 1-out-of-`ceil(3n/2)` shares.
//!
//! Each round the lowest unsatisfied agent divides the pool into one bag per
//! unsatisfied agent, each holding exactly one common top good. Bags are
//! shrunk to minimal acceptable size; a satisfied agent that strongly envies
//! one trades its bundle for a further-shrunk copy, otherwise an envy-free
//! matching hands out bags.

use std::cmp::Ordering;

use crate::allocators::bag_filling::fill_bags;
use crate::allocators::matching::{envy_free_matching, ThresholdGraph};
use crate::allocators::trace::{AllocatorTrace, Event};
use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::scalar::{compare, Scalar};
use crate::verification::strongly_envies_bundle;

/// Splits `pool` into `bag_count` bags each worth at least `tau` to
/// `divider` and each containing exactly one good of `top_goods`.
pub fn lone_divider_partition<T: Scalar>(
    inst: &Instance<T>,
    divider: usize,
    pool: &[usize],
    bag_count: usize,
    top_goods: &[usize],
    tau: &T,
) -> Result<Vec<Vec<usize>>> {
    let is_top = |g: usize| top_goods.contains(&g);
    let tops_in_pool = pool.iter().filter(|&&g| is_top(g)).count();
    if bag_count == 0 || tops_in_pool != bag_count {
        return Err(Error::Precondition(format!(
            "pool holds {tops_in_pool} top goods for {bag_count} bags"
        )));
    }
    if bag_count == 1 {
        let bag = pool.to_vec();
        if inst.bundle_value(divider, &bag) < *tau {
            return Err(Error::InvariantViolation(format!(
                "pool is worth less than the threshold to divider {divider}"
            )));
        }
        return Ok(vec![bag]);
    }

    let mut order = pool.to_vec();
    // by divider value, top goods first among equals so they fill the
    // leading positions
    order.sort_by(|&a, &b| {
        compare(inst.value(divider, b), inst.value(divider, a))
            .then_with(|| is_top(b).cmp(&is_top(a)))
            .then(a.cmp(&b))
    });
    let real = order.len();
    let len = real.max(2 * bag_count);
    let mut row: Vec<T> = order
        .iter()
        .map(|&g| inst.value(divider, g).clone())
        .collect();
    row.resize(len, T::zero());
    let rows = vec![row; bag_count];
    let filled = fill_bags(&rows, &vec![tau.clone(); bag_count], true, None)?;

    let mut bags: Vec<Vec<usize>> = filled
        .bags
        .iter()
        .map(|bag| {
            bag.iter()
                .filter(|&&p| p < real)
                .map(|&p| order[p])
                .collect()
        })
        .collect();
    for (k, &p) in filled.leftover.iter().filter(|&&p| p < real).enumerate() {
        bags[k % bag_count].push(order[p]);
    }
    for bag in &mut bags {
        bag.sort_unstable();
    }
    for (j, bag) in bags.iter().enumerate() {
        let tops = bag.iter().filter(|&&g| is_top(g)).count();
        if tops != 1 || inst.bundle_value(divider, bag) < *tau {
            return Err(Error::InvariantViolation(format!(
                "divider bag {j} has {tops} top goods or falls below the threshold"
            )));
        }
    }
    Ok(bags)
}

/// Removes non-`protected` goods one at a time, lowest index first, while
/// some agent of `agents` still values the bag at its threshold or more.
pub fn shrink_minimal<T: Scalar>(
    inst: &Instance<T>,
    bag: &[usize],
    protected: usize,
    agents: &[usize],
    thresholds: &[T],
) -> Result<Vec<usize>> {
    let accepted = |b: &[usize]| {
        agents
            .iter()
            .any(|&i| inst.bundle_value(i, b) >= thresholds[i])
    };
    if !bag.contains(&protected) || !accepted(bag) {
        return Err(Error::Precondition(
            "shrinking needs a bag containing its protected good and acceptable to some agent"
                .into(),
        ));
    }
    let mut current = bag.to_vec();
    current.sort_unstable();
    'outer: loop {
        for k in 0..current.len() {
            if current[k] == protected {
                continue;
            }
            let mut smaller = current.clone();
            smaller.remove(k);
            if accepted(&smaller) {
                current = smaller;
                continue 'outer;
            }
        }
        return Ok(current);
    }
}

/// For a bag strongly envied by some satisfied agent: shrink it while some
/// satisfied agent would still prefer the smaller bag to its own bundle, then
/// pick the lowest-index agent that prefers the result. No satisfied agent
/// strongly envies the returned bag.
pub fn most_envious_shrink<T: Scalar>(
    inst: &Instance<T>,
    bag: &[usize],
    protected: usize,
    bundles: &[Vec<usize>],
    satisfied: &[usize],
) -> Result<(usize, Vec<usize>)> {
    let prefers =
        |i: usize, b: &[usize]| inst.bundle_value(i, b) > inst.bundle_value(i, &bundles[i]);
    if !satisfied
        .iter()
        .any(|&i| strongly_envies_bundle(inst, &bundles[i], i, bag).is_some())
    {
        return Err(Error::Precondition(
            "no satisfied agent strongly envies the bag".into(),
        ));
    }
    let mut current = bag.to_vec();
    current.sort_unstable();
    'outer: loop {
        for &i in satisfied {
            for k in 0..current.len() {
                if current[k] == protected {
                    continue;
                }
                let mut smaller = current.clone();
                smaller.remove(k);
                if prefers(i, &smaller) {
                    current = smaller;
                    continue 'outer;
                }
            }
        }
        break;
    }
    let winner = satisfied
        .iter()
        .copied()
        .find(|&i| prefers(i, &current))
        .ok_or_else(|| Error::InvariantViolation("shrunk bag is no longer envied".into()))?;
    if let Some(&other) = satisfied
        .iter()
        .find(|&&i| i != winner && strongly_envies_bundle(inst, &bundles[i], i, &current).is_some())
    {
        return Err(Error::InvariantViolation(format!(
            "agent {other} strongly envies the shrunk bag"
        )));
    }
    Ok((winner, current))
}

/// Partial EFX allocation giving each agent `thresholds[i]` on an instance
/// whose goods `top_goods` (exactly `n` of them) form a top-`n` set for
/// every agent. Needs `m >= 2n`; pad with zero goods first.
pub fn alloc_topn_lone_divider<T: Scalar>(
    inst: &Instance<T>,
    thresholds: &[T],
    top_goods: &[usize],
) -> Result<(Allocation, AllocatorTrace)> {
    let n = inst.agent_count();
    let m = inst.good_count();
    if thresholds.len() != n {
        return Err(Error::DimensionMismatch(
            "one threshold per agent is required".into(),
        ));
    }
    check_top_set(inst, top_goods)?;
    if m < 2 * n {
        return Err(Error::Precondition(format!(
            "lone divider needs at least 2n = {} goods, got {m} (pad first)",
            2 * n
        )));
    }

    let mut trace = AllocatorTrace::new();
    let mut bundles: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut satisfied = vec![false; n];
    let mut pool: Vec<usize> = (0..m).collect();
    let mut progress: Option<(T, usize)> = None;
    let mut iteration = 0;

    while satisfied.iter().any(|s| !s) {
        iteration += 1;
        let happy: Vec<usize> = (0..n).filter(|&i| satisfied[i]).collect();
        let waiting: Vec<usize> = (0..n).filter(|&i| !satisfied[i]).collect();
        check_round_invariants(inst, thresholds, &bundles, &happy, &waiting)?;
        let measure = (
            crate::scalar::sum(
                &happy
                    .iter()
                    .map(|&i| inst.bundle_value(i, &bundles[i]))
                    .collect::<Vec<_>>(),
            ),
            happy.len(),
        );
        if let Some(prev) = &progress {
            let grew = match compare(&measure.0, &prev.0) {
                Ordering::Greater => true,
                Ordering::Equal => measure.1 > prev.1,
                Ordering::Less => false,
            };
            if !grew {
                return Err(Error::InvariantViolation(format!(
                    "no progress in round {iteration}"
                )));
            }
        }
        progress = Some(measure);

        let divider = waiting[0];
        let bags = lone_divider_partition(
            inst,
            divider,
            &pool,
            waiting.len(),
            top_goods,
            &thresholds[divider],
        )?;
        trace.push(
            iteration,
            Event::LoneDivider {
                agent: divider,
                bags: bags.clone(),
            },
        );
        let mut shrunk = Vec::with_capacity(bags.len());
        for (j, bag) in bags.iter().enumerate() {
            let top = *bag
                .iter()
                .find(|g| top_goods.contains(g))
                .expect("one top good per bag");
            let small = shrink_minimal(inst, bag, top, &waiting, thresholds)?;
            if small.len() < bag.len() {
                trace.push(
                    iteration,
                    Event::Shrink {
                        bag: j,
                        goods: small.clone(),
                    },
                );
            }
            shrunk.push((top, small));
        }

        let envied = shrunk.iter().find(|(_, bag)| {
            happy
                .iter()
                .any(|&i| strongly_envies_bundle(inst, &bundles[i], i, bag).is_some())
        });
        if let Some((top, bag)) = envied {
            let (agent, goods) = most_envious_shrink(inst, bag, *top, &bundles, &happy)?;
            pool.extend(bundles[agent].iter().copied());
            pool.retain(|g| !goods.contains(g));
            pool.sort_unstable();
            bundles[agent] = goods.clone();
            trace.push(iteration, Event::EnviousSwap { agent, goods });
            continue;
        }

        let small: Vec<Vec<usize>> = shrunk.into_iter().map(|(_, b)| b).collect();
        let graph = ThresholdGraph::new(inst, &small, &waiting, thresholds);
        let pairs = envy_free_matching(&graph)?;
        for &(agent, bag) in &pairs {
            bundles[agent] = small[bag].clone();
            satisfied[agent] = true;
            pool.retain(|g| !small[bag].contains(g));
        }
        trace.push(iteration, Event::Matching { pairs });
    }

    Ok((Allocation::new(bundles, pool, m)?, trace))
}

fn check_top_set<T: Scalar>(inst: &Instance<T>, top_goods: &[usize]) -> Result<()> {
    let n = inst.agent_count();
    let m = inst.good_count();
    let mut is_top = vec![false; m];
    for &g in top_goods {
        if g >= m || is_top[g] {
            return Err(Error::StructureMismatch(
                "top goods must be distinct valid goods".into(),
            ));
        }
        is_top[g] = true;
    }
    if top_goods.len() != n {
        return Err(Error::StructureMismatch(format!(
            "expected {n} top goods, got {}",
            top_goods.len()
        )));
    }
    for (i, row) in inst.rows().iter().enumerate() {
        let low_top = top_goods
            .iter()
            .map(|&g| &row[g])
            .min_by(|a, b| compare(*a, *b));
        let high_rest = (0..m)
            .filter(|&g| !is_top[g])
            .map(|g| &row[g])
            .max_by(|a, b| compare(*a, *b));
        if let (Some(lo), Some(hi)) = (low_top, high_rest) {
            if lo < hi {
                return Err(Error::StructureMismatch(format!(
                    "the given goods are not a top-{n} set for agent {i}"
                )));
            }
        }
    }
    Ok(())
}

fn check_round_invariants<T: Scalar>(
    inst: &Instance<T>,
    thresholds: &[T],
    bundles: &[Vec<usize>],
    happy: &[usize],
    waiting: &[usize],
) -> Result<()> {
    for &i in happy {
        if inst.bundle_value(i, &bundles[i]) < thresholds[i] {
            return Err(Error::InvariantViolation(format!(
                "satisfied agent {i} fell below its threshold"
            )));
        }
        for &j in happy {
            if i != j && strongly_envies_bundle(inst, &bundles[i], i, &bundles[j]).is_some() {
                return Err(Error::InvariantViolation(format!(
                    "agent {i} strongly envies agent {j}"
                )));
            }
        }
    }
    for &i in waiting {
        if let Some(&j) = happy
            .iter()
            .find(|&&j| inst.bundle_value(i, &bundles[j]) >= thresholds[i])
        {
            return Err(Error::InvariantViolation(format!(
                "unsatisfied agent {i} would accept the bundle of agent {j}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shares::thresholds;
    use crate::verification::is_efx;
    use crate::Rational;

    fn inst(rows: &[&[u64]]) -> Instance<Rational> {
        Instance::from_integers(rows).unwrap()
    }

    #[test]
    fn partition_one_top_good_per_bag() {
        let x = inst(&[&[9, 8, 2, 2, 1, 1, 1, 1]]);
        let tau = Rational::from_count(3);
        let bags =
            lone_divider_partition(&x, 0, &(0..8).collect::<Vec<_>>(), 2, &[0, 1], &tau).unwrap();
        assert_eq!(bags.len(), 2);
        let covered: usize = bags.iter().map(Vec::len).sum();
        assert_eq!(covered, 8);
        assert!(bags
            .iter()
            .all(|b| b.iter().filter(|&&g| g < 2).count() == 1));
    }

    #[test]
    fn partition_pads_short_pools() {
        let x = inst(&[&[5, 5, 1]]);
        let bags = lone_divider_partition(&x, 0, &[0, 1, 2], 2, &[0, 1], &Rational::from_count(5))
            .unwrap();
        assert_eq!(bags, vec![vec![0, 2], vec![1]]);
    }

    #[test]
    fn partition_rejects_top_count_mismatch() {
        let x = inst(&[&[5, 5, 1, 1]]);
        let r = lone_divider_partition(&x, 0, &[0, 2, 3], 2, &[0, 1], &Rational::from_count(1));
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn shrink_keeps_protected_good() {
        let x = inst(&[&[5, 1, 1, 1], &[1, 3, 3, 3]]);
        let r = shrink_minimal(
            &x,
            &[0, 1, 2, 3],
            0,
            &[0, 1],
            &[Rational::from_count(6), Rational::from_count(7)],
        )
        .unwrap();
        assert_eq!(r, vec![0, 3]);
        let only = shrink_minimal(
            &x,
            &[0, 1],
            0,
            &[0],
            &[Rational::from_count(1), Rational::from_count(0)],
        )
        .unwrap();
        assert_eq!(only, vec![0]);
        assert!(shrink_minimal(
            &x,
            &[1, 2],
            0,
            &[0],
            &[Rational::from_count(1), Rational::from_count(0)]
        )
        .is_err());
    }

    #[test]
    fn envious_shrink_result_is_not_strongly_envied() {
        let x = inst(&[&[4, 3, 3, 1], &[4, 1, 1, 3]]);
        let bundles = vec![vec![3], vec![1]];
        let (agent, bag) = most_envious_shrink(&x, &[0, 1, 2], 0, &bundles, &[0, 1]).unwrap();
        assert_eq!(agent, 0);
        assert!(bag.contains(&0));
        for i in [0, 1] {
            if i != agent {
                assert!(strongly_envies_bundle(&x, &bundles[i], i, &bag).is_none());
            }
        }
        assert!(most_envious_shrink(&x, &[3], 3, &bundles, &[0, 1]).is_err());
    }

    #[test]
    fn small_top_n_instance() {
        let x = inst(&[&[6, 5, 2, 1, 1, 0], &[5, 6, 1, 2, 0, 1]]);
        let t = thresholds(&x, 3).unwrap();
        let (a, trace) = alloc_topn_lone_divider(&x, &t, &[0, 1]).unwrap();
        assert!(is_efx(&x, &a).is_none());
        for (i, ti) in t.iter().enumerate() {
            assert!(x.bundle_value(i, a.bundle(i)) >= *ti);
        }
        assert!(trace
            .events()
            .any(|e| matches!(e, Event::LoneDivider { .. })));
    }

    #[test]
    fn rejects_non_top_set() {
        let x = inst(&[&[6, 5, 2, 1], &[5, 1, 6, 2]]);
        let t = vec![Rational::from_count(0); 2];
        assert!(matches!(
            alloc_topn_lone_divider(&x, &t, &[0, 1]),
            Err(Error::StructureMismatch(_))
        ));
    }
}
