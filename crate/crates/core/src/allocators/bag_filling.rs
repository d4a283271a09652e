//! Bag filling with claims and swaps, shared by the two ordered-instance
//! algorithms and by the lone divider's partition step.

use crate::allocators::trace::{AllocatorTrace, Event};
use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::scalar::Scalar;

/// Outcome of a bag-filling run over goods `0..len` (in processing order).
pub(crate) struct Filled {
    /// Bag contents by bag index.
    pub bags: Vec<Vec<usize>>,
    /// Bag held by each agent.
    pub held: Vec<usize>,
    /// Goods never put into a bag.
    pub leftover: Vec<usize>,
}

/// `rows[i][g]` is agent `i`'s value of the `g`-th good; goods must be
/// non-increasing in value for every agent and `len >= 2n`.
pub(crate) fn fill_bags<T: Scalar>(
    rows: &[Vec<T>],
    thresholds: &[T],
    singleton_phase: bool,
    mut trace: Option<&mut AllocatorTrace>,
) -> Result<Filled> {
    let n = rows.len();
    let len = rows.first().map_or(0, Vec::len);
    debug_assert!(len >= 2 * n);
    let mut log = |iteration: usize, event: Event| {
        if let Some(t) = trace.as_deref_mut() {
            t.push(iteration, event);
        }
    };

    let mut bags: Vec<Vec<usize>> = vec![Vec::new(); n];
    // sums[i][b] = v_i(bags[b])
    let mut sums: Vec<Vec<T>> = vec![vec![T::zero(); n]; n];
    let mut held: Vec<Option<usize>> = vec![None; n];
    let mut is_open = vec![true; n];
    let mut iteration = 0;

    let mut next_bag = 0;
    if singleton_phase {
        while next_bag < n {
            let Some(agent) =
                (0..n).find(|&i| held[i].is_none() && rows[i][next_bag] >= thresholds[i])
            else {
                break;
            };
            bags[next_bag] = vec![next_bag];
            for (i, row) in rows.iter().enumerate() {
                sums[i][next_bag] = row[next_bag].clone();
            }
            held[agent] = Some(next_bag);
            is_open[next_bag] = false;
            log(
                iteration,
                Event::SingletonClaim {
                    agent,
                    bag: next_bag,
                    good: next_bag,
                },
            );
            next_bag += 1;
        }
    }
    for j in next_bag..n {
        let pair = vec![j, 2 * n - 1 - j];
        for (i, row) in rows.iter().enumerate() {
            sums[i][j] = row[pair[0]].clone() + row[pair[1]].clone();
        }
        log(
            iteration,
            Event::BagInit {
                bag: j,
                goods: pair.clone(),
            },
        );
        bags[j] = pair;
    }
    let mut next_good = 2 * n - next_bag;

    while held.iter().any(Option::is_none) {
        iteration += 1;
        let claim = (0..n).filter(|&i| held[i].is_none()).find_map(|i| {
            (0..n)
                .find(|&b| is_open[b] && sums[i][b] >= thresholds[i])
                .map(|b| (i, b))
        });
        if let Some((agent, bag)) = claim {
            held[agent] = Some(bag);
            is_open[bag] = false;
            log(iteration, Event::Claim { agent, bag });
            continue;
        }
        // largest strict improvement; ties to lowest agent then lowest bag
        let mut swap: Option<(T, usize, usize)> = None;
        for i in 0..n {
            let Some(current) = held[i] else { continue };
            for b in (0..n).filter(|&b| is_open[b]) {
                if sums[i][b] > sums[i][current] {
                    let gain = sums[i][b].clone() - sums[i][current].clone();
                    if swap.as_ref().is_none_or(|(best, _, _)| gain > *best) {
                        swap = Some((gain, i, b));
                    }
                }
            }
        }
        if let Some((_, agent, to)) = swap {
            let from = held[agent].expect("swapping agent holds a bag");
            is_open[from] = true;
            is_open[to] = false;
            held[agent] = Some(to);
            log(iteration, Event::Swap { agent, from, to });
            continue;
        }
        if next_good >= len {
            return Err(Error::InvariantViolation(format!(
                "bag filling ran out of goods with {} agents still unsatisfied",
                held.iter().filter(|h| h.is_none()).count()
            )));
        }
        let bag = (0..n)
            .find(|&b| is_open[b])
            .expect("as many open bags as unsatisfied agents");
        bags[bag].push(next_good);
        for (i, row) in rows.iter().enumerate() {
            sums[i][bag] += row[next_good].clone();
        }
        log(
            iteration,
            Event::Fill {
                good: next_good,
                bag,
            },
        );
        next_good += 1;
    }

    Ok(Filled {
        bags,
        held: held
            .into_iter()
            .map(|h| h.expect("loop ends with every agent holding a bag"))
            .collect(),
        leftover: (next_good..len).collect(),
    })
}

fn check_ordered_by_index<T: Scalar>(inst: &Instance<T>) -> Result<()> {
    let sorted = inst
        .rows()
        .iter()
        .all(|row| row.windows(2).all(|w| w[0] >= w[1]));
    if !sorted {
        return Err(Error::StructureMismatch(
            "goods must be indexed in non-increasing value order for every agent".into(),
        ));
    }
    Ok(())
}

fn run_ordered<T: Scalar>(
    inst: &Instance<T>,
    thresholds: &[T],
    singleton_phase: bool,
) -> Result<(Allocation, AllocatorTrace)> {
    check_ordered_by_index(inst)?;
    let n = inst.agent_count();
    if thresholds.len() != n {
        return Err(Error::DimensionMismatch(
            "one threshold per agent is required".into(),
        ));
    }
    if inst.good_count() < 2 * n {
        return Err(Error::Precondition(format!(
            "bag filling needs at least 2n = {} goods, got {} (pad first)",
            2 * n,
            inst.good_count()
        )));
    }
    let mut trace = AllocatorTrace::new();
    let filled = fill_bags(inst.rows(), thresholds, singleton_phase, Some(&mut trace))?;
    let bundles = filled
        .held
        .iter()
        .map(|&b| filled.bags[b].clone())
        .collect();
    Ok((Allocation::from_bundles(bundles, inst.good_count())?, trace))
}

/// Partial allocation that is EFX and gives every agent `thresholds[i]`,
/// with `thresholds` the 1-out-of-`ceil(3n/2)` shares. Goods must already be
/// sorted by the common order and `m >= 2n`.
pub fn alloc_ordered_efx_3n2<T: Scalar>(
    inst: &Instance<T>,
    thresholds: &[T],
) -> Result<(Allocation, AllocatorTrace)> {
    run_ordered(inst, thresholds, true)
}

/// Partial EF1 allocation meeting the 1-out-of-`4n/3` shares. Requires a
/// sorted instance with `n` a multiple of three and `m >= 2n`.
pub fn alloc_ordered_ef1_4n3<T: Scalar>(
    inst: &Instance<T>,
    thresholds: &[T],
) -> Result<(Allocation, AllocatorTrace)> {
    if !inst.agent_count().is_multiple_of(3) {
        return Err(Error::Precondition(format!(
            "agent count {} is not a multiple of three (pad agents first)",
            inst.agent_count()
        )));
    }
    run_ordered(inst, thresholds, false)
}
