//! Completing a partial allocation by envy-cycle elimination.

use std::fmt;
use std::str::FromStr;

use crate::allocators::trace::{AllocatorTrace, Event};
use crate::error::{Error, Result};
use crate::instance::{detect_structure, Allocation, Instance};
use crate::scalar::{compare, max_of, min_of, Scalar};
use crate::verification::{is_ef1, is_efx};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompletionMode {
    /// Keeps EF1 for any input that is EF1.
    Ef1,
    /// Keeps EFX on ordered instances when every allocated good is worth at
    /// least every pooled good to every agent.
    EfxOrdered,
}

impl fmt::Display for CompletionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompletionMode::Ef1 => "ef1",
            CompletionMode::EfxOrdered => "efx_ordered",
        })
    }
}

impl FromStr for CompletionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ef1" => Ok(CompletionMode::Ef1),
            "efx_ordered" => Ok(CompletionMode::EfxOrdered),
            other => Err(Error::InvalidConfig(format!(
                "unknown completion mode `{other}`"
            ))),
        }
    }
}

fn check_precondition<T: Scalar>(
    inst: &Instance<T>,
    alloc: &Allocation,
    mode: CompletionMode,
) -> Result<()> {
    match mode {
        CompletionMode::Ef1 => {
            if let Some(w) = is_ef1(inst, alloc) {
                return Err(Error::Precondition(format!(
                    "input is not EF1: agent {} envies agent {}",
                    w.envier, w.envied
                )));
            }
        }
        CompletionMode::EfxOrdered => {
            if !detect_structure(inst).ordered {
                return Err(Error::StructureMismatch(
                    "EFX completion needs an ordered instance".into(),
                ));
            }
            if let Some(w) = is_efx(inst, alloc) {
                return Err(Error::Precondition(format!(
                    "input is not EFX: agent {} strongly envies agent {}",
                    w.envier, w.envied
                )));
            }
            let allocated: Vec<usize> = alloc.bundles().iter().flatten().copied().collect();
            for (i, row) in inst.rows().iter().enumerate() {
                let low = min_of(allocated.iter().map(|&g| &row[g]));
                let high = max_of(alloc.pool().iter().map(|&g| &row[g]));
                if let (Some(low), Some(high)) = (low, high) {
                    if low < high {
                        return Err(Error::Precondition(format!(
                            "agent {i} values a pooled good above an allocated one"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Hands out every pooled good. Each step first removes envy cycles by
/// rotating bundles along them, then gives the lowest-index unenvied agent
/// its favourite pooled good (ties to the lowest index, or to the earliest
/// good of the common order in EFX mode).
pub fn envy_cycle_elimination<T: Scalar>(
    inst: &Instance<T>,
    alloc: &Allocation,
    mode: CompletionMode,
    trace: &mut AllocatorTrace,
) -> Result<Allocation> {
    alloc.check_against(inst)?;
    check_precondition(inst, alloc, mode)?;
    let n = inst.agent_count();
    let (mut bundles, mut pool) = alloc.clone().into_parts();
    let mut values: Vec<T> = (0..n).map(|i| inst.bundle_value(i, &bundles[i])).collect();
    let mut iteration = 0;
    // In EFX mode goods must go out in the common order: a tie for the
    // source may be a strict preference for someone else, and the newest good
    // has to be the least valuable one of its bundle for everybody.
    let rank: Option<Vec<usize>> = (mode == CompletionMode::EfxOrdered).then(|| {
        let order = detect_structure(inst).ordering.expect("checked above");
        let mut rank = vec![0; order.len()];
        for (pos, &g) in order.iter().enumerate() {
            rank[g] = pos;
        }
        rank
    });

    while !pool.is_empty() {
        iteration += 1;
        let source = loop {
            // envies[i][j]: i envies j
            let envies: Vec<Vec<bool>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| i != j && values[i] < inst.bundle_value(i, &bundles[j]))
                        .collect()
                })
                .collect();
            if let Some(s) = (0..n).find(|&j| (0..n).all(|i| !envies[i][j])) {
                break s;
            }
            let cycle = find_cycle(&envies);
            let first = bundles[cycle[0]].clone();
            for w in cycle.windows(2) {
                bundles[w[0]] = bundles[w[1]].clone();
            }
            bundles[*cycle.last().expect("cycles are non-empty")] = first;
            for &i in &cycle {
                let v = inst.bundle_value(i, &bundles[i]);
                if v <= values[i] {
                    return Err(Error::InvariantViolation(format!(
                        "rotation did not improve agent {i}"
                    )));
                }
                values[i] = v;
            }
            trace.push(iteration, Event::CycleRotation { cycle });
        };
        let (k, &good) = pool
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| {
                compare(inst.value(source, a), inst.value(source, b)).then_with(|| match &rank {
                    Some(r) => r[b].cmp(&r[a]),
                    None => b.cmp(&a),
                })
            })
            .expect("pool is non-empty");
        pool.remove(k);
        bundles[source].push(good);
        values[source] += inst.value(source, good).clone();
        trace.push(
            iteration,
            Event::SourceGift {
                agent: source,
                good,
            },
        );
    }

    Allocation::new(bundles, pool, inst.good_count())
}

/// Every vertex has an incoming edge; walk backwards along lowest-index
/// enviers until a vertex repeats. Returns the cycle with `c[k]` envying
/// `c[k + 1]` and the last envying the first.
fn find_cycle(envies: &[Vec<bool>]) -> Vec<usize> {
    let n = envies.len();
    let mut seen_at = vec![None; n];
    let mut walk = Vec::new();
    let mut current = 0;
    loop {
        if let Some(start) = seen_at[current] {
            let mut cycle: Vec<usize> = walk[start..].to_vec();
            cycle.reverse();
            return cycle;
        }
        seen_at[current] = Some(walk.len());
        walk.push(current);
        current = (0..n)
            .find(|&i| envies[i][current])
            .expect("no source means every agent is envied");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn inst(rows: &[&[u64]]) -> Instance<Rational> {
        Instance::from_integers(rows).unwrap()
    }

    #[test]
    fn completes_and_keeps_ef1() {
        let x = inst(&[&[3, 1, 2, 2], &[1, 3, 2, 2]]);
        let start = Allocation::from_bundles(vec![vec![0], vec![1]], 4).unwrap();
        let mut trace = AllocatorTrace::new();
        let out = envy_cycle_elimination(&x, &start, CompletionMode::Ef1, &mut trace).unwrap();
        assert!(out.is_complete());
        assert!(is_ef1(&x, &out).is_none());
        assert_eq!(trace.replay(&start, 4).unwrap(), out);
    }

    #[test]
    fn rotates_cycles() {
        // each agent prefers the other's bundle
        let x = inst(&[&[1, 5, 1], &[5, 1, 1]]);
        let start = Allocation::from_bundles(vec![vec![0], vec![1]], 3).unwrap();
        let mut trace = AllocatorTrace::new();
        let out = envy_cycle_elimination(&x, &start, CompletionMode::Ef1, &mut trace).unwrap();
        assert_eq!(out.bundle(0), &[1, 2]);
        assert_eq!(out.bundle(1), &[0]);
        assert!(matches!(
            trace.entries[0].event,
            Event::CycleRotation { .. }
        ));
    }

    #[test]
    fn efx_mode_checks_preconditions() {
        let x = inst(&[&[3, 2, 1], &[3, 2, 1]]);
        let bad = Allocation::from_bundles(vec![vec![2], vec![]], 3).unwrap();
        let mut t = AllocatorTrace::new();
        assert!(matches!(
            envy_cycle_elimination(&x, &bad, CompletionMode::EfxOrdered, &mut t),
            Err(Error::Precondition(_))
        ));
        let good = Allocation::from_bundles(vec![vec![0], vec![1]], 3).unwrap();
        let out = envy_cycle_elimination(&x, &good, CompletionMode::EfxOrdered, &mut t).unwrap();
        assert!(is_efx(&x, &out).is_none());
        let unordered = inst(&[&[3, 2, 1], &[1, 2, 3]]);
        assert!(matches!(
            envy_cycle_elimination(&unordered, &good, CompletionMode::EfxOrdered, &mut t),
            Err(Error::StructureMismatch(_))
        ));
    }

    #[test]
    fn efx_mode_follows_common_order_on_ties() {
        // agent 0 is indifferent between goods 5 and 2, agent 1 values 2 at zero
        let x = inst(&[
            &[8, 7, 2, 10, 7, 2, 3],
            &[7, 2, 0, 9, 6, 1, 2],
            &[7, 7, 0, 9, 7, 4, 5],
        ]);
        let start = Allocation::from_bundles(vec![vec![3], vec![0], vec![4]], 7).unwrap();
        let mut t = AllocatorTrace::new();
        let out = envy_cycle_elimination(&x, &start, CompletionMode::EfxOrdered, &mut t).unwrap();
        assert!(is_efx(&x, &out).is_none(), "{out:?}");
        assert_eq!(t.replay(&start, 7).unwrap(), out);
    }

    #[test]
    fn ef1_mode_rejects_non_ef1_input() {
        let x = inst(&[&[1, 1, 1], &[1, 1, 1]]);
        let start = Allocation::from_bundles(vec![vec![0, 1], vec![]], 3).unwrap();
        let mut t = AllocatorTrace::new();
        assert!(envy_cycle_elimination(&x, &start, CompletionMode::Ef1, &mut t).is_err());
    }
}
