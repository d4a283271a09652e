//! End-to-end solvers: structure check, padding, partial allocation,
//! completion and verification.

use std::fmt;
use std::str::FromStr;

use crate::allocators::bag_filling::{alloc_ordered_ef1_4n3, alloc_ordered_efx_3n2};
use crate::allocators::envy_cycle::{envy_cycle_elimination, CompletionMode};
use crate::allocators::lone_divider::alloc_topn_lone_divider;
use crate::allocators::trace::AllocatorTrace;
use crate::error::{Error, Result};
use crate::instance::{
    detect_structure, pad_agents_to_multiple_of_three, pad_goods, strip_dummies, Allocation,
    Instance,
};
use crate::scalar::Scalar;
use crate::shares;
use crate::verification::{report_with_thresholds, FairnessReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// `a1`. Ordered instances: EFX and 1-out-of-`ceil(3n/2)`.
    OrderedEfx,
    /// `a2`. Top-`n` instances: partial EFX, complete EF1, 1-out-of-`ceil(3n/2)`.
    TopNLoneDivider,
    /// `a3`. Ordered instances: EF1 and 1-out-of-`4 ceil(n/3)`.
    OrderedEf1,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::OrderedEfx,
        Algorithm::TopNLoneDivider,
        Algorithm::OrderedEf1,
    ];

    /// Divisor `d` of the share this algorithm guarantees for `n` agents.
    pub fn divisor(self, n: usize) -> usize {
        match self {
            Algorithm::OrderedEfx | Algorithm::TopNLoneDivider => (3 * n).div_ceil(2),
            Algorithm::OrderedEf1 => 4 * n.div_ceil(3),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::OrderedEfx => "a1",
            Algorithm::TopNLoneDivider => "a2",
            Algorithm::OrderedEf1 => "a3",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ordered_efx" | "a1" => Ok(Algorithm::OrderedEfx),
            "top_n" | "a2" => Ok(Algorithm::TopNLoneDivider),
            "ordered_ef1" | "a3" => Ok(Algorithm::OrderedEf1),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm `{other}` (expected a1, a2 or a3)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub algorithm: Algorithm,
    pub divisor: usize,
    pub thresholds: Vec<T>,
    /// Allocator output before completion, in the caller's indices.
    pub partial: Allocation,
    pub allocation: Allocation,
    pub partial_report: FairnessReport<T>,
    pub report: FairnessReport<T>,
    /// Allocator events, in the allocator's own (sorted, padded) indices.
    pub trace: AllocatorTrace,
    /// Completion events, in the caller's indices.
    pub completion_trace: AllocatorTrace,
    /// `good_order[k]` is the caller's index of the allocator's good `k`;
    /// `None` for padding.
    pub good_order: Vec<Option<usize>>,
}

impl<T: Scalar> Solution<T> {
    /// Whether the verifier confirms every promise of the algorithm.
    pub fn certified(&self) -> bool {
        let r = &self.report;
        let shares = r.complete && r.mms_holds(self.divisor);
        match self.algorithm {
            Algorithm::OrderedEfx => shares && r.efx,
            Algorithm::TopNLoneDivider => {
                shares
                    && r.ef1
                    && self.partial_report.efx
                    && self.partial_report.mms_holds(self.divisor)
            }
            Algorithm::OrderedEf1 => shares && r.ef1,
        }
    }
}

pub fn solve_complete<T: Scalar>(inst: &Instance<T>, algorithm: Algorithm) -> Result<Solution<T>> {
    let n = inst.agent_count();
    let m = inst.good_count();
    let d = algorithm.divisor(n);
    let thresholds = shares::thresholds(inst, d)?;

    let (partial, trace, good_order) = match algorithm {
        Algorithm::OrderedEfx | Algorithm::OrderedEf1 => {
            let order = detect_structure(inst)
                .ordering
                .ok_or_else(|| Error::StructureMismatch("instance is not ordered".into()))?;
            let sorted = inst.permute_goods(&order)?;
            if algorithm == Algorithm::OrderedEfx {
                let padded = pad_goods(&sorted, m.max(2 * n));
                let (alloc, trace) = alloc_ordered_efx_3n2(&padded, &thresholds)?;
                let map = padding_map(&order, padded.good_count());
                (alloc.map_goods(&map, m)?, trace, map)
            } else {
                let agents = pad_agents_to_multiple_of_three(&sorted);
                let padded = pad_goods(&agents, m.max(2 * agents.agent_count()));
                let all_thresholds: Vec<T> = (0..agents.agent_count())
                    .map(|i| thresholds[agents.dummy_source(i).unwrap_or(i)].clone())
                    .collect();
                let (alloc, trace) = alloc_ordered_ef1_4n3(&padded, &all_thresholds)?;
                let stripped = strip_dummies(&padded, &alloc)?;
                let map: Vec<Option<usize>> =
                    stripped.good_map.iter().map(|&k| Some(order[k])).collect();
                let full_map = padding_map(&order, padded.good_count());
                (stripped.allocation.map_goods(&map, m)?, trace, full_map)
            }
        }
        Algorithm::TopNLoneDivider => {
            let padded = pad_goods(inst, m.max(2 * n));
            let structure = detect_structure(&padded);
            let top = structure
                .top_set(n)
                .ok_or_else(|| {
                    Error::StructureMismatch(format!("instance has no common top-{n} set"))
                })?
                .to_vec();
            let (alloc, trace) = alloc_topn_lone_divider(&padded, &thresholds, &top)?;
            let identity: Vec<usize> = (0..m).collect();
            let map = padding_map(&identity, padded.good_count());
            (alloc.map_goods(&map, m)?, trace, map)
        }
    };

    let with_d = [(d, thresholds.clone())];
    let partial_report = report_with_thresholds(inst, &partial, &with_d)?;
    let mode = match algorithm {
        Algorithm::OrderedEfx => CompletionMode::EfxOrdered,
        _ => CompletionMode::Ef1,
    };
    let mut completion_trace = AllocatorTrace::new();
    let allocation = envy_cycle_elimination(inst, &partial, mode, &mut completion_trace)?;
    let report = report_with_thresholds(inst, &allocation, &with_d)?;
    Ok(Solution {
        algorithm,
        divisor: d,
        thresholds,
        partial,
        allocation,
        partial_report,
        report,
        trace,
        completion_trace,
        good_order,
    })
}

/// Only the partial allocation, for callers that complete it themselves.
pub fn solve_partial<T: Scalar>(
    inst: &Instance<T>,
    algorithm: Algorithm,
) -> Result<(Allocation, FairnessReport<T>)> {
    let s = solve_complete(inst, algorithm)?;
    Ok((s.partial, s.partial_report))
}

fn padding_map(order: &[usize], padded_len: usize) -> Vec<Option<usize>> {
    (0..padded_len).map(|k| order.get(k).copied()).collect()
}
