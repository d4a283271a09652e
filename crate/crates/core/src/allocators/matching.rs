//! Envy-free matchings in agent/bag threshold graphs.
//!
//! A matching is envy-free when no unmatched agent has an edge to a matched
//! bag. Whenever every bag has an edge, a non-empty one exists: repeatedly
//! drop a bag from a Hall-violating set until the remainder can be matched
//! perfectly; its neighbourhood then consists only of matched agents.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdGraph {
    /// Agent ids, one per agent-side vertex.
    pub agents: Vec<usize>,
    /// `edges[b][k]`: bag `b` is acceptable to `agents[k]`.
    pub edges: Vec<Vec<bool>>,
}

impl ThresholdGraph {
    /// Edge `(agent, bag)` iff `v_agent(bag) >= thresholds[agent]`;
    /// `thresholds` is indexed by agent id.
    pub fn new<T: Scalar>(
        inst: &Instance<T>,
        bags: &[Vec<usize>],
        agents: &[usize],
        thresholds: &[T],
    ) -> Self {
        let edges = bags
            .iter()
            .map(|bag| {
                agents
                    .iter()
                    .map(|&i| inst.bundle_value(i, bag) >= thresholds[i])
                    .collect()
            })
            .collect();
        ThresholdGraph {
            agents: agents.to_vec(),
            edges,
        }
    }

    pub fn from_edges(agents: Vec<usize>, edges: Vec<Vec<bool>>) -> Result<Self> {
        if edges.iter().any(|row| row.len() != agents.len()) {
            return Err(Error::DimensionMismatch(
                "edge rows must have one entry per agent".into(),
            ));
        }
        Ok(ThresholdGraph { agents, edges })
    }

    pub fn bag_count(&self) -> usize {
        self.edges.len()
    }

    fn neighbours(&self, bag: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges[bag]
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .map(|(k, _)| k)
    }

    /// Bags in `set` whose neighbourhood is smaller than the set itself.
    pub fn violates_hall(&self, set: &[usize]) -> bool {
        let mut hit = vec![false; self.agents.len()];
        for &b in set {
            for k in self.neighbours(b) {
                hit[k] = true;
            }
        }
        hit.iter().filter(|&&h| h).count() < set.len()
    }

    /// Maximum matching restricted to `bags`; `result[k]` is the bag taken by
    /// agent vertex `k`.
    fn max_matching(&self, bags: &[usize]) -> Vec<Option<usize>> {
        let mut owner: Vec<Option<usize>> = vec![None; self.agents.len()];
        for &b in bags {
            let mut seen = vec![false; self.agents.len()];
            self.augment(b, &mut owner, &mut seen);
        }
        owner
    }

    fn augment(&self, bag: usize, owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for k in self.neighbours(bag).collect::<Vec<_>>() {
            if seen[k] {
                continue;
            }
            seen[k] = true;
            if owner[k].is_none_or(|other| self.augment(other, owner, seen)) {
                owner[k] = Some(bag);
                return true;
            }
        }
        false
    }

    /// Bags reachable from `start` by alternating paths (non-matching edge to
    /// an agent, matching edge back to a bag), restricted to `within`.
    fn alternating_reach(
        &self,
        start: usize,
        owner: &[Option<usize>],
        within: &[bool],
    ) -> Vec<usize> {
        let mut reached = vec![false; self.bag_count()];
        reached[start] = true;
        let mut stack = vec![start];
        while let Some(b) = stack.pop() {
            for k in self.neighbours(b) {
                if let Some(next) = owner[k] {
                    if within[next] && !reached[next] {
                        reached[next] = true;
                        stack.push(next);
                    }
                }
            }
        }
        (0..self.bag_count()).filter(|&b| reached[b]).collect()
    }
}

/// A non-empty envy-free matching as `(agent id, bag index)` pairs, sorted by bag.
///
/// Needs at least as many bags as agents: one bag wanted by two agents has
/// no envy-free matching at all.
pub fn envy_free_matching(graph: &ThresholdGraph) -> Result<Vec<(usize, usize)>> {
    let bag_count = graph.bag_count();
    if bag_count == 0 {
        return Err(Error::Precondition(
            "matching needs at least one bag".into(),
        ));
    }
    if graph.agents.len() > bag_count {
        return Err(Error::Precondition(format!(
            "{} agents but only {bag_count} bags",
            graph.agents.len()
        )));
    }
    if let Some(b) = (0..bag_count).find(|&b| graph.neighbours(b).next().is_none()) {
        return Err(Error::Precondition(format!(
            "bag {b} has no acceptable agent"
        )));
    }

    let mut candidate: Vec<usize> = (0..bag_count).collect();
    loop {
        let owner = graph.max_matching(&candidate);
        let matched = owner.iter().filter(|o| o.is_some()).count();
        if matched == candidate.len() {
            let mut pairs: Vec<(usize, usize)> = owner
                .iter()
                .enumerate()
                .filter_map(|(k, b)| b.map(|b| (graph.agents[k], b)))
                .collect();
            pairs.sort_by_key(|&(_, b)| b);
            return Ok(pairs);
        }
        // An unmatched bag and everything alternating-reachable from it form
        // a Hall violator whose neighbourhood is fully matched inside it.
        let mut within = vec![false; bag_count];
        for &b in &candidate {
            within[b] = true;
        }
        let unmatched = *candidate
            .iter()
            .find(|b| !owner.contains(&Some(**b)))
            .expect("imperfect matching leaves a bag unmatched");
        let mut violator = graph.alternating_reach(unmatched, &owner, &within);
        debug_assert!(graph.violates_hall(&violator));
        // shrink greedily; smaller violators mean fewer rounds
        let mut k = 0;
        while k < violator.len() {
            let mut smaller = violator.clone();
            smaller.remove(k);
            if graph.violates_hall(&smaller) {
                violator = smaller;
                k = 0;
            } else {
                k += 1;
            }
        }
        if violator.len() < 2 {
            return Err(Error::InvariantViolation(
                "Hall violator shrank below two bags despite every bag having an edge".into(),
            ));
        }
        // X minus one bag has at most |X| - 1 neighbours, so once it is
        // perfectly matchable every neighbour is matched
        violator.pop();
        candidate = violator;
    }
}

/// Checks that `pairs` is a matching in `graph` and that no unmatched agent
/// has an edge to a matched bag.
pub fn is_envy_free_matching(graph: &ThresholdGraph, pairs: &[(usize, usize)]) -> bool {
    let mut agent_used = vec![false; graph.agents.len()];
    let mut bag_used = vec![false; graph.bag_count()];
    for &(agent, bag) in pairs {
        let Some(k) = graph.agents.iter().position(|&a| a == agent) else {
            return false;
        };
        if bag >= graph.bag_count() || agent_used[k] || bag_used[bag] || !graph.edges[bag][k] {
            return false;
        }
        agent_used[k] = true;
        bag_used[bag] = true;
    }
    (0..graph.agents.len())
        .filter(|&k| !agent_used[k])
        .all(|k| (0..graph.bag_count()).all(|b| !bag_used[b] || !graph.edges[b][k]))
}
