//! Instances, allocations, structure detection and instance transforms.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{self, compare, Scalar};

/// Additive valuations of `n` agents over `m` indivisible goods.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<T> {
    valuations: Vec<Vec<T>>,
    good_count: usize,
    dummy_goods: Vec<bool>,
    /// `Some(source)` for an agent that copies the row of `source`.
    dummy_agents: Vec<Option<usize>>,
    agent_labels: Option<Vec<String>>,
    good_labels: Option<Vec<String>>,
}

impl<T: Scalar> Instance<T> {
    pub fn new(valuations: Vec<Vec<T>>) -> Result<Self> {
        let n = valuations.len();
        if n == 0 {
            return Err(Error::InvalidInstance(
                "at least one agent is required".into(),
            ));
        }
        let m = valuations[0].len();
        for (i, row) in valuations.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidInstance(format!(
                    "agent {i} has {} values, expected {m}",
                    row.len()
                )));
            }
            if let Some(g) = row.iter().position(|v| *v < T::zero()) {
                return Err(Error::InvalidInstance(format!(
                    "agent {i} has a negative value for good {g}"
                )));
            }
        }
        Ok(Instance {
            valuations,
            good_count: m,
            dummy_goods: vec![false; m],
            dummy_agents: vec![None; n],
            agent_labels: None,
            good_labels: None,
        })
    }

    pub fn from_integers<R: AsRef<[u64]>>(rows: &[R]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&v| T::from_count(v)).collect())
                .collect(),
        )
    }

    /// Attaches dummy flags; checks the dummy invariants.
    pub fn with_dummies(
        mut self,
        dummy_goods: Vec<bool>,
        dummy_agents: Vec<Option<usize>>,
    ) -> Result<Self> {
        if dummy_goods.len() != self.good_count || dummy_agents.len() != self.agent_count() {
            return Err(Error::InvalidInstance("dummy flag length mismatch".into()));
        }
        for (g, _) in dummy_goods.iter().enumerate().filter(|(_, d)| **d) {
            if self.valuations.iter().any(|row| !row[g].is_zero()) {
                return Err(Error::InvalidInstance(format!(
                    "dummy good {g} has a non-zero value"
                )));
            }
        }
        for (i, source) in dummy_agents.iter().enumerate() {
            if let Some(s) = *source {
                if s >= self.agent_count() || dummy_agents[s].is_some() {
                    return Err(Error::InvalidInstance(format!(
                        "dummy agent {i} has invalid source {s}"
                    )));
                }
                if self.valuations[i] != self.valuations[s] {
                    return Err(Error::InvalidInstance(format!(
                        "dummy agent {i} does not copy agent {s}"
                    )));
                }
            }
        }
        self.dummy_goods = dummy_goods;
        self.dummy_agents = dummy_agents;
        Ok(self)
    }

    pub fn with_labels(
        mut self,
        agent_labels: Option<Vec<String>>,
        good_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if let Some(l) = &agent_labels {
            if l.len() != self.agent_count() {
                return Err(Error::InvalidInstance("agent label count mismatch".into()));
            }
        }
        if let Some(l) = &good_labels {
            if l.len() != self.good_count {
                return Err(Error::InvalidInstance("good label count mismatch".into()));
            }
        }
        let bad = |l: &Option<Vec<String>>| {
            l.iter()
                .flatten()
                .any(|s| s.is_empty() || s.chars().any(char::is_whitespace))
        };
        if bad(&agent_labels) || bad(&good_labels) {
            return Err(Error::InvalidInstance(
                "labels must be non-empty and contain no whitespace".into(),
            ));
        }
        self.agent_labels = agent_labels;
        self.good_labels = good_labels;
        Ok(self)
    }

    pub fn agent_count(&self) -> usize {
        self.valuations.len()
    }

    pub fn good_count(&self) -> usize {
        self.good_count
    }

    pub fn value(&self, agent: usize, good: usize) -> &T {
        &self.valuations[agent][good]
    }

    pub fn row(&self, agent: usize) -> &[T] {
        &self.valuations[agent]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.valuations
    }

    pub fn bundle_value(&self, agent: usize, goods: &[usize]) -> T {
        scalar::sum(goods.iter().map(|&g| &self.valuations[agent][g]))
    }

    /// Value of `goods` without `skip` (the good must be in the bundle).
    pub fn value_without(&self, agent: usize, goods: &[usize], skip: usize) -> T {
        scalar::sum(
            goods
                .iter()
                .filter(|&&g| g != skip)
                .map(|&g| &self.valuations[agent][g]),
        )
    }

    pub fn is_dummy_good(&self, good: usize) -> bool {
        self.dummy_goods[good]
    }

    pub fn dummy_goods(&self) -> &[bool] {
        &self.dummy_goods
    }

    pub fn dummy_source(&self, agent: usize) -> Option<usize> {
        self.dummy_agents[agent]
    }

    pub fn dummy_agents(&self) -> &[Option<usize>] {
        &self.dummy_agents
    }

    pub fn has_dummies(&self) -> bool {
        self.dummy_goods.iter().any(|&d| d) || self.dummy_agents.iter().any(Option::is_some)
    }

    pub fn agent_labels(&self) -> Option<&[String]> {
        self.agent_labels.as_deref()
    }

    pub fn good_labels(&self) -> Option<&[String]> {
        self.good_labels.as_deref()
    }

    /// Goods reindexed so that new good `k` is old good `order[k]`.
    pub fn permute_goods(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.good_count)?;
        Ok(Instance {
            valuations: self
                .valuations
                .iter()
                .map(|row| order.iter().map(|&g| row[g].clone()).collect())
                .collect(),
            good_count: self.good_count,
            dummy_goods: order.iter().map(|&g| self.dummy_goods[g]).collect(),
            dummy_agents: self.dummy_agents.clone(),
            agent_labels: self.agent_labels.clone(),
            good_labels: self
                .good_labels
                .as_ref()
                .map(|l| order.iter().map(|&g| l[g].clone()).collect()),
        })
    }

    /// Keeps only the listed goods, in the given order.
    pub fn restrict_goods(&self, keep: &[usize]) -> Self {
        Instance {
            valuations: self
                .valuations
                .iter()
                .map(|row| keep.iter().map(|&g| row[g].clone()).collect())
                .collect(),
            good_count: keep.len(),
            dummy_goods: keep.iter().map(|&g| self.dummy_goods[g]).collect(),
            dummy_agents: self.dummy_agents.clone(),
            agent_labels: self.agent_labels.clone(),
            good_labels: self
                .good_labels
                .as_ref()
                .map(|l| keep.iter().map(|&g| l[g].clone()).collect()),
        }
    }

    /// Replaces the valuation matrix, keeping flags and labels.
    pub fn with_valuations(&self, valuations: Vec<Vec<T>>) -> Result<Self> {
        let fresh = Instance::new(valuations)?;
        if fresh.agent_count() != self.agent_count() || fresh.good_count != self.good_count {
            return Err(Error::DimensionMismatch(
                "replacement valuations have a different shape".into(),
            ));
        }
        Ok(Instance {
            valuations: fresh.valuations,
            ..self.clone()
        })
    }

    /// Multiplies one agent's row by a positive factor.
    pub fn scale_agent(&self, agent: usize, factor: &T) -> Self {
        let mut out = self.clone();
        for v in &mut out.valuations[agent] {
            *v = v.clone() * factor.clone();
        }
        out
    }
}

fn check_permutation(order: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    if order.len() != len {
        return Err(Error::InvalidInstance(
            "permutation has wrong length".into(),
        ));
    }
    for &g in order {
        if g >= len || std::mem::replace(&mut seen[g], true) {
            return Err(Error::InvalidInstance(
                "not a permutation of the goods".into(),
            ));
        }
    }
    Ok(())
}

/// Bundles per agent plus the pool of unallocated goods. Goods are kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Allocation {
    bundles: Vec<Vec<usize>>,
    pool: Vec<usize>,
}

impl Allocation {
    pub fn new(
        mut bundles: Vec<Vec<usize>>,
        mut pool: Vec<usize>,
        good_count: usize,
    ) -> Result<Self> {
        let mut seen = vec![false; good_count];
        for g in bundles.iter().flatten().chain(pool.iter()) {
            if *g >= good_count {
                return Err(Error::InvalidAllocation(format!(
                    "good {g} out of range (m = {good_count})"
                )));
            }
            if std::mem::replace(&mut seen[*g], true) {
                return Err(Error::InvalidAllocation(format!("good {g} appears twice")));
            }
        }
        bundles.iter_mut().for_each(|b| b.sort_unstable());
        pool.sort_unstable();
        Ok(Allocation { bundles, pool })
    }

    /// Bundles as given; every good not in a bundle goes to the pool.
    pub fn from_bundles(bundles: Vec<Vec<usize>>, good_count: usize) -> Result<Self> {
        let used: BTreeSet<usize> = bundles.iter().flatten().copied().collect();
        let pool = (0..good_count).filter(|g| !used.contains(g)).collect();
        Allocation::new(bundles, pool, good_count)
    }

    pub fn empty(agent_count: usize, good_count: usize) -> Self {
        Allocation {
            bundles: vec![Vec::new(); agent_count],
            pool: (0..good_count).collect(),
        }
    }

    pub fn agent_count(&self) -> usize {
        self.bundles.len()
    }

    pub fn bundle(&self, agent: usize) -> &[usize] {
        &self.bundles[agent]
    }

    pub fn bundles(&self) -> &[Vec<usize>] {
        &self.bundles
    }

    pub fn pool(&self) -> &[usize] {
        &self.pool
    }

    pub fn is_complete(&self) -> bool {
        self.pool.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Vec<usize>>, Vec<usize>) {
        (self.bundles, self.pool)
    }

    /// Total number of goods covered by bundles and pool.
    pub fn covered(&self) -> usize {
        self.bundles.iter().map(Vec::len).sum::<usize>() + self.pool.len()
    }

    /// Checks that the allocation fits an instance with every good accounted for.
    pub fn check_against<T>(&self, inst: &Instance<T>) -> Result<()> {
        if self.bundles.len() != inst.valuations.len() {
            return Err(Error::DimensionMismatch(format!(
                "allocation has {} bundles, instance has {} agents",
                self.bundles.len(),
                inst.valuations.len()
            )));
        }
        if self.covered() != inst.good_count
            || self
                .bundles
                .iter()
                .flatten()
                .chain(&self.pool)
                .any(|&g| g >= inst.good_count)
        {
            return Err(Error::DimensionMismatch(
                "allocation does not cover exactly the instance's goods".into(),
            ));
        }
        Ok(())
    }

    /// Renames goods through `map` (old index -> new index), dropping `None`.
    pub fn map_goods(&self, map: &[Option<usize>], good_count: usize) -> Result<Self> {
        let f = |goods: &[usize]| goods.iter().filter_map(|&g| map[g]).collect::<Vec<_>>();
        Allocation::new(
            self.bundles.iter().map(|b| f(b)).collect(),
            f(&self.pool),
            good_count,
        )
    }
}

/// Which structural promises an instance satisfies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureReport {
    pub ordered: bool,
    /// Goods from most to least valuable for every agent; present iff ordered.
    pub ordering: Option<Vec<usize>>,
    /// Largest `k` in `1..=m` for which the instance is top-`k`; 0 when `m = 0`.
    pub top_k_max: usize,
    /// `top_sets[k - 1]` is a common top-`k` set if one exists.
    pub top_sets: Vec<Option<Vec<usize>>>,
}

impl StructureReport {
    pub fn is_top_k(&self, k: usize) -> bool {
        k == 0 || self.top_set(k).is_some()
    }

    pub fn top_set(&self, k: usize) -> Option<&[usize]> {
        self.top_sets.get(k.checked_sub(1)?)?.as_deref()
    }
}

pub fn detect_structure<T: Scalar>(inst: &Instance<T>) -> StructureReport {
    let m = inst.good_count();
    let mut order: Vec<usize> = (0..m).collect();
    // lexicographic on the column of all agents' values, descending; stable
    order.sort_by(|&a, &b| {
        inst.rows()
            .iter()
            .map(|row| compare(&row[b], &row[a]))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    let ordered = inst
        .rows()
        .iter()
        .all(|row| order.windows(2).all(|w| row[w[0]] >= row[w[1]]));
    let top_sets: Vec<_> = (1..=m).map(|k| common_top_set(inst, k)).collect();
    let top_k_max = top_sets
        .iter()
        .rposition(Option::is_some)
        .map_or(0, |p| p + 1);
    StructureReport {
        ordered,
        ordering: ordered.then_some(order),
        top_k_max,
        top_sets,
    }
}

/// A set of `k` goods that is a top-`k` set for every agent, ties resolved
/// in favour of agreement.
fn common_top_set<T: Scalar>(inst: &Instance<T>, k: usize) -> Option<Vec<usize>> {
    let m = inst.good_count();
    let mut required = vec![false; m];
    let mut allowed = vec![true; m];
    for row in inst.rows() {
        let mut sorted: Vec<&T> = row.iter().collect();
        sorted.sort_by(|a, b| compare(*b, *a));
        let kth = sorted[k - 1];
        for g in 0..m {
            match compare(&row[g], kth) {
                Ordering::Greater => required[g] = true,
                Ordering::Less => allowed[g] = false,
                Ordering::Equal => {}
            }
        }
    }
    if (0..m).any(|g| required[g] && !allowed[g]) {
        return None;
    }
    let mut set: Vec<usize> = (0..m).filter(|&g| required[g]).collect();
    if set.len() > k {
        return None;
    }
    for g in 0..m {
        if set.len() == k {
            break;
        }
        if allowed[g] && !required[g] {
            set.push(g);
        }
    }
    if set.len() < k {
        return None;
    }
    set.sort_unstable();
    Some(set)
}

/// Appends zero-valued dummy goods until there are `target` goods.
pub fn pad_goods<T: Scalar>(inst: &Instance<T>, target: usize) -> Instance<T> {
    let mut out = inst.clone();
    let extra = target.saturating_sub(inst.good_count);
    if extra == 0 {
        return out;
    }
    for row in &mut out.valuations {
        row.extend(std::iter::repeat_n(T::zero(), extra));
    }
    out.good_count += extra;
    out.dummy_goods.extend(std::iter::repeat_n(true, extra));
    if let Some(labels) = &mut out.good_labels {
        let base = labels.len();
        labels.extend((0..extra).map(|k| format!("dummy{}", base + k)));
    }
    out
}

/// Copies agent 0 until the agent count is a multiple of three.
pub fn pad_agents_to_multiple_of_three<T: Scalar>(inst: &Instance<T>) -> Instance<T> {
    let mut out = inst.clone();
    let n = inst.agent_count();
    let target = n.div_ceil(3) * 3;
    for k in n..target {
        out.valuations.push(inst.valuations[0].clone());
        out.dummy_agents.push(Some(0));
        if let Some(labels) = &mut out.agent_labels {
            labels.push(format!("dummy{k}"));
        }
    }
    out
}

/// Result of removing dummy agents and goods.
#[derive(Clone, Debug, PartialEq)]
pub struct Stripped<T> {
    pub instance: Instance<T>,
    pub allocation: Allocation,
    /// `agent_map[new] = old`
    pub agent_map: Vec<usize>,
    /// `good_map[new] = old`
    pub good_map: Vec<usize>,
}

/// Deletes dummy goods everywhere and returns the bundles of dummy agents to the pool.
pub fn strip_dummies<T: Scalar>(inst: &Instance<T>, alloc: &Allocation) -> Result<Stripped<T>> {
    alloc.check_against(inst)?;
    let good_map: Vec<usize> = (0..inst.good_count)
        .filter(|&g| !inst.dummy_goods[g])
        .collect();
    let agent_map: Vec<usize> = (0..inst.agent_count())
        .filter(|&i| inst.dummy_agents[i].is_none())
        .collect();
    let mut new_index = vec![None; inst.good_count];
    for (new, &old) in good_map.iter().enumerate() {
        new_index[old] = Some(new);
    }
    let remap = |goods: &[usize]| {
        goods
            .iter()
            .filter_map(|&g| new_index[g])
            .collect::<Vec<_>>()
    };
    let bundles = agent_map.iter().map(|&i| remap(alloc.bundle(i))).collect();
    let mut pool = remap(alloc.pool());
    for i in 0..inst.agent_count() {
        if inst.dummy_agents[i].is_some() {
            pool.extend(remap(alloc.bundle(i)));
        }
    }
    let instance = Instance {
        valuations: agent_map
            .iter()
            .map(|&i| {
                good_map
                    .iter()
                    .map(|&g| inst.valuations[i][g].clone())
                    .collect()
            })
            .collect(),
        good_count: good_map.len(),
        dummy_goods: vec![false; good_map.len()],
        dummy_agents: vec![None; agent_map.len()],
        agent_labels: inst
            .agent_labels
            .as_ref()
            .map(|l| agent_map.iter().map(|&i| l[i].clone()).collect()),
        good_labels: inst
            .good_labels
            .as_ref()
            .map(|l| good_map.iter().map(|&g| l[g].clone()).collect()),
    };
    let allocation = Allocation::new(bundles, pool, good_map.len())?;
    Ok(Stripped {
        instance,
        allocation,
        agent_map,
        good_map,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Ordered,
    TopN,
    General,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Ordered => "ordered",
            Family::TopN => "top_n",
            Family::General => "general",
        })
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ordered" => Ok(Family::Ordered),
            "top_n" | "top-n" | "topn" => Ok(Family::TopN),
            "general" => Ok(Family::General),
            other => Err(format!(
                "unknown family `{other}` (ordered | top_n | general)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub family: Family,
    pub agents: usize,
    pub goods: usize,
    pub max_value: u64,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.agents == 0 || self.goods == 0 || self.max_value == 0 {
            return Err(Error::InvalidConfig(format!(
                "need n >= 1, m >= 1 and max value >= 1 (got n={}, m={}, max={})",
                self.agents, self.goods, self.max_value
            )));
        }
        Ok(())
    }
}

/// Deterministic random instance for a configuration.
pub fn generate<T: Scalar>(cfg: &GeneratorConfig) -> Result<Instance<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, m, max) = (cfg.agents, cfg.goods, cfg.max_value);
    let draw_row =
        |rng: &mut ChaCha8Rng| -> Vec<u64> { (0..m).map(|_| rng.gen_range(0..=max)).collect() };
    let rows: Vec<Vec<u64>> = match cfg.family {
        Family::General => (0..n).map(|_| draw_row(&mut rng)).collect(),
        Family::Ordered => {
            let magnitudes: Vec<u64> = (0..m).map(|_| rng.gen()).collect();
            let mut rank: Vec<usize> = (0..m).collect();
            rank.sort_by(|&a, &b| magnitudes[b].cmp(&magnitudes[a]).then(a.cmp(&b)));
            (0..n)
                .map(|_| {
                    let mut values = draw_row(&mut rng);
                    values.sort_unstable_by(|a, b| b.cmp(a));
                    let mut row = vec![0; m];
                    for (r, &g) in rank.iter().enumerate() {
                        row[g] = values[r];
                    }
                    row
                })
                .collect()
        }
        Family::TopN => {
            let mut goods: Vec<usize> = (0..m).collect();
            goods.shuffle(&mut rng);
            let top: BTreeSet<usize> = goods.into_iter().take(n.min(m)).collect();
            (0..n)
                .map(|_| {
                    let mut row = draw_row(&mut rng);
                    for &g in &top {
                        row[g] += max + 1;
                    }
                    row
                })
                .collect()
        }
    };
    Instance::from_integers(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn inst(rows: &[&[u64]]) -> Instance<Rational> {
        Instance::from_integers(rows).unwrap()
    }

    #[test]
    fn detects_ordered_identity() {
        let i_a = inst(&[&[3, 2, 2, 1, 1], &[4, 3, 1, 1, 1]]);
        let s = detect_structure(&i_a);
        assert!(s.ordered);
        assert_eq!(s.ordering.as_deref(), Some(&[0, 1, 2, 3, 4][..]));
        assert_eq!(s.top_k_max, 5);
        assert!((1..=5).all(|k| s.is_top_k(k)));
    }

    #[test]
    fn example_instance_orders_good_four_first() {
        let e = inst(&[&[1, 1, 1, 1, 1], &[1, 1, 1, 1, 1], &[1, 1, 1, 2, 1]]);
        let s = detect_structure(&e);
        assert!(s.ordered);
        assert_eq!(s.ordering.as_deref(), Some(&[3, 0, 1, 2, 4][..]));
    }

    #[test]
    fn unordered_but_top_two() {
        let i_b = inst(&[&[5, 4, 2, 1], &[4, 5, 1, 2]]);
        let s = detect_structure(&i_b);
        assert!(!s.ordered);
        assert!(s.ordering.is_none());
        assert!(s.top_k_max >= 2);
        assert_eq!(s.top_set(2), Some(&[0, 1][..]));
        assert!(!s.is_top_k(1));
        assert!(!s.is_top_k(3));
    }

    #[test]
    fn optimistic_ties_in_top_sets() {
        // agent 0 is indifferent between goods 1 and 2, agent 1 prefers 1
        let x = inst(&[&[5, 3, 3, 0], &[5, 4, 1, 0]]);
        let s = detect_structure(&x);
        assert_eq!(s.top_set(2), Some(&[0, 1][..]));
    }

    #[test]
    fn invalid_instances_rejected() {
        assert!(Instance::<Rational>::new(vec![]).is_err());
        assert!(Instance::<f64>::new(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(Instance::<f64>::new(vec![vec![-1.0]]).is_err());
        let base = inst(&[&[1, 0], &[2, 0]]);
        assert!(base
            .clone()
            .with_dummies(vec![true, false], vec![None, None])
            .is_err());
        assert!(base
            .clone()
            .with_dummies(vec![false, true], vec![None, Some(0)])
            .is_err());
        assert!(base
            .with_dummies(vec![false, true], vec![None, None])
            .is_ok());
    }

    #[test]
    fn pad_goods_appends_zero_dummies() {
        let x = inst(&[&[1, 2, 3, 4], &[1, 1, 1, 1], &[0, 0, 0, 5]]);
        let p = pad_goods(&x, 6);
        assert_eq!(p.good_count(), 6);
        assert_eq!(p.dummy_goods(), &[false, false, false, false, true, true]);
        assert!(p
            .rows()
            .iter()
            .all(|r| r[4] == Rational::from_count(0) && r[5] == Rational::from_count(0)));
        let y = inst(&[&[1, 1, 1, 1, 1], &[1, 1, 1, 1, 1]]);
        assert_eq!(pad_goods(&y, 5), y);
    }

    #[test]
    fn pad_agents_copies_agent_zero() {
        let three = inst(&[&[1], &[2], &[3]]);
        assert_eq!(pad_agents_to_multiple_of_three(&three), three);
        let four = inst(&[&[1, 2], &[2, 1], &[3, 3], &[4, 0]]);
        let p = pad_agents_to_multiple_of_three(&four);
        assert_eq!(p.agent_count(), 6);
        assert_eq!(p.row(4), four.row(0));
        assert_eq!(p.row(5), four.row(0));
        assert_eq!(p.dummy_source(4), Some(0));
        assert_eq!(p.dummy_source(3), None);
        // 4 * ceil(n/3) is unchanged by padding
        assert_eq!(
            4 * four.agent_count().div_ceil(3),
            4 * (p.agent_count() / 3)
        );
    }

    #[test]
    fn strip_moves_dummy_agent_bundles_to_pool() {
        let four = inst(&[&[1, 2, 3], &[2, 1, 3], &[3, 3, 3], &[4, 0, 1]]);
        let p = pad_agents_to_multiple_of_three(&four);
        let alloc = Allocation::new(
            vec![vec![0], vec![1], vec![], vec![], vec![2], vec![]],
            vec![],
            3,
        )
        .unwrap();
        let s = strip_dummies(&p, &alloc).unwrap();
        assert_eq!(s.instance, four);
        assert_eq!(s.allocation.bundles(), &[vec![0], vec![1], vec![], vec![]]);
        assert_eq!(s.allocation.pool(), &[2]);
        let none = strip_dummies(&four, &Allocation::empty(4, 3)).unwrap();
        assert_eq!(none.instance, four);
        assert_eq!(none.allocation, Allocation::empty(4, 3));
    }

    #[test]
    fn pad_then_strip_is_identity() {
        let x = inst(&[&[3, 1], &[2, 2]]);
        let p = pad_goods(&x, 5);
        let alloc = Allocation::new(vec![vec![0, 3], vec![1]], vec![2, 4], 5).unwrap();
        let s = strip_dummies(&p, &alloc).unwrap();
        assert_eq!(s.instance, x);
        assert_eq!(s.allocation.bundles(), &[vec![0], vec![1]]);
        assert!(s.allocation.is_complete());
    }

    #[test]
    fn allocation_validation() {
        assert!(Allocation::new(vec![vec![0], vec![0]], vec![], 2).is_err());
        assert!(Allocation::new(vec![vec![3]], vec![], 2).is_err());
        let a = Allocation::from_bundles(vec![vec![2, 0]], 4).unwrap();
        assert_eq!(a.bundle(0), &[0, 2]);
        assert_eq!(a.pool(), &[1, 3]);
        assert!(!a.is_complete());
    }

    #[test]
    fn generator_families_have_promised_structure() {
        for seed in 0..200 {
            for (family, n, m) in [
                (Family::Ordered, 3, 8),
                (Family::TopN, 3, 8),
                (Family::TopN, 4, 3),
            ] {
                let cfg = GeneratorConfig {
                    family,
                    agents: n,
                    goods: m,
                    max_value: 20,
                    seed,
                };
                let x: Instance<Rational> = generate(&cfg).unwrap();
                let s = detect_structure(&x);
                match family {
                    Family::Ordered => assert!(s.ordered),
                    _ => assert!(s.is_top_k(n.min(m))),
                }
                assert_eq!(generate::<Rational>(&cfg).unwrap(), x);
            }
        }
    }

    #[test]
    fn generator_rejects_bad_config() {
        let cfg = GeneratorConfig {
            family: Family::General,
            agents: 1,
            goods: 0,
            max_value: 5,
            seed: 1,
        };
        assert!(matches!(
            generate::<f64>(&cfg),
            Err(Error::InvalidConfig(_))
        ));
    }
}
