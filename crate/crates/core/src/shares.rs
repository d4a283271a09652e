//! 1-out-of-`d` maximin shares and normalization.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::instance::{detect_structure, Instance};
use crate::scalar::{compare, min_of, sum, Scalar};

/// Default largest good count accepted by [`mms_bruteforce`].
pub const DEFAULT_ORACLE_LIMIT: usize = 12;

/// Maximin share of one agent together with a partition attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct MaximinResult<T> {
    pub agent: usize,
    pub divisor: usize,
    pub value: T,
    /// Exactly `divisor` bundles, possibly empty, covering every good.
    pub witness: Vec<Vec<usize>>,
}

impl<T: Scalar> MaximinResult<T> {
    /// Recomputes the minimum bundle value of the witness.
    pub fn witness_min(&self, inst: &Instance<T>) -> T {
        let values: Vec<T> = self
            .witness
            .iter()
            .map(|b| inst.bundle_value(self.agent, b))
            .collect();
        min_of(&values).unwrap_or_else(T::zero)
    }
}

fn check_divisor(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::Precondition(
            "the divisor d must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Exhaustive maximin share over all set partitions; the test oracle.
pub fn mms_bruteforce<T: Scalar>(
    inst: &Instance<T>,
    agent: usize,
    d: usize,
    limit: usize,
) -> Result<MaximinResult<T>> {
    check_divisor(d)?;
    let m = inst.good_count();
    if m > limit {
        return Err(Error::OracleLimit { goods: m, limit });
    }
    let row = inst.row(agent);
    let mut labels = vec![0usize; m];
    let mut sums = vec![T::zero(); d];
    let mut best: Option<(T, Vec<usize>)> = None;
    enumerate_partitions(row, 0, 0, &mut labels, &mut sums, &mut best);
    let (value, labels) = best.expect("at least one partition exists");
    let mut witness = vec![Vec::new(); d];
    for (g, &b) in labels.iter().enumerate() {
        witness[b].push(g);
    }
    Ok(MaximinResult {
        agent,
        divisor: d,
        value,
        witness,
    })
}

fn enumerate_partitions<T: Scalar>(
    row: &[T],
    good: usize,
    used: usize,
    labels: &mut [usize],
    sums: &mut [T],
    best: &mut Option<(T, Vec<usize>)>,
) {
    if good == row.len() {
        let worst = min_of(sums.iter()).expect("d >= 1");
        if best.as_ref().is_none_or(|(b, _)| worst > *b) {
            *best = Some((worst, labels.to_vec()));
        }
        return;
    }
    // canonical labelling: a good opens at most one new block
    let open = (used + 1).min(sums.len());
    for b in 0..open {
        labels[good] = b;
        sums[b] += row[good].clone();
        enumerate_partitions(row, good + 1, used.max(b + 1), labels, sums, best);
        sums[b] -= row[good].clone();
    }
}

/// Exact maximin share via repeated bin-covering feasibility checks.
pub fn mms_exact<T: Scalar>(
    inst: &Instance<T>,
    agent: usize,
    d: usize,
) -> Result<MaximinResult<T>> {
    check_divisor(d)?;
    let row = inst.row(agent);
    let mut goods: Vec<usize> = (0..inst.good_count())
        .filter(|&g| !row[g].is_zero())
        .collect();
    goods.sort_by(|&a, &b| compare(&row[b], &row[a]).then(a.cmp(&b)));
    let zeros: Vec<usize> = (0..inst.good_count())
        .filter(|&g| row[g].is_zero())
        .collect();

    let mut bound = greedy_min(row, &goods, d);
    while let Some(better) = CoverSearch::new(row, &goods, d, bound.clone(), true).run() {
        bound = min_of(
            better
                .iter()
                .map(|b| b.1.clone())
                .collect::<Vec<_>>()
                .iter(),
        )
        .expect("d >= 1");
    }
    let mut witness: Vec<Vec<usize>> = CoverSearch::new(row, &goods, d, bound.clone(), false)
        .run()
        .expect("the optimum is attainable")
        .into_iter()
        .map(|(b, _)| b)
        .collect();
    witness[0].extend(zeros);
    witness.iter_mut().for_each(|b| b.sort_unstable());
    Ok(MaximinResult {
        agent,
        divisor: d,
        value: bound,
        witness,
    })
}

/// Minimum bundle of the longest-processing-time greedy partition.
fn greedy_min<T: Scalar>(row: &[T], goods: &[usize], d: usize) -> T {
    let mut sums = vec![T::zero(); d];
    for &g in goods {
        let k = (0..d)
            .min_by(|&a, &b| compare(&sums[a], &sums[b]).then(a.cmp(&b)))
            .expect("d >= 1");
        sums[k] += row[g].clone();
    }
    min_of(&sums).expect("d >= 1")
}

/// Branch-and-bound search for `d` bundles that each exceed (strict) or reach
/// the target. Goods are taken in descending order; a good either joins a
/// bundle that is still short of the target or is set aside and handed out
/// once the search succeeds.
struct CoverSearch<'a, T> {
    row: &'a [T],
    goods: &'a [usize],
    target: T,
    strict: bool,
    bundles: Vec<Vec<usize>>,
    sums: Vec<T>,
    spare: Vec<usize>,
    suffix: Vec<T>,
}

impl<'a, T: Scalar> CoverSearch<'a, T> {
    fn new(row: &'a [T], goods: &'a [usize], d: usize, target: T, strict: bool) -> Self {
        let mut suffix = vec![T::zero(); goods.len() + 1];
        for k in (0..goods.len()).rev() {
            suffix[k] = suffix[k + 1].clone() + row[goods[k]].clone();
        }
        CoverSearch {
            row,
            goods,
            target,
            strict,
            bundles: vec![Vec::new(); d],
            sums: vec![T::zero(); d],
            spare: Vec::new(),
            suffix,
        }
    }

    fn covered(&self, value: &T) -> bool {
        if self.strict {
            *value > self.target
        } else {
            *value >= self.target
        }
    }

    fn run(mut self) -> Option<Vec<(Vec<usize>, T)>> {
        if !self.search(0) {
            return None;
        }
        for g in std::mem::take(&mut self.spare) {
            let k = (0..self.sums.len())
                .min_by(|&a, &b| compare(&self.sums[a], &self.sums[b]).then(a.cmp(&b)))
                .expect("d >= 1");
            self.bundles[k].push(g);
            self.sums[k] += self.row[g].clone();
        }
        Some(self.bundles.into_iter().zip(self.sums).collect())
    }

    fn search(&mut self, k: usize) -> bool {
        let short: Vec<usize> = (0..self.sums.len())
            .filter(|&b| !self.covered(&self.sums[b]))
            .collect();
        if short.is_empty() {
            self.spare.extend_from_slice(&self.goods[k..]);
            return true;
        }
        if short.len() > self.goods.len() - k {
            return false;
        }
        let deficit = sum(short
            .iter()
            .map(|&b| self.target.clone() - self.sums[b].clone())
            .collect::<Vec<_>>()
            .iter());
        let remaining = &self.suffix[k];
        // strict covering needs more than the total deficit
        if *remaining < deficit || (self.strict && *remaining == deficit) {
            return false;
        }
        let g = self.goods[k];
        let value = self.row[g].clone();
        let mut tried: Vec<T> = Vec::new();
        for &b in &short {
            if tried
                .iter()
                .any(|s| compare(s, &self.sums[b]) == Ordering::Equal)
            {
                continue;
            }
            tried.push(self.sums[b].clone());
            self.bundles[b].push(g);
            self.sums[b] += value.clone();
            if self.search(k + 1) {
                return true;
            }
            self.sums[b] -= value.clone();
            self.bundles[b].pop();
        }
        self.spare.push(g);
        if self.search(k + 1) {
            return true;
        }
        self.spare.pop();
        false
    }
}

/// `mu_i^d(M)` for every agent.
pub fn thresholds<T: Scalar>(inst: &Instance<T>, d: usize) -> Result<Vec<T>> {
    (0..inst.agent_count())
        .map(|i| mms_exact(inst, i, d).map(|r| r.value))
        .collect()
}

/// A normalized instance with the partitions that certify it.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalized<T> {
    pub instance: Instance<T>,
    /// Per agent, `d` bundles each worth exactly 1 under the new valuations.
    pub partitions: Vec<Vec<Vec<usize>>>,
}

/// Witness partitions from [`mms_exact`] for every agent.
pub fn witnesses<T: Scalar>(inst: &Instance<T>, d: usize) -> Result<Vec<Vec<Vec<usize>>>> {
    (0..inst.agent_count())
        .map(|i| mms_exact(inst, i, d).map(|r| r.witness))
        .collect()
}

fn check_partition<T: Scalar>(
    inst: &Instance<T>,
    partition: &[Vec<usize>],
    d: usize,
) -> Result<()> {
    let mut seen = vec![false; inst.good_count()];
    if partition.len() != d {
        return Err(Error::Precondition(format!(
            "witness has {} bundles, expected {d}",
            partition.len()
        )));
    }
    for &g in partition.iter().flatten() {
        if g >= seen.len() || std::mem::replace(&mut seen[g], true) {
            return Err(Error::Precondition(
                "witness is not a partition of the goods".into(),
            ));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Precondition(
            "witness does not cover every good".into(),
        ));
    }
    Ok(())
}

/// Standard scaling: every good in witness bundle `P_j` is divided by `v_i(P_j)`.
pub fn normalize_scale<T: Scalar>(inst: &Instance<T>, d: usize) -> Result<Normalized<T>> {
    check_divisor(d)?;
    let partitions = witnesses(inst, d)?;
    normalize_scale_with(inst, &partitions)
}

/// [`normalize_scale`] with caller-chosen witness partitions (one per agent),
/// each of which must be a maximin partition.
pub fn normalize_scale_with<T: Scalar>(
    inst: &Instance<T>,
    partitions: &[Vec<Vec<usize>>],
) -> Result<Normalized<T>> {
    if partitions.len() != inst.agent_count() {
        return Err(Error::DimensionMismatch(
            "one witness per agent is required".into(),
        ));
    }
    let mut rows = Vec::with_capacity(inst.agent_count());
    for (i, partition) in partitions.iter().enumerate() {
        let d = partition.len();
        check_divisor(d)?;
        check_partition(inst, partition, d)?;
        let mut row = vec![T::zero(); inst.good_count()];
        for bundle in partition {
            let total = inst.bundle_value(i, bundle);
            if total.is_zero() {
                return Err(Error::Precondition(format!(
                    "agent {i} has a zero maximin share"
                )));
            }
            for &g in bundle {
                row[g] = inst.value(i, g).clone() / total.clone();
            }
        }
        rows.push(row);
    }
    Ok(Normalized {
        instance: inst.with_valuations(rows)?,
        partitions: partitions.to_vec(),
    })
}

/// Normalization that keeps the instance's common ordering intact.
pub fn normalize_order_preserving<T: Scalar>(
    inst: &Instance<T>,
    d: usize,
) -> Result<Normalized<T>> {
    check_divisor(d)?;
    let partitions = witnesses(inst, d)?;
    normalize_order_preserving_with(inst, &partitions)
}

/// [`normalize_order_preserving`] with caller-chosen maximin partitions.
///
/// Each agent's row is first divided by its share. Then every bundle worth
/// more than 1 is shrunk uniformly; whenever a shrinking good is about to
/// drop below a good that comes later in the ordering, the two goods trade
/// places between bundles (equal values, so both bundle totals are kept).
pub fn normalize_order_preserving_with<T: Scalar>(
    inst: &Instance<T>,
    partitions: &[Vec<Vec<usize>>],
) -> Result<Normalized<T>> {
    let structure = detect_structure(inst);
    let order = structure.ordering.ok_or_else(|| {
        Error::StructureMismatch("order-preserving normalization needs an ordered instance".into())
    })?;
    if partitions.len() != inst.agent_count() {
        return Err(Error::DimensionMismatch(
            "one witness per agent is required".into(),
        ));
    }
    let m = inst.good_count();
    let mut position = vec![0; m];
    for (p, &g) in order.iter().enumerate() {
        position[g] = p;
    }
    let mut rows = Vec::with_capacity(inst.agent_count());
    let mut out_partitions = Vec::with_capacity(inst.agent_count());
    for (i, partition) in partitions.iter().enumerate() {
        let d = partition.len();
        check_divisor(d)?;
        check_partition(inst, partition, d)?;
        let share = partition
            .iter()
            .map(|b| inst.bundle_value(i, b))
            .fold(None, |acc: Option<T>, v| match acc {
                Some(a) if a <= v => Some(a),
                _ => Some(v),
            })
            .expect("d >= 1");
        if share.is_zero() {
            return Err(Error::Precondition(format!(
                "agent {i} has a zero maximin share"
            )));
        }
        let values: Vec<T> = inst
            .row(i)
            .iter()
            .map(|v| v.clone() / share.clone())
            .collect();
        let (values, bundles) = shrink_preserving_order(values, partition.to_vec(), &position)?;
        rows.push(values);
        out_partitions.push(bundles);
    }
    Ok(Normalized {
        instance: inst.with_valuations(rows)?,
        partitions: out_partitions,
    })
}

fn shrink_preserving_order<T: Scalar>(
    mut values: Vec<T>,
    mut bundles: Vec<Vec<usize>>,
    position: &[usize],
) -> Result<(Vec<T>, Vec<Vec<usize>>)> {
    let m = values.len();
    let mut owner = vec![0; m];
    for (j, b) in bundles.iter().enumerate() {
        for &g in b {
            owner[g] = j;
        }
    }
    let cap = 4 * (m + 1) * (m + 1) * bundles.len().max(1);
    let mut events = 0usize;
    for j in 0..bundles.len() {
        loop {
            events += 1;
            if events > cap {
                return Err(Error::InvariantViolation(format!(
                    "order-preserving normalization exceeded {cap} events"
                )));
            }
            let total = sum(bundles[j].iter().map(|&g| &values[g]));
            if total <= T::one() {
                break;
            }
            let bag_factor = T::one() / total;
            // candidate (factor, position of h, position of g, g, h)
            let mut best: Option<(T, usize, usize, usize, usize)> = None;
            for &g in &bundles[j] {
                if values[g].is_zero() {
                    continue;
                }
                for h in 0..m {
                    if owner[h] == j || position[h] <= position[g] || values[h] > values[g] {
                        continue;
                    }
                    let factor = values[h].clone() / values[g].clone();
                    let better = match &best {
                        None => true,
                        Some((f, ph, pg, _, _)) => match compare(&factor, f) {
                            Ordering::Greater => true,
                            Ordering::Less => false,
                            Ordering::Equal => {
                                (position[h], std::cmp::Reverse(position[g]))
                                    > (*ph, std::cmp::Reverse(*pg))
                            }
                        },
                    };
                    if better {
                        best = Some((factor, position[h], position[g], g, h));
                    }
                }
            }
            match best {
                Some((factor, _, _, g, h)) if factor > bag_factor => {
                    for &x in &bundles[j] {
                        values[x] = values[x].clone() * factor.clone();
                    }
                    let other = owner[h];
                    let gi = bundles[j]
                        .iter()
                        .position(|&x| x == g)
                        .expect("g is in bundle j");
                    bundles[j][gi] = h;
                    let hi = bundles[other]
                        .iter()
                        .position(|&x| x == h)
                        .expect("h is in its bundle");
                    bundles[other][hi] = g;
                    owner[h] = j;
                    owner[g] = other;
                }
                _ => {
                    for &x in &bundles[j] {
                        values[x] = values[x].clone() * bag_factor.clone();
                    }
                    break;
                }
            }
        }
    }
    bundles.iter_mut().for_each(|b| b.sort_unstable());
    Ok((values, bundles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn inst(rows: &[&[u64]]) -> Instance<Rational> {
        Instance::from_integers(rows).unwrap()
    }

    fn q(s: &str) -> Rational {
        Rational::parse_scalar(s).unwrap()
    }

    fn example() -> Instance<Rational> {
        inst(&[&[1, 1, 1, 1, 1], &[1, 1, 1, 1, 1], &[1, 1, 1, 2, 1]])
    }

    #[test]
    fn bruteforce_small_cases() {
        let units = inst(&[&[1, 1, 1]]);
        let r = mms_bruteforce(&units, 0, 3, 12).unwrap();
        assert_eq!(r.value, q("1"));
        assert_eq!(r.witness, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(mms_bruteforce(&units, 0, 4, 12).unwrap().value, q("0"));
        let r = mms_bruteforce(&example(), 2, 3, 12).unwrap();
        assert_eq!(r.value, q("2"));
        assert_eq!(r.witness_min(&example()), q("2"));
    }

    #[test]
    fn bruteforce_respects_limit() {
        let big = inst(&[&[1; 13]]);
        assert!(matches!(
            mms_bruteforce(&big, 0, 2, 12),
            Err(Error::OracleLimit { .. })
        ));
        assert!(matches!(
            mms_bruteforce(&big, 0, 0, 20),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn exact_matches_frozen_values() {
        // values frozen from mms_bruteforce
        let i_a = inst(&[&[3, 2, 2, 1, 1], &[4, 3, 1, 1, 1]]);
        assert_eq!(mms_exact(&i_a, 0, 3).unwrap().value, q("3"));
        assert_eq!(mms_exact(&i_a, 1, 3).unwrap().value, q("3"));
        assert_eq!(thresholds(&i_a, 3).unwrap(), vec![q("3"), q("3")]);
        let single = inst(&[&[5, 0, 2, 7]]);
        assert_eq!(mms_exact(&single, 0, 1).unwrap().value, q("14"));
        assert_eq!(
            thresholds(&example(), 3).unwrap(),
            vec![q("1"), q("1"), q("2")]
        );
        assert_eq!(
            thresholds(&inst(&[&[0, 0], &[0, 0]]), 2).unwrap(),
            vec![q("0"), q("0")]
        );
    }

    #[test]
    fn exact_witness_is_a_full_partition() {
        let r = mms_exact(&example(), 2, 3).unwrap();
        assert_eq!(r.witness, vec![vec![3], vec![0, 1], vec![2, 4]]);
        let x = inst(&[&[4, 0, 3, 0, 2]]);
        let r = mms_exact(&x, 0, 2).unwrap();
        let mut all: Vec<usize> = r.witness.concat();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);
        assert_eq!(r.witness_min(&x), r.value);
        assert_eq!(r.value, q("4"));
    }

    #[test]
    fn exact_works_on_floats() {
        let x: Instance<f64> = Instance::new(vec![vec![0.5, 0.25, 0.25, 1.0]]).unwrap();
        assert_eq!(mms_exact(&x, 0, 2).unwrap().value, 1.0);
    }

    #[test]
    fn scale_normalization_reproduces_example() {
        let p12 = vec![vec![0, 1], vec![2, 3], vec![4]];
        let p3 = vec![vec![0, 1], vec![2, 4], vec![3]];
        let norm = normalize_scale_with(&example(), &[p12.clone(), p12, p3]).unwrap();
        let half = q("1/2");
        let one = q("1");
        assert_eq!(
            norm.instance.row(0),
            &[
                half.clone(),
                half.clone(),
                half.clone(),
                half.clone(),
                one.clone()
            ]
        );
        assert_eq!(
            norm.instance.row(2),
            &[half.clone(), half.clone(), half.clone(), one, half]
        );
    }

    #[test]
    fn scale_normalization_identity_on_normalized() {
        let ones = inst(&[&[1, 1, 1]]);
        assert_eq!(normalize_scale(&ones, 3).unwrap().instance, ones);
        assert!(matches!(
            normalize_scale(&inst(&[&[1, 0]]), 2),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn order_preserving_hand_trace() {
        let ones = inst(&[&[1, 1, 1, 1, 1]]);
        let p = vec![vec![0, 1], vec![2, 3], vec![4]];
        let norm = normalize_order_preserving_with(&ones, &[p]).unwrap();
        let half = q("1/2");
        assert_eq!(
            norm.instance.row(0),
            &[q("1"), half.clone(), half.clone(), half.clone(), half]
        );
        assert_eq!(norm.partitions[0], vec![vec![3, 4], vec![1, 2], vec![0]]);
    }

    #[test]
    fn order_preserving_identity_when_already_normal() {
        let x = inst(&[&[2, 1, 1], &[1, 1, 1]]);
        let norm = normalize_order_preserving_with(
            &x,
            &[vec![vec![0], vec![1, 2]], vec![vec![0], vec![1], vec![2]]],
        )
        .unwrap();
        assert_eq!(norm.instance.row(0), &[q("1"), q("1/2"), q("1/2")]);
        assert_eq!(norm.instance.row(1), x.row(1));
    }

    #[test]
    fn order_preserving_rejects_unordered() {
        let x = inst(&[&[2, 1], &[1, 2]]);
        assert!(matches!(
            normalize_order_preserving(&x, 1),
            Err(Error::StructureMismatch(_))
        ));
    }
}
