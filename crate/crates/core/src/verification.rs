//! Fairness checkers. These look only at the instance and the allocation,
//! never at how the allocation was produced.

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::scalar::{compare, Scalar};
use crate::shares;

/// Agent `envier` strongly envies `envied`: `v(A_envier) < v(A_envied \ {good})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EfxWitness {
    pub envier: usize,
    pub envied: usize,
    pub good: usize,
}

/// `envier` envies `envied` even after removing any single good.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ef1Witness {
    pub envier: usize,
    pub envied: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmsShortfall<T> {
    pub agent: usize,
    pub shortfall: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmsVerdict<T> {
    pub divisor: usize,
    pub holds: bool,
    pub thresholds: Vec<T>,
    /// Agent with the largest shortfall, if any.
    pub witness: Option<MmsShortfall<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FairnessReport<T> {
    pub complete: bool,
    pub values: Vec<T>,
    pub efx: bool,
    pub efx_witness: Option<EfxWitness>,
    pub ef1: bool,
    pub ef1_witness: Option<Ef1Witness>,
    pub mms: Vec<MmsVerdict<T>>,
}

impl<T: Scalar> FairnessReport<T> {
    pub fn mms_for(&self, d: usize) -> Option<&MmsVerdict<T>> {
        self.mms.iter().find(|v| v.divisor == d)
    }

    pub fn mms_holds(&self, d: usize) -> bool {
        self.mms_for(d).is_some_and(|v| v.holds)
    }
}

/// The good whose removal from `envied`'s bundle leaves the most value for
/// `envier`, if that still exceeds `envier`'s own bundle.
pub fn strongly_envies<T: Scalar>(
    inst: &Instance<T>,
    alloc: &Allocation,
    envier: usize,
    envied: usize,
) -> Option<usize> {
    strongly_envies_bundle(inst, alloc.bundle(envier), envier, alloc.bundle(envied))
}

/// Strong envy of `agent` (holding `own`) towards an arbitrary bundle.
pub fn strongly_envies_bundle<T: Scalar>(
    inst: &Instance<T>,
    own: &[usize],
    agent: usize,
    bundle: &[usize],
) -> Option<usize> {
    let &cheapest = bundle
        .iter()
        .min_by(|&&a, &&b| compare(inst.value(agent, a), inst.value(agent, b)).then(a.cmp(&b)))?;
    let mine = inst.bundle_value(agent, own);
    (mine < inst.value_without(agent, bundle, cheapest)).then_some(cheapest)
}

pub fn envies<T: Scalar>(
    inst: &Instance<T>,
    alloc: &Allocation,
    envier: usize,
    envied: usize,
) -> bool {
    inst.bundle_value(envier, alloc.bundle(envier))
        < inst.bundle_value(envier, alloc.bundle(envied))
}

pub fn is_efx<T: Scalar>(inst: &Instance<T>, alloc: &Allocation) -> Option<EfxWitness> {
    let n = alloc.agent_count();
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .find_map(|(i, j)| {
            strongly_envies(inst, alloc, i, j).map(|good| EfxWitness {
                envier: i,
                envied: j,
                good,
            })
        })
}

pub fn is_ef1<T: Scalar>(inst: &Instance<T>, alloc: &Allocation) -> Option<Ef1Witness> {
    let n = alloc.agent_count();
    for i in 0..n {
        let mine = inst.bundle_value(i, alloc.bundle(i));
        for j in (0..n).filter(|&j| j != i) {
            let theirs = alloc.bundle(j);
            if mine >= inst.bundle_value(i, theirs) {
                continue;
            }
            let fixed = theirs
                .iter()
                .any(|&g| mine >= inst.value_without(i, theirs, g));
            if !fixed {
                return Some(Ef1Witness {
                    envier: i,
                    envied: j,
                });
            }
        }
    }
    None
}

/// Checks `v_i(A_i) >= thresholds[i]` for every agent.
pub fn is_ordinal_mms<T: Scalar>(
    inst: &Instance<T>,
    alloc: &Allocation,
    d: usize,
    thresholds: &[T],
) -> Result<MmsVerdict<T>> {
    if thresholds.len() != inst.agent_count() || alloc.agent_count() != inst.agent_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} thresholds and {} bundles for {} agents",
            thresholds.len(),
            alloc.agent_count(),
            inst.agent_count()
        )));
    }
    let mut witness: Option<MmsShortfall<T>> = None;
    for (i, t) in thresholds.iter().enumerate() {
        let v = inst.bundle_value(i, alloc.bundle(i));
        if v < *t {
            let shortfall = t.clone() - v;
            if witness.as_ref().is_none_or(|w| shortfall > w.shortfall) {
                witness = Some(MmsShortfall {
                    agent: i,
                    shortfall,
                });
            }
        }
    }
    Ok(MmsVerdict {
        divisor: d,
        holds: witness.is_none(),
        thresholds: thresholds.to_vec(),
        witness,
    })
}

/// All checks, computing exact thresholds for each divisor.
pub fn report<T: Scalar>(
    inst: &Instance<T>,
    alloc: &Allocation,
    divisors: &[usize],
) -> Result<FairnessReport<T>> {
    let thresholds = divisors
        .iter()
        .map(|&d| shares::thresholds(inst, d).map(|t| (d, t)))
        .collect::<Result<Vec<_>>>()?;
    report_with_thresholds(inst, alloc, &thresholds)
}

pub fn report_with_thresholds<T: Scalar>(
    inst: &Instance<T>,
    alloc: &Allocation,
    thresholds: &[(usize, Vec<T>)],
) -> Result<FairnessReport<T>> {
    alloc.check_against(inst)?;
    let efx_witness = is_efx(inst, alloc);
    let ef1_witness = is_ef1(inst, alloc);
    let mms = thresholds
        .iter()
        .map(|(d, t)| is_ordinal_mms(inst, alloc, *d, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(FairnessReport {
        complete: alloc.is_complete(),
        values: (0..inst.agent_count())
            .map(|i| inst.bundle_value(i, alloc.bundle(i)))
            .collect(),
        efx: efx_witness.is_none(),
        efx_witness,
        ef1: ef1_witness.is_none(),
        ef1_witness,
        mms,
    })
}
