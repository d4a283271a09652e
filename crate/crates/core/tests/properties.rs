//! Property tests. The naive checkers here work on the raw integer rows, so
//! they share no arithmetic with the library.

use proptest::collection::vec;
use proptest::prelude::*;

use fairdiv::allocators::Event;
use fairdiv::format::{
    parse_allocation, parse_instance, parse_report, write_allocation, write_instance, write_report,
};
use fairdiv::instance::{pad_goods, strip_dummies};
use fairdiv::shares::{thresholds, DEFAULT_ORACLE_LIMIT};
use fairdiv::verification::report;
use fairdiv::{
    detect_structure, generate, is_ef1, is_efx, mms_bruteforce, mms_exact, solve_complete,
    Algorithm, Allocation, Family, GeneratorConfig, Instance, Rational,
};

fn to_instance(rows: &[Vec<u64>]) -> Instance<Rational> {
    Instance::from_integers(rows).unwrap()
}

/// `owner[g] == n` means the good stays in the pool.
fn to_allocation(n: usize, owner: &[usize]) -> Allocation {
    let mut bundles = vec![Vec::new(); n];
    let mut pool = Vec::new();
    for (g, &o) in owner.iter().enumerate() {
        if o < n {
            bundles[o].push(g);
        } else {
            pool.push(g);
        }
    }
    Allocation::new(bundles, pool, owner.len()).unwrap()
}

fn value(row: &[u64], bundle: &[usize]) -> u64 {
    bundle.iter().map(|&g| row[g]).sum()
}

fn naive_efx(rows: &[Vec<u64>], a: &Allocation) -> bool {
    let n = rows.len();
    (0..n).all(|i| {
        let own = value(&rows[i], a.bundle(i));
        (0..n).filter(|&j| j != i).all(|j| {
            a.bundle(j)
                .iter()
                .all(|&g| own + rows[i][g] >= value(&rows[i], a.bundle(j)))
        })
    })
}

fn naive_ef1(rows: &[Vec<u64>], a: &Allocation) -> bool {
    let n = rows.len();
    (0..n).all(|i| {
        let own = value(&rows[i], a.bundle(i));
        (0..n).filter(|&j| j != i).all(|j| {
            let other = value(&rows[i], a.bundle(j));
            other <= own || a.bundle(j).iter().any(|&g| own + rows[i][g] >= other)
        })
    })
}

/// Best worst bundle over all `d^m` labelings.
fn naive_share(row: &[u64], d: usize) -> u64 {
    let m = row.len();
    let mut best = 0;
    let mut labels = vec![0usize; m];
    loop {
        let mut sums = vec![0u64; d];
        for (g, &b) in labels.iter().enumerate() {
            sums[b] += row[g];
        }
        best = best.max(*sums.iter().min().unwrap());
        let mut k = 0;
        while k < m && labels[k] == d - 1 {
            labels[k] = 0;
            k += 1;
        }
        if k == m {
            return best;
        }
        labels[k] += 1;
    }
}

fn int(v: u64) -> Rational {
    Rational::from_integer(v.into())
}

prop_compose! {
    fn instance_and_allocation(max_agents: usize, max_goods: usize)
        (n in 1..=max_agents, m in 0..=max_goods)
        (rows in vec(vec(0u64..7, m), n), owner in vec(0..=n, m))
        -> (Vec<Vec<u64>>, Vec<usize>)
    {
        (rows, owner)
    }
}

prop_compose! {
    fn instance_rows(max_agents: usize, max_goods: usize)
        (n in 1..=max_agents, m in 1..=max_goods)
        (rows in vec(vec(0u64..10, m), n))
        -> Vec<Vec<u64>>
    {
        rows
    }
}

proptest! {
    #[test]
    fn verdicts_match_naive_checks((rows, owner) in instance_and_allocation(3, 7)) {
        let inst = to_instance(&rows);
        let a = to_allocation(rows.len(), &owner);
        let efx = is_efx(&inst, &a).is_none();
        let ef1 = is_ef1(&inst, &a).is_none();
        prop_assert_eq!(efx, naive_efx(&rows, &a));
        prop_assert_eq!(ef1, naive_ef1(&rows, &a));
        prop_assert!(!efx || ef1);
    }

    #[test]
    fn witnesses_point_at_real_envy((rows, owner) in instance_and_allocation(3, 7)) {
        let inst = to_instance(&rows);
        let a = to_allocation(rows.len(), &owner);
        if let Some(w) = is_efx(&inst, &a) {
            let row = &rows[w.envier];
            prop_assert!(a.bundle(w.envied).contains(&w.good));
            prop_assert!(value(row, a.bundle(w.envier)) + row[w.good] < value(row, a.bundle(w.envied)));
        }
    }

    #[test]
    fn shares_match_naive_search(rows in instance_rows(2, 7), d in 1usize..=4) {
        let inst = to_instance(&rows);
        for (i, row) in rows.iter().enumerate() {
            let want = int(naive_share(row, d));
            let exact = mms_exact(&inst, i, d).unwrap();
            prop_assert_eq!(&exact.value, &want);
            prop_assert_eq!(exact.witness.len(), d);
            prop_assert_eq!(exact.witness_min(&inst), want.clone());
            prop_assert_eq!(mms_bruteforce(&inst, i, d, DEFAULT_ORACLE_LIMIT).unwrap().value, want);
        }
    }

    #[test]
    fn shares_shrink_as_d_grows(rows in instance_rows(2, 9), d in 1usize..=5) {
        let inst = to_instance(&rows);
        let here = thresholds(&inst, d).unwrap();
        let next = thresholds(&inst, d + 1).unwrap();
        for (a, b) in here.iter().zip(&next) {
            prop_assert!(b <= a);
        }
    }

    #[test]
    fn shares_scale_with_the_row(rows in instance_rows(2, 8), d in 1usize..=4, p in 1i64..6, q in 1i64..6) {
        let inst = to_instance(&rows);
        let c = Rational::new(p.into(), q.into());
        let scaled = inst.scale_agent(0, &c);
        prop_assert_eq!(mms_exact(&scaled, 0, d).unwrap().value, mms_exact(&inst, 0, d).unwrap().value * c);
    }

    #[test]
    fn verdicts_ignore_row_scaling((rows, owner) in instance_and_allocation(3, 7), p in 1i64..6, q in 1i64..6) {
        let inst = to_instance(&rows);
        let a = to_allocation(rows.len(), &owner);
        let c = Rational::new(p.into(), q.into());
        let mut scaled = inst.clone();
        for i in 0..rows.len() {
            scaled = scaled.scale_agent(i, &c);
        }
        let before = report(&inst, &a, &[2, 3]).unwrap();
        let after = report(&scaled, &a, &[2, 3]).unwrap();
        prop_assert_eq!(before.efx, after.efx);
        prop_assert_eq!(before.ef1, after.ef1);
        prop_assert_eq!(before.mms_holds(2), after.mms_holds(2));
        prop_assert_eq!(before.mms_holds(3), after.mms_holds(3));
    }

    #[test]
    fn padding_then_stripping_is_identity((rows, owner) in instance_and_allocation(3, 6), extra in 0usize..4) {
        let inst = to_instance(&rows);
        let m = inst.good_count();
        let padded = pad_goods(&inst, m + extra);
        // dummies go anywhere: to the pool or to agent 0
        let mut wide = owner.clone();
        wide.extend((0..extra).map(|k| if k % 2 == 0 { rows.len() } else { 0 }));
        let a = to_allocation(rows.len(), &wide);
        let s = strip_dummies(&padded, &a).unwrap();
        prop_assert_eq!(&s.instance, &inst);
        prop_assert_eq!(&s.allocation, &to_allocation(rows.len(), &owner));
        prop_assert_eq!(s.good_map, (0..m).collect::<Vec<_>>());
        // zero-valued dummy goods can only add strong envy
        let padded_efx = is_efx(&padded, &a).is_none();
        let stripped_efx = is_efx(&s.instance, &s.allocation).is_none();
        prop_assert!(!padded_efx || stripped_efx);
    }

    #[test]
    fn formats_round_trip((rows, owner) in instance_and_allocation(3, 6)) {
        let inst = to_instance(&rows);
        let a = to_allocation(rows.len(), &owner);
        prop_assert_eq!(parse_instance::<Rational>(&write_instance(&inst)).unwrap(), inst.clone());
        prop_assert_eq!(parse_allocation(&write_allocation(&a)).unwrap(), a.clone());
        let rep = report(&inst, &a, &[2, 4]).unwrap();
        prop_assert_eq!(parse_report::<Rational>(&write_report(&rep)).unwrap(), rep);
    }

    #[test]
    fn generators_have_their_structure(n in 1usize..6, m in 1usize..12, seed in any::<u64>(), max_value in 1u64..30) {
        let ordered = GeneratorConfig { family: Family::Ordered, agents: n, goods: m, max_value, seed };
        let x: Instance<Rational> = generate(&ordered).unwrap();
        prop_assert!(detect_structure(&x).ordered);
        prop_assert_eq!(generate::<Rational>(&ordered).unwrap(), x);

        let top = GeneratorConfig { family: Family::TopN, ..ordered };
        let y: Instance<Rational> = generate(&top).unwrap();
        prop_assert!(detect_structure(&y).is_top_k(n.min(m)));
    }

    #[test]
    fn ordered_pipelines_leave_consistent_traces(n in 1usize..5, m in 1usize..11, seed in any::<u64>()) {
        let cfg = GeneratorConfig { family: Family::Ordered, agents: n, goods: m, max_value: 12, seed };
        let inst: Instance<Rational> = generate(&cfg).unwrap();
        for algorithm in [Algorithm::OrderedEfx, Algorithm::OrderedEf1] {
            let s = solve_complete(&inst, algorithm).unwrap();
            prop_assert!(s.certified(), "{} seed {}", algorithm, seed);
            // goods go into bags in the common order
            let fills: Vec<usize> = s.trace.events().filter_map(|e| match e {
                Event::Fill { good, .. } => Some(*good),
                _ => None,
            }).collect();
            prop_assert!(fills.windows(2).all(|w| w[0] < w[1]), "{:?}", fills);
            let replayed = s.completion_trace.replay(&s.partial, m).unwrap();
            prop_assert_eq!(&replayed, &s.allocation);
        }
    }

    #[test]
    fn top_n_pipeline_is_certified(n in 1usize..5, m in 1usize..11, seed in any::<u64>()) {
        let cfg = GeneratorConfig { family: Family::TopN, agents: n, goods: m, max_value: 12, seed };
        let inst: Instance<Rational> = generate(&cfg).unwrap();
        let s = solve_complete(&inst, Algorithm::TopNLoneDivider).unwrap();
        prop_assert!(s.certified(), "seed {}", seed);
        let rows: Vec<Vec<u64>> = inst.rows().iter()
            .map(|r| r.iter().map(|v| v.to_integer().try_into().unwrap()).collect())
            .collect();
        prop_assert!(naive_efx(&rows, &s.partial));
        prop_assert!(naive_ef1(&rows, &s.allocation));
    }
}

/// Every pipeline output is checked against naive shares and envy checks on
/// the raw integers, over a fixed sweep of small instances.
#[test]
fn pipeline_outputs_satisfy_naive_checks() {
    for seed in 0..150u64 {
        for (n, m) in [(2, 4), (2, 6), (3, 5), (3, 7)] {
            for family in [Family::Ordered, Family::TopN] {
                let cfg = GeneratorConfig {
                    family,
                    agents: n,
                    goods: m,
                    max_value: 9,
                    seed,
                };
                let inst: Instance<Rational> = generate(&cfg).unwrap();
                let rows: Vec<Vec<u64>> = inst
                    .rows()
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|v| v.to_integer().try_into().unwrap())
                            .collect()
                    })
                    .collect();
                for algorithm in Algorithm::ALL {
                    let s = match solve_complete(&inst, algorithm) {
                        Ok(s) => s,
                        Err(fairdiv::Error::StructureMismatch(_)) => continue,
                        Err(e) => panic!("{algorithm} seed {seed}: {e}"),
                    };
                    let a = &s.allocation;
                    assert!(a.is_complete());
                    let d = algorithm.divisor(n);
                    for (i, row) in rows.iter().enumerate() {
                        assert!(
                            value(row, a.bundle(i)) >= naive_share(row, d),
                            "{algorithm} seed {seed} agent {i}"
                        );
                    }
                    match algorithm {
                        Algorithm::OrderedEfx => {
                            assert!(naive_efx(&rows, a), "{algorithm} seed {seed}")
                        }
                        _ => assert!(naive_ef1(&rows, a), "{algorithm} seed {seed}"),
                    }
                }
            }
        }
    }
}
