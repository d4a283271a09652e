//! Seeded batch runs: generate instances, solve them with each selected
//! algorithm, verify, and tabulate.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::allocators::{solve_complete, Algorithm};
use crate::error::{Error, Result};
use crate::instance::{generate, Family, GeneratorConfig, Instance};
use crate::shares::{mms_bruteforce, mms_exact};
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub family: Family,
    /// Inclusive range of agent counts.
    pub agents: (usize, usize),
    /// Inclusive range of good counts.
    pub goods: (usize, usize),
    /// Lower bound on `m / n`; the drawn good count is at least this many per agent.
    pub min_goods_per_agent: usize,
    pub max_value: u64,
    pub count: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    /// Cross-check shares with the brute-force oracle when `m` is at most this.
    pub oracle_limit: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.agents.0 == 0 || self.agents.0 > self.agents.1 {
            return bad(format!(
                "agent range {}..={} is empty or starts at 0",
                self.agents.0, self.agents.1
            ));
        }
        if self.goods.0 > self.goods.1 {
            return bad(format!(
                "good range {}..={} is empty",
                self.goods.0, self.goods.1
            ));
        }
        if self.min_goods_per_agent * self.agents.1 > self.goods.1 {
            return bad(format!(
                "{} agents need at least {} goods but the range ends at {}",
                self.agents.1,
                self.min_goods_per_agent * self.agents.1,
                self.goods.1
            ));
        }
        if self.goods.1 == 0 || self.max_value == 0 {
            return bad("goods and value cap must be positive".into());
        }
        if self.count == 0 {
            return bad("instance count must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("select at least one algorithm".into());
        }
        Ok(())
    }

    /// Generator settings for the `index`-th instance; the seed is `seed + index`.
    pub fn instance_config(&self, index: usize) -> GeneratorConfig {
        let seed = self.seed.wrapping_add(index as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agents = rng.gen_range(self.agents.0..=self.agents.1);
        let low = self.goods.0.max(self.min_goods_per_agent * agents);
        let goods = rng.gen_range(low..=self.goods.1);
        GeneratorConfig {
            family: self.family,
            agents,
            goods,
            max_value: self.max_value,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Certified,
    NotCertified,
    /// The instance lacks the algorithm's structure; not counted as a run.
    Skipped,
    OracleMismatch,
    InvariantViolation,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Certified => "certified",
            Status::NotCertified => "not_certified",
            Status::Skipped => "skipped",
            Status::OracleMismatch => "oracle_mismatch",
            Status::InvariantViolation => "invariant_violation",
            Status::Error => "error",
        }
    }

    pub fn is_violation(self) -> bool {
        !matches!(self, Status::Certified | Status::Skipped)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub agents: usize,
    pub goods: usize,
    pub divisor: usize,
    pub status: Status,
    pub complete: bool,
    pub efx: bool,
    pub ef1: bool,
    pub mms: bool,
    pub partial_efx: bool,
    pub partial_mms: bool,
    pub oracle_checked: bool,
    pub values: Vec<Rational>,
    pub thresholds: Vec<Rational>,
    pub message: String,
    pub micros: u128,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlgorithmStats {
    pub run: usize,
    pub certified: usize,
    pub violations: usize,
    pub skipped: usize,
    pub total_micros: u128,
    pub max_micros: u128,
}

#[derive(Clone, Debug)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub stats: Vec<(Algorithm, AlgorithmStats)>,
    /// Sorted by seed, then algorithm.
    pub rows: Vec<ExperimentRow>,
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let mut rows: Vec<ExperimentRow> = (0..config.count)
        .into_par_iter()
        .map(|index| {
            let cfg = config.instance_config(index);
            let inst: Instance<Rational> = generate(&cfg)?;
            Ok(config
                .algorithms
                .iter()
                .map(|&a| evaluate(&inst, &cfg, a, config.oracle_limit))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by_key(|r| (r.seed, r.algorithm));

    let stats = config
        .algorithms
        .iter()
        .map(|&a| {
            let mut s = AlgorithmStats::default();
            for r in rows.iter().filter(|r| r.algorithm == a) {
                match r.status {
                    Status::Skipped => s.skipped += 1,
                    Status::Certified => {
                        s.run += 1;
                        s.certified += 1;
                    }
                    _ => {
                        s.run += 1;
                        s.violations += 1;
                    }
                }
                s.total_micros += r.micros;
                s.max_micros = s.max_micros.max(r.micros);
            }
            (a, s)
        })
        .collect();
    Ok(ExperimentSummary {
        config: config.clone(),
        stats,
        rows,
    })
}

/// Solves and verifies one instance; failures become row statuses.
pub fn evaluate(
    inst: &Instance<Rational>,
    cfg: &GeneratorConfig,
    algorithm: Algorithm,
    oracle_limit: usize,
) -> ExperimentRow {
    let n = inst.agent_count();
    let d = algorithm.divisor(n);
    let mut row = ExperimentRow {
        seed: cfg.seed,
        algorithm,
        agents: n,
        goods: inst.good_count(),
        divisor: d,
        status: Status::Error,
        complete: false,
        efx: false,
        ef1: false,
        mms: false,
        partial_efx: false,
        partial_mms: false,
        oracle_checked: false,
        values: Vec::new(),
        thresholds: Vec::new(),
        message: String::new(),
        micros: 0,
    };
    let start = Instant::now();
    let solved = solve_complete(inst, algorithm);
    row.micros = start.elapsed().as_micros();
    let solution = match solved {
        Ok(s) => s,
        Err(e) => {
            row.status = match e {
                Error::StructureMismatch(_) => Status::Skipped,
                Error::InvariantViolation(_) => Status::InvariantViolation,
                _ => Status::Error,
            };
            row.message = format!("seed {}: {e}", cfg.seed);
            return row;
        }
    };
    let r = &solution.report;
    row.complete = r.complete;
    row.efx = r.efx;
    row.ef1 = r.ef1;
    row.mms = r.mms_holds(d);
    row.partial_efx = solution.partial_report.efx;
    row.partial_mms = solution.partial_report.mms_holds(d);
    row.values = r.values.clone();
    row.thresholds = solution.thresholds.clone();
    row.status = if solution.certified() {
        Status::Certified
    } else {
        Status::NotCertified
    };

    if inst.good_count() <= oracle_limit {
        row.oracle_checked = true;
        for i in 0..n {
            let exact = mms_exact(inst, i, d).map(|r| r.value);
            let brute = mms_bruteforce(inst, i, d, oracle_limit).map(|r| r.value);
            match (exact, brute) {
                (Ok(a), Ok(b)) if a == b => {}
                (a, b) => {
                    row.status = Status::OracleMismatch;
                    row.message = format!(
                        "seed {}: agent {i} exact {a:?} vs brute force {b:?}",
                        cfg.seed
                    );
                    break;
                }
            }
        }
    }
    row
}

fn join(values: &[Rational]) -> String {
    values
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

impl ExperimentSummary {
    pub fn violations(&self) -> usize {
        self.stats.iter().map(|(_, s)| s.violations).sum()
    }

    /// One row per (instance, algorithm). Timings are left out so repeated
    /// runs produce identical bytes.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "seed",
            "algorithm",
            "family",
            "n",
            "m",
            "d",
            "status",
            "complete",
            "efx",
            "ef1",
            "mms",
            "partial_efx",
            "partial_mms",
            "oracle",
            "values",
            "thresholds",
            "message",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.seed.to_string(),
                r.algorithm.to_string(),
                self.config.family.to_string(),
                r.agents.to_string(),
                r.goods.to_string(),
                r.divisor.to_string(),
                r.status.as_str().to_string(),
                r.complete.to_string(),
                r.efx.to_string(),
                r.ef1.to_string(),
                r.mms.to_string(),
                r.partial_efx.to_string(),
                r.partial_mms.to_string(),
                r.oracle_checked.to_string(),
                join(&r.values),
                join(&r.thresholds),
                r.message.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Per-algorithm counts, deterministic.
    pub fn table(&self) -> String {
        let mut out = String::from("algorithm,run,certified,violations,skipped\n");
        for (a, s) in &self.stats {
            let _ = writeln!(
                out,
                "{a},{},{},{},{}",
                s.run, s.certified, s.violations, s.skipped
            );
        }
        out
    }

    pub fn timing_table(&self) -> String {
        let mut out = String::from("algorithm,total_ms,mean_us,max_us\n");
        for (a, s) in &self.stats {
            let rows = (s.run + s.skipped).max(1) as u128;
            let _ = writeln!(
                out,
                "{a},{:.1},{},{}",
                s.total_micros as f64 / 1000.0,
                s.total_micros / rows,
                s.max_micros
            );
        }
        out
    }
}
