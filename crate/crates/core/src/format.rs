//! Line-oriented `key: value` text records for instances, allocations,
//! maximin results and fairness reports.
//!
//! A key with nothing after the colon opens a block of indented rows; `-`
//! stands for an empty row or list and `#` starts a comment. Values are
//! integers or `p/q` fractions, so exact values survive a round trip.
//!
//! ```text
//! n: 2
//! m: 3
//! valuations:
//!   3 1/2 0
//!   1 1 1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::scalar::Scalar;
use crate::shares::MaximinResult;
use crate::verification::{Ef1Witness, EfxWitness, FairnessReport, MmsShortfall, MmsVerdict};

#[derive(Debug)]
struct Field {
    line: usize,
    inline: String,
    rows: Vec<(usize, String)>,
}

struct Record {
    fields: BTreeMap<String, Field>,
}

impl Record {
    fn parse(text: &str) -> Result<Self> {
        let mut fields: BTreeMap<String, Field> = BTreeMap::new();
        let mut open: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            if content.starts_with(char::is_whitespace) {
                let key = open
                    .as_ref()
                    .ok_or_else(|| Error::parse(line, "indented row outside a block"))?;
                let field = fields.get_mut(key).expect("open block is recorded");
                field.rows.push((line, content.trim().to_string()));
                continue;
            }
            let (key, value) = content.split_once(':').ok_or_else(|| {
                Error::parse(
                    line,
                    format!("expected `key: value`, got `{}`", content.trim()),
                )
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if fields.contains_key(&key) {
                return Err(Error::parse(line, format!("duplicate key `{key}`")));
            }
            open = value.is_empty().then(|| key.clone());
            fields.insert(
                key,
                Field {
                    line,
                    inline: value,
                    rows: Vec::new(),
                },
            );
        }
        Ok(Record { fields })
    }

    fn get(&self, key: &str) -> Result<&Field> {
        self.fields
            .get(key)
            .ok_or_else(|| Error::parse(0, format!("missing key `{key}`")))
    }

    fn opt(&self, key: &str) -> Option<&Field> {
        self.fields.get(key)
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let f = self.get(key)?;
        f.inline
            .parse()
            .map_err(|_| Error::parse(f.line, format!("`{key}` must be a non-negative integer")))
    }

    fn bool(&self, key: &str) -> Result<bool> {
        let f = self.get(key)?;
        match f.inline.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(Error::parse(
                f.line,
                format!("`{key}` must be true or false, got `{other}`"),
            )),
        }
    }

    /// The block rows of `key`, each split into tokens.
    fn rows(&self, key: &str) -> Result<Vec<(usize, Vec<String>)>> {
        let f = self.get(key)?;
        if !f.inline.is_empty() {
            return Err(Error::parse(
                f.line,
                format!("`{key}` must be a block of indented rows"),
            ));
        }
        Ok(f.rows.iter().map(|(l, r)| (*l, tokens(r))).collect())
    }

    fn list(&self, key: &str) -> Result<(usize, Vec<String>)> {
        let f = self.get(key)?;
        Ok((f.line, tokens(&f.inline)))
    }
}

fn tokens(text: &str) -> Vec<String> {
    if text.trim() == "-" {
        Vec::new()
    } else {
        text.split_whitespace().map(str::to_string).collect()
    }
}

fn join<I: IntoIterator<Item = S>, S: ToString>(items: I) -> String {
    let parts: Vec<String> = items.into_iter().map(|s| s.to_string()).collect();
    if parts.is_empty() {
        "-".into()
    } else {
        parts.join(" ")
    }
}

fn indices(line: usize, toks: &[String]) -> Result<Vec<usize>> {
    toks.iter()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::parse(line, format!("bad good index `{t}`")))
        })
        .collect()
}

fn scalars<T: Scalar>(line: usize, toks: &[String]) -> Result<Vec<T>> {
    toks.iter()
        .map(|t| T::parse_scalar(t).ok_or_else(|| Error::parse(line, format!("bad value `{t}`"))))
        .collect()
}

fn scalar<T: Scalar>(f: &Field) -> Result<T> {
    T::parse_scalar(&f.inline)
        .ok_or_else(|| Error::parse(f.line, format!("bad value `{}`", f.inline)))
}

pub fn write_instance<T: Scalar>(inst: &Instance<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n: {}", inst.agent_count());
    let _ = writeln!(out, "m: {}", inst.good_count());
    out.push_str("valuations:\n");
    for row in inst.rows() {
        let _ = writeln!(out, "  {}", join(row));
    }
    if inst.has_dummies() {
        let goods = (0..inst.good_count()).filter(|&g| inst.is_dummy_good(g));
        let _ = writeln!(out, "dummy_goods: {}", join(goods));
        let agents = inst
            .dummy_agents()
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|s| format!("{i}:{s}")));
        let _ = writeln!(out, "dummy_agents: {}", join(agents));
    }
    if let Some(l) = inst.agent_labels() {
        let _ = writeln!(out, "agent_labels: {}", join(l));
    }
    if let Some(l) = inst.good_labels() {
        let _ = writeln!(out, "good_labels: {}", join(l));
    }
    out
}

pub fn parse_instance<T: Scalar>(text: &str) -> Result<Instance<T>> {
    let rec = Record::parse(text)?;
    let n = rec.usize("n")?;
    let m = rec.usize("m")?;
    let rows = rec.rows("valuations")?;
    if rows.len() != n {
        return Err(Error::parse(
            rec.get("valuations")?.line,
            format!("expected {n} valuation rows, got {}", rows.len()),
        ));
    }
    let mut valuations = Vec::with_capacity(n);
    for (line, toks) in &rows {
        if toks.len() != m {
            return Err(Error::parse(
                *line,
                format!("expected {m} values, got {}", toks.len()),
            ));
        }
        valuations.push(scalars(*line, toks)?);
    }
    let mut inst = Instance::new(valuations)?;

    let mut dummy_goods = vec![false; m];
    if rec.opt("dummy_goods").is_some() {
        let (line, toks) = rec.list("dummy_goods")?;
        for g in indices(line, &toks)? {
            *dummy_goods
                .get_mut(g)
                .ok_or_else(|| Error::parse(line, format!("dummy good {g} out of range")))? = true;
        }
    }
    let mut dummy_agents = vec![None; n];
    if rec.opt("dummy_agents").is_some() {
        let (line, toks) = rec.list("dummy_agents")?;
        for t in toks {
            let parsed = t
                .split_once(':')
                .and_then(|(a, s)| Some((a.parse::<usize>().ok()?, s.parse::<usize>().ok()?)));
            let (a, s) = parsed
                .ok_or_else(|| Error::parse(line, format!("expected `agent:source`, got `{t}`")))?;
            *dummy_agents
                .get_mut(a)
                .ok_or_else(|| Error::parse(line, format!("dummy agent {a} out of range")))? =
                Some(s);
        }
    }
    if dummy_goods.iter().any(|&d| d) || dummy_agents.iter().any(Option::is_some) {
        inst = inst.with_dummies(dummy_goods, dummy_agents)?;
    }
    let labels = |key: &str| rec.opt(key).map(|f| tokens(&f.inline));
    let (agent_labels, good_labels) = (labels("agent_labels"), labels("good_labels"));
    if agent_labels.is_some() || good_labels.is_some() {
        inst = inst.with_labels(agent_labels, good_labels)?;
    }
    Ok(inst)
}

fn write_bundles(out: &mut String, bundles: &[Vec<usize>], pool: &[usize]) {
    out.push_str("bundles:\n");
    for b in bundles {
        let _ = writeln!(out, "  {}", join(b));
    }
    let _ = writeln!(out, "pool: {}", join(pool));
}

pub fn write_allocation(alloc: &Allocation) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n: {}", alloc.agent_count());
    let _ = writeln!(out, "m: {}", alloc.covered());
    write_bundles(&mut out, alloc.bundles(), alloc.pool());
    out
}

fn parse_bundles(rec: &Record) -> Result<Allocation> {
    let m = rec.usize("m")?;
    let bundles = rec
        .rows("bundles")?
        .iter()
        .map(|(line, toks)| indices(*line, toks))
        .collect::<Result<Vec<_>>>()?;
    let alloc = match rec.opt("pool") {
        Some(_) => {
            let (line, toks) = rec.list("pool")?;
            Allocation::new(bundles, indices(line, &toks)?, m)?
        }
        None => Allocation::from_bundles(bundles, m)?,
    };
    if alloc.covered() != m {
        return Err(Error::InvalidAllocation(format!(
            "bundles and pool cover {} of {m} goods",
            alloc.covered()
        )));
    }
    Ok(alloc)
}

pub fn parse_allocation(text: &str) -> Result<Allocation> {
    let rec = Record::parse(text)?;
    let alloc = parse_bundles(&rec)?;
    let n = rec.usize("n")?;
    if alloc.agent_count() != n {
        return Err(Error::parse(
            rec.get("bundles")?.line,
            format!("expected {n} bundles, got {}", alloc.agent_count()),
        ));
    }
    Ok(alloc)
}

pub fn write_maximin<T: Scalar>(result: &MaximinResult<T>, good_count: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "agent: {}", result.agent);
    let _ = writeln!(out, "d: {}", result.divisor);
    let _ = writeln!(out, "value: {}", result.value);
    let _ = writeln!(out, "m: {good_count}");
    let covered: Vec<bool> = {
        let mut c = vec![false; good_count];
        result.witness.iter().flatten().for_each(|&g| c[g] = true);
        c
    };
    let pool: Vec<usize> = (0..good_count).filter(|&g| !covered[g]).collect();
    write_bundles(&mut out, &result.witness, &pool);
    out
}

pub fn parse_maximin<T: Scalar>(text: &str) -> Result<MaximinResult<T>> {
    let rec = Record::parse(text)?;
    let alloc = parse_bundles(&rec)?;
    let d = rec.usize("d")?;
    if alloc.agent_count() != d {
        return Err(Error::parse(
            rec.get("bundles")?.line,
            format!("expected {d} witness bundles"),
        ));
    }
    Ok(MaximinResult {
        agent: rec.usize("agent")?,
        divisor: d,
        value: scalar(rec.get("value")?)?,
        witness: alloc.into_parts().0,
    })
}

pub fn write_report<T: Scalar>(report: &FairnessReport<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "complete: {}", report.complete);
    let _ = writeln!(out, "values: {}", join(&report.values));
    let _ = writeln!(out, "efx: {}", report.efx);
    let efx_w = report
        .efx_witness
        .map(|w| format!("{} {} {}", w.envier, w.envied, w.good));
    let _ = writeln!(out, "efx_witness: {}", efx_w.as_deref().unwrap_or("-"));
    let _ = writeln!(out, "ef1: {}", report.ef1);
    let ef1_w = report
        .ef1_witness
        .map(|w| format!("{} {}", w.envier, w.envied));
    let _ = writeln!(out, "ef1_witness: {}", ef1_w.as_deref().unwrap_or("-"));
    let _ = writeln!(out, "mms: {}", join(report.mms.iter().map(|v| v.divisor)));
    for v in &report.mms {
        let d = v.divisor;
        let _ = writeln!(out, "mms.{d}.holds: {}", v.holds);
        let _ = writeln!(out, "mms.{d}.thresholds: {}", join(&v.thresholds));
        let w = v
            .witness
            .as_ref()
            .map(|w| format!("{} {}", w.agent, w.shortfall));
        let _ = writeln!(out, "mms.{d}.witness: {}", w.as_deref().unwrap_or("-"));
    }
    out
}

pub fn parse_report<T: Scalar>(text: &str) -> Result<FairnessReport<T>> {
    let rec = Record::parse(text)?;
    let (line, toks) = rec.list("values")?;
    let values = scalars(line, &toks)?;
    let numbers = |key: &str, want: usize| -> Result<Option<Vec<usize>>> {
        let (line, toks) = rec.list(key)?;
        if toks.is_empty() {
            return Ok(None);
        }
        let v = indices(line, &toks)?;
        if v.len() != want {
            return Err(Error::parse(line, format!("`{key}` needs {want} numbers")));
        }
        Ok(Some(v))
    };
    let efx_witness = numbers("efx_witness", 3)?.map(|v| EfxWitness {
        envier: v[0],
        envied: v[1],
        good: v[2],
    });
    let ef1_witness = numbers("ef1_witness", 2)?.map(|v| Ef1Witness {
        envier: v[0],
        envied: v[1],
    });
    let (line, toks) = rec.list("mms")?;
    let mut mms = Vec::new();
    for d in indices(line, &toks)? {
        let (tl, tt) = rec.list(&format!("mms.{d}.thresholds"))?;
        let (wl, wt) = rec.list(&format!("mms.{d}.witness"))?;
        let witness = match wt.as_slice() {
            [] => None,
            [agent, shortfall] => Some(MmsShortfall {
                agent: agent
                    .parse()
                    .map_err(|_| Error::parse(wl, "bad witness agent"))?,
                shortfall: T::parse_scalar(shortfall)
                    .ok_or_else(|| Error::parse(wl, "bad shortfall"))?,
            }),
            _ => return Err(Error::parse(wl, "witness needs an agent and a shortfall")),
        };
        mms.push(MmsVerdict {
            divisor: d,
            holds: rec.bool(&format!("mms.{d}.holds"))?,
            thresholds: scalars(tl, &tt)?,
            witness,
        });
    }
    Ok(FairnessReport {
        complete: rec.bool("complete")?,
        values,
        efx: rec.bool("efx")?,
        efx_witness,
        ef1: rec.bool("ef1")?,
        ef1_witness,
        mms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{pad_agents_to_multiple_of_three, pad_goods};
    use crate::verification::report;
    use crate::Rational;

    fn example() -> Instance<Rational> {
        Instance::from_integers(&[[1, 1, 1, 1, 1], [1, 1, 1, 1, 1], [1, 1, 1, 2, 1]]).unwrap()
    }

    #[test]
    fn instance_round_trip() {
        let text = "# comment\nn: 2\nm: 3\nvaluations:\n  3 1/2 0\n  1 1 1  # trailing\n";
        let x: Instance<Rational> = parse_instance(text).unwrap();
        assert_eq!(x.value(0, 1), &Rational::parse_scalar("1/2").unwrap());
        assert_eq!(parse_instance::<Rational>(&write_instance(&x)).unwrap(), x);

        let padded = pad_agents_to_multiple_of_three(&pad_goods(&x, 4));
        let back: Instance<Rational> = parse_instance(&write_instance(&padded)).unwrap();
        assert_eq!(back, padded);
    }

    #[test]
    fn labels_and_floats_round_trip() {
        let x = Instance::<f64>::new(vec![vec![0.1, 2.5]])
            .unwrap()
            .with_labels(Some(vec!["ann".into()]), Some(vec!["a".into(), "b".into()]))
            .unwrap();
        assert_eq!(parse_instance::<f64>(&write_instance(&x)).unwrap(), x);
    }

    #[test]
    fn malformed_instances() {
        assert!(matches!(
            parse_instance::<Rational>("n: 1\nm: 2\nvaluations:\n  1\n"),
            Err(Error::Parse { line: 4, .. })
        ));
        assert!(parse_instance::<Rational>("n: 1\nm: 1\nvaluations:\n  x\n").is_err());
        assert!(parse_instance::<Rational>("n: 1\nn: 1\n").is_err());
        assert!(parse_instance::<Rational>("  1 2\n").is_err());
        assert!(parse_instance::<Rational>("n: 1\nm: 1\nvaluations:\n  -1\n").is_err());
    }

    #[test]
    fn empty_goods_instance() {
        let text = "n: 2\nm: 0\nvaluations:\n  -\n  -\n";
        let x: Instance<Rational> = parse_instance(text).unwrap();
        assert_eq!((x.agent_count(), x.good_count()), (2, 0));
        assert_eq!(write_instance(&x), text);
    }

    #[test]
    fn allocation_round_trip() {
        let a = Allocation::new(vec![vec![4], vec![], vec![0, 2]], vec![1, 3], 5).unwrap();
        let text = write_allocation(&a);
        assert_eq!(text, "n: 3\nm: 5\nbundles:\n  4\n  -\n  0 2\npool: 1 3\n");
        assert_eq!(parse_allocation(&text).unwrap(), a);
        assert!(parse_allocation("n: 1\nm: 3\nbundles:\n  0\npool: 1\n").is_err());
        assert!(parse_allocation("n: 1\nm: 2\nbundles:\n  0\npool: 0\n").is_err());
    }

    #[test]
    fn maximin_round_trip() {
        let r = crate::shares::mms_exact(&example(), 2, 3).unwrap();
        let text = write_maximin(&r, 5);
        assert!(text.starts_with("agent: 2\nd: 3\nvalue: 2\n"));
        assert_eq!(parse_maximin::<Rational>(&text).unwrap(), r);
    }

    #[test]
    fn report_round_trip() {
        let a = Allocation::from_bundles(vec![vec![0, 1], vec![2, 3], vec![4]], 5).unwrap();
        let r = report(&example(), &a, &[3, 4]).unwrap();
        let text = write_report(&r);
        assert!(text.contains("efx_witness: 2 1 2\n"));
        assert!(text.contains("mms.3.witness: 2 1\n"));
        assert_eq!(parse_report::<Rational>(&text).unwrap(), r);
    }
}
