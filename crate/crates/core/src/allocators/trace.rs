//! Event log of an allocator run.

use std::fmt;

use crate::error::{Error, Result};
use crate::instance::Allocation;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    SingletonClaim {
        agent: usize,
        bag: usize,
        good: usize,
    },
    BagInit {
        bag: usize,
        goods: Vec<usize>,
    },
    Fill {
        good: usize,
        bag: usize,
    },
    Claim {
        agent: usize,
        bag: usize,
    },
    /// Bag-filling swap: `agent` drops bag `from` and takes open bag `to`.
    Swap {
        agent: usize,
        from: usize,
        to: usize,
    },
    /// The divider's bags for this round, indexed by position.
    LoneDivider {
        agent: usize,
        bags: Vec<Vec<usize>>,
    },
    Shrink {
        bag: usize,
        goods: Vec<usize>,
    },
    /// `(agent, bag)` pairs; each agent receives the current content of the bag.
    Matching {
        pairs: Vec<(usize, usize)>,
    },
    /// A satisfied agent gives up its bundle for `goods`.
    EnviousSwap {
        agent: usize,
        goods: Vec<usize>,
    },
    /// Each agent of the cycle takes the bundle of the next one.
    CycleRotation {
        cycle: Vec<usize>,
    },
    SourceGift {
        agent: usize,
        good: usize,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::SingletonClaim { .. } => "singleton_claim",
            Event::BagInit { .. } => "bag_init",
            Event::Fill { .. } => "fill",
            Event::Claim { .. } => "claim",
            Event::Swap { .. } => "swap",
            Event::LoneDivider { .. } => "lone_divider",
            Event::Shrink { .. } => "shrink",
            Event::Matching { .. } => "matching",
            Event::EnviousSwap { .. } => "envious_swap",
            Event::CycleRotation { .. } => "cycle_rotation",
            Event::SourceGift { .. } => "source_gift",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub event: Event,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AllocatorTrace {
    pub entries: Vec<TraceEntry>,
}

impl AllocatorTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, iteration: usize, event: Event) {
        self.entries.push(TraceEntry { iteration, event });
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.entries.iter().map(|e| &e.event)
    }

    pub fn extend(&mut self, other: AllocatorTrace) {
        self.entries.extend(other.entries);
    }

    /// Rebuilds the allocation described by the events, starting from
    /// `start` (usually empty).
    pub fn replay(&self, start: &Allocation, good_count: usize) -> Result<Allocation> {
        let mut bundles: Vec<Vec<usize>> = start.bundles().to_vec();
        let mut bags: Vec<Vec<usize>> = Vec::new();
        let mut holding: Vec<Option<usize>> = vec![None; bundles.len()];
        let bad = |what: &str| Error::InvariantViolation(format!("trace replay: {what}"));
        for event in self.events() {
            match event {
                Event::SingletonClaim { agent, bag, good } => {
                    *bag_mut(&mut bags, *bag) = vec![*good];
                    bundles[*agent] = vec![*good];
                    holding[*agent] = Some(*bag);
                }
                Event::BagInit { bag, goods } => *bag_mut(&mut bags, *bag) = goods.clone(),
                Event::Fill { good, bag } => bag_mut(&mut bags, *bag).push(*good),
                Event::Claim { agent, bag } => {
                    bundles[*agent] = bags
                        .get(*bag)
                        .ok_or_else(|| bad("claim of unknown bag"))?
                        .clone();
                    holding[*agent] = Some(*bag);
                }
                Event::Swap { agent, from, to } => {
                    if holding[*agent] != Some(*from) {
                        return Err(bad("swap from a bag the agent does not hold"));
                    }
                    bundles[*agent] = bags
                        .get(*to)
                        .ok_or_else(|| bad("swap to unknown bag"))?
                        .clone();
                    holding[*agent] = Some(*to);
                }
                Event::LoneDivider { bags: new, .. } => bags = new.clone(),
                Event::Shrink { bag, goods } => *bag_mut(&mut bags, *bag) = goods.clone(),
                Event::Matching { pairs } => {
                    for &(agent, bag) in pairs {
                        bundles[agent] = bags
                            .get(bag)
                            .ok_or_else(|| bad("matching to unknown bag"))?
                            .clone();
                    }
                }
                Event::EnviousSwap { agent, goods } => bundles[*agent] = goods.clone(),
                Event::CycleRotation { cycle } => {
                    let first = bundles[cycle[0]].clone();
                    for w in cycle.windows(2) {
                        bundles[w[0]] = bundles[w[1]].clone();
                    }
                    bundles[*cycle.last().expect("non-empty cycle")] = first;
                }
                Event::SourceGift { agent, good } => bundles[*agent].push(*good),
            }
        }
        Allocation::from_bundles(bundles, good_count)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut trace = AllocatorTrace::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            trace
                .entries
                .push(parse_entry(line).map_err(|m| Error::parse(k + 1, m))?);
        }
        Ok(trace)
    }
}

fn bag_mut(bags: &mut Vec<Vec<usize>>, b: usize) -> &mut Vec<usize> {
    if bags.len() <= b {
        bags.resize(b + 1, Vec::new());
    }
    &mut bags[b]
}

fn list(goods: &[usize]) -> String {
    if goods.is_empty() {
        "-".into()
    } else {
        goods
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn parse_list(text: &str) -> std::result::Result<Vec<usize>, String> {
    if text == "-" {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| t.parse().map_err(|_| format!("bad index `{t}`")))
        .collect()
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.event.kind())?;
        match &self.event {
            Event::SingletonClaim { agent, bag, good } => {
                write!(f, " agent={agent} bag={bag} good={good}")?
            }
            Event::BagInit { bag, goods } => write!(f, " bag={bag} goods={}", list(goods))?,
            Event::Fill { good, bag } => write!(f, " good={good} bag={bag}")?,
            Event::Claim { agent, bag } => write!(f, " agent={agent} bag={bag}")?,
            Event::Swap { agent, from, to } => write!(f, " agent={agent} from={from} to={to}")?,
            Event::LoneDivider { agent, bags } => write!(
                f,
                " agent={agent} bags={}",
                bags.iter().map(|b| list(b)).collect::<Vec<_>>().join("|")
            )?,
            Event::Shrink { bag, goods } => write!(f, " bag={bag} goods={}", list(goods))?,
            Event::Matching { pairs } => write!(
                f,
                " pairs={}",
                if pairs.is_empty() {
                    "-".to_string()
                } else {
                    pairs
                        .iter()
                        .map(|(a, b)| format!("{a}:{b}"))
                        .collect::<Vec<_>>()
                        .join(",")
                }
            )?,
            Event::EnviousSwap { agent, goods } => {
                write!(f, " agent={agent} goods={}", list(goods))?
            }
            Event::CycleRotation { cycle } => write!(f, " cycle={}", list(cycle))?,
            Event::SourceGift { agent, good } => write!(f, " agent={agent} good={good}")?,
        }
        write!(f, " iter={}", self.iteration)
    }
}

impl fmt::Display for AllocatorTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

fn parse_entry(line: &str) -> std::result::Result<TraceEntry, String> {
    let mut parts = line.split_whitespace();
    let kind = parts.next().ok_or("empty event")?;
    let mut args = std::collections::BTreeMap::new();
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| format!("bad argument `{p}`"))?;
        args.insert(k, v);
    }
    let get = |k: &str| args.get(k).copied().ok_or_else(|| format!("missing `{k}`"));
    let num = |k: &str| -> std::result::Result<usize, String> {
        get(k)?.parse().map_err(|_| format!("bad number for `{k}`"))
    };
    let event = match kind {
        "singleton_claim" => Event::SingletonClaim {
            agent: num("agent")?,
            bag: num("bag")?,
            good: num("good")?,
        },
        "bag_init" => Event::BagInit {
            bag: num("bag")?,
            goods: parse_list(get("goods")?)?,
        },
        "fill" => Event::Fill {
            good: num("good")?,
            bag: num("bag")?,
        },
        "claim" => Event::Claim {
            agent: num("agent")?,
            bag: num("bag")?,
        },
        "swap" => Event::Swap {
            agent: num("agent")?,
            from: num("from")?,
            to: num("to")?,
        },
        "lone_divider" => Event::LoneDivider {
            agent: num("agent")?,
            bags: get("bags")?
                .split('|')
                .map(parse_list)
                .collect::<std::result::Result<_, _>>()?,
        },
        "shrink" => Event::Shrink {
            bag: num("bag")?,
            goods: parse_list(get("goods")?)?,
        },
        "matching" => {
            let text = get("pairs")?;
            let pairs = if text == "-" {
                Vec::new()
            } else {
                text.split(',')
                    .map(|p| {
                        let (a, b) = p.split_once(':').ok_or_else(|| format!("bad pair `{p}`"))?;
                        Ok((
                            a.parse().map_err(|_| format!("bad agent `{a}`"))?,
                            b.parse().map_err(|_| format!("bad bag `{b}`"))?,
                        ))
                    })
                    .collect::<std::result::Result<_, String>>()?
            };
            Event::Matching { pairs }
        }
        "envious_swap" => Event::EnviousSwap {
            agent: num("agent")?,
            goods: parse_list(get("goods")?)?,
        },
        "cycle_rotation" => Event::CycleRotation {
            cycle: parse_list(get("cycle")?)?,
        },
        "source_gift" => Event::SourceGift {
            agent: num("agent")?,
            good: num("good")?,
        },
        other => return Err(format!("unknown event `{other}`")),
    };
    Ok(TraceEntry {
        iteration: num("iter")?,
        event,
    })
}
