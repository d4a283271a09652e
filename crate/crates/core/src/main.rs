use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fairdiv::experiment::{self, ExperimentConfig};
use fairdiv::format::{
    parse_allocation, parse_instance, write_allocation, write_instance, write_maximin, write_report,
};
use fairdiv::instance::{
    detect_structure, generate, Family, GeneratorConfig, Instance, StructureReport,
};
use fairdiv::shares::{self, normalize_order_preserving, normalize_scale, DEFAULT_ORACLE_LIMIT};
use fairdiv::verification::report;
use fairdiv::{solve_complete, Algorithm, Error, Rational, Result};

/// Exit code when the requested guarantees are not all certified.
const NOT_CERTIFIED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fairdiv",
    version,
    about = "Fair allocation of indivisible goods with share and envy guarantees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random instance and print its structure.
    Generate(GenerateArgs),
    /// Allocate all goods of an instance and verify the result.
    Solve(SolveArgs),
    /// Check an allocation against an instance.
    Verify(VerifyArgs),
    /// Exact 1-out-of-d shares with witness partitions.
    Mms(MmsArgs),
    /// Rescale an instance so every share partition bundle is worth exactly 1.
    Normalize(NormalizeArgs),
    /// Batch of seeded instances solved and verified, one CSV row each.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_family, default_value = "ordered")]
    family: Family,
    #[arg(long, short = 'n')]
    agents: usize,
    #[arg(long, short = 'm')]
    goods: usize,
    #[arg(long, default_value_t = 20)]
    max_value: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instance file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Algorithm,
    /// Allocation file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report file; the report is always printed.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Event log of the partial allocator followed by the completion.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    instance: PathBuf,
    allocation: PathBuf,
    /// Share divisors to check, e.g. `--d 3 --d 4` or `--d 3,4`.
    #[arg(long = "d", value_delimiter = ',')]
    divisors: Vec<usize>,
    #[arg(long)]
    require_efx: bool,
    #[arg(long)]
    require_ef1: bool,
    #[arg(long)]
    require_complete: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MmsArgs {
    instance: PathBuf,
    #[arg(long = "d")]
    divisor: usize,
    /// Only this agent; all agents otherwise.
    #[arg(long)]
    agent: Option<usize>,
    /// Cross-check against brute force when the instance has at most this many goods.
    #[arg(long, default_value_t = 0)]
    oracle_limit: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeMode {
    /// Divide each good by the bundle of the share partition containing it.
    Scale,
    /// Keep the common good order; ordered instances only.
    Order,
}

#[derive(Args)]
struct NormalizeArgs {
    instance: PathBuf,
    #[arg(long = "d")]
    divisor: usize,
    #[arg(long, value_enum, default_value = "scale")]
    mode: NormalizeMode,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_parser = parse_family, default_value = "ordered")]
    family: Family,
    /// Agent counts, `lo..hi` inclusive or a single number.
    #[arg(long, value_parser = parse_range)]
    agents: (usize, usize),
    #[arg(long, value_parser = parse_range)]
    goods: (usize, usize),
    /// Draw at least this many goods per agent.
    #[arg(long, default_value_t = 0)]
    min_goods_per_agent: usize,
    #[arg(long, default_value_t = 20)]
    max_value: u64,
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_algorithm, value_delimiter = ',', default_value = "a1,a2,a3")]
    algorithm: Vec<Algorithm>,
    #[arg(long, default_value_t = DEFAULT_ORACLE_LIMIT)]
    oracle_limit: usize,
    /// Per-instance CSV rows.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse()
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad number `{t}`"))
    };
    match s.split_once("..") {
        Some((lo, hi)) => Ok((num(lo)?, num(hi.trim_start_matches('='))?)),
        None => num(s).map(|v| (v, v)),
    }
}

fn read_instance(path: &Path) -> Result<Instance<Rational>> {
    parse_instance(&fs::read_to_string(path)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn structure_text(s: &StructureReport, n: usize) -> String {
    let ordering = s
        .ordering
        .as_ref()
        .map(|o| {
            o.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        })
        .unwrap_or_else(|| "-".into());
    format!(
        "ordered: {}\nordering: {ordering}\ntop_k_max: {}\ntop_n: {}\n",
        s.ordered,
        s.top_k_max,
        s.is_top_k(n)
    )
}

fn generate_cmd(a: GenerateArgs) -> Result<u8> {
    let cfg = GeneratorConfig {
        family: a.family,
        agents: a.agents,
        goods: a.goods,
        max_value: a.max_value,
        seed: a.seed,
    };
    let inst: Instance<Rational> = generate(&cfg)?;
    let text = write_instance(&inst);
    let structure = structure_text(&detect_structure(&inst), inst.agent_count());
    match &a.out {
        Some(p) => {
            fs::write(p, text)?;
            print!("{structure}");
        }
        None => {
            print!("{text}");
            eprint!("{structure}");
        }
    }
    Ok(0)
}

fn solve_cmd(a: SolveArgs) -> Result<u8> {
    let inst = read_instance(&a.instance)?;
    let s = solve_complete(&inst, a.algorithm)?;
    if let Some(p) = &a.out {
        fs::write(p, write_allocation(&s.allocation))?;
    }
    let mut text = format!(
        "algorithm: {}\nd: {}\ncertified: {}\n",
        s.algorithm,
        s.divisor,
        s.certified()
    );
    text.push_str(&write_report(&s.report));
    if let Some(p) = &a.report {
        fs::write(p, &text)?;
    }
    if let Some(p) = &a.trace {
        fs::write(p, format!("{}{}", s.trace, s.completion_trace))?;
    }
    if a.out.is_none() {
        print!("{}", write_allocation(&s.allocation));
    }
    print!("{text}");
    Ok(if s.certified() { 0 } else { NOT_CERTIFIED })
}

fn verify_cmd(a: VerifyArgs) -> Result<u8> {
    let inst = read_instance(&a.instance)?;
    let alloc = parse_allocation(&fs::read_to_string(&a.allocation)?)?;
    let r = report(&inst, &alloc, &a.divisors)?;
    let text = write_report(&r);
    if let Some(p) = &a.out {
        fs::write(p, &text)?;
    }
    print!("{text}");
    let holds = r.mms.iter().all(|v| v.holds)
        && (!a.require_efx || r.efx)
        && (!a.require_ef1 || r.ef1)
        && (!a.require_complete || r.complete);
    Ok(if holds { 0 } else { NOT_CERTIFIED })
}

fn mms_cmd(a: MmsArgs) -> Result<u8> {
    let inst = read_instance(&a.instance)?;
    let agents: Vec<usize> = match a.agent {
        Some(i) if i >= inst.agent_count() => {
            return Err(Error::InvalidConfig(format!("agent {i} out of range")));
        }
        Some(i) => vec![i],
        None => (0..inst.agent_count()).collect(),
    };
    let mut records = Vec::new();
    for i in agents {
        let r = shares::mms_exact(&inst, i, a.divisor)?;
        if inst.good_count() <= a.oracle_limit {
            let brute = shares::mms_bruteforce(&inst, i, a.divisor, a.oracle_limit)?;
            if brute.value != r.value {
                return Err(Error::InvariantViolation(format!(
                    "agent {i}: exact share {} but brute force finds {}",
                    r.value, brute.value
                )));
            }
        }
        records.push(write_maximin(&r, inst.good_count()));
    }
    emit(a.out.as_deref(), &records.join("\n"))?;
    Ok(0)
}

fn normalize_cmd(a: NormalizeArgs) -> Result<u8> {
    let inst = read_instance(&a.instance)?;
    let normalized = match a.mode {
        NormalizeMode::Scale => normalize_scale(&inst, a.divisor)?,
        NormalizeMode::Order => normalize_order_preserving(&inst, a.divisor)?,
    };
    emit(a.out.as_deref(), &write_instance(&normalized.instance))?;
    Ok(0)
}

fn experiment_cmd(a: ExperimentArgs) -> Result<u8> {
    let config = ExperimentConfig {
        family: a.family,
        agents: a.agents,
        goods: a.goods,
        min_goods_per_agent: a.min_goods_per_agent,
        max_value: a.max_value,
        count: a.count,
        seed: a.seed,
        algorithms: a.algorithm,
        oracle_limit: a.oracle_limit,
    };
    let summary = experiment::run(&config)?;
    if let Some(p) = &a.out {
        fs::write(p, summary.csv_string()?)?;
    }
    print!("{}", summary.table());
    eprint!("{}", summary.timing_table());
    for r in summary.rows.iter().filter(|r| r.status.is_violation()) {
        eprintln!(
            "violation: seed {} {} {}: {}",
            r.seed,
            r.algorithm,
            r.status.as_str(),
            r.message
        );
    }
    let invariant = summary
        .rows
        .iter()
        .any(|r| r.status == experiment::Status::InvariantViolation);
    Ok(if invariant {
        4
    } else if summary.violations() > 0 {
        NOT_CERTIFIED
    } else {
        0
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate_cmd(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Mms(a) => mms_cmd(a),
        Command::Normalize(a) => normalize_cmd(a),
        Command::Experiment(a) => experiment_cmd(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
