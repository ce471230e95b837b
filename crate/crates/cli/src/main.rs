use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::warn;

use pacmap_core::baselines::BaselineMethod;
use pacmap_core::bench::{
    illustration_table, run_benchmark, run_method, write_pareto_csv, write_records_csv, write_trajectory_csv,
    BenchConfig, Method, SolverSettings,
};
use pacmap_core::circuit::{
    generate_deterministic_circuit, generate_random_circuit, parse_circuit, serialize_circuit, Circuit,
};
use pacmap_core::inference::{brute_force_map, min_entropy};
use pacmap_core::solvers::{budget_pac_map, ExploitSchedule, PacParams, RunOptions, SmoothOptions};
use pacmap_core::{ConditionalOracle, Error, PartialAssignment, QuerySpec, TabularDistribution, VarId};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_ZERO_EVIDENCE: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

/// Anytime MAP inference for probabilistic circuits with PAC certificates.
#[derive(Parser)]
#[command(name = "pacmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one MAP query with a sampling solver or baseline.
    Solve(SolveArgs),
    /// Run the ranking benchmark described by a config file.
    Bench(BenchArgs),
    /// Run the fixed-budget solver and write its (epsilon, delta) frontier.
    Pareto(ParetoArgs),
    /// Check smoothness and decomposability of a circuit file.
    Validate(ValidateArgs),
    /// Brute-force the exact MAP of a query (at most 24 query variables).
    Oracle(OracleArgs),
    /// Write the per-draw trajectory of a PAC run.
    Illustrate(IllustrateArgs),
    /// Write a random smooth, decomposable circuit.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct QueryInput {
    /// Circuit file.
    #[arg(long)]
    circuit: PathBuf,
    /// Query file (`Q v`, `E v 0|1`, `V v` lines); all variables are queried if omitted.
    #[arg(long)]
    query: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: QueryInput,
    #[arg(long, default_value = "pac")]
    method: String,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Draws for `budget` and `naive`.
    #[arg(long, default_value_t = 10_000)]
    budget: u64,
    /// Draw cap for `pac` and `smooth`.
    #[arg(long, default_value_t = 1_000_000)]
    cap: u64,
    #[arg(long, default_value_t = 5000)]
    batch_size: usize,
    /// Exploitation period for `smooth`.
    #[arg(long, default_value_t = 100)]
    period: u64,
    /// Exploit with this probability per iteration instead of periodically.
    #[arg(long, conflicts_with = "period")]
    eta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    radius: usize,
    /// Baseline (mp, amp, ind) whose answer warm-starts the sampling solvers.
    #[arg(long)]
    warm_from: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trajectory CSV output (pac and smooth only).
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Records CSV; written to stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary table file; printed if omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Write 0 in the runtime column so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct ParetoArgs {
    #[command(flatten)]
    input: QueryInput,
    #[arg(long)]
    budget: u64,
    #[arg(long, default_value_t = 100)]
    grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Frontier CSV; written to stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    circuit: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: QueryInput,
}

#[derive(Args)]
struct IllustrateArgs {
    /// Circuit file; the built-in 6-variable table with mode 0.104 if omitted.
    #[arg(long, requires = "query")]
    circuit: Option<PathBuf>,
    #[arg(long)]
    query: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed of the built-in table.
    #[arg(long, default_value_t = 0)]
    table_seed: u64,
    /// Trajectory CSV; written to stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    vars: usize,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 3)]
    fanout: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Build indicator-partitioned sums (MAP solvable by max-product).
    #[arg(long)]
    deterministic: bool,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A post-condition the solvers promise but did not deliver.
#[derive(Debug)]
struct Invariant(String);

impl std::fmt::Display for Invariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "internal invariant violated: {}", self.0)
    }
}

impl std::error::Error for Invariant {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Invariant>().is_some() {
        return EXIT_INVARIANT;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::ZeroProbabilityEvidence) => EXIT_ZERO_EVIDENCE,
        Some(Error::InvalidParameter(_)) => EXIT_USAGE,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Pareto(a) => cmd_pareto(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Illustrate(a) => cmd_illustrate(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_circuit(path: &Path) -> anyhow::Result<Circuit> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let parsed = parse_circuit(&text).with_context(|| format!("cannot parse {}", path.display()))?;
    Ok(parsed.circuit)
}

fn load_spec(path: Option<&Path>, num_vars: usize) -> anyhow::Result<QuerySpec> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            Ok(QuerySpec::parse(&text, num_vars).with_context(|| format!("in {}", p.display()))?)
        }
        None => Ok(QuerySpec::with_defaults(
            num_vars,
            (0..num_vars).map(VarId).collect(),
            PartialAssignment::new(),
        )?),
    }
}

fn parse_method<T: std::str::FromStr<Err = Error>>(s: &str) -> anyhow::Result<T> {
    Ok(s.parse::<T>()?)
}

fn cmd_solve(a: SolveArgs) -> anyhow::Result<u8> {
    let method: Method = parse_method(&a.method)?;
    let warm_from: Option<BaselineMethod> = a.warm_from.as_deref().map(parse_method).transpose()?;
    if a.trajectory.is_some() && !method.is_adaptive() {
        return Err(Error::InvalidParameter(format!("--trajectory needs an adaptive method, not {method}")).into());
    }
    let params = PacParams::new(a.epsilon, a.delta)?;
    let circuit = load_circuit(&a.input.circuit)?;
    let spec = load_spec(a.input.query.as_deref(), circuit.num_vars())?;
    let oracle = ConditionalOracle::new(&circuit, spec)?;
    let settings = SolverSettings {
        params,
        cap: Some(a.cap),
        budget: a.budget,
        batch_size: a.batch_size,
        smooth: SmoothOptions {
            radius: a.radius,
            schedule: match a.eta {
                Some(eta) => ExploitSchedule::Bernoulli(eta),
                None => ExploitSchedule::Periodic(a.period),
            },
        },
        seed: a.seed,
        frontier_grid: 100,
        warm_from,
    };
    let mut points = Vec::new();
    let mut push = |p: &_| points.push(*p);
    let sink: Option<&mut dyn FnMut(&_)> = if a.trajectory.is_some() { Some(&mut push) } else { None };
    let out = run_method(method, &oracle, &settings, sink)?;
    if let Some(path) = &a.trajectory {
        write_trajectory_csv(output(Some(path))?, &points)?;
    }

    let rescored = oracle.conditional_log_prob(&out.q_hat)?;
    if (rescored - out.log_p_hat).abs() > 1e-9 * rescored.abs().max(1.0) {
        return Err(Invariant(format!("reported ln p̂ {} but oracle gives {rescored}", out.log_p_hat)).into());
    }
    let cert = out.certificate.as_ref();
    let guarantee = cert.and_then(|c| c.guarantee(a.epsilon));
    let fmt_opt = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), |v| v.to_string());
    println!(
        "q_hat={} log_p_hat={} cert={} epsilon={} delta={} draws={} oracle_calls={}",
        out.q_hat,
        out.log_p_hat,
        cert.map_or("none", |c| c.kind()),
        fmt_opt(guarantee.map(|g| g.0)),
        fmt_opt(guarantee.map(|g| g.1)),
        out.draws,
        out.oracle_calls,
    );
    eprintln!("method       {method}");
    eprintln!("query vars   {}", oracle.spec().query_vars().len());
    eprintln!("MAP estimate {}", out.q_hat);
    eprintln!("p̂            {:.6e} (ln {:.6})", out.log_p_hat.exp(), out.log_p_hat);
    if let Some(c) = cert {
        eprintln!("certificate  {c}");
    }
    eprintln!("draws        {}", out.draws);
    eprintln!("oracle calls {}", out.oracle_calls);
    eprintln!("time         {:.3} ms", out.wall_time.as_secs_f64() * 1e3);
    Ok(0)
}

fn cmd_bench(a: BenchArgs) -> anyhow::Result<u8> {
    let cfg = BenchConfig::from_file(&a.config).with_context(|| format!("in {}", a.config.display()))?;
    let result = run_benchmark(&cfg)?;
    let failures = result.records.iter().filter(|r| r.error.is_some()).count();
    if failures > 0 {
        warn!("{failures} benchmark rows failed");
    }
    let mut w = output(a.out.as_deref())?;
    write_records_csv(&mut w, &result.records, !a.no_timing)?;
    w.flush()?;
    drop(w);
    let table = result.summary.to_string();
    match (&a.summary, &a.out) {
        (Some(p), _) => fs::write(p, table).with_context(|| format!("cannot write {}", p.display()))?,
        (None, Some(_)) => print!("{table}"),
        (None, None) => eprint!("{table}"),
    }
    Ok(0)
}

fn cmd_pareto(a: ParetoArgs) -> anyhow::Result<u8> {
    let circuit = load_circuit(&a.input.circuit)?;
    let spec = load_spec(a.input.query.as_deref(), circuit.num_vars())?;
    let oracle = ConditionalOracle::new(&circuit, spec)?;
    let opts = RunOptions {
        frontier_grid: a.grid,
        ..RunOptions::seeded(a.seed)
    };
    let (sol, front) = budget_pac_map(&oracle, a.budget, &opts)?;
    if front.points.windows(2).any(|w| !(w[0].0 < w[1].0 && w[0].1 > w[1].1)) {
        return Err(Invariant("frontier is not strictly monotone".into()).into());
    }
    write_pareto_csv(output(a.out.as_deref())?, &front)?;
    eprintln!(
        "q_hat={} p_hat={} draws={} points={}",
        sol.q_hat,
        sol.p_hat(),
        sol.draws_used,
        front.points.len()
    );
    Ok(0)
}

fn cmd_validate(a: ValidateArgs) -> anyhow::Result<u8> {
    let text = fs::read_to_string(&a.circuit).with_context(|| format!("cannot read {}", a.circuit.display()))?;
    let parsed = parse_circuit(&text).with_context(|| format!("cannot parse {}", a.circuit.display()))?;
    for w in &parsed.warnings {
        println!("warning: line {}: {}", w.line, w.message);
    }
    let c = &parsed.circuit;
    println!("nodes {} vars {} root {}", c.len(), c.num_vars(), c.root());
    let report = c.validate_structure();
    print!("{report}");
    let uncovered = c.num_vars() - c.scope(c.root()).len();
    if uncovered > 0 {
        println!("root scope misses {uncovered} variable(s)");
    }
    if report.is_valid() && uncovered == 0 {
        Ok(0)
    } else {
        Ok(EXIT_INPUT)
    }
}

fn cmd_oracle(a: OracleArgs) -> anyhow::Result<u8> {
    let circuit = load_circuit(&a.input.circuit)?;
    let spec = load_spec(a.input.query.as_deref(), circuit.num_vars())?;
    let oracle = ConditionalOracle::new(&circuit, spec)?;
    let table = TabularDistribution::tabulate(&oracle)?;
    let (q_star, log_p) = brute_force_map(&table);
    let p_star = log_p.exp();
    println!("q_star={q_star} p_star={p_star} h={}", min_entropy(p_star)?);
    Ok(0)
}

fn cmd_illustrate(a: IllustrateArgs) -> anyhow::Result<u8> {
    let params = PacParams::new(a.epsilon, a.delta)?;
    let circuit = match &a.circuit {
        Some(p) => load_circuit(p)?,
        None => Circuit::from_table(&illustration_table(a.table_seed))?,
    };
    let spec = load_spec(a.query.as_deref(), circuit.num_vars())?;
    let oracle = ConditionalOracle::new(&circuit, spec)?;
    let mut points = Vec::new();
    let sol = pacmap_core::solvers::pac_map_traced(&oracle, params, &RunOptions::seeded(a.seed), &mut |p| {
        points.push(*p)
    })?;
    if points.windows(2).any(|w| w[1].p_hat < w[0].p_hat || w[1].p_check > w[0].p_check) {
        return Err(Invariant("trajectory is not monotone".into()).into());
    }
    write_trajectory_csv(output(a.out.as_deref())?, &points)?;
    eprintln!(
        "q_hat={} p_hat={} cert={} draws={}",
        sol.q_hat,
        sol.p_hat(),
        sol.certificate.kind(),
        sol.draws_used
    );
    Ok(0)
}

fn cmd_generate(a: GenerateArgs) -> anyhow::Result<u8> {
    let c = if a.deterministic {
        generate_deterministic_circuit(a.vars, a.depth, a.seed)?
    } else {
        generate_random_circuit(a.vars, a.depth, a.fanout, a.seed)?
    };
    let mut w = output(a.out.as_deref())?;
    w.write_all(serialize_circuit(&c).as_bytes())?;
    w.flush()?;
    if a.out.is_some() {
        eprintln!("{} nodes over {} variables", c.len(), c.num_vars());
    }
    Ok(0)
}
