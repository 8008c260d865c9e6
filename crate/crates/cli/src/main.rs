use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use excitrans::modelfile::load_model;
use excitrans::timeseries::{
    adjacent_pairs, all_pairs, compare_series, read_timeseries, write_timeseries, Engine, Format, TimeSeries,
};
use excitrans::{
    make_chain, propagate_classical_rst_with, propagate_lindblad, propagate_quantum_rst, rca_check, run_ensemble,
    AggregateModel, ClassicalStart, EnsembleConfig, Error, InitialState, MomentClosure, RcaThresholds, TimeGrid,
    Unraveling, Verdict,
};

#[derive(Parser)]
#[command(name = "excitrans", version, about = "Exciton transport under pure dephasing: quantum vs classical")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate a scenario with one or more engines and write one file per engine.
    Run(RunArgs),
    /// Compare two time-series files channel by channel.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Where to write the JSON report (stdout if omitted).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check the weak-coupling ratios of a scenario. Exit 0 unless the verdict is fail.
    Rca(ScenarioArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Homogeneous chain: "N,V=1,eps=40,gamma=1,start=14".
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    chain: Option<String>,
    /// JSON model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Uniform dephasing rate overriding the scenario's, in its energy units.
    #[arg(long)]
    gamma: Option<f64>,
    /// Start site overriding the scenario's initial state.
    #[arg(long)]
    start: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Lindblad,
    #[value(alias = "classical-rst")]
    Classical,
    QuantumRst,
    #[value(alias = "sse-ensemble")]
    Sse,
    #[value(alias = "kubo-ensemble")]
    Kubo,
    Bessel,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClosureArg {
    PhaseDiffusion,
    Shared,
}

#[derive(Clone, Copy, ValueEnum)]
enum StartArg {
    PhaseAveraged,
    Literal,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated engines.
    #[arg(long, value_delimiter = ',', required = true)]
    engines: Vec<EngineArg>,
    /// t_start:t_end:n_samples (default 0:10:1001 for chains, 0:1:1001 for model files).
    #[arg(long)]
    grid: Option<String>,
    /// Integration step (default derived from the fastest rate).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    n_traj: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "EXCITRANS_OUT", default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Coherence channels: adjacent, all, none, or pairs like "0-1,2-5".
    #[arg(long, default_value = "adjacent")]
    coherences: String,
    /// Diagonal treatment in the classical moment equations.
    #[arg(long, value_enum, default_value = "phase-diffusion")]
    closure: ClosureArg,
    /// Mapping of the initial wavefunction onto oscillator amplitudes.
    #[arg(long, value_enum, default_value = "phase-averaged")]
    classical_start: StartArg,
}

/// Failure classes and their exit codes.
enum Failure {
    Config(String),
    Numerical { engine: Option<&'static str>, message: String },
}

impl Failure {
    fn report(&self) -> ExitCode {
        let one_line = |s: &str| s.replace(['\n', '\r'], " ");
        match self {
            Failure::Config(m) => {
                eprintln!("error kind=config message=\"{}\"", one_line(m));
                ExitCode::from(2)
            }
            Failure::Numerical { engine, message } => {
                eprintln!(
                    "error kind=numerical engine={} message=\"{}\"",
                    engine.unwrap_or("-"),
                    one_line(message)
                );
                ExitCode::from(1)
            }
        }
    }
}

fn classify(engine: Option<&'static str>) -> impl Fn(Error) -> Failure {
    move |e| match e {
        Error::StepTooLarge { .. }
        | Error::NormCollapse(_)
        | Error::NotPositive(_)
        | Error::NonPositiveFrequency { .. }
        | Error::NonFinite(_) => Failure::Numerical {
            engine,
            message: e.to_string(),
        },
        other => Failure::Config(other.to_string()),
    }
}

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

struct Scenario {
    model: AggregateModel,
    initial: InitialState,
    /// (V, start) for a homogeneous chain.
    chain: Option<(f64, usize)>,
}

fn parse_chain(spec: &str) -> Result<(usize, f64, f64, f64, Option<usize>), Failure> {
    let mut parts = spec.split(',').map(str::trim);
    let n: usize = parts
        .next()
        .unwrap_or("")
        .parse()
        .map_err(|_| config(format!("chain spec {spec:?} must start with the number of sites")))?;
    let (mut v, mut eps, mut gamma, mut start) = (1.0, 40.0, 1.0, None);
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| config(format!("chain field {part:?} is not key=value")))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| config(format!("chain field {part:?} is not a number")));
        match key.to_ascii_lowercase().as_str() {
            "v" => v = num(value)?,
            "eps" | "epsilon" => eps = num(value)?,
            "gamma" => gamma = num(value)?,
            "start" => {
                start = Some(value.parse().map_err(|_| config(format!("chain field {part:?} is not an index")))?)
            }
            _ => return Err(config(format!("unknown chain field {key:?}"))),
        }
    }
    Ok((n, v, eps, gamma, start))
}

fn load_scenario(args: &ScenarioArgs) -> Result<Scenario, Failure> {
    let cfg = classify(None);
    let mut scenario = if let Some(spec) = &args.chain {
        let (n, v, eps, gamma, start) = parse_chain(spec)?;
        let start = start.unwrap_or(n / 2);
        let (model, initial) = make_chain(n, v, eps, gamma, start).map_err(&cfg)?;
        Scenario {
            model,
            initial,
            chain: Some((v, start)),
        }
    } else {
        let path = args.model.as_ref().expect("clap enforces a scenario source");
        let (model, initial) = load_model(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
        Scenario {
            model,
            initial,
            chain: None,
        }
    };
    if let Some(g) = args.gamma {
        let units = scenario.model.units();
        scenario.model = scenario.model.with_uniform_gamma(units.to_internal(g)).map_err(&cfg)?;
    }
    if let Some(s) = args.start {
        scenario.initial = InitialState::Site(s);
        scenario.initial.check_dim(scenario.model.n_sites()).map_err(&cfg)?;
        if let Some((v, _)) = scenario.chain {
            scenario.chain = Some((v, s));
        }
    }
    Ok(scenario)
}

fn parse_grid(spec: Option<&str>, scenario: &Scenario, dt: Option<f64>) -> Result<TimeGrid, Failure> {
    let default = if scenario.chain.is_some() { "0:10:1001" } else { "0:1:1001" };
    let spec = spec.unwrap_or(default);
    let fields: Vec<&str> = spec.split(':').collect();
    let bad = || config(format!("grid {spec:?} is not t_start:t_end:n_samples"));
    if fields.len() != 3 {
        return Err(bad());
    }
    let t0: f64 = fields[0].parse().map_err(|_| bad())?;
    let t1: f64 = fields[1].parse().map_err(|_| bad())?;
    let n: usize = fields[2].parse().map_err(|_| bad())?;
    let grid = match dt {
        Some(dt) => TimeGrid::new(t0, t1, n, dt),
        None => TimeGrid::for_model(&scenario.model, t0, t1, n),
    };
    grid.map_err(classify(None))
}

fn parse_pairs(spec: &str, n: usize) -> Result<Vec<(usize, usize)>, Failure> {
    let pairs = match spec {
        "adjacent" => adjacent_pairs(n),
        "all" => all_pairs(n),
        "none" => Vec::new(),
        _ => spec
            .split(',')
            .map(|p| {
                let (a, b) = p
                    .split_once('-')
                    .ok_or_else(|| config(format!("coherence pair {p:?} is not a-b")))?;
                let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| config(format!("bad site index in {p:?}")));
                Ok((parse(a)?, parse(b)?))
            })
            .collect::<Result<_, Failure>>()?,
    };
    if let Some(&(a, b)) = pairs.iter().find(|(a, b)| *a >= n || *b >= n) {
        return Err(config(format!("coherence pair {a}-{b} out of range for {n} sites")));
    }
    Ok(pairs)
}

fn run_engine(
    engine: EngineArg,
    scenario: &Scenario,
    grid: &TimeGrid,
    pairs: &[(usize, usize)],
    args: &RunArgs,
) -> Result<TimeSeries, Failure> {
    let model = &scenario.model;
    let n = model.n_sites();
    let units = model.units();
    let start = match args.classical_start {
        StartArg::PhaseAveraged => ClassicalStart::PhaseAveraged,
        StartArg::Literal => ClassicalStart::Literal,
    };
    let tag = engine_tag(engine).tag();
    let num = classify(Some(tag));
    match engine {
        EngineArg::Lindblad => {
            let traj = propagate_lindblad(model, &scenario.initial.density(n).map_err(&num)?, grid).map_err(&num)?;
            TimeSeries::from_quantum(&traj, units, pairs).map_err(num)
        }
        EngineArg::QuantumRst => {
            let rst = scenario.initial.rst(n).map_err(&num)?;
            let states = propagate_quantum_rst(model, &rst, grid).map_err(&num)?;
            TimeSeries::from_quantum_rst(grid, &states, units, pairs).map_err(num)
        }
        EngineArg::Classical => {
            let closure = match args.closure {
                ClosureArg::PhaseDiffusion => MomentClosure::PhaseDiffusion,
                ClosureArg::Shared => MomentClosure::SharedFunctional,
            };
            let rst = scenario.initial.classical_rst(n, start).map_err(&num)?;
            let traj = propagate_classical_rst_with(model, &rst, grid, closure).map_err(&num)?;
            TimeSeries::from_classical(&traj, units, pairs).map_err(num)
        }
        EngineArg::Sse | EngineArg::Kubo => {
            let (unraveling, tag) = if engine == EngineArg::Sse {
                (Unraveling::Quantum, Engine::SseEnsemble)
            } else {
                (Unraveling::Classical, Engine::KuboEnsemble)
            };
            let mut cfg = EnsembleConfig::new(unraveling, args.n_traj, args.seed);
            cfg.start = start;
            let ens = run_ensemble(model, &scenario.initial, grid, &cfg).map_err(&num)?;
            TimeSeries::from_ensemble(&ens, tag, units, pairs).map_err(num)
        }
        EngineArg::Bessel => {
            let Some((v, start)) = scenario.chain else {
                return Err(config("bessel requires a chain scenario"));
            };
            if model.gamma().iter().any(|g| *g != 0.0) {
                return Err(config("bessel requires gamma=0"));
            }
            TimeSeries::bessel(n, v, start, grid, units, pairs).map_err(num)
        }
    }
}

fn engine_tag(engine: EngineArg) -> Engine {
    match engine {
        EngineArg::Lindblad => Engine::Lindblad,
        EngineArg::Classical => Engine::ClassicalRst,
        EngineArg::QuantumRst => Engine::QuantumRst,
        EngineArg::Sse => Engine::SseEnsemble,
        EngineArg::Kubo => Engine::KuboEnsemble,
        EngineArg::Bessel => Engine::Bessel,
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let scenario = load_scenario(&args.scenario)?;
    let grid = parse_grid(args.grid.as_deref(), &scenario, args.dt)?;
    let pairs = parse_pairs(&args.coherences, scenario.model.n_sites())?;
    let format = match args.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    if args.engines.contains(&EngineArg::Bessel) && scenario.model.gamma().iter().any(|g| *g != 0.0) {
        return Err(config("bessel requires gamma=0"));
    }
    let mut engines = args.engines.clone();
    engines.dedup();
    std::fs::create_dir_all(&args.out).map_err(|e| config(format!("{}: {e}", args.out.display())))?;
    for engine in engines {
        let series = run_engine(engine, &scenario, &grid, &pairs, args)?;
        let path = args.out.join(format!("{}.{}", engine_tag(engine).tag(), format.extension()));
        write_timeseries(&series, format, &path).map_err(|e| config(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_compare(a: &Path, b: &Path, report: Option<&Path>) -> Result<(), Failure> {
    let read = |p: &Path| read_timeseries(p).map_err(|e| config(format!("{}: {e}", p.display())));
    let diff = compare_series(&read(a)?, &read(b)?).map_err(classify(None))?;
    match report {
        Some(path) => std::fs::write(path, diff.to_json() + "\n")
            .map_err(|e| config(format!("{}: {e}", path.display())))?,
        None => println!("{}", diff.to_json()),
    }
    Ok(())
}

fn cmd_rca(args: &ScenarioArgs) -> Result<ExitCode, Failure> {
    let scenario = load_scenario(args)?;
    let report = rca_check(&scenario.model, RcaThresholds::default()).map_err(classify(Some("rca")))?;
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    Ok(if report.verdict == Verdict::Fail {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let text: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            return config(text.join(" ").trim_start_matches("error: ")).report();
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|()| ExitCode::SUCCESS),
        Command::Compare { a, b, report } => cmd_compare(a, b, report.as_deref()).map(|()| ExitCode::SUCCESS),
        Command::Rca(args) => cmd_rca(args),
    };
    result.unwrap_or_else(|f| f.report())
}
