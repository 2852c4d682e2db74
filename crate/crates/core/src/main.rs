use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use haar_greedy::experiments::campaign::{random_unit_vector, DEFAULT_CONSTANT_SAMPLES};
use haar_greedy::experiments::schema::{counterexample_csv, render, to_json};
use haar_greedy::experiments::{
    property_p_report, run_campaign, run_counterexample, CampaignSpec, CellSummary, LemmaSummary, OutputFormat,
    TraceDocument,
};
use haar_greedy::greedy::DEFAULT_SNAP_EPSILON;
use haar_greedy::numeric::sample_rng;
use haar_greedy::partition::choose_zeta;
use haar_greedy::{
    AlgorithmConfig, AlgorithmKind, Error, Exponent, GreedyEngine, HaarCoefficients, HaarDictionary, IndexSet,
    TraceStatus,
};

const EXIT_OK: u8 = 0;
const EXIT_NUMERICAL: u8 = 1;
const EXIT_STEP_CAP: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "haar-greedy", version, about = "Greedy algorithms over Haar dictionaries in L_p")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = "json")]
    format: OutputFormat,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    max_steps: Option<usize>,
    #[arg(long = "snap-eps", global = true, default_value_t = DEFAULT_SNAP_EPSILON)]
    snap_eps: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one algorithm on one initial vector and emit its trace.
    Run(RunArgs),
    /// Sweep a grid and compare observed step counts with the bound N.
    Bounds(GridArgs),
    /// Run X-greedy on the two-element Euclidean dictionary.
    Counterexample(CounterexampleArgs),
    /// Sample Property P ratios.
    Propp(ProppArgs),
    /// Replay traces against the partition lemmas.
    Lemmas(GridArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    kind: AlgorithmKind,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Comma-separated coefficients of h_0..h_m; random when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coeffs: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_CONSTANT_SAMPLES)]
    zeta_samples: usize,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long = "p", value_delimiter = ',', required = true)]
    p_grid: Vec<f64>,
    #[arg(long = "m", value_delimiter = ',', required = true)]
    m_grid: Vec<usize>,
    #[arg(long = "kind", value_delimiter = ',', default_value = "xga,dga")]
    kinds: Vec<AlgorithmKind>,
    #[arg(long = "tau", value_delimiter = ',', default_value = "1")]
    tau_grid: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    runs: usize,
    #[arg(long, default_value_t = DEFAULT_CONSTANT_SAMPLES)]
    gamma_samples: usize,
    #[arg(long, default_value_t = DEFAULT_CONSTANT_SAMPLES)]
    zeta_samples: usize,
    /// Skip the deterministic ramp, spike and alternating vectors.
    #[arg(long)]
    no_presets: bool,
}

#[derive(Args, Debug)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 200)]
    steps: usize,
    /// Starting point; non-termination is asserted only for the default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct ProppArgs {
    #[arg(long)]
    p: f64,
    #[arg(long = "m", value_delimiter = ',', default_value = "2,3,4,5,6,7,8,9,10")]
    m_grid: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_CONSTANT_SAMPLES)]
    samples: usize,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidExponent(_)
            | Error::InvalidParameter(_)
            | Error::LengthMismatch { .. }
            | Error::InsufficientLevel { .. }
            | Error::InvalidIndexSet
            | Error::ConstantHasNoLevel
            | Error::NonFinite
            | Error::OutOfRange { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type CmdResult = std::result::Result<u8, Failure>;

fn emit(global: &GlobalOpts, body: &str) -> std::result::Result<(), Failure> {
    match &global.out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| Failure::Numerical(format!("writing {}: {e}", path.display())))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn cmd_run(global: &GlobalOpts, args: &RunArgs) -> CmdResult {
    let p = Exponent::new(args.p)?;
    let index_set = IndexSet::initial_segment(args.m);
    let coeffs = match &args.coeffs {
        Some(c) => c.clone(),
        None => {
            let dict = HaarDictionary::initial_segment(args.m, p);
            random_unit_vector(&mut sample_rng(global.seed, 0), &dict)
        }
    };
    let x0 = HaarCoefficients::new(index_set.clone(), coeffs)?;
    let mut config = AlgorithmConfig::new(args.kind, p)
        .with_tau(args.tau)
        .with_snap_epsilon(global.snap_eps)
        .with_seed(global.seed);
    if let Some(n) = global.max_steps {
        config = config.with_max_steps(n);
    }
    let engine = GreedyEngine::new(index_set, config)?;
    let trace = engine.run(&x0)?;
    let zeta = choose_zeta(args.m, p, args.zeta_samples, global.seed)?;
    let doc = TraceDocument::from_trace(&trace, zeta)?;
    let body = match global.format {
        OutputFormat::Json => doc.to_json()?,
        OutputFormat::Csv => doc.to_csv()?,
    };
    emit(global, &body)?;
    Ok(match &trace.status {
        TraceStatus::Terminated { steps } => {
            eprintln!("terminated after {steps} steps");
            EXIT_OK
        }
        TraceStatus::StepCapReached => {
            eprintln!("step cap of {} reached", trace.config.max_steps);
            EXIT_STEP_CAP
        }
        TraceStatus::NumericalFailure { step, message } => {
            eprintln!("numerical failure at step {step}: {message}");
            EXIT_NUMERICAL
        }
    })
}

fn campaign_spec(global: &GlobalOpts, args: &GridArgs) -> CampaignSpec {
    let mut spec = CampaignSpec::new(args.p_grid.clone(), args.m_grid.clone(), args.kinds.clone());
    spec.tau_grid = args.tau_grid.clone();
    spec.runs_per_cell = args.runs;
    spec.seed = global.seed;
    spec.output_path = global.out.as_ref().map(|p| p.display().to_string());
    spec.format = global.format;
    spec.gamma_samples = args.gamma_samples;
    spec.zeta_samples = args.zeta_samples;
    spec.max_steps = global.max_steps;
    spec.snap_epsilon = global.snap_eps;
    spec.include_presets = !args.no_presets;
    spec
}

fn cmd_bounds(global: &GlobalOpts, args: &GridArgs) -> CmdResult {
    let outcomes = run_campaign(&campaign_spec(global, args))?;
    let rows: Vec<CellSummary> = outcomes.iter().map(|o| o.summary()).collect();
    emit(global, &render(&rows, global.format)?)?;
    let failed = rows.iter().filter(|r| !r.passed()).count();
    eprintln!("{} cells, {failed} with unterminated runs or bound violations", rows.len());
    Ok(if failed == 0 { EXIT_OK } else { EXIT_NUMERICAL })
}

fn cmd_lemmas(global: &GlobalOpts, args: &GridArgs) -> CmdResult {
    let outcomes = run_campaign(&campaign_spec(global, args))?;
    let rows = outcomes.iter().map(LemmaSummary::from_outcome).collect::<haar_greedy::Result<Vec<_>>>()?;
    emit(global, &render(&rows, global.format)?)?;
    let failed = rows.iter().filter(|r| !r.passed()).count();
    eprintln!("{} cells, {failed} with lemma violations", rows.len());
    Ok(if failed == 0 { EXIT_OK } else { EXIT_NUMERICAL })
}

fn cmd_counterexample(global: &GlobalOpts, args: &CounterexampleArgs) -> CmdResult {
    let x0 = match &args.x0 {
        Some(v) if v.len() == 2 => [v[0], v[1]],
        Some(v) => return Err(Failure::Usage(format!("--x0 needs 2 coordinates, got {}", v.len()))),
        None => [0.0, 1.0],
    };
    let report = run_counterexample(x0, args.steps, global.snap_eps)?;
    let body = match global.format {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Csv => counterexample_csv(&report.steps)?,
    };
    emit(global, &body)?;
    match report.terminated_at {
        Some(n) => eprintln!("residual vanished at step {n}"),
        None => eprintln!(
            "residual nonzero after {} steps, max ratio error {:e}",
            report.steps.len(),
            report.max_ratio_error
        ),
    }
    Ok(if args.x0.is_some() || report.non_terminating() { EXIT_OK } else { EXIT_NUMERICAL })
}

fn cmd_propp(global: &GlobalOpts, args: &ProppArgs) -> CmdResult {
    let p = Exponent::new(args.p)?;
    if args.m_grid.contains(&0) {
        return Err(Failure::Usage("m must be at least 1".into()));
    }
    let rows = property_p_report(p, &args.m_grid, args.samples, global.seed)?;
    emit(global, &render(&rows, global.format)?)?;
    let failed = rows.iter().filter(|r| !r.passed()).count();
    eprintln!("{} rows, {failed} with ratios above zeta", rows.len());
    Ok(if failed == 0 { EXIT_OK } else { EXIT_NUMERICAL })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(&cli.global, a),
        Command::Bounds(a) => cmd_bounds(&cli.global, a),
        Command::Counterexample(a) => cmd_counterexample(&cli.global, a),
        Command::Propp(a) => cmd_propp(&cli.global, a),
        Command::Lemmas(a) => cmd_lemmas(&cli.global, a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
