use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use condense::config::{Integrator, RunConfig};
use condense::dataset::{Dataset, Target};
use condense::diagnostics::predict_milestones;
use condense::dynamics::{run, Milestone, StopRule};
use condense::error::Error;
use condense::export::{fmt_num, save_trajectory_csv, to_json_string, write_json, RunSummary};
use condense::fit::{fit_sweep, Covariate, FitMode};
use condense::milestones::detect_milestones;
use condense::rng::STREAM_VERSION;
use condense::sweep::{default_out_dir, load_sweep_csv, run_sweep, SweepSpec, OUT_DIR_ENV};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "condense", about = "Gradient-flow simulator for small-initialization two-layer networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory; writes trajectory.csv, milestones.json, summary.json.
    Train(TrainArgs),
    /// Run a grid of trajectories in parallel; writes sweep.csv and per-cell files.
    Sweep(SweepArgs),
    /// Least-squares fit of the descent milestone from a sweep CSV.
    Fit(FitArgs),
    /// Theory-side milestone predictions.
    Predict(PredictArgs),
    /// Report the moment conditions of a dataset.
    CheckData(CheckDataArgs),
    /// Print version information.
    Version,
}

#[derive(Args, Default)]
struct ConfigArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    max_time: Option<f64>,
    #[arg(long)]
    record_stride: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    plateau_eps: Option<f64>,
    #[arg(long)]
    integrator: Option<IntegratorArg>,
    #[arg(long)]
    activation: Option<String>,
    #[arg(long)]
    target: Option<TargetArg>,
    /// Grid size of the built-in dataset.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    /// Whiten and align the dataset before training.
    #[arg(long)]
    normalize: Option<bool>,
    #[arg(long)]
    monotone_check: Option<bool>,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegratorArg {
    Euler,
    Rk4,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    F1,
    F2,
    F3,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::F1 => Target::F1,
            TargetArg::F2 => Target::F2,
            TargetArg::F3 => Target::F3,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StopArg {
    MaxTime,
    Plateau,
    Descent,
    SecondaryPlateau,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        self.resolve_over(RunConfig::default())
    }

    /// Starts from `--config` when given, else `fallback`, then applies flags.
    fn resolve_over(&self, fallback: RunConfig) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => fallback,
        };
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { $target = v.into(); })*
            };
        }
        set!(
            m => cfg.m,
            d => cfg.d,
            alpha => cfg.alpha,
            seed => cfg.seed,
            step_size => cfg.step_size,
            max_time => cfg.max_time,
            record_stride => cfg.record_stride,
            beta => cfg.beta,
            plateau_eps => cfg.plateau_eps,
            activation => cfg.activation,
            target => cfg.data.target,
            n => cfg.data.n,
            lo => cfg.data.lo,
            hi => cfg.data.hi,
            normalize => cfg.data.normalize,
            monotone_check => cfg.monotone_check,
        );
        if let Some(i) = self.integrator {
            cfg.integrator = match i {
                IntegratorArg::Euler => Integrator::Euler,
                IntegratorArg::Rk4 => Integrator::Rk4,
            };
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Load samples from a CSV (columns x_1..x_d, weight, target) instead of the grid.
    #[arg(long)]
    data_csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "max-time")]
    stop: StopArg,
    /// Stop once the loss falls below this value.
    #[arg(long)]
    loss_below: Option<f64>,
    /// Output directory (default: $CONDENSE_OUT_DIR or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// JSON sweep specification; flags override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long = "ms", value_delimiter = ',')]
    ms: Option<Vec<usize>>,
    #[arg(long = "alphas", value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long = "targets", value_delimiter = ',', value_enum)]
    targets: Option<Vec<TargetArg>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_enum)]
    stop: Option<StopArg>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Sweep CSV written by `sweep`.
    #[arg(long)]
    sweep: PathBuf,
    /// `log-m` or `alpha`.
    #[arg(long, default_value = "log-m")]
    covariate: String,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    CellMean,
    Pooled,
    Both,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    m: f64,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
}

#[derive(Args)]
struct CheckDataArgs {
    #[arg(long)]
    data_csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "f1")]
    target: TargetArg,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = -15.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 15.0, allow_hyphen_values = true)]
    hi: f64,
    /// Normalize before checking.
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

enum Failure {
    Usage(String),
    Numeric(String),
    Partial(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn stop_rule(stop: StopArg) -> StopRule {
    match stop {
        StopArg::MaxTime => StopRule::MaxTime,
        StopArg::Plateau => StopRule::Milestone(Milestone::Plateau),
        StopArg::Descent => StopRule::Milestone(Milestone::Descent),
        StopArg::SecondaryPlateau => StopRule::Milestone(Milestone::SecondaryPlateau),
    }
}

fn out_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone().unwrap_or_else(default_out_dir)
}

fn cmd_train(args: &TrainArgs) -> Result<(), Failure> {
    let mut cfg = args.config.resolve()?;
    let data = match &args.data_csv {
        Some(path) => {
            let raw = Dataset::from_csv(path)?;
            cfg.d = raw.d();
            if cfg.data.normalize { raw.normalize()? } else { raw }
        }
        None => cfg.dataset()?,
    };
    cfg.validate()?;
    let act = cfg.activation()?;
    let stop = match args.loss_below {
        Some(level) => StopRule::LossBelow(level),
        None => stop_rule(args.stop),
    };
    let traj = run(&cfg, &data, &act, stop)?;
    let milestones = if traj.records.len() >= condense::milestones::MIN_RECORDS {
        Some(detect_milestones(&traj, cfg.beta, cfg.plateau_eps)?)
    } else {
        None
    };
    let dir = out_dir(&args.out);
    std::fs::create_dir_all(&dir).map_err(Error::from)?;
    save_trajectory_csv(&traj, dir.join("trajectory.csv"))?;
    if let Some(report) = &milestones {
        write_json(report, dir.join("milestones.json"))?;
    }
    let summary = RunSummary::new(&traj, data.assumption_report(), data.normalization().cloned(), milestones.clone());
    write_json(&summary, dir.join("summary.json"))?;
    let last = traj.records.last().expect("at least one record");
    println!("records={} t={} loss={} K={}", traj.records.len(), fmt_num(last.t), fmt_num(last.loss), fmt_num(last.k));
    if let Some(r) = milestones {
        let show = |v: Option<f64>| v.map(fmt_num).unwrap_or_else(|| "-".into());
        println!("T_p={} T_d={} T_sp={}", show(r.t_p_emp), show(r.t_d_emp), show(r.t_sp_emp));
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(Error::from)?;
            serde_json::from_str::<SweepSpec>(&text).map_err(Error::from)?
        }
        None => SweepSpec::default(),
    };
    spec.base = args.config.resolve_over(spec.base.clone())?;
    if let Some(v) = &args.ms {
        spec.ms = v.clone();
    }
    if let Some(v) = &args.alphas {
        spec.alphas = v.clone();
    }
    if let Some(v) = &args.targets {
        spec.targets = v.iter().map(|t| Target::from(*t)).collect();
    }
    if let Some(v) = &args.seeds {
        spec.seeds = v.clone();
    }
    if let Some(s) = args.stop {
        spec.stop = stop_rule(s);
    }
    if args.threads.is_some() {
        spec.threads = args.threads;
    }
    let dir = out_dir(&args.out);
    let outcome = run_sweep(&spec, Some(&dir))?;
    write_json(&spec, dir.join("sweep_spec.json"))?;
    println!("cells={} ok={} failed={}", spec.keys().len(), outcome.rows.len(), outcome.failures.len());
    println!("wrote {}", dir.join("sweep.csv").display());
    if outcome.failures.is_empty() {
        return Ok(());
    }
    let mut msg = String::from("failed cells:");
    for f in &outcome.failures {
        msg.push_str(&format!("\n  {}: {}", f.key.slug(), f.message));
    }
    if outcome.rows.is_empty() && outcome.failures.iter().all(|f| f.numeric) {
        return Err(Failure::Numeric(msg));
    }
    Err(Failure::Partial(msg))
}

fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    let covariate: Covariate = args.covariate.parse()?;
    let rows = load_sweep_csv(&args.sweep)?;
    let modes: &[FitMode] = match args.mode {
        ModeArg::CellMean => &[FitMode::CellMean],
        ModeArg::Pooled => &[FitMode::Pooled],
        ModeArg::Both => &[FitMode::CellMean, FitMode::Pooled],
    };
    let mut results = Vec::new();
    for &mode in modes {
        results.extend(fit_sweep(&rows, covariate, mode)?);
    }
    let text = to_json_string(&results)?;
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(Error::from)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<(), Failure> {
    let p = predict_milestones(args.alpha, args.m, args.beta)?;
    print!("{}", to_json_string(&p)?);
    Ok(())
}

fn cmd_check_data(args: &CheckDataArgs) -> Result<(), Failure> {
    let mut data = match &args.data_csv {
        Some(path) => Dataset::from_csv(path)?,
        None => Dataset::grid(args.target.into(), args.n, args.lo, args.hi)?,
    };
    if args.normalize {
        data = data.normalize()?;
    }
    let check = data.check_assumptions(args.tol);
    print!("{}", to_json_string(&check)?);
    Ok(())
}

fn cmd_version() {
    println!("condense {}", env!("CARGO_PKG_VERSION"));
    println!("rng stream version {STREAM_VERSION} (ChaCha20, Box-Muller)");
    println!("csv schema 1");
    println!("output directory override: ${OUT_DIR_ENV}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::CheckData(a) => cmd_check_data(a),
        Command::Version => {
            cmd_version();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(EXIT_NUMERIC)
        }
        Err(Failure::Partial(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_PARTIAL)
        }
    }
}

