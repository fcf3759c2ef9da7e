//! Command-line front end for `biaslab`.
//!
//! [`run_cli`] does all the work and returns the exit code together with the
//! text destined for standard output, so the binary is a thin wrapper and the
//! commands can be exercised in-process.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use biaslab::{
    classify, design_scheme, empirical_with_plan, estimate_bias_with, BiasFunction, BiasModel, BiasedAgent,
    CachedDesigner, Designer, Error, FiniteDesigner, Instance, LpDesigner, TieBreak, Verdict,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNTESTABLE: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "biaslab",
    version,
    about = "Design and run signaling schemes that detect belief-update bias"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal constant scheme for one threshold.
    Design(ThresholdArgs),
    /// Single-sample / finite / untestable verdict for one threshold.
    Classify(ThresholdArgs),
    /// Empirical number of rounds a threshold test needs.
    Simulate(SimulateArgs),
    /// Binary-search estimate of an agent's bias level.
    Estimate(EstimateArgs),
    /// Classification over a grid of thresholds.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// Instance file (JSON with states, actions, prior, utility).
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    tau: f64,
}

#[derive(Debug, Args)]
struct AgentArgs {
    /// Bias level of the simulated agent.
    #[arg(long)]
    w: f64,
    #[arg(long, value_enum, default_value_t = ModelKind::Linear)]
    bias_model: ModelKind,
    /// Warp exponent; required for the warped model.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_enum, default_value_t = TieBreakArg::PreferDefault)]
    tiebreak: TieBreakArg,
    #[arg(long, env = "BIASLAB_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[command(flatten)]
    agent: AgentArgs,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Target width of the returned interval.
    #[arg(long, default_value_t = 0.02)]
    epsilon: f64,
    #[command(flatten)]
    agent: AgentArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Comma-separated thresholds; defaults to 0.01, 0.02, ..., 0.99.
    #[arg(long, value_delimiter = ',')]
    tau_grid: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Linear,
    Warped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TieBreakArg {
    PreferDefault,
    PreferNonDefault,
    FixedOrder,
}

impl From<TieBreakArg> for TieBreak {
    fn from(t: TieBreakArg) -> Self {
        match t {
            TieBreakArg::PreferDefault => TieBreak::PreferDefault,
            TieBreakArg::PreferNonDefault => TieBreak::PreferNonDefault,
            TieBreakArg::FixedOrder => TieBreak::FixedOrder,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// A failed run: exit code and a one-line diagnostic.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
    /// Output still worth printing (classify reports the verdict either way).
    stdout: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
            stdout: String::new(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Untestable { .. } | Error::NothingTestable => EXIT_UNTESTABLE,
            Error::Lp(_)
            | Error::Timeout { .. }
            | Error::VerificationFailed { .. }
            | Error::InconsistentClassification { .. } => EXIT_RUNTIME,
            _ => EXIT_INPUT,
        };
        Failure::new(code, e.to_string())
    }
}

type Outcome = std::result::Result<String, Failure>;

/// Parses `argv` (including the program name) and runs the command.
///
/// Returns the exit code and standard output. Diagnostics go to standard
/// error as a single line.
pub fn run_cli<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return (EXIT_OK, e.to_string());
            }
            let rendered = e.to_string();
            let line: Vec<&str> = rendered
                .lines()
                .take_while(|l| !l.trim().is_empty())
                .map(str::trim)
                .collect();
            eprintln!("{}", line.join(" "));
            return (EXIT_USAGE, String::new());
        }
    };
    match execute(cli.command) {
        Ok(out) => (EXIT_OK, out),
        Err(f) => {
            eprintln!("error: {}", f.message.replace('\n', " "));
            (f.code, f.stdout)
        }
    }
}

fn execute(command: Command) -> Outcome {
    match command {
        Command::Design(args) => {
            let instance = load(&args.instance)?;
            let result = design_scheme(&instance, args.tau)?;
            to_json(&result)
        }
        Command::Classify(args) => {
            let instance = load(&args.instance)?;
            let c = classify(&instance, args.tau)?;
            let out = to_json(&c.to_json(&instance))?;
            if c.verdict == Verdict::Untestable {
                return Err(Failure {
                    stdout: out,
                    ..Failure::new(EXIT_UNTESTABLE, format!("threshold {} is untestable", args.tau))
                });
            }
            Ok(out)
        }
        Command::Simulate(args) => simulate(args),
        Command::Estimate(args) => estimate(args),
        Command::Sweep(args) => sweep(args),
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))?;
    Instance::from_json(&text).map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Outcome {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::new(EXIT_RUNTIME, e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn bias_model(args: &AgentArgs) -> Result<BiasModel, Failure> {
    match (args.bias_model, args.gamma) {
        (ModelKind::Linear, None) => Ok(BiasModel::Linear),
        (ModelKind::Linear, Some(_)) => Err(Failure::new(EXIT_USAGE, "--gamma only applies to --bias-model warped")),
        (ModelKind::Warped, None) => Err(Failure::new(EXIT_USAGE, "--bias-model warped requires --gamma")),
        (ModelKind::Warped, Some(gamma)) => Ok(BiasModel::Warped { gamma }.validate()?),
    }
}

/// Runs `f` with the designer that matches the bias model: optimal linear
/// programs for the linear model, vertex-bisection schemes otherwise.
fn with_designer<T>(model: BiasModel, f: impl FnOnce(&dyn Designer) -> Result<T, Failure>) -> Result<T, Failure> {
    match model {
        BiasModel::Linear => f(&CachedDesigner::new(LpDesigner)),
        BiasModel::Warped { .. } => f(&CachedDesigner::new(FiniteDesigner { bias: model })),
    }
}

fn agent(args: &AgentArgs, model: BiasModel) -> Result<BiasedAgent<BiasModel>, Failure> {
    Ok(BiasedAgent::new(args.w, model, args.tiebreak.into())?)
}

#[derive(Serialize)]
struct SimulateReport {
    tau: f64,
    w: f64,
    bias_model: String,
    trials: usize,
    mean_steps: f64,
    std_error: Option<f64>,
    theoretical: f64,
}

fn simulate(args: SimulateArgs) -> Outcome {
    let instance = load(&args.instance)?;
    let model = bias_model(&args.agent)?;
    let agent = agent(&args.agent, model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.agent.seed);
    let stats = with_designer(model, |d| {
        let plan = d.plan(&instance, args.tau)?;
        Ok(empirical_with_plan(&plan, &instance, &agent, &mut rng, args.trials)?)
    })?;
    to_json(&SimulateReport {
        tau: args.tau,
        w: args.agent.w,
        bias_model: model.name(),
        trials: stats.trials,
        mean_steps: stats.mean_steps,
        std_error: stats.std_error,
        theoretical: stats.theoretical,
    })
}

fn estimate(args: EstimateArgs) -> Outcome {
    let instance = load(&args.instance)?;
    let model = bias_model(&args.agent)?;
    let agent = agent(&args.agent, model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.agent.seed);
    let interval = with_designer(model, |d| {
        Ok(estimate_bias_with(d, &instance, &agent, args.epsilon, &mut rng, None)?)
    })?;
    to_json(&interval)
}

#[derive(Serialize)]
struct SweepRow {
    tau: f64,
    p_star: f64,
    #[serde(serialize_with = "complexity")]
    sample_complexity: f64,
    verdict: Verdict,
}

fn complexity<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

fn default_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

fn sweep(args: SweepArgs) -> Outcome {
    let instance = load(&args.instance)?;
    let grid = args.tau_grid.unwrap_or_else(default_grid);
    if grid.is_empty() {
        return Err(Failure::new(EXIT_USAGE, "empty --tau-grid"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for tau in grid {
        let c = classify(&instance, tau)?;
        let p_star = c.useful_mass.unwrap_or(0.0);
        rows.push(SweepRow {
            tau,
            p_star,
            sample_complexity: if p_star > 0.0 { 1.0 / p_star } else { f64::INFINITY },
            verdict: c.verdict,
        });
    }
    match args.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut out = String::from("tau,p_star,sample_complexity,verdict\n");
            for r in &rows {
                let complexity = if r.sample_complexity.is_finite() {
                    r.sample_complexity.to_string()
                } else {
                    "inf".to_string()
                };
                writeln!(out, "{},{},{},{}", r.tau, r.p_star, complexity, r.verdict.as_str()).expect("string write");
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_default() {
        let g = default_grid();
        assert_eq!(g.len(), 99);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[98], 0.99);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_cli(["biaslab"]).0, EXIT_USAGE);
        assert_eq!(run_cli(["biaslab", "design", "--tau", "0.5"]).0, EXIT_USAGE);
        assert_eq!(run_cli(["biaslab", "frobnicate"]).0, EXIT_USAGE);
        let (code, out) = run_cli(["biaslab", "--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("sweep"));
    }

    #[test]
    fn error_codes() {
        assert_eq!(Failure::from(Error::Untestable { tau: 0.8 }).code, EXIT_UNTESTABLE);
        assert_eq!(Failure::from(Error::OutOfRangeThreshold(1.5)).code, EXIT_INPUT);
        assert_eq!(Failure::from(Error::Parse("x".into())).code, EXIT_INPUT);
    }
}
