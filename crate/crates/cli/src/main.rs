//! `commcomplex` command-line tool.
//!
//! Exit codes: 0 success, 1 uncertified result or failed check, 2 invalid
//! input, 3 internal error. Failures also print a JSON error document on
//! stderr.

mod oracle;
mod sweep;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use commcomplex::analytic::{analytic_joint_channel, AnalyticChannelParams, AnalyticError, FormulaVariant};
use commcomplex::game::{build_planar_game, load_game, save_game, GameError, GameTensor, PlanarGameParams};
use commcomplex::joint::{JointChannel, JointError};
use commcomplex::protocol::{write_transcript_log, CostSummary, OutcomeFit, ProtocolError, ProtocolSetup};
use commcomplex::solver::{minimize_capacity, ResultDocument, SolverConfig, SolverError, Symmetry};

/// Extra bits allowed above the one-shot bound for the integer code's constant.
pub const COST_SLACK_BITS: f64 = 0.5;

#[derive(Parser, Debug)]
#[command(name = "commcomplex", version, about = "Minimal communication cost of simulating channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certified bounds on the minimal capacity of a game.
    Solve {
        #[command(flatten)]
        source: GameSource,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the result document here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include the optimal channel in the document.
        #[arg(long)]
        with_channel: bool,
    },
    /// Solve planar games over a grid and write CSV.
    Sweep {
        /// Measurement counts, comma separated.
        #[arg(long = "M", value_delimiter = ',', required = true, num_args = 1..)]
        measurements: Vec<usize>,
        /// Depolarizing factors, comma separated.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        gamma: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the one-shot simulation protocol and check it against the game.
    Simulate {
        #[command(flatten)]
        source: GameSource,
        #[command(flatten)]
        solver: SolverArgs,
        /// Runs for the cost estimate; also runs per (state, measurement)
        /// for the outcome fit.
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Channel to simulate. Planar games with M >= 2 default to the
        /// closed-form channel, anything else to the solver's channel.
        #[arg(long, value_enum)]
        channel: Option<ChannelChoice>,
        #[arg(long, value_enum, default_value_t = VariantArg::Squared)]
        variant: VariantArg,
        /// Significance level of the outcome fit.
        #[arg(long, default_value_t = 1e-3)]
        alpha: f64,
        /// Write the per-run transcript log (JSON lines) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the closed-form channel with the solver.
    Oracle {
        #[arg(long = "M", value_delimiter = ',', num_args = 1.., default_values_t = [2usize, 3, 4, 5, 6])]
        measurements: Vec<usize>,
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [1.0f64])]
        gamma: Vec<f64>,
        #[arg(long, value_enum, default_value_t = VariantArg::Squared)]
        variant: VariantArg,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the check table as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a game file.
    BuildGame {
        #[command(flatten)]
        source: GameSource,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct GameSource {
    /// Planar depolarizing game (needs --M and --gamma).
    #[arg(long, requires_all = ["m", "gamma"], conflicts_with = "game")]
    planar: bool,
    /// Number of measurements of the planar game.
    #[arg(long = "M", id = "m", value_name = "M")]
    m: Option<usize>,
    /// Depolarizing factor of the planar game.
    #[arg(long)]
    gamma: Option<f64>,
    /// Game file.
    #[arg(long)]
    game: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Width of the certified interval, in bits.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 400)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = SymmetryArg::None)]
    symmetry: SymmetryArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SymmetryArg {
    None,
    Cyclic,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum VariantArg {
    Printed,
    Squared,
}

impl From<VariantArg> for FormulaVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Printed => FormulaVariant::AsPrinted,
            VariantArg::Squared => FormulaVariant::Squared,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ChannelChoice {
    Analytic,
    Solved,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, CliError> {
        let cfg = SolverConfig {
            tol: self.tol,
            max_outer_iter: self.max_iter,
            symmetry: match self.symmetry {
                SymmetryArg::None => Symmetry::None,
                SymmetryArg::Cyclic => Symmetry::Cyclic,
            },
            ..SolverConfig::default()
        };
        cfg.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(cfg)
    }
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// A check ran and failed, or a result is not certified (exit 1).
    Failed { check: String, detail: serde_json::Value },
    Validation(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed { .. } => 1,
            CliError::Validation(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn document(&self) -> serde_json::Value {
        match self {
            CliError::Failed { check, detail } => serde_json::json!({
                "error": { "kind": "check-failed", "check": check, "detail": detail }
            }),
            CliError::Validation(msg) => serde_json::json!({
                "error": { "kind": "validation", "message": msg }
            }),
            CliError::Internal(msg) => serde_json::json!({
                "error": { "kind": "internal", "message": msg }
            }),
        }
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<JointError> for CliError {
    fn from(e: JointError) -> Self {
        match e {
            JointError::TooLarge { .. } => CliError::Validation(e.to_string()),
            JointError::Dimension(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Game(g) => g.into(),
            SolverError::Joint(j) => j.into(),
            SolverError::Config(_) | SolverError::UnsupportedSymmetry(_) => CliError::Validation(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::Game(_) | AnalyticError::TooFewMeasurements(_) => CliError::Validation(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Solver(s) => s.into(),
            ProtocolError::Infeasible { .. } => CliError::Validation(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Internal(format!("i/o: {e}"))
    }
}

/// A game together with the planar parameters it came from, if any.
struct LoadedGame {
    game: GameTensor,
    planar: Option<PlanarGameParams>,
    description: serde_json::Value,
}

impl GameSource {
    fn load(&self) -> Result<LoadedGame, CliError> {
        match (&self.game, self.planar) {
            (Some(path), false) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
                Ok(LoadedGame {
                    game: load_game(&text)?,
                    planar: None,
                    description: serde_json::json!({ "file": path.display().to_string() }),
                })
            }
            (None, true) => {
                let params = PlanarGameParams::new(
                    self.m.expect("clap enforces --M"),
                    self.gamma.expect("clap enforces --gamma"),
                )?;
                Ok(LoadedGame {
                    game: build_planar_game(&params)?,
                    planar: Some(params),
                    description: serde_json::json!({
                        "planar": { "M": params.measurements, "gamma": params.gamma }
                    }),
                })
            }
            _ => Err(CliError::Validation(
                "choose exactly one game source: --planar --M <int> --gamma <float>, or --game <path>".into(),
            )),
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SolveDocument {
    game: serde_json::Value,
    tol: f64,
    symmetry: Symmetry,
    #[serde(flatten)]
    result: ResultDocument,
}

fn cmd_solve(source: &GameSource, solver: &SolverArgs, out: Option<&Path>, with_channel: bool) -> Result<(), CliError> {
    let cfg = solver.config()?;
    let loaded = source.load()?;
    let result = minimize_capacity(&loaded.game, &cfg)?;
    let doc = SolveDocument {
        game: loaded.description,
        tol: cfg.tol,
        symmetry: cfg.symmetry,
        result: result.to_document(with_channel),
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
    write_output(out, &text)?;
    if out.is_some() {
        println!(
            "D in [{:.9}, {:.9}] bits, gap {:.3e}, {} after {} iterations",
            result.lower,
            result.upper,
            result.gap(),
            if result.certified { "certified" } else { "NOT certified" },
            result.iterations
        );
    }
    if result.certified {
        Ok(())
    } else {
        Err(CliError::Failed {
            check: "certificate".into(),
            detail: serde_json::json!({ "D_lower": result.lower, "D_upper": result.upper, "gap": result.gap(), "tol": cfg.tol }),
        })
    }
}

#[derive(Serialize)]
struct SimulateDocument {
    game: serde_json::Value,
    channel: &'static str,
    seed: u64,
    runs: u64,
    capacity: f64,
    #[serde(rename = "D_lower")]
    d_lower: Option<f64>,
    cost: CostSummary,
    bound_with_slack: f64,
    within_bound: bool,
    fit: OutcomeFit,
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    source: &GameSource,
    solver: &SolverArgs,
    runs: u64,
    seed: u64,
    channel: Option<ChannelChoice>,
    variant: VariantArg,
    alpha: f64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if runs == 0 {
        return Err(CliError::Validation("--runs must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Validation(format!("--alpha must lie in (0, 1), got {alpha}")));
    }
    let loaded = source.load()?;
    let planar = loaded.planar.filter(|p| p.measurements >= 2);
    let choice = channel.unwrap_or(if planar.is_some() { ChannelChoice::Analytic } else { ChannelChoice::Solved });
    let (ch, d_lower, label): (JointChannel, Option<f64>, &'static str) = match choice {
        ChannelChoice::Analytic => {
            let params = planar.ok_or_else(|| {
                CliError::Validation("the closed-form channel needs a planar game with M >= 2".into())
            })?;
            let p = AnalyticChannelParams::solve(params.measurements, params.gamma, variant.into())?;
            (analytic_joint_channel(&p)?.joint, None, "analytic")
        }
        ChannelChoice::Solved => {
            let r = minimize_capacity(&loaded.game, &solver.config()?)?;
            (r.channel, Some(r.lower), "solved")
        }
    };
    let setup = ProtocolSetup::new(loaded.game, ch, 1e-12)?;
    let transcripts = setup.cost_transcripts(&setup.capacity_input, runs, seed)?;
    let cost = CostSummary::from_transcripts(&transcripts, setup.capacity);
    let fit = setup.outcome_fit(seed, runs, alpha)?;
    if let Some(path) = out {
        let mut file = io::BufWriter::new(fs::File::create(path)?);
        write_transcript_log(&mut file, &transcripts, &cost)?;
        file.flush()?;
    }
    let bound = cost.bound + COST_SLACK_BITS;
    let doc = SimulateDocument {
        game: loaded.description,
        channel: label,
        seed,
        runs,
        capacity: setup.capacity,
        d_lower,
        within_bound: cost.mean_bits <= bound,
        bound_with_slack: bound,
        cost,
        fit,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
    write_output(None, &text)?;
    if !doc.fit.passed {
        return Err(CliError::Failed {
            check: "outcome-fit".into(),
            detail: serde_json::to_value(&doc.fit).unwrap_or_default(),
        });
    }
    if !doc.within_bound {
        return Err(CliError::Failed {
            check: "cost-bound".into(),
            detail: serde_json::json!({ "mean_bits": doc.cost.mean_bits, "bound": bound }),
        });
    }
    Ok(())
}

fn cmd_build_game(source: &GameSource, out: Option<&Path>) -> Result<(), CliError> {
    let loaded = source.load()?;
    write_output(out, &(save_game(&loaded.game) + "\n"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { source, solver, out, with_channel } => cmd_solve(&source, &solver, out.as_deref(), with_channel),
        Command::Sweep { measurements, gamma, solver, out } => {
            sweep::cmd_sweep(&measurements, &gamma, &solver.config()?, out.as_deref())
        }
        Command::Simulate { source, solver, runs, seed, channel, variant, alpha, out } => {
            cmd_simulate(&source, &solver, runs, seed, channel, variant, alpha, out.as_deref())
        }
        Command::Oracle { measurements, gamma, variant, solver, out } => {
            oracle::cmd_oracle(&measurements, &gamma, variant.into(), &solver.config()?, out.as_deref())
        }
        Command::BuildGame { source, out } => cmd_build_game(&source, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let doc = CliError::Validation(e.kind().to_string()).document();
            eprintln!("{doc}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.document());
            ExitCode::from(e.code())
        }
    }
}

