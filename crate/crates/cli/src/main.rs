//! Command-line front end for the stopping-game solver.
//!
//! Every subcommand reads or writes the flat JSON model format and reports
//! machine-readable JSON by default; `--human` switches to aligned tables.
//! Exit codes: 0 ok, 2 invalid model or arguments, 3 payoff order violated,
//! 4 iteration failed to settle, 5 strategy enumeration over the cap.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::BoolishValueParser;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use dynkin::{
    brute_force_values, criterion, enumerate_stopping_times, epsilon_saddle, generate, iterate,
    normalize_terminal, supermartingale_shortcut, verify_saddle, DynkinSolution, Error, EventTree,
    GameSpec, GenConfig, GenMode, Model, SolutionReport, SolverConfig, StoppingTime,
    DEFAULT_STRATEGY_CAP, VALUE_TOL,
};

#[derive(Parser)]
#[command(name = "dynkin", version, about = "Zero-sum stopping games on finite event trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct IoArgs {
    /// Model file to read.
    #[arg(long)]
    input: PathBuf,
    /// Where to write the report; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Aligned tables instead of JSON.
    #[arg(long, num_args = 0..=1, default_missing_value = "true",
          value_parser = BoolishValueParser::new())]
    human: Option<bool>,
}

#[derive(Args)]
struct SolverArgs {
    /// Stall threshold between consecutive iterates.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Iteration budget; ten rounds per step plus ten when absent.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file and summarize its shape.
    Validate {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Run the envelope iteration and write the solution report.
    Solve {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Cross-check the solver against full strategy enumeration.
    Oracle {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Report the level-lambda almost-saddle and verify its bounds.
    Epsilon {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Level in (0, 1); closer to 1 means tighter rules.
        #[arg(long)]
        lambda: f64,
    },
    /// Draw a random instance and write it as a model file.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        horizon: usize,
        /// Most children an interior node may have.
        #[arg(long, default_value_t = 3)]
        branching: usize,
        #[arg(long, default_value_t = -5.0)]
        min_value: f64,
        #[arg(long, default_value_t = 5.0)]
        max_value: f64,
        /// Draw the payer cost at or above the collector reward.
        #[arg(long, num_args = 0..=1, default_missing_value = "true",
              value_parser = BoolishValueParser::new())]
        force_sandwich: Option<bool>,
        /// Push the reward above the cost at one interior node.
        #[arg(long)]
        inject_violation: bool,
        /// Build the reward so it shrinks in conditional mean.
        #[arg(long)]
        supermartingale_xi: bool,
        /// Redraw shapes whose root admits more stop rules than this.
        #[arg(long)]
        max_strategies: Option<u128>,
        /// Where to write the model; standard output when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

struct Failure {
    message: String,
    code: u8,
}

impl Failure {
    fn new(message: impl Into<String>, code: u8) -> Failure {
        Failure { message: message.into(), code }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Failure {
        let code = match err {
            Error::TooManyStrategies { .. } => 5,
            Error::Diverged(_) => 4,
            _ => 2,
        };
        Failure::new(format!("{err}"), code)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Validate { io } => cmd_validate(&io),
        Command::Solve { io, solver } => cmd_solve(&io, &solver),
        Command::Oracle { io, solver } => cmd_oracle(&io, &solver),
        Command::Epsilon { io, solver, lambda } => cmd_epsilon(&io, &solver, lambda),
        Command::Gen {
            seed,
            horizon,
            branching,
            min_value,
            max_value,
            force_sandwich,
            inject_violation,
            supermartingale_xi,
            max_strategies,
            output,
        } => {
            let mode = if inject_violation {
                GenMode::InjectViolations
            } else if supermartingale_xi {
                GenMode::SupermartingaleXi
            } else if force_sandwich.unwrap_or(false) {
                GenMode::ForceSandwich
            } else {
                GenMode::Free
            };
            cmd_gen(
                seed,
                GenConfig {
                    horizon,
                    max_branching: branching,
                    value_range: (min_value, max_value),
                    mode,
                    max_strategies,
                },
                output.as_deref(),
            )
        }
    }
}

fn load(path: &Path) -> Result<(Model, EventTree, GameSpec), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(format!("cannot read {}: {e}", path.display()), 2))?;
    let model = Model::from_json(&text)?;
    let (tree, xi, zeta) = model.build()?;
    let (xi, zeta) = normalize_terminal(&tree, &xi, &zeta)?;
    let spec = GameSpec::new(tree.clone(), xi, zeta)?;
    Ok((model, tree, spec))
}

fn solver_config(tree: &EventTree, solver: &SolverArgs) -> Result<SolverConfig, Failure> {
    let defaults = SolverConfig::for_horizon(tree.horizon());
    let max_iter = solver.max_iter.unwrap_or(defaults.max_iter);
    if max_iter == 0 {
        return Err(Failure::new("--max-iter must be at least 1", 2));
    }
    Ok(SolverConfig { tol: solver.tol, max_iter })
}

fn emit(io: &IoArgs, text: &str) -> Result<(), Failure> {
    match &io.output {
        Some(path) => fs::write(path, format!("{text}\n"))
            .map_err(|e| Failure::new(format!("cannot write {}: {e}", path.display()), 2)),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Ok(()) => Ok(()),
            // A consumer like `head` closing the pipe early is not a failure.
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
            Err(e) => Err(Failure::new(format!("cannot write report: {e}"), 2)),
        },
    }
}

fn region_ids(tree: &EventTree, st: &StoppingTime) -> Vec<i64> {
    let mut ids: Vec<i64> = st.region().iter().map(|&id| tree.external_id(id)).collect();
    ids.sort_unstable();
    ids
}

fn cmd_validate(io: &IoArgs) -> Result<u8, Failure> {
    let (model, tree, spec) = load(&io.input)?;
    let terminal_zero = model
        .nodes
        .iter()
        .filter(|n| n.time == model.horizon)
        .all(|n| n.xi.abs() <= VALUE_TOL);
    let terminal = if terminal_zero { "zero" } else { "normalization required" };
    let violations: Vec<i64> = tree
        .node_ids()
        .filter(|&id| spec.xi[id] > spec.zeta[id] + VALUE_TOL)
        .map(|id| tree.external_id(id))
        .collect();

    let text = if io.human.unwrap_or(false) {
        let sandwich = if violations.is_empty() {
            "ok".to_string()
        } else {
            format!("violated at {violations:?}")
        };
        format!(
            "{} nodes, T={}, terminal: {terminal}, sandwich: {sandwich}",
            tree.len(),
            tree.horizon()
        )
    } else {
        serde_json::to_string_pretty(&json!({
            "nodes": tree.len(),
            "horizon": tree.horizon(),
            "terminal": terminal,
            "sandwich": if violations.is_empty() { "ok" } else { "violated" },
            "violations": violations,
        }))
        .expect("report serialization cannot fail")
    };
    emit(io, &text)?;
    Ok(0)
}

fn render_solution(tree: &EventTree, spec: &GameSpec, sol: &DynkinSolution, human: bool) -> String {
    let report = SolutionReport::from_solution(tree, sol);
    if !human {
        return report.to_json_pretty();
    }
    let mut out = String::new();
    match report.value {
        Some(v) => writeln!(out, "value: {v}").unwrap(),
        None => writeln!(out, "value: none").unwrap(),
    }
    writeln!(out, "mokobodski: {}", report.mokobodski).unwrap();
    if !report.fails_at.is_empty() {
        writeln!(out, "fails at: {:?}", report.fails_at).unwrap();
    }
    writeln!(out, "converged: {} after {} iterations", report.converged, report.iterations)
        .unwrap();
    if !report.tau_star.is_empty() {
        writeln!(out, "collector stops at: {:?}", report.tau_star).unwrap();
        writeln!(out, "payer stops at: {:?}", report.sigma_star).unwrap();
    }
    writeln!(out, "{:>6} {:>4} {:>10} {:>10} {:>10} {:>10} {:>10}", "node", "t", "xi", "zeta", "J", "Jp", "Y")
        .unwrap();
    for id in tree.node_ids() {
        writeln!(
            out,
            "{:>6} {:>4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            tree.external_id(id),
            tree.node(id).time,
            spec.xi[id],
            spec.zeta[id],
            sol.j[id],
            sol.jp[id],
            sol.y[id],
        )
        .unwrap();
    }
    out.truncate(out.trim_end().len());
    out
}

fn cmd_solve(io: &IoArgs, solver: &SolverArgs) -> Result<u8, Failure> {
    let (_, tree, spec) = load(&io.input)?;
    let config = solver_config(&tree, solver)?;
    match iterate(&spec, &config) {
        Ok(sol) => {
            emit(io, &render_solution(&tree, &spec, &sol, io.human.unwrap_or(false)))?;
            Ok(if sol.mokobodski.holds() { 0 } else { 3 })
        }
        Err(Error::Diverged(partial)) => {
            emit(io, &render_solution(&tree, &spec, &partial, io.human.unwrap_or(false)))?;
            Err(Failure::new("iteration failed to settle within the budget", 4))
        }
        Err(err) => Err(err.into()),
    }
}

fn cmd_oracle(io: &IoArgs, solver: &SolverArgs) -> Result<u8, Failure> {
    let (_, tree, spec) = load(&io.input)?;
    let config = solver_config(&tree, solver)?;
    let root = tree.root();
    let report = brute_force_values(&spec, root, DEFAULT_STRATEGY_CAP)?;

    let shortcut = match supermartingale_shortcut(&spec, root)? {
        Some((tau, sigma, value)) => {
            let confirmed = verify_saddle(&spec, root, &tau, &sigma, DEFAULT_STRATEGY_CAP)?;
            Some((value, confirmed))
        }
        None => None,
    };

    let sol = match iterate(&spec, &config) {
        Ok(sol) => sol,
        Err(Error::Diverged(_)) => {
            return Err(Failure::new("iteration failed to settle within the budget", 4))
        }
        Err(err) => return Err(err.into()),
    };
    let value = sol.value(root).ok();
    let fair = value
        .map(|v| (report.lower - v).abs() <= VALUE_TOL && (report.upper - v).abs() <= VALUE_TOL)
        .unwrap_or(false);

    let text = if io.human.unwrap_or(false) {
        let mut out = String::new();
        writeln!(out, "strategies per side: {}", report.strategy_count).unwrap();
        writeln!(out, "enumerated lower value: {}", report.lower).unwrap();
        writeln!(out, "enumerated upper value: {}", report.upper).unwrap();
        match value {
            Some(v) => writeln!(out, "solver value: {v}").unwrap(),
            None => writeln!(out, "solver value: none (payoff order violated)").unwrap(),
        }
        if let Some((s, confirmed)) = shortcut {
            writeln!(
                out,
                "shrinking-reward shortcut: value {s}, saddle {}",
                if confirmed { "confirmed" } else { "refuted" }
            )
            .unwrap();
        }
        write!(out, "FAIR: {}", if fair { "yes" } else { "no" }).unwrap();
        out
    } else {
        serde_json::to_string_pretty(&json!({
            "count": report.strategy_count,
            "lower": report.lower,
            "upper": report.upper,
            "value": value,
            "fair": fair,
            "shortcut": shortcut.map(|(s, confirmed)| json!({
                "value": s,
                "saddle_verified": confirmed,
            })),
        }))
        .expect("report serialization cannot fail")
    };
    emit(io, &text)?;
    if !sol.mokobodski.holds() {
        return Ok(3);
    }
    Ok(if fair { 0 } else { 1 })
}

fn cmd_epsilon(io: &IoArgs, solver: &SolverArgs, lambda: f64) -> Result<u8, Failure> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::BadLambda(lambda).into());
    }
    let (_, tree, spec) = load(&io.input)?;
    let config = solver_config(&tree, solver)?;
    let root = tree.root();
    let sol = match iterate(&spec, &config) {
        Ok(sol) if sol.mokobodski.holds() => sol,
        Ok(_) => {
            return Err(Failure::new(
                "the payoff order is violated, no almost-saddle exists",
                3,
            ))
        }
        Err(Error::Diverged(_)) => {
            return Err(Failure::new("iteration failed to settle within the budget", 4))
        }
        Err(err) => return Err(err.into()),
    };
    let eps = epsilon_saddle(&spec, &sol, lambda, root)?;
    let value = sol.value(root)?;

    // The bounds are confirmed against every opposing rule when the tree
    // is small enough to enumerate.
    let bounds = match enumerate_stopping_times(&tree, root, DEFAULT_STRATEGY_CAP) {
        Ok(others) => {
            let mut ok = true;
            for other in &others {
                let low = criterion(&spec, &eps.tau_lambda, other, root)?;
                let high = criterion(&spec, other, &eps.sigma_lambda, root)?;
                if low < value - eps.lower_slack - VALUE_TOL
                    || high > value + eps.upper_slack + VALUE_TOL
                {
                    ok = false;
                    break;
                }
            }
            if ok { "verified" } else { "violated" }
        }
        Err(Error::TooManyStrategies { .. }) => "skipped",
        Err(err) => return Err(err.into()),
    };

    let tau_ids = region_ids(&tree, &eps.tau_lambda);
    let sigma_ids = region_ids(&tree, &eps.sigma_lambda);
    let text = if io.human.unwrap_or(false) {
        format!(
            "lambda: {lambda}\nvalue: {value}\ncollector rule: {tau_ids:?}\n\
             payer rule: {sigma_ids:?}\nlower slack: {}\nupper slack: {}\nbounds: {bounds}",
            eps.lower_slack, eps.upper_slack
        )
    } else {
        serde_json::to_string_pretty(&json!({
            "lambda": lambda,
            "value": value,
            "tau_lambda": tau_ids,
            "sigma_lambda": sigma_ids,
            "lower_slack": eps.lower_slack,
            "upper_slack": eps.upper_slack,
            "bounds": bounds,
        }))
        .expect("report serialization cannot fail")
    };
    emit(io, &text)?;
    Ok(if bounds == "violated" { 1 } else { 0 })
}

fn cmd_gen(seed: u64, cfg: GenConfig, output: Option<&Path>) -> Result<u8, Failure> {
    if cfg.value_range.0 > cfg.value_range.1 {
        return Err(Failure::new("--min-value exceeds --max-value", 2));
    }
    if cfg.max_branching == 0 {
        return Err(Failure::new("--branching must be at least 1", 2));
    }
    let model = generate(seed, &cfg);
    let text = model.to_json_pretty();
    match output {
        Some(path) => fs::write(path, format!("{text}\n"))
            .map_err(|e| Failure::new(format!("cannot write {}: {e}", path.display()), 2))?,
        None => println!("{text}"),
    }
    Ok(0)
}
