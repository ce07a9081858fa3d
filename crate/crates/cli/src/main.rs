use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aarlcp::io::{
    dispatch_solve, error_exit_code, generate_random, parse_instance, parse_solution, serialize_instance,
    verify_solution, GenKind, Instance, Pathway, Regime, SolveOptions,
};
use aarlcp::market::build_lcp;
use aarlcp::Error;

/// Affinely adjustable robust LCPs under box uncertainty.
///
/// Exit codes: 0 solved or verified, 1 no solution (proved) or verification failed,
/// 2 no solution found without proof, 3 input error, 4 internal limit or numerical failure.
#[derive(Parser, Debug)]
#[command(name = "aarlcp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct SolveArgs {
    /// Instance file.
    instance: PathBuf,
    /// auto, enumeration, psd-lp, mip or uncertain-m.
    #[arg(long, default_value = "auto")]
    pathway: String,
    /// Initial big-M for the mip pathway.
    #[arg(long)]
    big_m: Option<f64>,
    #[arg(long, default_value_t = aarlcp::mip::DEFAULT_NODE_LIMIT)]
    node_limit: usize,
    /// How often big-M may be doubled.
    #[arg(long, default_value_t = aarlcp::aar_q::DEFAULT_MAX_DOUBLINGS)]
    max_doublings: usize,
    /// Seed of the sampled cross-check.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an instance and print a report.
    Solve(SolveArgs),
    /// Like solve, printing the JSON report.
    Report(SolveArgs),
    /// Check a solution file against an instance.
    Verify {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Write a seeded random instance.
    Gen {
        /// q, m or market.
        #[arg(long, default_value = "q")]
        kind: String,
        #[arg(long)]
        n: usize,
        /// Perturbation matrices (m) or demand rows (market).
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        h: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// general, psd or pmatrix.
        #[arg(long, default_value = "general")]
        regime: String,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Convert a market file into an uncertain-q instance.
    MarketBuild {
        market: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Input(String),
    Solver(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Solver(e)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    parse_instance(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Writes to stdout; a reader that closed the pipe early is not an error.
fn out(text: &str) {
    let mut stdout = io::stdout().lock();
    if let Err(e) = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        if e.kind() != io::ErrorKind::BrokenPipe {
            eprintln!("error: writing output: {e}");
        }
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            out(text);
            Ok(())
        }
    }
}

fn solve(args: &SolveArgs, json: bool) -> Result<i32, Failure> {
    let instance = load_instance(&args.instance)?;
    let opts = SolveOptions {
        pathway: args.pathway.parse::<Pathway>()?,
        big_m: args.big_m,
        node_limit: args.node_limit,
        max_doublings: args.max_doublings,
        seed: args.seed,
    };
    let report = dispatch_solve(&instance, &opts)?;
    if json {
        out(&(report.to_json() + "\n"));
    } else {
        out(&report.to_text());
    }
    Ok(report.exit_code())
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Solve(args) => solve(&args, args.json),
        Command::Report(args) => solve(&args, true),
        Command::Verify {
            instance,
            solution,
            seed,
            json,
        } => {
            let inst = load_instance(&instance)?;
            let sol = parse_solution(&read(&solution)?)
                .map_err(|e| Failure::Input(format!("{}: {e}", solution.display())))?;
            let report = verify_solution(&inst, &sol, seed)?;
            if json {
                out(&(report.to_json() + "\n"));
            } else {
                out(&report.to_text());
            }
            Ok(report.exit_code())
        }
        Command::Gen {
            kind,
            n,
            k,
            h,
            seed,
            regime,
            output,
        } => {
            let inst = generate_random(kind.parse::<GenKind>()?, n, k, h, seed, regime.parse::<Regime>()?)?;
            emit(&serialize_instance(&inst), output.as_deref())?;
            Ok(0)
        }
        Command::MarketBuild { market, output } => {
            let Instance::Market(mm) = load_instance(&market)? else {
                return Err(Failure::Input(format!("{}: not a market file", market.display())));
            };
            let lcp = build_lcp(&mm)?;
            let names: Vec<String> = (0..lcp.order.len()).map(|i| lcp.variable_name(i)).collect();
            let mut text = format!("# variables: {}\n", names.join(" "));
            text.push_str(&serialize_instance(&Instance::UncertainQ(lcp.instance)));
            emit(&text, output.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            3
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
