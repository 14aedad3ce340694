//! Command-line front end. Exit codes: 0 success, 2 input errors,
//! 3 inconclusive results that a higher precision may resolve,
//! 4 internal invariant violations or oracle discrepancies.

use clap::{Args, Parser, Subcommand};
use kangaroo_lab::analysis::detect_kangaroo;
use kangaroo_lab::blowup::{divisor_transform, weak_transform};
use kangaroo_lab::contact::{residual_order, weak_max_contact};
use kangaroo_lab::report;
use kangaroo_lab::scenario::{parse_scenario, parse_search_space, Scenario};
use kangaroo_lab::search::{oracle_compare, run_search};
use kangaroo_lab::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kangaroo-lab", version, about = "Exact-arithmetic laboratory for residual order increase under permissible blowups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the weak maximal contact frame and the residual order.
    Analyze(Common),
    /// Apply the weak and divisor transforms in the scenario's chart.
    Blowup(Common),
    /// Run the full residual-order increase detector.
    Detect(Common),
    /// Evaluate the nine increase conditions for a scenario.
    CheckTheorem(Common),
    /// Exhaustively scan a search-space file for increases.
    Search(Common),
    /// Cross-validate the detector against independent brute-force oracles.
    OracleCompare(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario or search-space file.
    file: PathBuf,
    /// Override the jet precision declared in the file.
    #[arg(long)]
    precision: Option<u32>,
    /// Also write the report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads for the search commands.
    #[arg(long)]
    workers: Option<usize>,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Analyze(c)
            | Command::Blowup(c)
            | Command::Detect(c)
            | Command::CheckTheorem(c)
            | Command::Search(c)
            | Command::OracleCompare(c) => c,
        }
    }
}

fn load_scenario(common: &Common) -> Result<Scenario, Error> {
    let text = std::fs::read_to_string(&common.file).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("cannot read {}: {e}", common.file.display()),
    })?;
    parse_scenario(&text, common.precision)
}

fn load_space(common: &Common) -> Result<kangaroo_lab::scenario::SearchSpace, Error> {
    let text = std::fs::read_to_string(&common.file).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("cannot read {}: {e}", common.file.display()),
    })?;
    parse_search_space(&text)
}

/// Returns the rendered report and whether the oracles found discrepancies.
fn run(command: &Command) -> Result<(String, bool), Error> {
    let common = command.common();
    let text = match command {
        Command::Analyze(_) => {
            let sc = load_scenario(common)?;
            let frame = weak_max_contact(&sc.ideal()?)?;
            let res = residual_order(&frame, &sc.divisor);
            report::render_analyze(&frame, &res, &sc.divisor)
        }
        Command::Blowup(_) => {
            let sc = load_scenario(common)?;
            let chart = sc.chart()?;
            let frame = weak_max_contact(&sc.ideal()?)?;
            let j1 = weak_transform(&frame.ideal, chart)?;
            let tr = divisor_transform(&sc.divisor, chart, &frame)?;
            report::render_blowup(&frame, &j1, &tr)
        }
        Command::Detect(_) => {
            let sc = load_scenario(common)?;
            let rep = detect_kangaroo(&sc.ideal()?, &sc.divisor, sc.chart()?)?;
            report::render_detect(&rep)
        }
        Command::CheckTheorem(_) => {
            let sc = load_scenario(common)?;
            let rep = detect_kangaroo(&sc.ideal()?, &sc.divisor, sc.chart()?)?;
            report::render_check_theorem(&rep)
        }
        Command::Search(_) => {
            let space = load_space(common)?;
            let outcome = run_search(&space, common.workers)?;
            report::render_search(&outcome)
        }
        Command::OracleCompare(_) => {
            let space = load_space(common)?;
            let outcome = oracle_compare(&space, common.workers)?;
            let failed = !outcome.discrepancies.is_empty();
            return Ok((report::render_oracle(&outcome), failed));
        }
    };
    Ok((text, false))
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::InvalidField(_) => 2,
        Error::Inconclusive(_) | Error::PrecisionUnderflow(_) => 3,
        Error::Internal(_) | Error::ZeroInverse | Error::NotZRegular { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok((text, oracle_failed)) => {
            print!("{text}");
            if let Some(path) = &cli.command.common().report {
                if let Err(e) = std::fs::write(path, &text) {
                    eprintln!("cannot write report {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            if oracle_failed {
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_for(&err))
        }
    }
}
