//! `surprise-engine`: batch commands and the REPL over scenario files.

use std::io::{BufRead, IsTerminal, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use surprise_core::scenario::{Command, QueryResult, Scenario, ScenarioError, Session, REPL_HELP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "surprise-engine", version, about = "Reason about belief fragments as constraints on belief functions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file
    file: PathBuf,
    /// Override a constant or config value, e.g. `--set c=0.5` or `--set independence=on`
    #[arg(long = "set", value_name = "NAME=VALUE", value_parser = parse_set)]
    set: Vec<(String, String)>,
    /// Parameter grid resolution
    #[arg(long)]
    grid: Option<usize>,
    /// Largest frame the compiler accepts
    #[arg(long = "max-theta")]
    max_theta: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    JsonLines,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check that the constraints are satisfiable; name a conflicting subset if not
    Check(Common),
    /// Bounds of a query (a name from [queries], `Bel(...)` or `surprise(...)`), or of every query
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        query: Option<String>,
    },
    /// Condition the scenario's mass function on a formula
    Condition {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        on: String,
    },
    /// Surprise at an event occurring, optionally given evidence
    Surprise {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        event: String,
        #[arg(long)]
        given: Option<String>,
    },
    /// Minimum-committed belief function satisfying the constraints
    Mincommit(Common),
    /// Vacuous, consonant and conjunctive tests of the scenario's mass function
    Classify(Common),
    /// Calibration curve, or the surprise of one announced ratio
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_ratio, value_name = "X:Y")]
        ratio: Option<(u64, u64)>,
    },
    /// Interactive elicitation session
    Repl(Common),
}

fn parse_set(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn parse_ratio(s: &str) -> Result<(u64, u64), String> {
    let bad = || format!("expected X:Y with positive integers, got `{s}`");
    let (x, y) = s.split_once(':').ok_or_else(bad)?;
    Ok((x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?))
}

fn load(common: &Common) -> Result<Scenario, ScenarioError> {
    let mut s = Scenario::load(&common.file, &common.set)?;
    if let Some(g) = common.grid {
        s.config.grid = g.max(1);
    }
    if let Some(m) = common.max_theta {
        s.config.max_theta = m;
    }
    Ok(s)
}

fn exit_code(e: &ScenarioError) -> i32 {
    use surprise_core::constraints::QueryError;
    match e {
        ScenarioError::Parse { .. } | ScenarioError::Usage(_) | ScenarioError::Io(_) => EXIT_USAGE,
        ScenarioError::Query(QueryError::Compile(_)) => EXIT_USAGE,
        ScenarioError::Calibration(_) => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

fn write_results(out: &mut dyn Write, results: &[QueryResult], format: Format) -> std::io::Result<()> {
    for r in results {
        match format {
            Format::Text => writeln!(out, "{r}")?,
            Format::JsonLines => writeln!(out, "{}", r.to_json())?,
        }
    }
    Ok(())
}

/// Runs the command line `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let (common, command) = match cli.command {
        Cmd::Check(c) => (c, Some(Command::Check)),
        Cmd::Bounds { common, query } => (common, Some(Command::Bounds { query })),
        Cmd::Condition { common, on } => (common, Some(Command::Condition { on })),
        Cmd::Surprise { common, event, given } => (common, Some(Command::Surprise { event, given })),
        Cmd::Mincommit(c) => (c, Some(Command::MinCommit)),
        Cmd::Classify(c) => (c, Some(Command::Classify)),
        Cmd::Calibrate { common, ratio } => (common, Some(Command::Calibrate { ratio })),
        Cmd::Repl(c) => (c, None),
    };
    let scenario = match load(&common) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", common.file.display());
            return exit_code(&e);
        }
    };
    match command {
        Some(command) => match command.run(&scenario) {
            Ok(results) => {
                if write_results(out, &results, common.format).is_err() {
                    return EXIT_FAILED;
                }
                if results.iter().any(QueryResult::is_failure) {
                    EXIT_FAILED
                } else {
                    EXIT_OK
                }
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                exit_code(&e)
            }
        },
        None => repl(scenario, input, out),
    }
}

fn repl(scenario: Scenario, input: &mut dyn BufRead, out: &mut dyn Write) -> i32 {
    let interactive = std::io::stdin().is_terminal();
    let mut session = Session::new(scenario);
    if interactive {
        let _ = writeln!(out, "{REPL_HELP}");
    }
    let mut line = String::new();
    loop {
        if interactive {
            let _ = write!(out, "> ");
            let _ = out.flush();
        }
        line.clear();
        match input.read_line(&mut line) {
            Ok(0) | Err(_) => return EXIT_OK,
            Ok(_) => {}
        }
        let reply = session.handle_line(&line);
        for l in &reply.lines {
            let _ = writeln!(out, "{l}");
        }
        if reply.quit {
            return EXIT_OK;
        }
    }
}
