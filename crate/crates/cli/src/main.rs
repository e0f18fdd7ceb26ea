use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use htax_core::sim::{self, report, SimReport};
use htax_core::{AccountId, FrameIndex};

/// Off-chain simulator for a Harberger-taxed prediction market.
#[derive(Debug, Parser)]
#[command(name = "htax", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a scenario without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run a scenario and audit the result.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Also write the event log as JSON lines.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Print nothing on success.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Summarize a report written by `run`.
    Inspect {
        report: PathBuf,
        #[arg(long)]
        frame: Option<u64>,
        #[arg(long)]
        account: Option<String>,
        /// Include the event log.
        #[arg(long)]
        events: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug)]
enum Failure {
    /// Report audit found violations.
    Verification(String),
    /// Bad request against a valid input, e.g. an unknown frame.
    Usage(String),
    /// Unreadable, unparsable or invalid input; failed writes.
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Input(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Usage(m) | Failure::Input(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Run {
            scenario,
            out,
            format,
            events,
            quiet,
        } => cmd_run(&scenario, out.as_deref(), format, events.as_deref(), quiet),
        Command::Inspect {
            report,
            frame,
            account,
            events,
        } => cmd_inspect(&report, frame.map(FrameIndex), account, events),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn stdout(text: &str) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|()| out.flush())
        .map_err(|e| Failure::Input(format!("stdout: {e}")))
}

fn load(path: &Path) -> Result<sim::Scenario, Failure> {
    sim::load_scenario(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_validate(path: &Path) -> Result<(), Failure> {
    let s = load(path)?;
    let actors: Vec<String> = s.actors().iter().map(ToString::to_string).collect();
    stdout(&format!(
        "ok: {} action(s), {} price point(s), actors [{}]\n",
        s.actions.len(),
        s.price_path.len(),
        actors.join(", ")
    ))
}

fn cmd_run(
    path: &Path,
    out: Option<&Path>,
    format: Format,
    events: Option<&Path>,
    quiet: bool,
) -> Result<(), Failure> {
    let scenario = load(path)?;
    let report = sim::run(&scenario).map_err(|e| Failure::Input(e.to_string()))?;
    let checks = sim::verify_report(&report);

    let text = match format {
        Format::Json => report.to_json(),
        Format::Table => report.render_table(),
    };
    match out {
        Some(p) => write(p, &text)?,
        None if !quiet => stdout(&text)?,
        None => {}
    }
    if let Some(p) = events {
        write(p, &report.events_jsonl())?;
    }

    let rejected = report.rejected().count();
    if !quiet && out.is_some() {
        stdout(&format!(
            "{} action(s), {rejected} rejected, {} event(s)\n",
            report.actions.len(),
            report.events.len()
        ))?;
    }
    if checks.is_clean() {
        return Ok(());
    }
    let mut msg = format!("verification failed: {}", checks.failed().join(", "));
    for c in checks.checks.iter().filter(|c| !c.passed()) {
        for v in &c.violations {
            msg.push_str(&format!("\n  {}: {v}", c.name));
        }
    }
    Err(Failure::Verification(msg))
}

fn cmd_inspect(
    path: &Path,
    frame: Option<FrameIndex>,
    account: Option<String>,
    events: bool,
) -> Result<(), Failure> {
    let report = SimReport::from_json(&read(path)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut out = String::new();
    match (frame, account) {
        (Some(n), _) if report.frame(n).is_none() => {
            let known: Vec<String> = report.frames.iter().map(|f| f.frame.to_string()).collect();
            return Err(Failure::Usage(format!(
                "frame {n} not in report (frames: [{}])",
                known.join(", ")
            )));
        }
        (_, Some(id)) if !report.known_accounts().contains(&AccountId(id.clone())) => {
            return Err(Failure::Usage(format!("account `{id}` not in report")));
        }
        (Some(n), account) => {
            report::render_frame(&mut out, report.frame(n).expect("checked"));
            if let Some(id) = account {
                out.push('\n');
                report.render_account(&mut out, &AccountId(id));
            }
        }
        (None, Some(id)) => report.render_account(&mut out, &AccountId(id)),
        (None, None) => {
            report.render_summary(&mut out);
            out.push('\n');
            for f in &report.frames {
                report::render_frame(&mut out, f);
            }
            out.push('\n');
            report.render_actions(&mut out);
        }
    }
    if events {
        out.push('\n');
        report.render_events(&mut out, frame);
    }
    stdout(&out)?;

    let checks = sim::verify_report(&report);
    if checks.is_clean() {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "report fails checks: {}",
            checks.failed().join(", ")
        )))
    }
}
