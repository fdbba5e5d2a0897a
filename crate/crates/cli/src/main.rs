//! `upade`: Padé approximants, lemma constructions and universal builds from
//! the command line.
//!
//! Every job is one flat JSON config (`--config`) with flags overriding its
//! fields. Artifacts go to `--out` or stdout. Exit codes: 1 I/O, 2 parse or
//! usage, 3 hypothesis or order violation, 4 truncation, 5 search failure,
//! 6 verification failure.

mod commands;
mod demo;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "upade", version, about = "Padé approximants and constructive universal series")]
struct Cli {
    /// JSON job description; flags override its fields
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Re-verify the result before writing it
    #[arg(long, global = true)]
    check: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Padé approximant [p/q] of a series
    Pade(commands::PadeArgs),
    /// Padé table up to (p_max, q_max)
    Table(commands::TableArgs),
    /// Run one of the constructions
    Construct {
        #[arg(value_enum)]
        lemma: commands::Lemma,
        #[command(flatten)]
        args: commands::ConstructArgs,
    },
    /// Universal build from a task list and schedule
    Build,
    /// Re-verify a build transcript
    Replay(commands::ReplayArgs),
    /// Shipped demonstrations
    Demo {
        #[arg(value_enum)]
        name: demo::DemoName,
    },
}

/// Fields every job config may carry besides its command-specific record.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct Common {
    out: Option<PathBuf>,
    format: Option<Format>,
    check: bool,
}

/// Settings resolved from the config file and the global flags.
pub struct Ctx {
    pub out: Option<PathBuf>,
    pub format: Format,
    pub check: bool,
    /// Directory that relative paths inside the config are resolved against.
    pub base: PathBuf,
    pub config: serde_json::Value,
}

impl Ctx {
    pub fn job<T: for<'de> Deserialize<'de> + Default>(&self) -> CliResult<T> {
        if self.config.is_null() {
            return Ok(T::default());
        }
        io::from_value("config", self.config.clone())
    }

    pub fn resolve(&self, p: PathBuf) -> PathBuf {
        if p.is_absolute() {
            p
        } else {
            self.base.join(p)
        }
    }

    pub fn emit(&self, text: &str) -> CliResult<()> {
        io::emit(self.out.as_deref(), text)
    }
}

fn context(cli: &Cli) -> CliResult<Ctx> {
    let (config, base) = match &cli.config {
        Some(path) => {
            let v: serde_json::Value = io::read_json(path)?;
            if !v.is_object() {
                return Err(CliError::parse(path.display().to_string(), "the config must be a JSON object"));
            }
            let base = path.parent().map(PathBuf::from).unwrap_or_default();
            (v, base)
        }
        None => (serde_json::Value::Null, PathBuf::new()),
    };
    let common: Common = if config.is_null() { Common::default() } else { io::from_value("config", config.clone())? };
    let out = cli.out.clone().or_else(|| common.out.map(|p| if p.is_absolute() { p } else { base.join(p) }));
    Ok(Ctx {
        out,
        format: cli.format.or(common.format).unwrap_or_default(),
        check: cli.check || common.check,
        base,
        config,
    })
}

fn run(cli: Cli) -> CliResult<()> {
    let ctx = context(&cli)?;
    match cli.command {
        Command::Pade(args) => commands::pade(&ctx, args),
        Command::Table(args) => commands::table(&ctx, args),
        Command::Construct { lemma, args } => commands::construct(&ctx, lemma, args),
        Command::Build => commands::build(&ctx),
        Command::Replay(args) => commands::replay(&ctx, args),
        Command::Demo { name } => demo::run(&ctx, name),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("upade: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

