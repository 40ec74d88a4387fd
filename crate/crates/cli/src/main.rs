mod args;
mod commands;
mod config;
mod exit;

use std::io::IsTerminal;

use anyhow::Result;
use clap::Parser;
use tracing_subscriber::EnvFilter;

use crate::args::{BenchCommand, Cli, Command, EmbedCommand};
use crate::config::Settings;

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let filter = EnvFilter::try_from_env("MYOPIC_LOG").unwrap_or_else(|_| EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter).with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
}

fn dispatch(cli: &Cli) -> Result<()> {
    let settings = Settings::load(cli.config.as_deref())?;
    if let Some(n) = config::jobs(&settings, cli.jobs)? {
        if n == 0 {
            return Err(exit::InputError::new("--jobs must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Bench(BenchCommand::BuildSquad(a)) => commands::bench::build_squad(a, &settings),
        Command::Bench(BenchCommand::BuildFineweb(a)) => commands::bench::build_fineweb(a, &settings),
        Command::Bench(BenchCommand::Sample(a)) => commands::bench::sample(a, &settings),
        Command::Embed(EmbedCommand::Fetch(a)) => commands::embed::fetch(a, &settings),
        Command::Run(a) => commands::run::run(a, &settings),
        Command::Eval(a) => commands::eval::eval(a, &settings),
        Command::Diagnose(a) => commands::diagnose::diagnose(a, &settings),
        Command::Report(a) => commands::report::report(a),
    }
}

fn main() {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    if let Err(err) = dispatch(&cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit::code_for(&err));
    }
}
