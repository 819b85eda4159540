//! The `kgcache` command line: argument handling, config files, replay
//! snapshots and the per-subcommand pipelines.

pub mod args;
mod commands;
mod resolve;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};
pub use resolve::Snapshot;

#[derive(Debug)]
pub enum Failure {
    Clap(clap::Error),
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<kgcache::Error> for Failure {
    fn from(e: kgcache::Error) -> Self {
        match e {
            kgcache::Error::Config(_) | kgcache::Error::Infeasible(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

pub type Outcome = Result<(), Failure>;

/// Run the command line `argv` (program name first) and return the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    match execute(argv.into_iter().map(Into::into).collect()) {
        Ok(()) => 0,
        Err(Failure::Clap(e)) => {
            let _ = e.print();
            if e.use_stderr() {
                1
            } else {
                0
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("kgcache: {msg}");
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("kgcache: {e:#}");
            2
        }
    }
}

fn execute(argv: Vec<String>) -> Outcome {
    let root = Cli::command();
    let argv = resolve::inject_config(argv, &root)?;
    let matches = root
        .clone()
        .try_get_matches_from(&argv)
        .map_err(Failure::Clap)?;
    let cli = Cli::from_arg_matches(&matches).map_err(Failure::Clap)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let snapshot = Snapshot::capture(&root, name, sub);
    match cli.command {
        Command::Train(a) => commands::train::run(a, &snapshot),
        Command::Eval(a) => commands::eval::run(a, &snapshot),
        Command::Classify(a) => commands::eval::classify(a, &snapshot),
        Command::Search(a) => commands::search::run(a, &snapshot),
        Command::Walk(a) => commands::graph::walk(a, &snapshot),
        Command::EmbedGraph(a) => commands::graph::embed(a, &snapshot),
        Command::Analyze(a) => commands::analyze::run(a, &snapshot),
    }
}
