//! `darkwatch` command line: one subcommand per pipeline stage, all
//! sharing a run directory.

pub mod config;
pub mod pipeline;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::pipeline::{RunContext, ForumFixture, RunLock, ScanOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "darkwatch", version, about = "Dark-web threat intelligence pipeline")]
pub struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Run directory; overrides `run_dir` from the config.
    #[arg(long, global = true)]
    pub run_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Crawl from the configured seeds and store every page.
    Crawl,
    /// Query every search provider for the configured keywords.
    Metasearch,
    /// Ask every provider for pages linking to the configured domains.
    Backlinks,
    /// Ingest labeled seeds and train the next model version.
    Train,
    /// Drop off-topic pages, then score the rest with the latest model.
    Filter,
    /// Cluster the surviving pages.
    Cluster,
    /// Per-forum keyword statistics.
    Stats {
        /// Use a bundled forum corpus instead of `forums.posts`.
        #[arg(long, value_enum)]
        fixtures: Option<ForumFixture>,
    },
    /// Search the device index.
    Scan {
        /// Query to run; repeatable. Defaults to the queries in `correlate.classes`.
        #[arg(long, short)]
        query: Vec<String>,
        /// Replay recorded responses from this directory.
        #[arg(long)]
        fixture: Option<PathBuf>,
        #[arg(long)]
        pages: Option<u32>,
        /// Keep only records on this port in the CSV export.
        #[arg(long)]
        port: Option<u16>,
    },
    /// Combine forum mentions and device exposure into per-class risk.
    Correlate,
    /// Bundle every computed report into `reports.json`.
    Report,
    /// Serve the triage API and UI.
    Serve,
}

impl Command {
    /// Whether the command can run on defaults alone.
    fn config_optional(&self) -> bool {
        matches!(
            self,
            Command::Stats { fixtures: Some(_) } | Command::Scan { fixture: Some(_), .. }
        )
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let config = match &cli.config {
        Some(path) => match Config::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e:#}");
                return EXIT_CONFIG;
            }
        },
        None if cli.command.config_optional() => Config::default(),
        None => {
            eprintln!("error: this command needs --config <FILE>");
            return EXIT_CONFIG;
        }
    };
    let ctx = match RunContext::new(config, cli.run_dir.clone()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    match execute(&ctx, &cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

fn execute(ctx: &RunContext, command: &Command) -> anyhow::Result<()> {
    let _lock = RunLock::acquire(&ctx.run_dir)?;
    if matches!(command, Command::Serve) {
        return pipeline::serve_stage(ctx);
    }
    let summary = match command {
        Command::Crawl => pipeline::crawl_stage(ctx)?,
        Command::Metasearch => pipeline::metasearch_stage(ctx)?,
        Command::Backlinks => pipeline::backlinks_stage(ctx)?,
        Command::Train => pipeline::train_stage(ctx)?,
        Command::Filter => pipeline::filter_stage(ctx)?,
        Command::Cluster => pipeline::cluster_stage(ctx)?,
        Command::Stats { fixtures } => pipeline::stats_stage(ctx, *fixtures)?,
        Command::Scan {
            query,
            fixture,
            pages,
            port,
        } => pipeline::scan_stage(
            ctx,
            &ScanOptions {
                queries: query.clone(),
                fixture: fixture.clone(),
                pages: *pages,
                port: *port,
            },
        )?,
        Command::Correlate => pipeline::correlate_stage(ctx)?,
        Command::Report => pipeline::report_stage(ctx)?,
        Command::Serve => unreachable!(),
    };
    println!("{summary}");
    Ok(())
}
