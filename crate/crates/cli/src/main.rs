mod commands;
mod config;
mod gen;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use portal_metrics::ErrorKind;

use config::ConfigFlags;

#[derive(Debug, Parser)]
#[command(name = "portal-metrics", version, about = "Provision, organization, usage and position metrics for content portals")]
struct Cli {
    #[command(flatten)]
    flags: ConfigFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Diversity, richness and age of catalog content
    Catalog,
    /// Depth, density, navigability and linearity of a site graph
    Structure,
    /// Sessions, demand, recency and navigation from access logs
    Usage,
    /// Authority, hub and bridge roles in the cross-site link graph
    Position,
    /// Dynamics, size and quadrant of a portal
    Segment,
    /// Full shareable report plus local diagnostics for one portal
    Report,
    /// Compare reports within their segments
    Compare {
        /// Report files written by `report`
        #[arg(required = true)]
        reports: Vec<std::path::PathBuf>,
    },
    /// Generate synthetic fixtures
    #[command(subcommand)]
    Gen(gen::GenCommand),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let kind = err
        .chain()
        .find_map(|e| e.downcast_ref::<portal_metrics::Error>())
        .map(portal_metrics::Error::kind);
    match kind {
        Some(ErrorKind::Domain) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Catalog => commands::catalog(&cli.flags),
        Command::Structure => commands::structure(&cli.flags),
        Command::Usage => commands::usage(&cli.flags),
        Command::Position => commands::position(&cli.flags),
        Command::Segment => commands::segment(&cli.flags),
        Command::Report => commands::report(&cli.flags),
        Command::Compare { reports } => commands::compare(&cli.flags, &reports),
        Command::Gen(g) => gen::run(&cli.flags, g),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
