//! `lgsf` command line: equilibria, stability, sigma grids, canard sweeps,
//! simulation, cycle detection, entry-exit, blow-up verification, bifurcation
//! loci and the Takens-Bogdanov check, emitted as CSV or JSON.

mod commands;
mod config;
mod output;

use clap::Parser;

fn main() {
    let cli = config::Cli::parse();
    std::process::exit(commands::run(cli));
}
