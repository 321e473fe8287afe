//! `twic` command-line entry point.

use clap::Parser;
use twic::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if let Err(e) = execute(cli, &mut out) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
