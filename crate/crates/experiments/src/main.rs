use clap::Parser;
use sbeq_experiments::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("sbeq: {e}");
        std::process::exit(e.exit_code());
    }
}
