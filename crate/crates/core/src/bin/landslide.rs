use clap::Parser;
use landslide_core::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
