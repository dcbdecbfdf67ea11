use clap::Parser;
use disc_rearrange::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
