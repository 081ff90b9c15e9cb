use clap::Parser;

fn main() {
    std::process::exit(endohyp_cli::execute(endohyp_cli::Cli::parse()));
}
