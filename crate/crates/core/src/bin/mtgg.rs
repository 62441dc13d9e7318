use clap::Parser;

fn main() {
    std::process::exit(mtgg::cli::run(mtgg::cli::Cli::parse()));
}
