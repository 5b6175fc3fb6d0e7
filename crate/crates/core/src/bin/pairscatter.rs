use clap::Parser;

fn main() {
    let cli = pairscatter::cli::Cli::parse();
    std::process::exit(pairscatter::cli::main_with(cli));
}
