use clap::Parser;

fn main() {
    let cli = pulsetrack::cli::Cli::parse();
    std::process::exit(pulsetrack::cli::main_with(cli));
}
