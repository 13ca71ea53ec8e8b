use clap::Parser;
use polaron_cli::commands::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("polaron {}: {e}", cli.command.name());
        std::process::exit(e.exit_code());
    }
}
