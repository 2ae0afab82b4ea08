use clap::Parser;

use pstcube_cli::{configure_threads, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads().and_then(|()| run(cli.command)) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
