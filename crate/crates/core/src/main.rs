use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = balance_assist::cli::Cli::parse();
    if let Err(e) = balance_assist::cli::run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(e.exit_code());
    }
}
