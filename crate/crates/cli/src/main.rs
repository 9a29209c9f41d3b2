use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SEA_DYN_LOG", "warn")).init();
    let cli = sea_dyn_cli::Cli::parse();
    let code = match sea_dyn_cli::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sea-dyn: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
