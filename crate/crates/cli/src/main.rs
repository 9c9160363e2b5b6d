use std::process::ExitCode;

use clap::Parser;

use mofs_cli::{Cli, CliError, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => mofs_cli::run(args).map(|_| println!("wrote results to {}", args.out.display())),
        Command::Rank(args) => mofs_cli::rank(args).map(|table| print!("{table}")),
        Command::Synth(args) => mofs_cli::synth(args),
        Command::Serve(args) => serve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn serve(args: &mofs_cli::ServeArgs) -> Result<(), CliError> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Domain(e.to_string()))?;
    runtime.block_on(mofs_cli::serve(args, async {
        let _ = tokio::signal::ctrl_c().await;
        log::info!("interrupt received, shutting down");
    }))
}
