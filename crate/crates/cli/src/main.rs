use clap::Parser;

fn main() -> std::process::ExitCode {
    let cli = eotrack_cli::Cli::parse();
    match eotrack_cli::run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
