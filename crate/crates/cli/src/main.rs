use clap::error::ErrorKind;
use clap::Parser;
use coinfect_cli::{execute, Cli, CliError, Command};
use coinfect_core::scenario::{bundled_scenario, BUNDLED};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };

    if let Command::Scenarios = cli.command {
        for (name, _) in BUNDLED {
            let desc = bundled_scenario(name).map(|s| s.description).unwrap_or_default();
            println!("{name}\t{desc}");
        }
        return ExitCode::SUCCESS;
    }

    match execute(&cli) {
        Ok((artifacts, paths)) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            println!("{}", artifacts.summary());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
