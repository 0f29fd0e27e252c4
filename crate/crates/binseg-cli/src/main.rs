use std::process::ExitCode;

use clap::Parser;

use binseg_cli::{run_eval, run_segment, run_synth, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Segment(args) => run_segment(&args),
        Command::Synth(args) => run_synth(&args),
        Command::Eval(args) => run_eval(&args).map(|line| println!("{line}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
