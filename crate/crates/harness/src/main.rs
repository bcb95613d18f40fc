use std::process::ExitCode;

fn main() -> ExitCode {
    riot_harness::cli::cli_main(std::env::args_os(), &mut std::io::stdout())
}
