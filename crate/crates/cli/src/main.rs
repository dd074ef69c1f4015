use std::process::ExitCode;

fn main() -> ExitCode {
    direval_cli::run(std::env::args_os())
}
