use std::process::ExitCode;

fn main() -> ExitCode {
    nasplan::cli::main_with_args(std::env::args_os())
}
