use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(mdiqkd::cli::run(std::env::args_os()))
}
