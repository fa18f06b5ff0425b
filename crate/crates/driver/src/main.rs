use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(aia_driver::cli::run_args(std::env::args_os()))
}
