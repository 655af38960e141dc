use std::process::ExitCode;

fn main() -> ExitCode {
    mems_teleport::cli::run_from_env()
}
