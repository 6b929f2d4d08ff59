use std::process::ExitCode;

fn main() -> ExitCode {
    rms_cli::run(std::env::args_os())
}
