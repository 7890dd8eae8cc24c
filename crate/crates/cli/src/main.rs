use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(transbench_cli::run(std::env::args_os()))
}
