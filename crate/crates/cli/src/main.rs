use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(koopid::run(std::env::args_os()) as u8)
}
