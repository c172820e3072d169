use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(singode::cli::run() as u8)
}
