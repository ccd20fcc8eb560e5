use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let status = cvqkd_cli::run(
        std::env::args().collect(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    ExitCode::from(status.code() as u8)
}
