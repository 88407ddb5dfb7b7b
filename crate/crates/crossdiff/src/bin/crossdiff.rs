use std::process::ExitCode;

fn main() -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    ExitCode::from(crossdiff::cli::run_cli(std::env::args(), &mut stdout, &mut stderr))
}
