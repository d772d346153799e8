use std::io::{self, BufReader};
use std::process::ExitCode;

use tenderforge_cli::cli::{run, Io};
use tracing_subscriber::EnvFilter;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")),
        )
        .with_writer(io::stderr)
        .init();
    let stdin = io::stdin();
    let mut input = BufReader::new(stdin.lock());
    let mut out = io::stdout().lock();
    let mut err = io::stderr().lock();
    let code = run(
        std::env::args_os(),
        &mut Io {
            input: &mut input,
            out: &mut out,
            err: &mut err,
        },
    );
    ExitCode::from(code)
}
