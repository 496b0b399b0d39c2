use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use maxsketch_cli::{init_threads, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let result = init_threads().and_then(|_| run(cli, &mut out, &mut err));
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message.trim_end());
            ExitCode::from(e.code as u8)
        }
    }
}
