use std::process::ExitCode;

use clap::Parser;
use derivsamp_cli::{emit, run, RunConfig};

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = run(&cfg).and_then(|out| emit(&out.csv, cfg.out.as_deref()).map(|_| out.code));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("derivsamp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
