use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use clap::Parser;
use tilesplat_cli::{exit, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
        let _ = e.print();
        std::process::exit(code);
    });
    let code = match catch_unwind(AssertUnwindSafe(|| run(&cli))) {
        Ok(Ok(text)) => {
            print!("{text}");
            exit::OK
        }
        Ok(Err(e)) => {
            eprintln!("tilesplat: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("tilesplat: internal invariant violated");
            exit::INTERNAL
        }
    };
    ExitCode::from(code as u8)
}
