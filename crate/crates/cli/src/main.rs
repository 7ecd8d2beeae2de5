use blowup_cli::{run, Cli};
use blowup_core::Status;
use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let r = &out.report;
            for v in &r.verdicts {
                println!(
                    "{:<4} {} measured {:.10} expected {:.10} err {:.2e} (tol {})",
                    status(v.status),
                    v.quantity,
                    v.measured,
                    v.expected,
                    v.error,
                    v.tolerance
                );
            }
            for c in &r.checks {
                println!("{:<4} {} {}", status(c.status), c.name, c.detail);
            }
            for e in &r.errors {
                eprintln!("error: {e}");
            }
            println!("{:?}: report written to {}", r.outcome, out.out_dir.join("report.json").display());
            ExitCode::from(r.outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn status(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Warn => "WARN",
    }
}
