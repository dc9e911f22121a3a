mod args;
mod commands;
mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use commands::Failure;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = cli.command.name();
    let report = match commands::run(cli.command, &cli.opts) {
        Ok(r) => r,
        Err(f) => {
            eprintln!("rovib {name}: {f}");
            return ExitCode::from(match f {
                Failure::Input(_) => 1,
                Failure::Check(_) => 2,
            });
        }
    };
    let written = match &cli.opts.output {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            report.write(cli.opts.format, &mut w)?;
            w.flush()
        }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            report.write(cli.opts.format, &mut lock).and_then(|_| lock.flush())
        }
    };
    if let Err(e) = written {
        eprintln!("rovib {name}: cannot write report: {e}");
        return ExitCode::from(1);
    }
    if report.passed {
        eprintln!("rovib {name}: all checks passed");
        ExitCode::SUCCESS
    } else {
        eprintln!("rovib {name}: checks failed");
        ExitCode::from(2)
    }
}
