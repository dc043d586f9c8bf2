use std::path::PathBuf;
use std::process::ExitCode;

use cauchy_stokes_cli::{run, threads_from_env, Command, Config, RunOptions, EXIT_ERROR, EXIT_FLAG_FAIL, EXIT_PASS};
use clap::{CommandFactory, Parser};

#[derive(Parser, Debug)]
#[command(name = "cauchy-stokes", version, about = "Cauchy data completion for Stokes/Oseen flows")]
struct Args {
    command: Command,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Validate the config and print planned solve sizes only.
    #[arg(long)]
    dry_run: bool,
    /// Store wall-clock times in the JSON output (breaks byte-for-byte reruns).
    #[arg(long)]
    record_timings: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() && !e.to_string().contains("Usage:") {
                eprintln!("\n{}", Args::command().render_usage());
            }
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { EXIT_PASS as u8 });
        }
    };
    let result = threads_from_env(std::env::var("CAUCHY_STOKES_THREADS").ok().as_deref()).and_then(|threads| {
        let cfg = Config::parse_file(&args.config)?;
        let opts = RunOptions { out: args.out.clone(), dry_run: args.dry_run, record_timings: args.record_timings, threads };
        run(args.command, &cfg, &opts)
    });
    match result {
        Ok(None) => ExitCode::from(EXIT_PASS as u8),
        Ok(Some(m)) => {
            for (k, v) in &m.flags {
                println!("{} {k}", if *v { "PASS" } else { "FAIL" });
            }
            ExitCode::from(if m.passed { EXIT_PASS } else { EXIT_FLAG_FAIL } as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
