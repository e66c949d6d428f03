use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use natmap_lab::report::write_atomic;
use natmap_lab::{load_scenario, run, CliError, Command, Flags, Format};

/// Natural maps and volumes of representations: scenario runner.
#[derive(Parser, Debug)]
#[command(name = "natmap-lab", version)]
struct Args {
    command: Command,
    /// Scenario file, or `bundled:<name>`.
    #[arg(long)]
    scenario: String,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Orbit truncation L (maximal word length).
    #[arg(long)]
    word_length: Option<usize>,
    /// Highest quadrature order q; volumes are refined over [q - 2, q].
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("natmap-lab: {e}");
            ExitCode::from(e.status().exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<u8, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let flags = Flags {
        epsilon: args.epsilon,
        word_length: args.word_length,
        quad_order: args.quad_order,
        seed: args.seed,
    };
    let outcome = run(args.command, &scenario, &flags)?;
    let text = outcome.report.render(args.format);
    if let Some(path) = &args.out {
        write_atomic(path, &text)?;
    }
    print!("{text}");
    eprintln!(
        "natmap-lab: {} on {} finished in {:.3} s",
        args.command.name(),
        scenario.name,
        outcome.wall_time.as_secs_f64()
    );
    Ok(outcome.status.exit_code() as u8)
}
