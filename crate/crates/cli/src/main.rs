use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use dissipa_cli::commands::{self, Outputs};
use dissipa_cli::config::{self, Run};
use dissipa_cli::{selftest, Failure};

#[derive(Parser)]
#[command(name = "dissipa", version, about = "Conley-index analysis of parametrized dissipative flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for map construction; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip SVG plots.
    #[arg(long)]
    no_svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Global attractor, continued attractor and separator at one parameter.
    Analyze(RunArgs),
    /// Family verdict over a parameter grid.
    Sweep(RunArgs),
    /// Run the embedded oracle suites.
    Selftest,
}

fn prepare(args: &RunArgs) -> Result<Run, Failure> {
    let cfg = config::load(&args.config)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let mut run = cfg.resolve(base, args.out.as_deref())?;
    if args.no_svg {
        run.svg = false;
    }
    Ok(run)
}

fn report(out: &Outputs, quiet: bool) {
    if quiet {
        return;
    }
    print!("{}", commands::summary(&out.verdict));
    for f in &out.files {
        println!("wrote {}", f.display());
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
    }
    let start = Instant::now();
    match &cli.command {
        Command::Analyze(args) => report(&commands::analyze(&prepare(args)?)?, cli.quiet),
        Command::Sweep(args) => report(&commands::sweep(&prepare(args)?)?, cli.quiet),
        Command::Selftest => {
            let results = selftest::run();
            if !cli.quiet {
                print!("{}", selftest::table(&results));
            }
            if let Some(bad) = results.iter().find(|r| !r.passed()) {
                return Err(Failure::Runtime(format!("oracle suite '{}' disagrees", bad.name)));
            }
        }
    }
    if !cli.quiet {
        eprintln!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
