use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use petto::config::{load_config, Precision, ProblemConfig};
use petto::optimizer::{run_with_progress, Termination};
use petto::{output, parallel, presets, Error, Real};

#[derive(Parser)]
#[command(name = "petto", version, about = "Pseudo-transient topology optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an optimization from a preset or a config file.
    Run(RunArgs),
    /// Print a preset as a config file.
    Show {
        preset: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Built-in problem: heat2d, mbb2d, cantilever3d or drone3d.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// TOML problem description.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Nodes along x; unset axes are scaled to keep the aspect ratio.
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    nz: Option<usize>,
    /// Maximum number of optimization loops.
    #[arg(long)]
    loops: Option<usize>,
    /// Output directory.
    #[arg(long, env = "PETTO_OUT")]
    out: Option<PathBuf>,
    #[arg(long)]
    precision: Option<Precision>,
    #[arg(long)]
    threads: Option<usize>,
    /// Loops between history records.
    #[arg(long)]
    report_every: Option<usize>,
    /// Sign applied to the compliance sensitivity (+1 or -1).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_sign)]
    compliance_sign: Option<f64>,
    /// Only print the final summary line.
    #[arg(long, short)]
    quiet: bool,
}

fn parse_sign(s: &str) -> Result<f64, String> {
    match s {
        "+1" | "1" => Ok(1.0),
        "-1" => Ok(-1.0),
        _ => Err(format!("expected +1 or -1, got `{s}`")),
    }
}

enum Failure {
    Config(String),
    Aborted(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } => Failure::Io(e.to_string()),
            Error::NonFinite { .. } => Failure::Aborted(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn configure(args: &RunArgs) -> Result<ProblemConfig, Failure> {
    let mut config = match (&args.preset, &args.config) {
        (Some(name), None) => presets::by_name(name)?,
        (None, Some(path)) => load_config(path)?,
        _ => return Err(Failure::Config("give exactly one of --preset and --config".into())),
    };
    let sizes: Vec<(usize, usize)> = [args.nx, args.ny, args.nz]
        .iter()
        .enumerate()
        .filter_map(|(a, n)| n.map(|n| (a, n)))
        .collect();
    let given: Vec<usize> = sizes.iter().map(|(a, _)| *a).collect();
    for (axis, n) in &sizes {
        config.resize(*axis, *n, &given)?;
    }
    if let Some(l) = args.loops {
        config.schedule.max_loops = l;
    }
    if let Some(k) = args.report_every {
        config.schedule.report_every = k;
    }
    if let Some(s) = args.compliance_sign {
        config.weights.compliance_sign = s;
    }
    if let Some(p) = args.precision {
        config.output.precision = p;
    }
    if let Some(t) = args.threads {
        config.output.threads = t;
    }
    if let Some(dir) = &args.out {
        config.output.dir = Some(dir.clone());
    }
    config.validate()?;
    Ok(config)
}

fn execute<R: Real>(config: &ProblemConfig, dir: &std::path::Path, quiet: bool) -> Result<Termination, Failure> {
    let (problem, schedule) = config.build::<R>()?;
    let start = Instant::now();
    let mut timing = Vec::new();
    let result = run_with_progress(&problem, &schedule, |rec| {
        timing.push((rec.report.loop_index, start.elapsed().as_secs_f64()));
        if !quiet {
            let vf: Vec<String> = rec.report.volume_fractions.iter().map(|v| format!("{v:.4}")).collect();
            eprintln!(
                "loop {:>6}  J {:.6e}  r {:.3e}  Jv {:.3e}  J1 {:.3e}  vf [{}]",
                rec.report.loop_index,
                rec.report.compliance,
                rec.residual,
                rec.report.volume,
                rec.report.unity,
                vf.join(", ")
            );
        }
    })?;
    output::write_results(dir, &config.name, problem.state_name(), &result, &timing)?;
    eprintln!(
        "{}: {} after {} loops in {:.1} s, results in {}",
        config.name,
        result.termination.label(),
        result.loops,
        start.elapsed().as_secs_f64(),
        dir.display()
    );
    Ok(result.termination)
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let config = configure(args)?;
    let dir = config
        .output
        .dir
        .clone()
        .ok_or_else(|| Failure::Config("no output directory: pass --out <dir> or set PETTO_OUT".into()))?;
    parallel::init_threads(config.output.threads);
    let termination = match config.output.precision {
        Precision::F64 => execute::<f64>(&config, &dir, args.quiet)?,
        Precision::F32 => execute::<f32>(&config, &dir, args.quiet)?,
    };
    match termination {
        Termination::Aborted { loop_index, field } => Err(Failure::Aborted(format!(
            "non-finite {field} at loop {loop_index}; last finite fields were written"
        ))),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Show { preset } => presets::by_name(preset)
            .and_then(|c| c.to_toml_string())
            .map(|s| print!("{s}"))
            .map_err(Failure::from),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Aborted(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(4)
        }
    }
}
