use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::densities::{chi_squared, hellinger_distance, hellinger_h, kl_divergence, Divergence, QuadratureRule};
use crate::error::{Error, Result};

use super::config::{ExperimentConfig, Scenario};
use super::output::{render, write_artifacts, Format};
use super::truth::TruthSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "consistency-lab", version, about = "Posterior consistency diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the scenario named in the config.
    Simulate(RunArgs),
    /// Summability reports for the configured priors.
    Summability(RunArgs),
    /// Martingale ensemble diagnostics.
    Martingale(RunArgs),
    /// Distance between two named densities.
    Divergence {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[arg(long, value_enum)]
        metric: MetricArg,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; without it the primary output goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MetricArg {
    /// `h = 1 − ∫√(fg)`.
    #[value(name = "hellinger-h")]
    HalfSquared,
    /// `H = (∫(√f − √g)²)^{1/2}`.
    #[value(name = "hellinger-H")]
    Hellinger,
    /// `∫ g log(g/f)`, the truth in the second slot.
    #[value(name = "kl")]
    Kl,
    /// `∫ g²/f − 1`.
    #[value(name = "chi2")]
    Chi2,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn format_value(d: Divergence<f64>) -> String {
    match d.finite() {
        Some(v) => format!("{v:.6}"),
        None => "inf".into(),
    }
}

fn divergence(f: &str, g: &str, metric: MetricArg) -> Result<String> {
    let f = f.parse::<TruthSpec>()?.density()?;
    let g = g.parse::<TruthSpec>()?.density()?;
    let rule = QuadratureRule::default();
    Ok(match metric {
        MetricArg::HalfSquared => format!("{:.6}", hellinger_h(&f, &g, &rule)?),
        MetricArg::Hellinger => format!("{:.6}", hellinger_distance(&f, &g, &rule)?),
        MetricArg::Kl => format_value(kl_divergence(&g, &f, &rule)?),
        MetricArg::Chi2 => format_value(chi_squared(&g, &f, &rule)?),
    })
}

fn run(args: RunArgs, scenario: Option<Scenario>, stdout: &mut dyn Write) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(s) = scenario {
        config.scenario = s;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    let format = match args.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    eprintln!(
        "consistency-lab: {} n={} replicates={} seed={}",
        config.stem(),
        config.n,
        config.replicates,
        config.seed
    );
    let artifacts = render(&config, format)?;
    let dir = args.out.or_else(|| config.output.dir.as_ref().map(PathBuf::from));
    match dir {
        Some(dir) => {
            for path in write_artifacts(&dir, &artifacts)? {
                eprintln!("consistency-lab: wrote {}", path.display());
            }
        }
        None => {
            stdout.write_all(&artifacts[0].bytes)?;
            if artifacts.len() > 1 {
                eprintln!("consistency-lab: pass --out to keep the remaining {} output(s)", artifacts.len() - 1);
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let mut stdout = std::io::stdout().lock();
    let result = match cli.command {
        Command::Simulate(a) => run(a, None, &mut stdout),
        Command::Summability(a) => run(a, Some(Scenario::Summability), &mut stdout),
        Command::Martingale(a) => run(a, Some(Scenario::Martingale), &mut stdout),
        Command::Divergence { f, g, metric } => {
            divergence(&f, &g, metric).and_then(|v| writeln!(stdout, "{v}").map_err(Error::from))
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("consistency-lab: error: {e}");
            exit_code(&e)
        }
    }
}
