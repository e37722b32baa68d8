use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use exmart::betting::{KdeModel, StrategyKind};
use exmart::calibration::SynthConfig;
use exmart::io::{self, LabelColumn, RunConfig};
use exmart::Error;

#[derive(Parser)]
#[command(name = "exmart", version, about = "Test a labeled data stream for exchangeability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute conformal p-values and martingales for a CSV dataset.
    Test(TestArgs),
    /// Generate a synthetic Gaussian-mixture stream as CSV.
    Synth(SynthArgs),
    /// Fit the plug-in betting function to the p-values of a trajectory file.
    BettingDump(DumpArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Input CSV file.
    data: PathBuf,
    /// Label column, by header name or zero-based index.
    #[arg(long, default_value = "label")]
    label: String,
    /// The file has no header row.
    #[arg(long)]
    no_header: bool,
    /// Betting strategy: constant, power:<eps>, mixture, plugin or plugin:<stride>. Repeatable.
    #[arg(long = "strategy", required = true)]
    strategies: Vec<String>,
    /// Seed for the p-value randomization.
    #[arg(long)]
    seed: u64,
    /// Randomly permute the examples before testing.
    #[arg(long)]
    shuffle: bool,
    /// Seed for the permutation (defaults to one derived from --seed).
    #[arg(long, requires = "shuffle")]
    shuffle_seed: Option<u64>,
    /// Alarm threshold for the martingale value. Repeatable; defaults to 20 and 100.
    #[arg(long = "threshold")]
    thresholds: Vec<f64>,
    /// Process at most this many examples.
    #[arg(long)]
    max_examples: Option<usize>,
    /// Directory for trajectory.csv, summary.json and betting.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    /// Distance of each class mean from the origin.
    #[arg(long, default_value_t = 2.0)]
    separation: f64,
    /// Per-class isotropic standard deviation.
    #[arg(long, default_value_t = 1.0)]
    std: f64,
    /// 1-based example index from which the first class's mean moves --shift
    /// std devs along the first feature.
    #[arg(long)]
    changepoint: Option<usize>,
    #[arg(long, default_value_t = 2.0, requires = "changepoint")]
    shift: f64,
    #[arg(long)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DumpArgs {
    /// Trajectory CSV with a p_value column.
    pvalues: PathBuf,
    /// Output CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn dispatch(command: Command) -> exmart::Result<()> {
    match command {
        Command::Test(args) => test(args),
        Command::Synth(args) => synth(args),
        Command::BettingDump(args) => dump(args),
    }
}

fn test(args: TestArgs) -> exmart::Result<()> {
    let strategies = args
        .strategies
        .iter()
        .map(|s| s.parse::<StrategyKind>())
        .collect::<exmart::Result<Vec<_>>>()?;
    let label: LabelColumn = args.label.parse()?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::Io {
        path: args.out_dir.clone(),
        source: e,
    })?;
    let mut config = RunConfig::new(args.data, label, strategies, args.seed, &args.out_dir);
    config.has_header = !args.no_header;
    config.shuffle = args.shuffle;
    config.shuffle_seed = args.shuffle_seed;
    config.max_examples = args.max_examples;
    if !args.thresholds.is_empty() {
        config.thresholds = args.thresholds;
    }
    let summary = io::run_experiment(&config)?;
    for (name, s) in &summary.strategies {
        let crossings: Vec<String> = s
            .crossings
            .iter()
            .map(|(t, step)| match step {
                Some(step) => format!("{t}@{step}"),
                None => format!("{t}@-"),
            })
            .collect();
        println!(
            "{name:>12}  final log10 {:>10.4}  max log10 {:>10.4}  {}",
            s.final_log10,
            s.max_log10,
            crossings.join(" ")
        );
    }
    println!("{} examples, outputs in {}", summary.n_examples, args.out_dir.display());
    Ok(())
}

fn synth(args: SynthArgs) -> exmart::Result<()> {
    let mut config = SynthConfig::gaussian_classes(args.n, args.classes, args.dim, args.separation, args.std, args.seed);
    if let Some(at) = args.changepoint {
        config = config.with_mean_shift(at, args.shift);
    }
    let data = config.generate()?;
    io::write_examples(&args.out, &data)
}

fn dump(args: DumpArgs) -> exmart::Result<()> {
    let ps = io::read_pvalues(&args.pvalues)?;
    let model = KdeModel::fit(&ps);
    match args.out {
        Some(path) => io::write_betting_grid(&path, &model),
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            io::write_grid_rows(&mut w, &model)?;
            w.flush().map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })
        }
    }
}
