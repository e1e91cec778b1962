use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mixcomb::geometry::{estimable_base_arms, spectral_constants};
use mixcomb::harness::{
    write_csv, write_json, Algo, Experiment, ExperimentConfig, ExperimentOutput, FamilySpec,
    MeanSpec, Metadata,
};
use mixcomb::{Error, NoiseLaw};

#[derive(Parser)]
#[command(name = "mixcomb", version, about = "Combinatorial bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials and write per-checkpoint metrics.
    Simulate(SimulateArgs),
    /// Print the problem constants of a family.
    InspectFamily(FamilyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Kl,
    Ucb,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    UniformMatroid,
    Restricted,
    PerfectMatchings,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value = "uniform-matroid")]
    family: FamilyKind,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d0: Option<usize>,
    /// JSON family file with 1-indexed arms.
    #[arg(long)]
    family_file: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    algo: AlgoArg,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    n: usize,
    /// Comma-separated exploration exponents.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output path; `-` writes to stdout.
    #[arg(long, default_value = "-")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    fixed_instance: bool,
    #[arg(long, default_value_t = 0.1)]
    mean_lo: f64,
    #[arg(long, default_value_t = 0.9)]
    mean_hi: f64,
    /// Explicit comma-separated means; overrides the range.
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long, default_value = "bernoulli")]
    noise: NoiseLaw,
    #[arg(long)]
    workers: Option<usize>,
}

fn missing(flag: &str) -> Error {
    Error::InvalidParameter(format!("--{flag} is required for this family"))
}

impl FamilyArgs {
    fn spec(&self) -> Result<FamilySpec, Error> {
        Ok(match self.family {
            FamilyKind::UniformMatroid => FamilySpec::UniformMatroid {
                d: self.d.ok_or_else(|| missing("d"))?,
                m: self.m.ok_or_else(|| missing("m"))?,
            },
            FamilyKind::Restricted => FamilySpec::Restricted { d0: self.d0.ok_or_else(|| missing("d0"))? },
            FamilyKind::PerfectMatchings => {
                FamilySpec::PerfectMatchings { m: self.m.ok_or_else(|| missing("m"))? }
            }
            FamilyKind::File => {
                FamilySpec::File { path: self.family_file.clone().ok_or_else(|| missing("family-file"))? }
            }
        })
    }
}

fn open_out(path: &PathBuf) -> Result<Box<dyn Write>, Error> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

fn simulate(args: SimulateArgs) -> Result<(), Error> {
    let algo = match args.algo {
        AlgoArg::Kl => Algo::Kl,
        AlgoArg::Ucb => Algo::Ucb,
    };
    let mut config =
        ExperimentConfig::new(algo, args.family.spec()?, args.n, args.alpha, args.trials, args.seed);
    config.means = match args.mu {
        Some(mu) => MeanSpec::Explicit { mu },
        None => MeanSpec::Uniform { lo: args.mean_lo, hi: args.mean_hi },
    };
    config.noise = args.noise;
    config.fixed_instance = args.fixed_instance;
    config.workers = args.workers;
    let exp = Experiment::new(config)?;
    let (trials, failure) = exp.run_trials();
    if let Some(err) = failure {
        if args.out.as_os_str() != "-" {
            let mut path = args.out.clone().into_os_string();
            path.push(".partial.json");
            let partial = ExperimentOutput {
                config: exp.config().clone(),
                metadata: Metadata::default(),
                summary: Vec::new(),
                trials,
            };
            write_json(&partial, BufWriter::new(File::create(PathBuf::from(path))?))?;
        }
        return Err(err);
    }
    // One line per distinct warning head, with the number of trials hit.
    let mut warned: Vec<(String, usize)> = Vec::new();
    for w in trials.iter().flat_map(|t| &t.warnings) {
        let head = w.split(';').next().unwrap_or(w).to_string();
        match warned.iter_mut().find(|(h, _)| *h == head) {
            Some(slot) => slot.1 += 1,
            None => warned.push((head, 1)),
        }
    }
    for (head, count) in warned {
        eprintln!("warning: {head} ({count} trials)");
    }
    let out = open_out(&args.out)?;
    match args.format {
        Format::Csv => write_csv(&trials, out),
        Format::Json => {
            let summary = mixcomb::harness::summarize(&trials);
            let output = ExperimentOutput {
                config: exp.config().clone(),
                metadata: Metadata::default(),
                trials,
                summary,
            };
            write_json(&output, out)
        }
    }
}

fn inspect(args: FamilyArgs) -> Result<(), Error> {
    let family = args.spec()?.build()?;
    let c = spectral_constants(&family)?;
    let kl: Vec<usize> = estimable_base_arms(&family).iter().map(|e| e + 1).collect();
    println!("d: {}", family.d());
    println!("|M|: {}", family.len());
    match family.uniform_size() {
        Some(m) => println!("m: {m}"),
        None => println!("m: mixed (max {})", family.max_size()),
    }
    println!("rho_min: {}", c.rho_min);
    println!("lambda_min: {}", c.lambda_min);
    println!("M_KL: {kl:?}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::InspectFamily(args) => inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
