use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use distmerge::cli::{self, Emit, GeneratorKind, RunConfig, RunError, Source};
use distmerge::generators::{CategoricalOptions, GroupLayout, SuddenChange};
use distmerge::io::{write_stream, PathError};
use distmerge::{Itemset, Params};

#[derive(Parser)]
#[command(
    name = "distmerge",
    version,
    about = "Track maximal frequent itemsets in a record stream"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the model over a stream and write snapshots, metrics and plots.
    Run(RunArgs),
    /// Write a synthetic stream in the plain-text record format.
    Generate(GenerateArgs),
    /// Exact maximal frequent itemsets and co-occurrence counts of a window.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorName {
    TenGroups,
    SuddenChange,
    Noise,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Output {
    Snapshots,
    Metrics,
    Plots,
}

#[derive(Args)]
struct SourceArgs {
    /// Stream file, one record per line.
    #[arg(long, conflicts_with_all = ["generator", "categorical"])]
    input: Option<PathBuf>,
    /// Built-in synthetic stream.
    #[arg(long)]
    generator: Option<GeneratorName>,
    /// Comma-separated categorical table; every attribute value becomes an item.
    #[arg(long, conflicts_with = "generator")]
    categorical: Option<PathBuf>,
    /// Zero-based table column to ignore (repeatable), e.g. a class label.
    #[arg(long = "drop-column")]
    drop_columns: Vec<usize>,
    /// Skip malformed stream lines instead of aborting.
    #[arg(long)]
    lenient: bool,
    /// Seed for the synthetic stream (defaults to --seed).
    #[arg(long)]
    stream_seed: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    noise_pct: f64,
    #[arg(long, default_value_t = SuddenChange::DEFAULT_CHANGE_AT)]
    change_at: u64,
    /// Use non-overlapping five-item groups for the ten-groups stream.
    #[arg(long)]
    disjoint_groups: bool,
}

impl SourceArgs {
    fn source(&self, seed: u64) -> Result<Source, RunError> {
        if let Some(path) = &self.input {
            return Ok(Source::File {
                path: path.clone(),
                lenient: self.lenient,
            });
        }
        if let Some(path) = &self.categorical {
            return Ok(Source::Categorical {
                path: path.clone(),
                options: CategoricalOptions {
                    drop_columns: self.drop_columns.clone(),
                    ..CategoricalOptions::default()
                },
            });
        }
        let kind = match self.generator {
            Some(GeneratorName::TenGroups) => GeneratorKind::TenGroups {
                layout: if self.disjoint_groups {
                    GroupLayout::Disjoint
                } else {
                    GroupLayout::Overlapping
                },
            },
            Some(GeneratorName::SuddenChange) => GeneratorKind::SuddenChange {
                change_at: self.change_at,
            },
            Some(GeneratorName::Noise) => GeneratorKind::Noise {
                noise_pct: self.noise_pct,
            },
            None => {
                return Err(RunError::Config(
                    "one of --input, --generator or --categorical is required".into(),
                ))
            }
        };
        Ok(Source::Generator {
            kind,
            seed: self.stream_seed.unwrap_or(seed),
        })
    }
}

#[derive(Args)]
struct ParamArgs {
    /// Item universe size n.
    #[arg(long, default_value_t = 50)]
    items: u32,
    #[arg(long, default_value_t = 15.0)]
    minsupp: f64,
    /// Sliding window size.
    #[arg(long, default_value_t = 300)]
    window: u32,
    #[arg(long, default_value_t = 0.1)]
    mergedist: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Point pairs pushed or pulled per record.
    #[arg(long, default_value_t = 40_000)]
    pairs: usize,
    /// Age before an infrequent pattern is split (defaults to --window).
    #[arg(long)]
    split_age: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ParamArgs {
    fn params(&self) -> Params {
        Params {
            n: self.items,
            minsupp: self.minsupp,
            ell: self.window,
            mergedist: self.mergedist,
            alpha: self.alpha,
            pair_budget: self.pairs,
            split_age: self.split_age.unwrap_or(u64::from(self.window)),
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Stop after this many records (required for generators).
    #[arg(long)]
    records: Option<u64>,
    #[arg(long, default_value_t = 500)]
    snapshot_every: u64,
    /// Leave patterns younger than this out of plots.
    #[arg(long, default_value_t = 0)]
    min_plot_age: u64,
    #[arg(long)]
    hide_singletons: bool,
    /// Outputs to write.
    #[arg(long, value_delimiter = ',', default_value = "snapshots,metrics,plots")]
    emit: Vec<Output>,
    /// Compare against the exact maximal frequent itemsets at every snapshot.
    #[arg(long)]
    oracle_maximal: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 50)]
    items: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    records: u64,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 50)]
    items: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    records: Option<u64>,
    /// Number of most recent records to examine.
    #[arg(long, default_value_t = 300)]
    window: u32,
    /// Absolute support threshold.
    #[arg(long, conflicts_with = "relative_minsupp")]
    minsupp: Option<f64>,
    /// Support threshold as a fraction of the window.
    #[arg(long)]
    relative_minsupp: Option<f64>,
    /// Pattern for the co-occurrence table, e.g. "24 33 81" (repeatable).
    #[arg(long = "pattern")]
    patterns: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Generate(args) => generate(args),
        Command::Oracle(args) => oracle(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("distmerge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(args: RunArgs) -> Result<(), RunError> {
    let params = args.params.params();
    let mut config = RunConfig::new(args.source.source(params.seed)?, args.out);
    config.params = params;
    config.records = args.records;
    config.snapshot_every = args.snapshot_every;
    config.min_plot_age = args.min_plot_age;
    config.hide_singletons = args.hide_singletons;
    config.oracle_maximal = args.oracle_maximal;
    config.emit = Emit {
        snapshots: args.emit.contains(&Output::Snapshots),
        metrics: args.emit.contains(&Output::Metrics),
        plots: args.emit.contains(&Output::Plots),
    };
    let summary = cli::run(&config)?;
    println!("records\t{}", summary.records);
    println!("model_size\t{}", summary.model_size);
    println!("non_singletons\t{}", summary.non_singletons);
    println!("snapshots_written\t{}", summary.snapshots_written);
    if summary.skipped_lines > 0 {
        println!("skipped_lines\t{}", summary.skipped_lines);
    }
    if let Some(rmse) = summary.last_support_rmse {
        println!("support_rmse\t{rmse:.6}");
    }
    println!("records_per_second\t{:.1}", summary.records_per_second());
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<(), RunError> {
    let mut config = RunConfig::new(args.source.source(args.seed)?, ".");
    config.params.n = args.items;
    config.records = Some(args.records);
    let (records, _) = cli::collect_records(&config)?;
    let write = |out: &mut dyn Write| -> io::Result<()> {
        writeln!(out, "# {} records", records.len())?;
        write_stream(out, &records)?;
        out.flush()
    };
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| PathError::new(path, e))?;
            write(&mut BufWriter::new(file)).map_err(|e| PathError::new(path, e).into())
        }
        None => write(&mut io::stdout().lock()).map_err(|e| RunError::Input(e.to_string())),
    }
}

fn oracle(args: OracleArgs) -> Result<(), RunError> {
    let mut config = RunConfig::new(args.source.source(args.seed)?, ".");
    config.params.n = args.items;
    config.records = args.records;
    let patterns = args
        .patterns
        .iter()
        .map(|p| {
            p.parse::<Itemset>()
                .map_err(|e| RunError::Config(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (records, _) = cli::collect_records(&config)?;
    let window = cli::oracle_window(records, args.window);
    let minsupp = match (args.minsupp, args.relative_minsupp) {
        (Some(m), _) => m,
        (None, Some(r)) => r * window.len() as f64,
        (None, None) => {
            return Err(RunError::Config(
                "--minsupp or --relative-minsupp is required".into(),
            ))
        }
    };
    print!("{}", cli::oracle_report(&window, minsupp, &patterns));
    Ok(())
}
