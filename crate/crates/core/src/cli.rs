//! Command-line front end. Exit codes: 0 success, 2 input error, 3 validation
//! failure, 4 provider failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{
    default_jobs, default_workdir, krippendorff_alpha, read_ratings_csv, run_classification, run_sql_prediction,
    ClassifyConfig, EvalReport, Level, SqlConfig, Strategy, ValueMode,
};
use crate::corpus::{load_catalog, load_examples, read_conversations};
use crate::mutator::CategoryLabel;
use crate::pipeline::{generate_to_file, validate, GenConfig, SkipReason};
use crate::provider::{from_name, MockBehavior, MockProvider, Provider};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_PROVIDER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "practiq", version, about = "Ambiguous and unanswerable text-to-SQL conversation generator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate conversations from a Spider-format corpus.
    Generate(GenerateArgs),
    /// Re-execute and re-check every conversation of a dataset.
    Validate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        db_dir: PathBuf,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Per-category conversation counts.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Score a provider on a generated dataset.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Krippendorff's alpha of a unit_id,rater_id,score CSV.
    Alpha {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long, value_enum, default_value_t = AlphaLevel::Ordinal)]
        level: AlphaLevel,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProviderName {
    Mock,
    Live,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlphaLevel {
    Nominal,
    Ordinal,
    Interval,
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    #[arg(long, value_enum, default_value_t = ProviderName::Mock)]
    pub provider: ProviderName,
    /// Mock only: answer every classification with this label and every SQL prediction with this query.
    #[arg(long)]
    pub mock_constant: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub examples: PathBuf,
    #[arg(long)]
    pub db_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Statistics output; defaults to the dataset path with a `.stats.json` suffix.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// Comma-separated category tokens to mutate into.
    #[arg(long, value_delimiter = ',')]
    pub categories: Option<Vec<String>>,
    /// Per-category cap as TOKEN=N, repeatable.
    #[arg(long = "quota")]
    pub quotas: Vec<String>,
    #[arg(long, default_value_t = 0.3)]
    pub helpful_fraction: f64,
    #[arg(long, default_value_t = 0.3)]
    pub answerable_share: f64,
    #[arg(long, default_value_t = default_jobs())]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ValuesArg {
    #[value(name = "lexicalOnly")]
    LexicalOnly,
    #[value(name = "lexicalAndOracle")]
    LexicalAndOracle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Single,
    Dinsql,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Nine-way question classification.
    Classify {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        db_dir: PathBuf,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=3))]
        k: u8,
        #[arg(long, value_enum, default_value_t = ValuesArg::LexicalOnly)]
        values: ValuesArg,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the confusion matrix as CSV.
        #[arg(long)]
        confusion_csv: Option<PathBuf>,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Final SQL prediction scored by execution accuracy.
    Sql {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        db_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyArg::Single)]
        strategy: StrategyArg,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Predict from the initial question alone.
        #[arg(long)]
        initial_only: bool,
        #[arg(long)]
        order_sensitive: bool,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
}

struct Fail(i32, String);

fn input<E: std::fmt::Display>(e: E) -> Fail {
    Fail(EXIT_INPUT, e.to_string())
}

fn make_provider(args: &ProviderArgs, seed: u64) -> Result<Box<dyn Provider>, Fail> {
    match (args.provider, &args.mock_constant) {
        (ProviderName::Mock, Some(c)) => Ok(Box::new(MockProvider::new(seed).with_behavior(MockBehavior::Constant(c.clone())))),
        (ProviderName::Mock, None) => Ok(Box::new(MockProvider::new(seed))),
        (ProviderName::Live, _) => from_name("live", seed).map_err(|e| Fail(EXIT_PROVIDER, e.to_string())),
    }
}

fn parse_quotas(items: &[String]) -> Result<BTreeMap<CategoryLabel, usize>, Fail> {
    items
        .iter()
        .map(|q| {
            let (k, v) = q.split_once('=').ok_or_else(|| input(format!("quota `{q}` is not TOKEN=N")))?;
            let cat: CategoryLabel = k.parse().map_err(input)?;
            let n: usize = v.trim().parse().map_err(input)?;
            Ok((cat, n))
        })
        .collect()
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serialises"));
}

fn all_failed(report: &EvalReport) -> bool {
    let n: usize = report.n.values().sum();
    n > 0 && report.provider_failures == n
}

fn generate(args: &GenerateArgs) -> Result<i32, Fail> {
    let catalog = load_catalog(&args.catalog).map_err(input)?;
    let set = load_examples(&args.examples).map_err(input)?;
    if !set.skipped.is_empty() {
        log::warn!("{} examples skipped while loading", set.skipped.len());
    }
    let provider = make_provider(&args.provider, args.seed)?;
    let mut config = GenConfig::new(&args.db_dir, args.seed);
    if let Some(cats) = &args.categories {
        config.categories = cats.iter().map(|c| c.parse()).collect::<Result<_, _>>().map_err(input)?;
    }
    config.quotas = parse_quotas(&args.quotas)?;
    config.helpful_fraction = args.helpful_fraction;
    config.answerable_share = args.answerable_share;
    config.jobs = args.jobs;
    config.workdir = default_workdir();
    let (convs, stats) = generate_to_file(&catalog, &set.examples, &config, &provider, &args.out).map_err(input)?;
    let _ = std::fs::remove_dir_all(&config.workdir);
    let stats_path = args
        .stats
        .clone()
        .unwrap_or_else(|| args.out.with_extension("stats.json"));
    let text = serde_json::to_string_pretty(&stats).expect("stats serialise");
    std::fs::write(&stats_path, text + "\n").map_err(|e| input(format!("{}: {e}", stats_path.display())))?;
    eprintln!("wrote {} conversations to {}", convs.len(), args.out.display());
    if !convs.is_empty() {
        return Ok(EXIT_OK);
    }
    let provider_trouble = stats
        .per_category
        .values()
        .any(|c| c.skipped.contains_key(&SkipReason::ProviderFailure));
    Ok(if provider_trouble { EXIT_PROVIDER } else { EXIT_VALIDATION })
}

fn stats_table(path: &Path) -> Result<i32, Fail> {
    let convs = read_conversations(path).map_err(input)?;
    let mut counts: BTreeMap<CategoryLabel, usize> = BTreeMap::new();
    let mut helpful = 0;
    for c in &convs {
        *counts.entry(c.category).or_default() += 1;
        helpful += usize::from(c.helpful_sql.is_some());
    }
    println!("{:<32} {:>6}", "category", "count");
    for cat in CategoryLabel::ALL {
        println!("{:<32} {:>6}", cat.token(), counts.get(&cat).copied().unwrap_or(0));
    }
    println!("{:<32} {:>6}", "total", convs.len());
    println!("{:<32} {:>6}", "(with helpful SQL)", helpful);
    Ok(EXIT_OK)
}

fn bench(cmd: &BenchCommand) -> Result<i32, Fail> {
    match cmd {
        BenchCommand::Classify {
            dataset,
            db_dir,
            k,
            values,
            provider,
            seed,
            confusion_csv,
            jobs,
        } => {
            let convs = read_conversations(dataset).map_err(input)?;
            let provider = make_provider(provider, *seed)?;
            let mut config = ClassifyConfig::new(db_dir);
            config.k = usize::from(*k);
            config.value_mode = match values {
                ValuesArg::LexicalOnly => ValueMode::LexicalOnly,
                ValuesArg::LexicalAndOracle => ValueMode::LexicalAndOracle,
            };
            config.jobs = *jobs;
            let report = run_classification(&convs, &provider, &config).map_err(input)?;
            let _ = std::fs::remove_dir_all(&config.workdir);
            if let (Some(path), Some(conf)) = (confusion_csv, &report.confusion) {
                std::fs::write(path, conf.to_csv()).map_err(|e| input(format!("{}: {e}", path.display())))?;
            }
            print_json(&report);
            Ok(if all_failed(&report) { EXIT_PROVIDER } else { EXIT_OK })
        }
        BenchCommand::Sql {
            dataset,
            db_dir,
            strategy,
            provider,
            seed,
            initial_only,
            order_sensitive,
            jobs,
        } => {
            let convs = read_conversations(dataset).map_err(input)?;
            let provider = make_provider(provider, *seed)?;
            let mut config = SqlConfig::new(db_dir);
            config.strategy = match strategy {
                StrategyArg::Single => Strategy::Single,
                StrategyArg::Dinsql => Strategy::Dinsql,
            };
            config.initial_only = *initial_only;
            config.order_sensitive = *order_sensitive;
            config.jobs = *jobs;
            let report = run_sql_prediction(&convs, &provider, &config);
            let _ = std::fs::remove_dir_all(&config.workdir);
            print_json(&report);
            Ok(if all_failed(&report) { EXIT_PROVIDER } else { EXIT_OK })
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, Fail> {
    match &cli.command {
        Command::Generate(args) => generate(args),
        Command::Validate { dataset, db_dir, jobs } => {
            let convs = read_conversations(dataset).map_err(input)?;
            let workdir = default_workdir();
            let violations = validate(&convs, db_dir, &workdir, *jobs);
            let _ = std::fs::remove_dir_all(&workdir);
            for v in &violations {
                println!("{}: {}", v.id, v.message);
            }
            println!("{} conversations checked, {} violations", convs.len(), violations.len());
            Ok(if violations.is_empty() { EXIT_OK } else { EXIT_VALIDATION })
        }
        Command::Stats { dataset } => stats_table(dataset),
        Command::Bench(cmd) => bench(cmd),
        Command::Alpha { ratings, level } => {
            let matrix = read_ratings_csv(ratings).map_err(input)?;
            let level = match level {
                AlphaLevel::Nominal => Level::Nominal,
                AlphaLevel::Ordinal => Level::Ordinal,
                AlphaLevel::Interval => Level::Interval,
            };
            let alpha = krippendorff_alpha(&matrix, level).map_err(input)?;
            println!("{alpha}");
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}
