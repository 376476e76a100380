use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ep_index::corpus::Format;
use ep_index::ranking::{CountingMode, PercentileGrid};
use ep_index::synth::LognormalSpec;

mod commands;

/// Percentile-based research efficiency indicators from citation records.
#[derive(Parser, Debug)]
#[command(name = "ep-index", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// More log output on stderr (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// e_p index, counted and extrapolated P_top x% per unit.
    Indicators(IndicatorsArgs),
    /// Log-log plot data and fit diagnostics per unit.
    Fit(FitArgs),
    /// Generate a synthetic lognormal corpus.
    Simulate(SimulateArgs),
    /// Load a corpus and report problems and summary statistics.
    Validate(ValidateArgs),
    /// Cumulative layer counts per unit, readable by `fit --counts`.
    Counts(CountsArgs),
}

#[derive(Args, Debug, Clone)]
struct Input {
    /// Publication records (.jsonl or .csv).
    #[arg(long)]
    corpus: Option<PathBuf>,

    /// Unit definitions: {"units": [{"name", "countries", "population_millions"}]}.
    #[arg(long)]
    units: Option<PathBuf>,

    /// Corpus format; inferred from the file extension when omitted.
    #[arg(long, value_name = "jsonl|csv")]
    input_format: Option<Format>,

    /// Keep only publications from these years, e.g. 2014 or 2012-2014.
    /// The world is ranked after this filter.
    #[arg(long, value_parser = parse_years)]
    years: Option<(i32, i32)>,

    /// Credit units only with papers carrying this tag; the world ranking
    /// still includes every paper.
    #[arg(long)]
    tag: Option<String>,

    /// Restrict the analysis to these unit names (repeatable).
    #[arg(long = "unit")]
    only_units: Vec<String>,

    /// Split an author's credit across their affiliation countries.
    #[arg(long)]
    split_multi_affiliation: bool,
}

#[derive(Args, Debug, Clone)]
struct Analysis {
    /// Counting mode.
    #[arg(
        long,
        default_value = "fractional",
        value_name = "whole|fractional|domestic"
    )]
    mode: CountingMode,

    /// Percentile grid, comma-separated and strictly increasing.
    #[arg(long, default_value = "1,2,4,7,12,20,35,60,100")]
    grid: PercentileGrid,

    /// Levels for extrapolated P'_top x%, comma-separated.
    #[arg(long, default_value = "0.01", value_delimiter = ',')]
    levels: Vec<f64>,

    /// Grid points with smaller counts are left out of the fit.
    #[arg(long, default_value_t = 10.0)]
    min_count: f64,

    /// Fits below this R² are reported as biphasic.
    #[arg(long, default_value_t = 0.98)]
    r2_threshold: f64,

    /// Grid levels to leave out of the fit, comma-separated.
    #[arg(long, value_delimiter = ',')]
    omit: Vec<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum TableFormat {
    Tsv,
    Json,
}

#[derive(Args, Debug)]
struct IndicatorsArgs {
    #[command(flatten)]
    input: Input,

    #[command(flatten)]
    analysis: Analysis,

    /// CSV of published counts: unit,p_top10,p_top1[,population_millions].
    /// Bypasses ranking and fits the two points directly.
    #[arg(long, conflicts_with_all = ["corpus", "units"])]
    from_published: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "tsv")]
    format: TableFormat,

    /// Output file; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    input: Input,

    #[command(flatten)]
    analysis: Analysis,

    /// Layer counts TSV (as written by `counts`) instead of a corpus.
    #[arg(long, conflicts_with_all = ["corpus", "units"])]
    counts: Option<PathBuf>,

    /// Number of fitted-line samples between x = 0.01 and x = 100.
    #[arg(long, default_value_t = 21)]
    samples: usize,

    #[arg(long, value_enum, default_value = "tsv")]
    format: TableFormat,

    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// World parameters mu,sigma,n; n is the total corpus size.
    #[arg(long, value_parser = parse_lognormal)]
    world: LognormalSpec,

    /// Subunit CC:mu,sigma,n (repeatable). Papers are single-country.
    #[arg(long = "subunit", value_parser = parse_subunit)]
    subunits: Vec<(String, LognormalSpec)>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Publication year written on every record.
    #[arg(long, default_value_t = ep_index::synth::DEFAULT_YEAR)]
    year: i32,

    /// Corpus format; inferred from --out when omitted, JSONL on stdout.
    #[arg(long, value_name = "jsonl|csv")]
    format: Option<Format>,

    #[arg(short, long)]
    out: Option<PathBuf>,

    /// Also write a units file with one unit per subunit plus the rest of the world.
    #[arg(long)]
    units_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    corpus: PathBuf,

    /// Also check unit definitions against the corpus.
    #[arg(long)]
    units: Option<PathBuf>,

    #[arg(long, value_name = "jsonl|csv")]
    input_format: Option<Format>,

    /// Treat warnings (unknown countries, empty or overlapping units) as failures.
    #[arg(long)]
    strict: bool,

    #[arg(long, value_enum, default_value = "tsv")]
    format: TableFormat,

    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CountsArgs {
    #[command(flatten)]
    input: Input,

    #[arg(
        long,
        default_value = "fractional",
        value_name = "whole|fractional|domestic"
    )]
    mode: CountingMode,

    #[arg(long, default_value = "1,2,4,7,12,20,35,60,100")]
    grid: PercentileGrid,

    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn parse_years(s: &str) -> Result<(i32, i32), String> {
    let bad = || format!("expected YEAR or FROM-TO, got {s:?}");
    let (lo, hi) = match s.split_once('-') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s.trim(), s.trim()),
    };
    let lo: i32 = lo.parse().map_err(|_| bad())?;
    let hi: i32 = hi.parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(format!("empty year range {lo}-{hi}"));
    }
    Ok((lo, hi))
}

fn parse_lognormal(s: &str) -> Result<LognormalSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [mu, sigma, n] = parts[..] else {
        return Err(format!("expected mu,sigma,n, got {s:?}"));
    };
    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
    let n: usize = n
        .parse()
        .map_err(|_| format!("n must be a non-negative integer, got {n:?}"))?;
    Ok(LognormalSpec::new(num(mu)?, num(sigma)?, n))
}

fn parse_subunit(s: &str) -> Result<(String, LognormalSpec), String> {
    let (code, spec) = s
        .split_once(':')
        .ok_or_else(|| format!("expected CC:mu,sigma,n, got {s:?}"))?;
    code.parse::<ep_index::CountryCode>()
        .map_err(|e| e.to_string())?;
    Ok((code.to_string(), parse_lognormal(spec)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Indicators(args) => commands::indicators(args),
        Command::Fit(args) => commands::fit(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Validate(args) => commands::validate(args),
        Command::Counts(args) => commands::counts(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if commands::is_usage_error(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
