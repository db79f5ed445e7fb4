use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use varconst::changepoint::{locate_all_with, LocateConfig, MarginRule};
use varconst::dgp::generate_sample;
use varconst::io::{
    blocks_csv, emit_report, ingest_csv, load_experiments, load_scenario, preprocess, series_csv,
    write_file, ColumnSelector, Format, LocateReport, LrvReport, McReport, Preprocess, RunEcho,
    TestReport,
};
use varconst::lrv::estimate_kappa;
use varconst::montecarlo::{format_table, run, with_threads};
use varconst::variance_test::{run_test_with, TestConfig, DEFAULT_ALPHA, DEFAULT_Q, DEFAULT_S};
use varconst::{Error, Result, TimeSeries};

const EXIT_INPUT: u8 = 2;
const EXIT_STATISTICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "varconst", version, about = "Test a time series for constant variance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the variance-constancy test on one column of a CSV file.
    Test(TestArgs),
    /// Locate variance change points by binary segmentation.
    Locate(LocateArgs),
    /// Draw a sample from a scenario file.
    Simulate(SimulateArgs),
    /// Estimate the long-run standard deviation of the squared series.
    Lrv(InputArgs),
    /// Run Monte Carlo experiments from a spec file.
    Mc(McArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// CSV file holding the series.
    #[arg(long)]
    input: PathBuf,
    /// Column to read: 0-based position or header name.
    #[arg(long, default_value = "0")]
    column: String,
    /// Preprocessing steps applied in order: diff, sdiff:LAG, drop:I,J,...
    #[arg(long = "pre", value_name = "STEP")]
    pre: Vec<String>,
    /// Block-length exponent.
    #[arg(long, default_value_t = DEFAULT_S)]
    s: f64,
    /// Sub-block exponent of the long-run variance estimator.
    #[arg(long, default_value_t = DEFAULT_Q)]
    q: f64,
    /// Significance level.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: OutFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Also write PREFIX.blocks.csv and PREFIX.series.csv for plotting.
    #[arg(long, value_name = "PREFIX")]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct LocateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Smallest number of observations kept on each side of a split.
    #[arg(long, default_value_t = 10)]
    min_margin: usize,
    /// Margin as a fraction of the search window, if larger.
    #[arg(long, default_value_t = 0.05)]
    margin_fraction: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the scenario file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the base seed of every experiment.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print a summary table to stderr.
    #[arg(long)]
    table: bool,
}

struct Loaded {
    series: TimeSeries,
    config: TestConfig,
    echo: RunEcho,
}

fn load(args: &InputArgs) -> Result<Loaded> {
    let config = TestConfig {
        s: args.s,
        q: args.q,
        alpha: args.alpha,
    };
    config.validate()?;
    let steps = args
        .pre
        .iter()
        .map(|p| p.parse())
        .collect::<Result<Vec<Preprocess>>>()?;
    let column: ColumnSelector = args.column.parse()?;
    let raw = ingest_csv(&args.input, &column)?;
    let series = preprocess(&raw, &steps)?;
    let mut echo = RunEcho::new(&config);
    echo.input = Some(args.input.display().to_string());
    echo.column = Some(args.column.clone());
    echo.preprocessing = steps;
    Ok(Loaded {
        series,
        config,
        echo,
    })
}

fn output(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_suffix(prefix: &std::path::Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_test(args: &TestArgs) -> Result<()> {
    let loaded = load(&args.input)?;
    let result = run_test_with(&loaded.series, &loaded.config)?;
    if let Some(prefix) = &args.plot {
        write_file(with_suffix(prefix, ".blocks.csv"), &blocks_csv(&result.block_stats)?)?;
        write_file(with_suffix(prefix, ".series.csv"), &series_csv(&loaded.series)?)?;
    }
    let report = TestReport::new(&result, loaded.echo);
    output(args.input.out.as_ref(), &emit_report(&report, args.input.format.into())?)
}

fn cmd_locate(args: &LocateArgs) -> Result<()> {
    let mut loaded = load(&args.input)?;
    let margin = MarginRule {
        min_margin: args.min_margin,
        fraction: args.margin_fraction,
    };
    if !(0.0..0.5).contains(&margin.fraction) {
        return Err(Error::InvalidParameter(format!(
            "margin fraction must lie in [0, 0.5), got {}",
            margin.fraction
        )));
    }
    loaded.echo.margin = Some(margin);
    let config = LocateConfig {
        test: loaded.config,
        margin,
    };
    let set = locate_all_with(&loaded.series, &config)?;
    let report = LocateReport::new(&set, loaded.echo);
    output(args.input.out.as_ref(), &emit_report(&report, args.input.format.into())?)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut spec = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let x = generate_sample(&spec)?;
    output(args.out.as_ref(), &series_csv(&x)?)
}

fn cmd_lrv(args: &InputArgs) -> Result<()> {
    let loaded = load(args)?;
    let est = estimate_kappa(&loaded.series, loaded.config.s, loaded.config.q)?;
    let report = LrvReport::new(loaded.series.len(), &est, loaded.echo);
    output(args.out.as_ref(), &emit_report(&report, args.format.into())?)
}

fn cmd_mc(args: &McArgs) -> Result<()> {
    let mut specs = load_experiments(&args.spec)?;
    if let Some(seed) = args.seed {
        for s in &mut specs {
            s.base_seed = seed;
        }
    }
    if args.threads == Some(0) {
        return Err(Error::InvalidParameter("--threads must be positive".into()));
    }
    let reports = with_threads(args.threads, || specs.iter().map(run).collect::<Result<Vec<_>>>())??;
    if args.table {
        eprint!("{}", format_table(&reports));
    }
    let report = McReport::new(specs, reports, args.threads);
    output(args.out.as_ref(), &emit_report(&report, args.format.into())?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Locate(a) => cmd_locate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Lrv(a) => cmd_lrv(a),
        Command::Mc(a) => cmd_mc(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_statistical() {
                ExitCode::from(EXIT_STATISTICAL)
            } else {
                ExitCode::from(EXIT_INPUT)
            }
        }
    }
}
