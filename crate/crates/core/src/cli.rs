//! `lsfts` command-line interface.
//!
//! Exit status is 0 on success, 1 for usage errors (bad flags, unknown
//! subcommand) and 2 for data errors (unreadable input, estimator failures).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::error::LsftsError;
use crate::experiments::{Manifest, Report};
use crate::grid::make_uniform_grid;
use crate::io::{format_number, read_series, write_curves, write_series_to, write_table};
use crate::kernels::{
    default_bandwidth_b, default_bandwidth_h, BandwidthMode, LagWindowKernel, LocalSmoother, SmoothingKernel,
    WeightMode,
};
use crate::local_covariance::{local_cov, local_fpca};
use crate::local_mean::mean_path;
use crate::longrun::longrun_cov;
use crate::prediction::{predict_k_step, PredictionConfig};
use crate::simulate::{simulate_lsfts, ComponentModel, Path as CoefPath, SimConfig};
use crate::two_sample::{projected_tests, OrderChoice, TwoSampleConfig, DEFAULT_EPS0, DEFAULT_MC_DRAWS, DEFAULT_MC_SEED};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(LsftsError),
}

impl From<LsftsError> for CliError {
    fn from(e: LsftsError) -> Self {
        Self::Data(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Data(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "lsfts", version, about = "Locally stationary functional time series toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a time-varying functional AR series to CSV.
    Simulate(SimulateArgs),
    /// Local mean curves at one or more rescaled times.
    EstimateMean(MeanArgs),
    /// Local functional principal components.
    Fpca(FpcaArgs),
    /// Long-run covariance kernel.
    Longrun(LongrunArgs),
    /// k-step-ahead projection forecast.
    Predict(PredictArgs),
    /// Two-sample test for equal local mean curves.
    TwoSample(TwoSampleArgs),
    /// Run Monte Carlo experiments from a manifest.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SmoothingArgs {
    /// Rescaled time bandwidth; defaults to T^(-1/3) (T^(-0.4) for two-sample).
    #[arg(long)]
    h: Option<f64>,
    /// Smoothing kernel: epanechnikov, triangular or quartic.
    #[arg(long, default_value = "epanechnikov", value_parser = parse_k1)]
    k1: SmoothingKernel,
    /// Weight scaling: paper (divide by Th) or normalized (sum to one).
    #[arg(long, default_value = "paper", value_parser = parse_weights)]
    weights: WeightMode,
}

impl SmoothingArgs {
    fn smoother(&self, t: usize, mode: BandwidthMode) -> CliResult<LocalSmoother> {
        let h = self.h.unwrap_or_else(|| default_bandwidth_h(t, mode));
        LocalSmoother::new(self.k1, h, self.weights).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON model description; a three-component default model is used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of curves.
    #[arg(long = "T")]
    t: usize,
    /// Grid points on [0, 1].
    #[arg(long, default_value_t = 51)]
    n: usize,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MeanArgs {
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated rescaled times.
    #[arg(long, value_delimiter = ',', required = true)]
    u: Vec<f64>,
    #[command(flatten)]
    smoothing: SmoothingArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FpcaArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    u: f64,
    /// Number of components.
    #[arg(long)]
    q: usize,
    /// Center by the local mean before forming the covariance.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    center: bool,
    #[command(flatten)]
    smoothing: SmoothingArgs,
    /// Output prefix: writes PREFIX_eigenvalues.csv and PREFIX_eigenfunctions.csv.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
struct LongrunArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    u: f64,
    /// Lag-window bandwidth; defaults to (Th)^(1/3).
    #[arg(long)]
    b: Option<f64>,
    /// Lag window: bartlett, parzen or truncated.
    #[arg(long, default_value = "bartlett", value_parser = parse_k2)]
    k2: LagWindowKernel,
    #[command(flatten)]
    smoothing: SmoothingArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    input: PathBuf,
    /// Use only the first T1 curves; defaults to all of them.
    #[arg(long)]
    t1: Option<usize>,
    /// Steps ahead.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Number of components, or `auto`.
    #[arg(long, default_value = "auto")]
    q: OrderChoice,
    /// Length of the notional series; defaults to T1 + k + 1.
    #[arg(long = "T")]
    total_len: Option<usize>,
    /// Rescaled time of the covariance estimate; defaults to T1/T.
    #[arg(long)]
    u: Option<f64>,
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    center: bool,
    #[arg(long, default_value_t = DEFAULT_EPS0)]
    eps0: f64,
    #[command(flatten)]
    smoothing: SmoothingArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TwoSampleArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    u: f64,
    /// Lag-window bandwidth; defaults to (Th)^(1/3) with T = min(T1, T2).
    #[arg(long)]
    b: Option<f64>,
    #[arg(long, default_value = "bartlett", value_parser = parse_k2)]
    k2: LagWindowKernel,
    /// Number of projections, or `auto`.
    #[arg(long, default_value = "auto")]
    q: OrderChoice,
    #[arg(long, default_value_t = DEFAULT_EPS0)]
    eps0: f64,
    /// Monte Carlo draws for the weighted chi-square p-values (0 skips them).
    #[arg(long, default_value_t = DEFAULT_MC_DRAWS)]
    mc_draws: usize,
    #[arg(long, default_value_t = DEFAULT_MC_SEED)]
    seed: u64,
    #[command(flatten)]
    smoothing: SmoothingArgs,
    /// JSON result file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Experiment name from the manifest, or `all`.
    #[arg(long, default_value = "all")]
    experiment: String,
    /// Manifest file; the bundled manifest is used when absent.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output file; `.json` gives the full report, anything else a CSV table.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_k1(s: &str) -> std::result::Result<SmoothingKernel, String> {
    SmoothingKernel::parse(s).ok_or_else(|| format!("unknown smoothing kernel `{s}`"))
}

fn parse_k2(s: &str) -> std::result::Result<LagWindowKernel, String> {
    LagWindowKernel::parse(s).ok_or_else(|| format!("unknown lag window `{s}`"))
}

fn parse_weights(s: &str) -> std::result::Result<WeightMode, String> {
    WeightMode::parse(s).ok_or_else(|| format!("unknown weight mode `{s}`"))
}

/// Runs the CLI on `argv` (program name first) and returns the exit status.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

/// Caps the rayon pool at `LSFTS_THREADS` workers.
fn configure_threads() -> std::result::Result<(), String> {
    let Ok(value) = std::env::var("LSFTS_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("LSFTS_THREADS must be a positive integer, got `{value}`"))?;
    #[cfg(feature = "parallel")]
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        // The global pool can only be built once per process.
        log::debug!("thread pool already initialized: {e}");
    }
    #[cfg(not(feature = "parallel"))]
    log::debug!("LSFTS_THREADS={threads} ignored in a sequential build");
    Ok(())
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::EstimateMean(a) => estimate_mean(a),
        Command::Fpca(a) => fpca(a),
        Command::Longrun(a) => longrun(a),
        Command::Predict(a) => predict(a),
        Command::TwoSample(a) => two_sample(a),
        Command::Bench(a) => bench(a),
    }
}

fn with_output(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| LsftsError::Io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn default_sim_config() -> SimConfig {
    SimConfig::new(vec![
        ComponentModel {
            a: CoefPath::linear(0.2, 0.6),
            sigma: CoefPath::constant(1.0),
        },
        ComponentModel {
            a: CoefPath::constant(0.3),
            sigma: CoefPath::constant(0.5),
        },
        ComponentModel {
            a: CoefPath::constant(-0.2),
            sigma: CoefPath::constant(0.3),
        },
    ])
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let mut cfg = match &a.config {
        Some(path) => {
            let file = File::open(path).map_err(|e| LsftsError::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_reader(file).map_err(|e| LsftsError::Data {
                line: e.line(),
                message: format!("{}: {e}", path.display()),
            })?
        }
        None => default_sim_config(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let grid = make_uniform_grid(a.n, 1).map_err(|e| CliError::Usage(e.to_string()))?;
    let series = simulate_lsfts(&cfg, a.t, &grid)?;
    with_output(a.out.as_deref(), |w| Ok(write_series_to(&series, w)?))
}

fn estimate_mean(a: MeanArgs) -> CliResult<()> {
    let series = read_series(&a.input)?;
    let sm = a.smoothing.smoother(series.len(), BandwidthMode::Estimation)?;
    let results = mean_path(&series, &a.u, &sm);
    let mut header = vec!["u".to_string()];
    header.extend(series.grid().points().iter().map(|&s| format_number(s)));
    let mut rows = Vec::new();
    let mut first_error = None;
    for (&u, result) in a.u.iter().zip(results) {
        match result {
            Ok(curve) => {
                let mut row = vec![u];
                row.extend(curve);
                rows.push(row);
            }
            Err(e) => {
                eprintln!("u={u}: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    with_output(a.out.as_deref(), |w| Ok(write_table(w, &header, &rows)?))?;
    match first_error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn fpca(a: FpcaArgs) -> CliResult<()> {
    let series = read_series(&a.input)?;
    let n = series.grid().len();
    if a.q == 0 || a.q > n {
        return Err(CliError::Usage(format!("--q must be in 1..={n}")));
    }
    let sm = a.smoothing.smoother(series.len(), BandwidthMode::Estimation)?;
    let eig = local_fpca(&local_cov(&series, a.u, &sm, a.center)?, a.q)?;

    let value_rows: Vec<Vec<f64>> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(j, &l)| vec![(j + 1) as f64, l])
        .collect();
    let value_header = vec!["j".to_string(), "eigenvalue".to_string()];
    let mut function_header = vec!["s".to_string()];
    function_header.extend((1..=a.q).map(|j| format!("v{j}")));
    let function_rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![series.grid().points()[i]];
            row.extend(eig.eigenfunctions.iter().map(|v| v[i]));
            row
        })
        .collect();

    match &a.out {
        Some(prefix) => {
            let values = PathBuf::from(format!("{prefix}_eigenvalues.csv"));
            let functions = PathBuf::from(format!("{prefix}_eigenfunctions.csv"));
            with_output(Some(&values), |w| Ok(write_table(w, &value_header, &value_rows)?))?;
            with_output(Some(&functions), |w| Ok(write_table(w, &function_header, &function_rows)?))
        }
        None => with_output(None, |w| {
            write_table(w, &value_header, &value_rows)?;
            writeln!(w)?;
            Ok(write_table(w, &function_header, &function_rows)?)
        }),
    }
}

fn longrun(a: LongrunArgs) -> CliResult<()> {
    let series = read_series(&a.input)?;
    let sm = a.smoothing.smoother(series.len(), BandwidthMode::Estimation)?;
    let b = match a.b {
        Some(b) => b,
        None => default_bandwidth_b(series.len(), sm.h)?,
    };
    let c = longrun_cov(&series, a.u, &sm, b, a.k2)?;
    let points = series.grid().points();
    let mut header = vec!["s".to_string()];
    header.extend(points.iter().map(|&s| format_number(s)));
    let rows: Vec<Vec<f64>> = (0..points.len())
        .map(|i| {
            let mut row = vec![points[i]];
            row.extend(c.kernel().row(i).iter());
            row
        })
        .collect();
    with_output(a.out.as_deref(), |w| Ok(write_table(w, &header, &rows)?))
}

fn predict(a: PredictArgs) -> CliResult<()> {
    let full = read_series(&a.input)?;
    let observed = match a.t1 {
        Some(t1) if t1 > full.len() => {
            return Err(CliError::Usage(format!(
                "--t1 {t1} exceeds the {} curves in the input",
                full.len()
            )))
        }
        Some(t1) => full.head(t1)?,
        None => full,
    };
    let sm = a.smoothing.smoother(observed.len(), BandwidthMode::Estimation)?;
    let mut cfg = PredictionConfig::new(a.k, a.q);
    cfg.total_len = a.total_len;
    cfg.u = a.u;
    cfg.center = a.center;
    cfg.eps0 = a.eps0;
    let p = predict_k_step(&observed, &cfg, &sm)?;
    log::info!("q = {}, u = {}, T = {}", p.q_used, p.u, p.total_len);
    with_output(a.out.as_deref(), |w| {
        Ok(write_curves(w, observed.grid(), std::slice::from_ref(&p.curve))?)
    })
}

fn two_sample(a: TwoSampleArgs) -> CliResult<()> {
    let x = read_series(&a.x)?;
    let y = read_series(&a.y)?;
    let sm = a.smoothing.smoother(x.len().min(y.len()), BandwidthMode::Inference)?;
    let mut cfg = TwoSampleConfig::new(sm, a.q);
    cfg.b = a.b;
    cfg.lag_window = a.k2;
    cfg.eps0 = a.eps0;
    cfg.mc_draws = (a.mc_draws > 0).then_some(a.mc_draws);
    cfg.seed = a.seed;
    let result = projected_tests(&x, &y, a.u, &cfg)?;
    let json = serde_json::to_string_pretty(&result).map_err(|e| LsftsError::Io(e.to_string()))?;
    with_output(a.out.as_deref(), |w| {
        writeln!(w, "{json}")?;
        Ok(())
    })
}

fn bench(a: BenchArgs) -> CliResult<()> {
    let manifest = match &a.manifest {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| LsftsError::Io(format!("{}: {e}", path.display())))?;
            Manifest::parse(&text)?
        }
        None => Manifest::builtin(),
    };
    let specs: Vec<_> = if a.experiment == "all" {
        manifest.experiments.iter().collect()
    } else {
        let spec = manifest.get(&a.experiment).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown experiment `{}`; available: {}",
                a.experiment,
                manifest.names().join(", ")
            ))
        })?;
        vec![spec]
    };
    let mut reports = Vec::new();
    for spec in specs {
        let report = spec.run()?;
        for (key, value) in &report.summary {
            eprintln!("{}: {key} = {}", report.experiment, format_number(*value));
        }
        reports.push(report);
    }
    let json = a
        .out
        .as_ref()
        .is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    with_output(a.out.as_deref(), |w| {
        if json {
            let text = serde_json::to_string_pretty(&reports).map_err(|e| LsftsError::Io(e.to_string()))?;
            writeln!(w, "{text}")?;
            return Ok(());
        }
        for (i, report) in reports.iter().enumerate() {
            if i > 0 {
                writeln!(w)?;
            }
            write_report_csv(w, report)?;
        }
        Ok(())
    })
}

fn write_report_csv(w: &mut dyn Write, report: &Report) -> CliResult<()> {
    let mut header = vec!["experiment".to_string()];
    header.extend(report.columns.iter().cloned());
    writeln!(w, "{}", header.join(","))?;
    for row in &report.rows {
        let cells: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
        writeln!(w, "{},{}", report.experiment, cells.join(","))?;
    }
    Ok(())
}
