//! Command-line front end: generate synthetic streams, track mixture size
//! and MC, decompose MC against shared upper groups, raise change alerts,
//! score them, and run the end-to-end detection benchmark.

mod csvio;
mod manifest;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mixcomp::data::{
    gen_imbalance_gaussian, gen_move_gaussian, ingest_csv, read_stream_csv, StreamSpec,
};
use mixcomp::decomp::{track_decomposition, DecompositionTrack, FuzzyCMeansConfig};
use mixcomp::detect::{detect_changes, evaluate, AlertConfig, AlertMode, EvalResult};
use mixcomp::em::{Criterion, FitConfig, FreeParamCount};
use mixcomp::mixture::WeightedDataset;
use mixcomp::sdms::{track_mc, SdmsConfig, TrackResult};

use crate::csvio::{g9, ExperimentRow, TrackTable};
use crate::manifest::RunManifest;

// ---------------------------------------------------------------------------
// Arguments
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "mixcomp",
    version,
    about = "Continuous cluster counting over drifting data streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic drifting-cluster stream as CSV
    Generate(GenerateArgs),
    /// Select a mixture size per window and track MC over a stream
    Track(TrackArgs),
    /// Track MC and decompose it against upper groups shared across time
    Decompose(DecomposeArgs),
    /// Raise change alerts over a tracked MC or size sequence
    Detect(DetectArgs),
    /// Detect changes and score detection delay and false-alarm rate
    Eval(EvalArgs),
    /// Full synthetic benchmark: track, detect, and score over many seeds
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DatasetKind {
    Move,
    Imbalance,
}

impl DatasetKind {
    fn label(self) -> &'static str {
        match self {
            DatasetKind::Move => "move",
            DatasetKind::Imbalance => "imbalance",
        }
    }

    fn generate(self, spec: &StreamSpec) -> mixcomp::Result<Vec<WeightedDataset<f64>>> {
        match self {
            DatasetKind::Move => gen_move_gaussian(spec),
            DatasetKind::Imbalance => gen_imbalance_gaussian(spec),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Which synthetic stream to generate
    #[arg(value_enum)]
    dataset: DatasetKind,
    /// RNG seed for the stream
    #[arg(long)]
    seed: u64,
    /// Number of windows
    #[arg(short = 'T', long, default_value_t = 150)]
    t_count: usize,
    /// Points per window
    #[arg(short = 'N', long, default_value_t = 1000)]
    n_per_t: usize,
    /// Emit the windows in reverse order
    #[arg(long)]
    reversed: bool,
    /// Output CSV path (default: `<dataset>[_rev].csv`)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InputFlags {
    /// Input CSV path
    #[arg(long)]
    input: PathBuf,
    /// Input layout: `stream` rows are `t,<features>`; `entity` rows are
    /// `entity,time,<features>` aggregated over a trailing window
    #[arg(long, value_enum, default_value_t = InputFormat::Stream)]
    format: InputFormat,
    /// Trailing-window length for entity input
    #[arg(long, default_value_t = 14)]
    tau: usize,
    /// Time column name for entity input
    #[arg(long, default_value = "time")]
    time_column: String,
    /// Comma-separated feature columns for entity input (default: all)
    #[arg(long)]
    features: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    Stream,
    Entity,
}

impl InputFlags {
    fn read(&self) -> Result<Vec<WeightedDataset<f64>>, CliError> {
        let stream = match self.format {
            InputFormat::Stream => read_stream_csv(&self.input)?,
            InputFormat::Entity => {
                if self.tau == 0 {
                    return Err(CliError::Usage("--tau must be >= 1".into()));
                }
                let features: Option<Vec<String>> = self
                    .features
                    .as_ref()
                    .map(|f| f.split(',').map(|s| s.trim().to_string()).collect());
                ingest_csv(&self.input, self.tau, &self.time_column, features.as_deref())?
            }
        };
        if stream.is_empty() {
            return Err(CliError::App(mixcomp::Error::Schema(format!(
                "{} holds no windows",
                self.input.display()
            ))));
        }
        Ok(stream)
    }

    fn describe(&self) -> serde_json::Value {
        json!({
            "path": self.input.display().to_string(),
            "format": match self.format {
                InputFormat::Stream => "stream",
                InputFormat::Entity => "entity",
            },
            "tau": self.tau,
            "time_column": self.time_column,
            "features": self.features,
        })
    }
}

#[derive(Args)]
struct FitFlags {
    /// Model-selection criterion: AIC | AIC+comp | BIC | BIC+comp
    #[arg(long, default_value = "BIC")]
    criterion: String,
    /// Largest candidate mixture size
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    /// Prior probability mass on a size change, in (0, 1)
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// Free-parameter convention for the penalty: compact | standard
    #[arg(long, default_value = "compact")]
    param_count: String,
    /// EM restarts per candidate size
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// EM iteration cap per run
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    /// EM stop threshold on per-point log-likelihood gain
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Covariance ridge
    #[arg(long, default_value_t = 1e-6)]
    regularization: f64,
    /// Master RNG seed (required for `experiment`)
    #[arg(long)]
    seed: Option<u64>,
}

impl FitFlags {
    fn criterion(&self) -> Result<Criterion, CliError> {
        self.criterion.parse().map_err(|e: mixcomp::Error| CliError::Usage(e.to_string()))
    }

    fn param_count(&self) -> Result<FreeParamCount, CliError> {
        self.param_count.parse().map_err(|e: mixcomp::Error| CliError::Usage(e.to_string()))
    }

    fn to_sdms(&self, seed: u64) -> Result<SdmsConfig<f64>, CliError> {
        if self.k_max == 0 {
            return Err(CliError::Usage("--k-max must be >= 1".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(CliError::Usage("--beta must lie strictly in (0, 1)".into()));
        }
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(CliError::Usage("--restarts and --max-iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(CliError::Usage("--tolerance must be > 0".into()));
        }
        if self.regularization < 0.0 {
            return Err(CliError::Usage("--regularization must be >= 0".into()));
        }
        Ok(SdmsConfig {
            k_max: self.k_max,
            beta: self.beta,
            criterion: self.criterion()?,
            param_count: self.param_count()?,
            fit: FitConfig {
                restarts: self.restarts,
                max_iterations: self.max_iterations,
                log_likelihood_tolerance: self.tolerance,
                regularization: self.regularization,
                rng_seed: seed,
            },
        })
    }

    fn describe(&self, seed: u64) -> serde_json::Value {
        json!({
            "criterion": self.criterion,
            "k_max": self.k_max,
            "beta": self.beta,
            "param_count": self.param_count,
            "restarts": self.restarts,
            "max_iterations": self.max_iterations,
            "tolerance": self.tolerance,
            "regularization": self.regularization,
            "seed": seed,
        })
    }
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    fit: FitFlags,
    /// Output CSV of t,k,mc,exp_mc,cost,carried
    #[arg(long, default_value = "track.csv")]
    out: PathBuf,
    /// SVG plot of exp(MC) and the selected size (default: out with .svg)
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    fit: FitFlags,
    /// Number of upper groups
    #[arg(long, default_value_t = 4)]
    groups: usize,
    /// Fuzziness exponent (> 1)
    #[arg(long, default_value_t = 1.5)]
    fuzziness: f64,
    /// Center-movement stop threshold
    #[arg(long, default_value_t = 1e-6)]
    fcm_tolerance: f64,
    /// Clustering iteration cap
    #[arg(long, default_value_t = 300)]
    fcm_max_iterations: usize,
    /// Output CSV of per-step decomposed quantities
    #[arg(long, default_value = "decomposition.csv")]
    out: PathBuf,
    /// Output CSV of upper-group centers
    #[arg(long, default_value = "centers.csv")]
    centers: PathBuf,
    /// Directory for the per-quantity SVG panels (default: out's directory)
    #[arg(long)]
    plot_dir: Option<PathBuf>,
}

#[derive(Args)]
struct DetectFlags {
    /// Which tracked column to scan
    #[arg(long, value_enum, default_value_t = SequenceKind::Mc)]
    mode: SequenceKind,
    /// Median window length
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Median-difference threshold (MC mode)
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    /// Minimum spacing between alerts
    #[arg(long, default_value_t = 5)]
    min_gap: usize,
    /// First scanned timestep
    #[arg(long, default_value_t = 10)]
    start: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SequenceKind {
    Mc,
    K,
}

impl SequenceKind {
    fn label(self) -> &'static str {
        match self {
            SequenceKind::Mc => "mc",
            SequenceKind::K => "k",
        }
    }
}

impl DetectFlags {
    fn config(&self) -> AlertConfig<f64> {
        AlertConfig {
            window: self.window,
            mc_threshold: self.threshold,
            min_gap: self.min_gap,
            start_t: self.start,
            mode: match self.mode {
                SequenceKind::Mc => AlertMode::McSequence,
                SequenceKind::K => AlertMode::KSequence,
            },
        }
    }

    fn describe(&self) -> serde_json::Value {
        json!({
            "mode": self.mode.label(),
            "window": self.window,
            "threshold": self.threshold,
            "min_gap": self.min_gap,
            "start": self.start,
        })
    }

    /// Alerts over the requested column, with alerts on carried-forward
    /// steps dropped (those windows reused a stale model).
    fn run(&self, table: &TrackTable) -> Result<Vec<usize>, CliError> {
        let sequence = match self.mode {
            SequenceKind::Mc => &table.mc,
            SequenceKind::K => &table.k,
        };
        let alerts = detect_changes(sequence, &self.config())?;
        Ok(alerts.into_iter().filter(|&t| !table.carried[t - 1]).collect())
    }
}

#[derive(Args)]
struct DetectArgs {
    /// Track CSV produced by `track`
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    detect: DetectFlags,
    /// Output CSV of alert timesteps
    #[arg(long, default_value = "alerts.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Track CSV produced by `track`
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    detect: DetectFlags,
    /// Transaction period as begin:end
    #[arg(long, default_value = "51:100")]
    transaction: String,
    /// Scan horizon as begin:end
    #[arg(long, default_value = "10:150")]
    horizon: String,
    /// Output CSV report
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DatasetChoice {
    Move,
    Imbalance,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirectionChoice {
    Forward,
    Reverse,
    Both,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    fit: FitFlags,
    /// Number of trials; trial i uses seed + i
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, value_enum, default_value_t = DatasetChoice::Both)]
    dataset: DatasetChoice,
    #[arg(long, value_enum, default_value_t = DirectionChoice::Both)]
    direction: DirectionChoice,
    /// Windows per stream
    #[arg(short = 'T', long, default_value_t = 150)]
    t_count: usize,
    /// Points per window
    #[arg(short = 'N', long, default_value_t = 1000)]
    n_per_t: usize,
    /// Directory receiving experiment.csv and its manifest
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

// ---------------------------------------------------------------------------
// Error mapping
// ---------------------------------------------------------------------------

enum CliError {
    Usage(String),
    App(mixcomp::Error),
}

impl From<mixcomp::Error> for CliError {
    fn from(err: mixcomp::Error) -> Self {
        CliError::App(err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::App(mixcomp::Error::Io(err))
    }
}

impl CliError {
    fn message(&self) -> String {
        match self {
            CliError::Usage(msg) => msg.clone(),
            CliError::App(err) => err.to_string(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::App(err) => match err {
                mixcomp::Error::Parse { .. }
                | mixcomp::Error::Schema(_)
                | mixcomp::Error::Io(_)
                | mixcomp::Error::InvalidInput(_)
                | mixcomp::Error::InsufficientData { .. } => 3,
                mixcomp::Error::NumericalDomain { .. }
                | mixcomp::Error::DegenerateModel(_)
                | mixcomp::Error::FitFailure(_)
                | mixcomp::Error::StepFailure { .. }
                | mixcomp::Error::InvalidAssignment { .. } => 4,
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate(args) => cmd_generate(args),
        Command::Track(args) => cmd_track(args),
        Command::Decompose(args) => cmd_decompose(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    if args.t_count == 0 {
        return Err(CliError::Usage("-T must be >= 1".into()));
    }
    if args.n_per_t == 0 {
        return Err(CliError::Usage("-N must be >= 1".into()));
    }
    let spec = StreamSpec {
        t_count: args.t_count,
        n_per_t: args.n_per_t,
        dimension: 3,
        rng_seed: args.seed,
        reversed: args.reversed,
    };
    let stream = args.dataset.generate(&spec)?;
    let out = args.out.unwrap_or_else(|| {
        let suffix = if args.reversed { "_rev" } else { "" };
        PathBuf::from(format!("{}{suffix}.csv", args.dataset.label()))
    });
    csvio::write_stream_csv(&out, &stream)?;
    RunManifest::new(
        "generate",
        Some(args.seed),
        json!({
            "dataset": args.dataset.label(),
            "t_count": args.t_count,
            "n_per_t": args.n_per_t,
            "dimension": 3,
            "reversed": args.reversed,
        }),
    )
    .output(&out)
    .write_next_to(&out)?;
    println!(
        "wrote {} windows x {} points to {}",
        args.t_count,
        args.n_per_t,
        out.display()
    );
    Ok(())
}

fn track_plot(path: &Path, track: &TrackResult<f64>) -> std::io::Result<()> {
    let exp_mc: Vec<(f64, f64)> =
        track.steps.iter().map(|s| (s.t as f64, s.mc.exp())).collect();
    let sizes: Vec<(f64, f64)> =
        track.steps.iter().map(|s| (s.t as f64, s.selected_k as f64)).collect();
    svg::line_chart(
        path,
        "exp(MC) and selected mixture size over time",
        &[
            svg::Series { label: "exp(MC)", color: "#1f77b4", points: &exp_mc },
            svg::Series { label: "K", color: "#d62728", points: &sizes },
        ],
    )
}

fn cmd_track(args: TrackArgs) -> Result<(), CliError> {
    let seed = args.fit.seed.unwrap_or(0);
    let config = args.fit.to_sdms(seed)?;
    let stream = args.input.read()?;
    let track = track_mc(&stream, &config)?;
    csvio::write_track_csv(&args.out, &track)?;
    let plot = args.plot.clone().unwrap_or_else(|| args.out.with_extension("svg"));
    track_plot(&plot, &track)?;
    RunManifest::new(
        "track",
        Some(seed),
        json!({ "input": args.input.describe(), "fit": args.fit.describe(seed) }),
    )
    .input(&args.input.input)
    .output(&args.out)
    .output(&plot)
    .write_next_to(&args.out)?;
    let carried = track.steps.iter().filter(|s| s.carried_forward).count();
    println!(
        "tracked {} windows ({} carried) -> {} and {}",
        track.steps.len(),
        carried,
        args.out.display(),
        plot.display()
    );
    Ok(())
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn decomposition_plots(
    dir: &Path,
    result: &DecompositionTrack<f64>,
) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let ts: Vec<f64> = result.track.steps.iter().map(|s| s.t as f64).collect();
    let groups = result.centers.len();
    let mut written = Vec::new();

    let single =
        |values: Vec<f64>| -> Vec<(f64, f64)> { ts.iter().copied().zip(values).collect() };

    let totals = single(result.decompositions.iter().map(|d| d.mc_total).collect());
    let path = dir.join("mc_total.svg");
    svg::line_chart(
        &path,
        "MC(total)",
        &[svg::Series { label: "MC(total)", color: PALETTE[0], points: &totals }],
    )?;
    written.push(path);

    let interactions =
        single(result.decompositions.iter().map(|d| d.mc_interaction).collect());
    let path = dir.join("mc_interaction.svg");
    svg::line_chart(
        &path,
        "MC(interaction)",
        &[svg::Series { label: "MC(interaction)", color: PALETTE[1], points: &interactions }],
    )?;
    written.push(path);

    for (file, title, which) in [
        ("w.svg", "W(component)", 0usize),
        ("mc_component.svg", "MC(component)", 1),
        ("contribution.svg", "Contribution(component)", 2),
    ] {
        let per_group: Vec<Vec<(f64, f64)>> = (0..groups)
            .map(|g| {
                single(
                    result
                        .decompositions
                        .iter()
                        .map(|d| match which {
                            0 => d.weights[g],
                            1 => d.mc_components[g],
                            _ => d.contributions[g],
                        })
                        .collect(),
                )
            })
            .collect();
        let labels: Vec<String> = (1..=groups).map(|g| format!("component {g}")).collect();
        let series: Vec<svg::Series> = per_group
            .iter()
            .zip(&labels)
            .enumerate()
            .map(|(g, (points, label))| svg::Series {
                label,
                color: PALETTE[g % PALETTE.len()],
                points,
            })
            .collect();
        let path = dir.join(file);
        svg::line_chart(&path, title, &series)?;
        written.push(path);
    }
    Ok(written)
}

fn cmd_decompose(args: DecomposeArgs) -> Result<(), CliError> {
    if args.groups == 0 {
        return Err(CliError::Usage("--groups must be >= 1".into()));
    }
    if !(args.fuzziness > 1.0) {
        return Err(CliError::Usage("--fuzziness must exceed 1".into()));
    }
    if !(args.fcm_tolerance > 0.0) || args.fcm_max_iterations == 0 {
        return Err(CliError::Usage(
            "--fcm-tolerance must be > 0 and --fcm-max-iterations >= 1".into(),
        ));
    }
    let seed = args.fit.seed.unwrap_or(0);
    let sdms = args.fit.to_sdms(seed)?;
    let fcm = FuzzyCMeansConfig {
        group_count: args.groups,
        fuzziness: args.fuzziness,
        max_iterations: args.fcm_max_iterations,
        tolerance: args.fcm_tolerance,
        rng_seed: seed,
    };
    let stream = args.input.read()?;
    let result = track_decomposition(&stream, &sdms, &fcm)?;
    csvio::write_decomposition_csv(&args.out, &result)?;
    csvio::write_centers_csv(&args.centers, &result.centers)?;
    let plot_dir = args
        .plot_dir
        .clone()
        .unwrap_or_else(|| args.out.parent().unwrap_or(Path::new(".")).to_path_buf());
    let plots = decomposition_plots(&plot_dir, &result)?;
    let mut manifest = RunManifest::new(
        "decompose",
        Some(seed),
        json!({
            "input": args.input.describe(),
            "fit": args.fit.describe(seed),
            "groups": args.groups,
            "fuzziness": args.fuzziness,
            "fcm_tolerance": args.fcm_tolerance,
            "fcm_max_iterations": args.fcm_max_iterations,
        }),
    )
    .input(&args.input.input)
    .output(&args.out)
    .output(&args.centers);
    for plot in &plots {
        manifest = manifest.output(plot);
    }
    manifest.write_next_to(&args.out)?;
    println!(
        "decomposed {} windows into {} groups -> {} (centers in {})",
        result.track.steps.len(),
        result.centers.len(),
        args.out.display(),
        args.centers.display()
    );
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> Result<(), CliError> {
    let table = csvio::read_track_csv(&args.input)?;
    let alerts = args.detect.run(&table)?;
    csvio::write_alerts_csv(&args.out, &alerts)?;
    RunManifest::new("detect", None, json!({ "detect": args.detect.describe() }))
        .input(&args.input)
        .output(&args.out)
        .write_next_to(&args.out)?;
    let rendered: Vec<String> = alerts.iter().map(usize::to_string).collect();
    println!("{} alert(s): [{}] -> {}", alerts.len(), rendered.join(", "), args.out.display());
    Ok(())
}

fn parse_span(text: &str, what: &str) -> Result<(usize, usize), CliError> {
    let err = || CliError::Usage(format!("--{what} must look like begin:end, got `{text}`"));
    let (begin, end) = text.split_once(':').ok_or_else(err)?;
    Ok((begin.parse().map_err(|_| err())?, end.parse().map_err(|_| err())?))
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let transaction = parse_span(&args.transaction, "transaction")?;
    let horizon = parse_span(&args.horizon, "horizon")?;
    let table = csvio::read_track_csv(&args.input)?;
    let alerts = args.detect.run(&table)?;
    let result: EvalResult = evaluate(&alerts, transaction, horizon, args.detect.window)?;
    csvio::write_report_csv(&args.out, args.detect.mode.label(), &result)?;
    RunManifest::new(
        "eval",
        None,
        json!({
            "detect": args.detect.describe(),
            "transaction": args.transaction,
            "horizon": args.horizon,
        }),
    )
    .input(&args.input)
    .output(&args.out)
    .write_next_to(&args.out)?;
    let rendered: Vec<String> = result.alerts.iter().map(usize::to_string).collect();
    println!(
        "mode={} delay={} far={} alerts=[{}]",
        args.detect.mode.label(),
        result.delay,
        g9(result.far),
        rendered.join(", ")
    );
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let Some(base_seed) = args.fit.seed else {
        return Err(CliError::Usage("--seed is required for experiment".into()));
    };
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be >= 1".into()));
    }
    if args.t_count == 0 || args.n_per_t == 0 {
        return Err(CliError::Usage("-T and -N must be >= 1".into()));
    }
    let datasets: Vec<DatasetKind> = match args.dataset {
        DatasetChoice::Move => vec![DatasetKind::Move],
        DatasetChoice::Imbalance => vec![DatasetKind::Imbalance],
        DatasetChoice::Both => vec![DatasetKind::Move, DatasetKind::Imbalance],
    };
    let directions: Vec<bool> = match args.direction {
        DirectionChoice::Forward => vec![false],
        DirectionChoice::Reverse => vec![true],
        DirectionChoice::Both => vec![false, true],
    };
    let criterion_label = args.fit.criterion()?.label().to_string();

    let mut rows = Vec::new();
    for &dataset in &datasets {
        for &reversed in &directions {
            let mut sums = [0.0f64; 4];
            for trial in 0..args.seeds {
                let seed = base_seed + trial as u64;
                let spec = StreamSpec {
                    t_count: args.t_count,
                    n_per_t: args.n_per_t,
                    dimension: 3,
                    rng_seed: seed,
                    reversed,
                };
                let stream = dataset.generate(&spec)?;
                let config = args.fit.to_sdms(seed)?;
                let track = track_mc(&stream, &config)?;
                let carried: Vec<bool> =
                    track.steps.iter().map(|s| s.carried_forward).collect();
                for (offset, mode) in
                    [AlertMode::McSequence, AlertMode::KSequence].into_iter().enumerate()
                {
                    let sequence = match mode {
                        AlertMode::McSequence => track.mc_sequence(),
                        AlertMode::KSequence => track.k_sequence(),
                    };
                    let alerts: Vec<usize> =
                        detect_changes(&sequence, &AlertConfig::new(mode))?
                            .into_iter()
                            .filter(|&t| !carried[t - 1])
                            .collect();
                    let result =
                        evaluate(&alerts, (51, 100), (10, args.t_count.max(10)), 5)?;
                    sums[offset * 2] += result.delay as f64;
                    sums[offset * 2 + 1] += result.far;
                }
            }
            let n = args.seeds as f64;
            rows.push(ExperimentRow {
                dataset: dataset.label().to_string(),
                direction: if reversed { "reverse".into() } else { "forward".into() },
                criterion: criterion_label.clone(),
                seeds: args.seeds,
                delay_mc: sums[0] / n,
                far_mc: sums[1] / n,
                delay_k: sums[2] / n,
                far_k: sums[3] / n,
            });
        }
    }

    std::fs::create_dir_all(&args.out_dir)?;
    let out = args.out_dir.join("experiment.csv");
    csvio::write_experiment_csv(&out, &rows)?;
    RunManifest::new(
        "experiment",
        Some(base_seed),
        json!({
            "fit": args.fit.describe(base_seed),
            "seeds": args.seeds,
            "dataset": datasets.iter().map(|d| d.label()).collect::<Vec<_>>(),
            "directions": directions
                .iter()
                .map(|r| if *r { "reverse" } else { "forward" })
                .collect::<Vec<_>>(),
            "t_count": args.t_count,
            "n_per_t": args.n_per_t,
        }),
    )
    .output(&out)
    .write_next_to(&out)?;

    println!(
        "{:<10} {:<9} {:<9} {:>5} {:>10} {:>8} {:>9} {:>8} {:>8} {:>8}",
        "dataset",
        "direction",
        "criterion",
        "seeds",
        "delay(MC)",
        "far(MC)",
        "delay(K)",
        "far(K)",
        "d.delay",
        "d.far"
    );
    for row in &rows {
        println!(
            "{:<10} {:<9} {:<9} {:>5} {:>10.1} {:>8.4} {:>9.1} {:>8.4} {:>8.1} {:>8.4}",
            row.dataset,
            row.direction,
            row.criterion,
            row.seeds,
            row.delay_mc,
            row.far_mc,
            row.delay_k,
            row.far_k,
            row.delay_mc - row.delay_k,
            row.far_mc - row.far_k
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
