//! The `fedzip` command line.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for data, codec or
//! file errors. Failures print one JSON object to stderr:
//! `{"error": "usage" | "data", "message": ..., "path": ...}`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fedzip_core::analysis::{error_distribution, ErrorDistribution};
use fedzip_core::ebcodec::{finite_range, CodecId, CodecSpec, ErrorBound};
use fedzip_core::flsim::{
    init_tinynet, run_experiment, sweep_epsilon, FLConfig, SyntheticTask, Timing,
};
use fedzip_core::netsim::{
    breakeven_bandwidth, select_codec, select_epsilon, transfer_time, worthwhile, Clock, CostInputs,
    NetworkModel, Selection, SelectionGrid, SelectionPolicy, VirtualClock,
};
use fedzip_core::pipeline::{bench_update_grid, measure_pipeline, RoutingRule, UpdateCodec};
use fedzip_core::tensor::{flatten, StateDict};
use serde_json::json;

use crate::io::{load_checkpoint, load_update, save_checkpoint, save_update, FileError};
use crate::report::{codec_label, read_grid, write_report, Report, ReportFormat};
use crate::SystemClock;

#[derive(Debug, Parser)]
#[command(name = "fedzip", version, about = "Error-bounded compression of federated-learning model updates")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress an FSZT checkpoint into an FSZU update.
    Compress(CompressArgs),
    /// Restore an FSZT checkpoint from an FSZU update.
    Decompress { input: PathBuf, output: PathBuf },
    /// Benchmark codecs and bounds on a checkpoint; writes a selection grid.
    Bench(BenchArgs),
    /// Tabulate transfer time with and without compression over a bandwidth range.
    BenchNet(BenchNetArgs),
    /// Run a FedAvg simulation and write per-round metrics.
    FlRun(FlRunArgs),
    /// Run one simulation per error bound and write the accuracy / ratio grid.
    Sweep(SweepArgs),
    /// Histogram of reconstruction errors with a Laplace fit.
    AnalyzeError(AnalyzeArgs),
    /// Choose a codec and error bound from a grid for a given bandwidth.
    Select(SelectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodecArg {
    Pq,
    Cbt,
}

impl CodecArg {
    fn id(self) -> CodecId {
        match self {
            CodecArg::Pq => CodecId::PredictQuantize,
            CodecArg::Cbt => CodecId::ConstBlockTruncate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlCodecArg {
    Pq,
    Cbt,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClockArg {
    Virtual,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum FormatArg {
    #[default]
    Csv,
    Jsonl,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Jsonl => ReportFormat::JsonLines,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    MinEndToEnd,
    MaxRatio,
    MinOverhead,
}

#[derive(Debug, Args)]
pub struct RoutingArgs {
    /// Tensors with at most this many elements stay lossless.
    #[arg(long, default_value_t = 1024)]
    pub threshold: usize,
    /// Name glob (`*`, `?`) forced onto the lossless path; repeatable.
    #[arg(long = "force-lossless", value_name = "GLOB")]
    pub force_lossless: Vec<String>,
}

impl RoutingArgs {
    fn rule(&self) -> RoutingRule {
        RoutingRule { force_lossless: self.force_lossless.clone(), ..RoutingRule::with_threshold(self.threshold) }
    }
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "pq")]
    pub codec: CodecArg,
    /// Error bound as a fraction of each tensor's value range.
    #[arg(long = "rel-eb", default_value_t = 1e-2, conflicts_with = "abs_eb")]
    pub rel_eb: f64,
    /// Absolute error bound, overriding `--rel-eb`.
    #[arg(long = "abs-eb")]
    pub abs_eb: Option<f64>,
    #[command(flatten)]
    pub routing: RoutingArgs,
    /// Also write a per-entry size and timing table.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// FSZT checkpoint; defaults to a freshly initialized two-layer network.
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "pq,cbt")]
    pub codecs: Vec<CodecArg>,
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4")]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Seed of the default network.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Write the benchmarked checkpoint here.
    #[arg(long = "save-model")]
    pub save_model: Option<PathBuf>,
    #[command(flatten)]
    pub routing: RoutingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct BenchNetArgs {
    /// Uncompressed update size S in megabytes (10^6 bytes).
    #[arg(long = "size-mb")]
    pub size_mb: f64,
    /// Compression ratio S / S'.
    #[arg(long)]
    pub ratio: f64,
    /// Compression seconds.
    #[arg(long)]
    pub tc: f64,
    /// Decompression seconds.
    #[arg(long)]
    pub td: f64,
    /// `LO:HI` bandwidth range in bits per second, sampled log-uniformly.
    #[arg(long = "bw-range", default_value = "1e6:1e10")]
    pub bw_range: String,
    #[arg(long, default_value_t = 41)]
    pub points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlArgs {
    #[arg(long, default_value_t = 4)]
    pub clients: usize,
    #[arg(long, default_value_t = 20)]
    pub rounds: usize,
    #[arg(long = "local-epochs", default_value_t = 1)]
    pub local_epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long = "batch-size", default_value_t = 32)]
    pub batch_size: usize,
    /// Link bandwidth in bits per second.
    #[arg(long, default_value_t = 10e6)]
    pub bw: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Class-cluster noise of the synthetic task.
    #[arg(long = "noise-sigma")]
    pub noise_sigma: Option<f64>,
    #[arg(long = "samples-per-client")]
    pub samples_per_client: Option<usize>,
    #[arg(long, value_enum, default_value = "virtual")]
    pub clock: ClockArg,
    #[command(flatten)]
    pub routing: RoutingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

impl FlArgs {
    fn config(&self, codec: Option<CodecSpec>) -> FLConfig {
        let defaults = SyntheticTask::default();
        let task = SyntheticTask {
            seed: self.seed,
            noise_sigma: self.noise_sigma.unwrap_or(defaults.noise_sigma),
            samples_per_client: self.samples_per_client.unwrap_or(defaults.samples_per_client),
            ..defaults
        };
        FLConfig {
            clients: self.clients,
            rounds: self.rounds,
            local_epochs: self.local_epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            codec,
            rule: self.routing.rule(),
            network: NetworkModel::new(self.bw),
            timing: match self.clock {
                ClockArg::Virtual => Timing::default(),
                ClockArg::Real => Timing::Real,
            },
            task,
            seed: self.seed,
            ..FLConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct FlRunArgs {
    #[arg(long, value_enum, default_value = "pq")]
    pub codec: FlCodecArg,
    #[arg(long = "rel-eb", default_value_t = 1e-2)]
    pub rel_eb: f64,
    #[command(flatten)]
    pub fl: FlArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "pq")]
    pub codec: CodecArg,
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4")]
    pub eps: Vec<f64>,
    #[command(flatten)]
    pub fl: FlArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub original: PathBuf,
    pub reconstructed: PathBuf,
    #[arg(long, default_value_t = 101)]
    pub bins: usize,
    /// Histogram half-width; by default derived from `--rel-eb` or the data.
    #[arg(long = "eps-abs")]
    pub eps_abs: Option<f64>,
    /// Relative bound used to compress; sets each tensor's histogram range.
    #[arg(long = "rel-eb")]
    pub rel_eb: Option<f64>,
    /// One histogram per lossy entry instead of one pooled histogram.
    #[arg(long = "per-entry")]
    pub per_entry: bool,
    #[command(flatten)]
    pub routing: RoutingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Grid CSV written by `bench` or `sweep`.
    pub grid: PathBuf,
    #[arg(long, default_value_t = 10e6)]
    pub bw: f64,
    #[arg(long, value_enum, default_value = "min-end-to-end")]
    pub policy: PolicyArg,
    /// Allowed accuracy loss for error-bound selection.
    #[arg(long, default_value_t = 0.02)]
    pub slack: f64,
    #[arg(long, default_value_t = 4)]
    pub clients: usize,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data { message: String, path: Option<PathBuf> },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data { .. } => 2,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Usage(m) => json!({ "error": "usage", "message": m }),
            CliError::Data { message, path } => json!({
                "error": "data",
                "message": message,
                "path": path.as_ref().map(|p| p.display().to_string()),
            }),
        }
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        CliError::Data { message: e.to_string(), path: Some(e.path().to_owned()) }
    }
}

impl From<fedzip_core::Error> for CliError {
    fn from(e: fedzip_core::Error) -> Self {
        CliError::Data { message: e.to_string(), path: None }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => {
                    let err = CliError::Usage(e.kind().to_string());
                    eprintln!("{}", err.to_json());
                    err.exit_code()
                }
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> CliResult {
    match command {
        Command::Compress(a) => compress(a),
        Command::Decompress { input, output } => {
            let update = load_update(&input)?;
            let state = update.decompress(&Default::default()).map_err(|e| data_at(e, &input))?;
            save_checkpoint(&output, &state)?;
            print_json(&json!({ "entries": state.len(), "bytes": fedzip_core::tensor::checkpoint_size(&state) }))
        }
        Command::Bench(a) => bench(a),
        Command::BenchNet(a) => bench_net(a),
        Command::FlRun(a) => fl_run(a),
        Command::Sweep(a) => sweep(a),
        Command::AnalyzeError(a) => analyze(a),
        Command::Select(a) => select(a),
    }
}

fn data_at(e: fedzip_core::Error, path: &Path) -> CliError {
    FileError::Format { path: path.to_owned(), source: e }.into()
}

fn usage(message: &str) -> CliError {
    CliError::Usage(message.to_owned())
}

fn print_json(v: &serde_json::Value) -> CliResult {
    println!("{v}");
    Ok(())
}

/// Opens `path`, or stdout when absent.
fn output(path: Option<&Path>) -> CliResult<(Box<dyn Write>, PathBuf)> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| FileError::Io { path: p.to_owned(), source: e })?;
            Ok((Box::new(f), p.to_owned()))
        }
        None => Ok((Box::new(io::stdout().lock()), PathBuf::from("<stdout>"))),
    }
}

fn emit<R: Report>(report: &R, format: FormatArg, path: Option<&Path>) -> CliResult {
    let (w, p) = output(path)?;
    write_report(report, format.into(), w).map_err(|e| FileError::Io { path: p, source: e }.into())
}

fn compress(a: CompressArgs) -> CliResult {
    let state = load_checkpoint(&a.input)?;
    let bound = match a.abs_eb {
        Some(eps) => ErrorBound::absolute(eps),
        None => ErrorBound::relative(a.rel_eb),
    };
    let codec = UpdateCodec::new(CodecSpec::new(a.codec.id(), bound), a.routing.rule());
    let update = codec.compress(&state).map_err(|e| data_at(e, &a.input))?;
    save_update(&a.output, &update)?;
    if let Some(path) = &a.report {
        let bench = measure_pipeline(&state, &codec, 1, &SystemClock::new())?;
        emit(&bench, a.format, Some(path))?;
    }
    print_json(&json!({
        "original_bytes": update.original_bytes,
        "compressed_bytes": update.compressed_bytes,
        "ratio": update.ratio(),
        "lossy_entries": update.lossy_bounds()?.into_iter().map(|(n, _)| n).collect::<Vec<_>>(),
    }))
}

fn default_model(seed: u64) -> StateDict {
    init_tinynet(FLConfig::default().dims(), seed)
}

fn bench(a: BenchArgs) -> CliResult {
    if a.codecs.is_empty() || a.eps.is_empty() || a.reps == 0 {
        return Err(usage("bench needs at least one codec, one epsilon and one repetition"));
    }
    let state = match &a.input {
        Some(p) => load_checkpoint(p)?,
        None => default_model(a.seed),
    };
    if let Some(p) = &a.save_model {
        save_checkpoint(p, &state)?;
    }
    let candidates: Vec<CodecSpec> =
        a.codecs.iter().map(|c| CodecSpec::new(c.id(), ErrorBound::relative(a.eps[0]))).collect();
    let grid = bench_update_grid(&state, &candidates, &a.eps, &a.routing.rule(), a.reps, &SystemClock::new())?;
    emit(&grid, a.format, a.out.as_deref())
}

fn parse_range(s: &str) -> Option<(f64, f64)> {
    let (lo, hi) = s.split_once(':')?;
    let (lo, hi) = (lo.trim().parse::<f64>().ok()?, hi.trim().parse::<f64>().ok()?);
    (lo > 0.0 && hi >= lo && hi.is_finite()).then_some((lo, hi))
}

fn bench_net(a: BenchNetArgs) -> CliResult {
    let (lo, hi) = parse_range(&a.bw_range).ok_or_else(|| usage("--bw-range must be LO:HI with 0 < LO <= HI"))?;
    if a.points < 2 || !(a.size_mb > 0.0 && a.ratio > 0.0 && a.tc >= 0.0 && a.td >= 0.0) {
        return Err(usage("need --points >= 2, positive --size-mb and --ratio, non-negative --tc/--td"));
    }
    let s = a.size_mb * 1e6;
    let cost = CostInputs { compress_seconds: a.tc, decompress_seconds: a.td, original_bytes: s, compressed_bytes: s / a.ratio };
    let (w, path) = output(a.out.as_deref())?;
    let mut w = csv::Writer::from_writer(w);
    let io_err = |e: csv::Error| CliError::from(FileError::Csv { path: path.clone(), source: e });
    w.write_record(["bandwidth", "time_uncompressed", "time_compressed", "worthwhile"]).map_err(io_err)?;
    let step = (hi / lo).ln() / (a.points - 1) as f64;
    for i in 0..a.points {
        let bw = if i + 1 == a.points { hi } else { lo * (step * i as f64).exp() };
        let model = NetworkModel::new(bw);
        w.serialize((
            bw,
            transfer_time(s, &model),
            cost.compressed_path_seconds(bw),
            worthwhile(&cost, &model),
        ))
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| FileError::Io { path: path.clone(), source: e })?;
    if let Ok(b) = breakeven_bandwidth(&cost) {
        eprintln!("{}", json!({ "breakeven_bps": b }));
    }
    Ok(())
}

fn wall_clock(arg: ClockArg) -> Box<dyn Clock> {
    match arg {
        ClockArg::Virtual => Box::new(VirtualClock::new()),
        ClockArg::Real => Box::new(SystemClock::new()),
    }
}

fn fl_run(a: FlRunArgs) -> CliResult {
    let codec = match a.codec {
        FlCodecArg::Pq => Some(CodecSpec::pq_rel(a.rel_eb)),
        FlCodecArg::Cbt => Some(CodecSpec::cbt_rel(a.rel_eb)),
        FlCodecArg::None => None,
    };
    let cfg = a.fl.config(codec);
    let report = run_experiment(&cfg, wall_clock(a.fl.clock).as_ref())?;
    emit(&report, a.fl.format, a.fl.out.as_deref())?;
    if a.fl.out.is_some() {
        print_json(&json!({
            "codec": report.codec.map(|c| codec_label(c.codec)),
            "final_accuracy": report.final_accuracy,
            "mean_ratio": report.mean_ratio(),
            "total_comm_seconds": report.total_comm_seconds,
        }))?;
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> CliResult {
    if a.eps.is_empty() {
        return Err(usage("--eps needs at least one value"));
    }
    let base = CodecSpec::new(a.codec.id(), ErrorBound::relative(a.eps[0]));
    let cfg = a.fl.config(Some(base));
    let grid = sweep_epsilon(&cfg, &a.eps, wall_clock(a.fl.clock).as_ref())?;
    emit(&grid, a.fl.format, a.fl.out.as_deref())
}

struct Pooled {
    label: Option<String>,
    orig: Vec<f32>,
    recon: Vec<f32>,
    eps_abs: Option<f64>,
}

fn analyze(a: AnalyzeArgs) -> CliResult {
    let orig = load_checkpoint(&a.original)?;
    let recon = load_checkpoint(&a.reconstructed)?;
    if !orig.same_structure(&recon) {
        return Err(data_at(fedzip_core::Error::StructureMismatch("tensor names, shapes or dtypes differ from the original".into()), &a.reconstructed));
    }
    let rule = a.routing.rule();
    let mut groups: Vec<Pooled> = Vec::new();
    for t in orig.iter().filter(|t| rule.route(t) == fedzip_core::pipeline::Route::Lossy) {
        let o = flatten(t).map_err(|e| data_at(e, &a.original))?;
        let r = flatten(recon.get(t.name()).expect("same structure")).map_err(|e| data_at(e, &a.reconstructed))?;
        let eps = match (a.eps_abs, a.rel_eb) {
            (Some(e), _) => Some(e),
            (None, Some(rel)) => {
                let (lo, hi) = finite_range(o).map_err(|e| data_at(e, &a.original))?;
                Some(rel * (hi - lo)).filter(|e| *e > 0.0)
            }
            (None, None) => None,
        };
        if a.per_entry || groups.is_empty() {
            groups.push(Pooled { label: a.per_entry.then(|| t.name().to_owned()), orig: vec![], recon: vec![], eps_abs: eps });
        }
        let g = groups.last_mut().expect("pushed above");
        g.orig.extend_from_slice(o);
        g.recon.extend_from_slice(r);
        g.eps_abs = match (g.eps_abs, eps) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        };
    }
    if groups.is_empty() {
        return Err(data_at(fedzip_core::Error::EmptyInput, &a.original));
    }
    let dists = groups
        .iter()
        .map(|g| Ok((g.label.clone(), error_distribution(&g.orig, &g.recon, a.bins, g.eps_abs)?)))
        .collect::<CliResult<Vec<(Option<String>, ErrorDistribution)>>>()?;

    let (w, path) = output(a.out.as_deref())?;
    let mut w = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| CliError::from(FileError::Csv { path: path.clone(), source: e });
    if a.per_entry {
        w.write_record(["entry", "bin_left", "bin_right", "count"]).map_err(csv_err)?;
    } else {
        w.write_record(["bin_left", "bin_right", "count"]).map_err(csv_err)?;
    }
    for (label, d) in &dists {
        for (i, count) in d.counts.iter().enumerate() {
            let (l, r) = (d.bin_edges[i], d.bin_edges[i + 1]);
            match label {
                Some(name) => w.serialize((name, l, r, count)),
                None => w.serialize((l, r, count)),
            }
            .map_err(csv_err)?;
        }
    }
    let mut out = w.into_inner().map_err(|e| FileError::Io { path: path.clone(), source: e.into_error() })?;
    for (label, d) in &dists {
        let mut trailer = json!({
            "mu": d.laplace_mu,
            "b": d.laplace_b,
            "goodness": d.goodness,
            "eps_abs": d.eps_abs,
        });
        if let Some(name) = label {
            trailer["entry"] = json!(name);
        }
        writeln!(out, "{trailer}").map_err(|e| FileError::Io { path: path.clone(), source: e })?;
    }
    out.flush().map_err(|e| FileError::Io { path, source: e }.into())
}

fn selection_json(grid: &SelectionGrid, s: &Selection) -> serde_json::Value {
    let c = &grid.cells[s.cell];
    json!({
        "codec": codec_label(s.spec.codec),
        "epsilon": s.spec.bound.epsilon,
        "ratio": c.record.ratio,
        "compress_seconds": c.record.compress_seconds,
        "decompress_seconds": c.record.decompress_seconds,
        "accuracy": c.accuracy,
        "objective_seconds": s.objective,
    })
}

fn select(a: SelectArgs) -> CliResult {
    let file = File::open(&a.grid).map_err(|e| FileError::Io { path: a.grid.clone(), source: e })?;
    let grid = read_grid(file, &a.grid)?;
    let model = NetworkModel::new(a.bw);
    let policy = match a.policy {
        PolicyArg::MinEndToEnd => SelectionPolicy::MinEndToEnd,
        PolicyArg::MaxRatio => SelectionPolicy::MaxRatio,
        PolicyArg::MinOverhead => SelectionPolicy::MinOverhead,
    };
    let codec = select_codec(&grid, &model, policy).map_err(|e| data_at(e, &a.grid))?;
    let epsilon = if grid.baseline_accuracy.is_some() && grid.cells.iter().any(|c| c.accuracy.is_some()) {
        match select_epsilon(&grid, &model, a.clients, a.slack) {
            Ok(s) => Some(selection_json(&grid, &s)),
            Err(fedzip_core::Error::NoFeasibleEpsilon) => None,
            Err(e) => return Err(data_at(e, &a.grid)),
        }
    } else {
        None
    };
    print_json(&json!({
        "bandwidth_bps": a.bw,
        "codec_selection": selection_json(&grid, &codec),
        "epsilon_selection": epsilon,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_args_is_a_usage_error() {
        assert_eq!(run(["fedzip"]), 1);
        assert_eq!(run(["fedzip", "frobnicate"]), 1);
        assert_eq!(run(["fedzip", "compress", "--rel-eb", "x", "a", "b"]), 1);
    }

    #[test]
    fn help_succeeds() {
        assert_eq!(run(["fedzip", "--help"]), 0);
    }

    #[test]
    fn missing_file_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("missing.fszt");
        let out = dir.path().join("out.fszu");
        assert_eq!(run([OsString::from("fedzip"), "compress".into(), missing.into(), out.into()]), 2);
    }

    #[test]
    fn bandwidth_ranges() {
        assert_eq!(parse_range("1e6:1e10"), Some((1e6, 1e10)));
        assert_eq!(parse_range("1e6"), None);
        assert_eq!(parse_range("0:1"), None);
        assert_eq!(parse_range("5:1"), None);
    }

    #[test]
    fn flags_build_configs() {
        let cli = Cli::try_parse_from([
            "fedzip", "fl-run", "--clients", "3", "--rounds", "2", "--codec", "none", "--bw", "5e6", "--seed", "9",
            "--clock", "real",
        ])
        .unwrap();
        let Command::FlRun(a) = cli.command else { panic!("wrong subcommand") };
        let cfg = a.fl.config(None);
        assert_eq!((cfg.clients, cfg.rounds, cfg.seed, cfg.task.seed), (3, 2, 9, 9));
        assert_eq!(cfg.network.bandwidth_bps, 5e6);
        assert_eq!(cfg.timing, Timing::Real);
    }
}
