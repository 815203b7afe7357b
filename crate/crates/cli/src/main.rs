//! `tinylidar`: collect demonstrations, train, quantize, evaluate and
//! benchmark LiDAR driving policies.
//!
//! Every option can also come from `--config FILE`, a flat `key = value`
//! file whose keys are the long flag names; flags given on the command line
//! win over the file, which wins over built-in defaults.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use tinylidar::bench::{bench_latency, BenchConfig, BenchResult};
use tinylidar::config::{parse_config, Config};
use tinylidar::dataset::Dataset;
use tinylidar::eval::{
    evaluate, evaluate_with, trace_csv, wobble_metric, EvalConfig, EvalError, EvalReport,
};
use tinylidar::expert::{collect, BangBang, Expert};
use tinylidar::nn::{init_params, train, TrainConfig};
use tinylidar::policy::{Model, NetPolicy};
use tinylidar::quant::{calibrate, calibration_inputs, quantize};
use tinylidar::sim::{load_track, run_episode, start_state, Policy, TrackBundle};
use tinylidar::zoo::{parse_model_name, Family, ModelSize};

#[derive(Parser)]
#[command(
    name = "tinylidar",
    version,
    about = "LiDAR driving policies: data, training, int8 and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key = value file supplying defaults for any option below
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Drive expert laps and record (scan, action) samples as CSV
    Collect(CollectArgs),
    /// Train a model on a recorded dataset
    Train(TrainArgs),
    /// Post-training int8 quantization of an fp32 checkpoint
    Quantize(QuantizeArgs),
    /// Random-start closed-loop trials with a summary report
    Eval(EvalArgs),
    /// One episode from a given waypoint, written tick by tick
    Trace(TraceArgs),
    /// Single-threaded inference latency
    Bench(BenchArgs),
    /// Parameter and MAC counts with a per-layer table
    Inspect(InspectArgs),
}

#[derive(Args)]
struct CollectArgs {
    #[command(flatten)]
    common: Common,
    /// Bundled track name (oval, uturn) or a track directory [default: oval]
    #[arg(long)]
    track: Option<String>,
    /// Number of demonstration laps [default: 25]
    #[arg(long)]
    laps: Option<usize>,
    /// Seed for start poses, sensor noise and steering perturbation [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output dataset CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Model family: tinylidarnet or mlp256
    #[arg(long)]
    family: Option<Family>,
    /// Model size: L, M or S
    #[arg(long)]
    size: Option<ModelSize>,
    /// Dataset CSV written by `collect`
    #[arg(long)]
    data: Option<PathBuf>,
    /// [default: 20]
    #[arg(long)]
    epochs: Option<usize>,
    /// Mini-batch size [default: 64]
    #[arg(long)]
    batch: Option<usize>,
    /// Adam learning rate [default: 5e-5]
    #[arg(long)]
    lr: Option<f32>,
    /// Held-out fraction for validation [default: 0.15]
    #[arg(long)]
    val_fraction: Option<f64>,
    /// Seed for initialization, split and shuffling [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output fp32 checkpoint
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QuantizeArgs {
    #[command(flatten)]
    common: Common,
    /// fp32 checkpoint
    #[arg(long)]
    model: Option<PathBuf>,
    /// Dataset CSV; the first 256 training-split samples calibrate activations
    #[arg(long)]
    calib: Option<PathBuf>,
    /// Split seed; use the one the model was trained with [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output int8 checkpoint
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Checkpoint path (fp32 or int8), or `expert` / `bangbang`
    #[arg(long)]
    model: Option<String>,
    /// Bundled track name or a track directory [default: oval]
    #[arg(long)]
    track: Option<String>,
    /// [default: 10]
    #[arg(long)]
    trials: Option<usize>,
    /// Seed for start poses and sensor noise [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Per-trial time limit in seconds [default: 60]
    #[arg(long)]
    timeout: Option<f64>,
    /// Parallel trials; the report does not depend on it [default: 1]
    #[arg(long)]
    workers: Option<usize>,
    /// Output CSV report (per-trial rows plus a summary row)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    common: Common,
    /// Checkpoint path (fp32 or int8), or `expert` / `bangbang`
    #[arg(long)]
    model: Option<String>,
    /// Bundled track name or a track directory [default: oval]
    #[arg(long)]
    track: Option<String>,
    /// Start waypoint index [default: 0]
    #[arg(long)]
    start: Option<usize>,
    /// Sensor noise seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Time limit in seconds [default: 60]
    #[arg(long)]
    timeout: Option<f64>,
    /// Output trace CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Checkpoint path, or a model name such as tinylidarnet-L (random weights)
    #[arg(long)]
    model: Option<String>,
    /// Timed inferences [default: 10000]
    #[arg(long)]
    iters: Option<usize>,
    /// Untimed warm-up inferences [default: 100]
    #[arg(long)]
    warmup: Option<usize>,
    /// Seed of the random input and of random weights [default: 0]
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    common: Common,
    /// Checkpoint path, or a model name such as tinylidarnet-L
    #[arg(long)]
    model: Option<String>,
}

/// Error category printed as `error[kind]: message`.
#[derive(Clone, Copy, Debug)]
enum Kind {
    Usage,
    Config,
    Io,
    Data,
    Model,
    Sim,
    Train,
    Quant,
    Eval,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Usage => "usage",
            Kind::Config => "config",
            Kind::Io => "io",
            Kind::Data => "data",
            Kind::Model => "model",
            Kind::Sim => "sim",
            Kind::Train => "train",
            Kind::Quant => "quant",
            Kind::Eval => "eval",
        })
    }
}

#[derive(Debug)]
struct CliError {
    kind: Kind,
    msg: String,
}

impl CliError {
    fn new(kind: Kind, msg: impl fmt::Display) -> Self {
        CliError {
            kind,
            msg: msg.to_string(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind {
            Kind::Usage | Kind::Config => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Single line: newlines inside wrapped messages are folded into spaces.
fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Every long option name (with `_` for `-`); one config file may serve all subcommands.
const CONFIG_KEYS: &[&str] = &[
    "batch",
    "calib",
    "data",
    "epochs",
    "family",
    "iters",
    "laps",
    "lr",
    "model",
    "out",
    "report",
    "seed",
    "size",
    "start",
    "timeout",
    "track",
    "trials",
    "val_fraction",
    "warmup",
    "workers",
];

/// Resolves options as flag > config file > default.
struct Resolver {
    config: Config,
}

impl Resolver {
    fn new(common: &Common) -> Result<Self> {
        let config = match &common.config {
            None => Config::default(),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::new(Kind::Io, format!("{}: {e}", path.display())))?;
                parse_config(&text)
                    .map_err(|e| CliError::new(Kind::Config, format!("{}: {e}", path.display())))?
            }
        };
        config
            .check_keys(CONFIG_KEYS)
            .map_err(|e| CliError::new(Kind::Config, e))?;
        Ok(Resolver { config })
    }

    fn opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self
                .config
                .get(key)
                .map_err(|e| CliError::new(Kind::Config, e)),
        }
    }

    fn or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    fn required<T>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        self.opt(flag, key)?.ok_or_else(|| {
            CliError::new(
                Kind::Usage,
                format!("missing required option --{}", key.replace('_', "-")),
            )
        })
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::new(Kind::Io, format!("{}: {e}", path.display())))
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    if !path.exists() {
        return Err(CliError::new(
            Kind::Io,
            format!("{}: no such file", path.display()),
        ));
    }
    Dataset::load(path).map_err(|e| CliError::new(Kind::Data, format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<Model> {
    Model::load(path).map_err(|e| match e {
        tinylidar::policy::ModelError::Io { .. } => CliError::new(Kind::Io, e),
        _ => CliError::new(Kind::Model, format!("{}: {e}", path.display())),
    })
}

fn track(name: &str) -> Result<TrackBundle> {
    load_track(name).map_err(|e| CliError::new(Kind::Sim, e))
}

/// A checkpoint file, or a model name built with random weights.
fn model_or_name(spec: &str, seed: u64) -> Result<Model> {
    if let Some((fam, size)) = parse_model_name(spec) {
        if !Path::new(spec).exists() {
            let p =
                init_params(&fam.build(size), seed).map_err(|e| CliError::new(Kind::Model, e))?;
            return Ok(Model::Float(p));
        }
    }
    load_model(Path::new(spec))
}

const TRACK_DEFAULT: &str = "oval";

fn cmd_collect(a: CollectArgs) -> Result<()> {
    let r = Resolver::new(&a.common)?;
    let track_name: String = r.or(a.track, "track", TRACK_DEFAULT.into())?;
    let laps = r.or(a.laps, "laps", 25)?;
    let seed = r.or(a.seed, "seed", 0)?;
    let out: PathBuf = r.required(a.out, "out")?;
    let t = track(&track_name)?;
    let data = collect(&t, laps, seed).map_err(|e| CliError::new(Kind::Sim, e))?;
    data.save(&out)
        .map_err(|e| CliError::new(Kind::Io, format!("{}: {e}", out.display())))?;
    println!(
        "collected {} samples on {} (laps: {laps}) -> {}",
        data.len(),
        t.name,
        out.display()
    );
    if !data.complete {
        return Err(CliError::new(
            Kind::Sim,
            format!(
                "expert failed to finish a lap; {} samples written",
                data.len()
            ),
        ));
    }
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let r = Resolver::new(&a.common)?;
    let defaults = TrainConfig::default();
    let family: Family = r.required(a.family, "family")?;
    let size: ModelSize = r.required(a.size, "size")?;
    let data_path: PathBuf = r.required(a.data, "data")?;
    let cfg = TrainConfig {
        epochs: r.or(a.epochs, "epochs", defaults.epochs)?,
        batch_size: r.or(a.batch, "batch", defaults.batch_size)?,
        lr: r.or(a.lr, "lr", defaults.lr)?,
        val_fraction: r.or(a.val_fraction, "val_fraction", defaults.val_fraction)?,
        seed: r.or(a.seed, "seed", defaults.seed)?,
        ..defaults
    };
    let out: PathBuf = r.required(a.out, "out")?;
    let data = load_dataset(&data_path)?;
    let spec = family.build(size);
    let res = train(&spec, &data, &cfg).map_err(|e| CliError::new(Kind::Train, e))?;
    println!("epoch,train_loss,val_loss");
    for e in &res.history {
        let val = e
            .val
            .map_or_else(|| "N/A".to_string(), |v| format!("{v:.6}"));
        println!("{},{:.6},{val}", e.epoch, e.train);
    }
    write_file(&out, &Model::Float(res.params).encode())?;
    println!(
        "{} trained on {} samples -> {}",
        spec.name,
        data.len(),
        out.display()
    );
    Ok(())
}

fn cmd_quantize(a: QuantizeArgs) -> Result<()> {
    let r = Resolver::new(&a.common)?;
    let model_path: PathBuf = r.required(a.model, "model")?;
    let calib_path: PathBuf = r.required(a.calib, "calib")?;
    let seed = r.or(a.seed, "seed", 0)?;
    let out: PathBuf = r.required(a.out, "out")?;
    let params = match load_model(&model_path)? {
        Model::Float(p) => p,
        Model::Int8(_) => {
            return Err(CliError::new(
                Kind::Model,
                format!("{}: already quantized", model_path.display()),
            ))
        }
    };
    let data = load_dataset(&calib_path)?;
    let reps = calibration_inputs(params.spec(), &data, seed)
        .map_err(|e| CliError::new(Kind::Quant, e))?;
    let calib = calibrate(&params, &reps).map_err(|e| CliError::new(Kind::Quant, e))?;
    let q = quantize(&params, &calib).map_err(|e| CliError::new(Kind::Quant, e))?;
    let bytes = Model::Int8(q).encode();
    write_file(&out, &bytes)?;
    println!(
        "{} quantized with {} calibration samples: {} bytes -> {}",
        params.spec().name,
        reps.len(),
        bytes.len(),
        out.display()
    );
    Ok(())
}

fn eval_err(e: EvalError) -> CliError {
    CliError::new(Kind::Eval, e)
}

/// Expert baselines are addressed by name; anything else is a checkpoint.
enum Driver {
    Expert,
    BangBang,
    Net(Model),
}

fn driver(spec: &str) -> Result<Driver> {
    match spec {
        "expert" => Ok(Driver::Expert),
        "bangbang" => Ok(Driver::BangBang),
        path => Ok(Driver::Net(load_model(Path::new(path))?)),
    }
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let r = Resolver::new(&a.common)?;
    let defaults = EvalConfig::default();
    let model: String = r.required(a.model, "model")?;
    let track_name: String = r.or(a.track, "track", TRACK_DEFAULT.into())?;
    let cfg = EvalConfig {
        n_trials: r.or(a.trials, "trials", defaults.n_trials)?,
        seed: r.or(a.seed, "seed", defaults.seed)?,
        timeout_s: r.or(a.timeout, "timeout", defaults.timeout_s)?,
        workers: r.or(a.workers, "workers", defaults.workers)?,
    };
    let report_path: Option<PathBuf> = r.opt(a.report, "report")?;
    let t = track(&track_name)?;
    let report = match driver(&model)? {
        Driver::Net(m) => evaluate(&m, &t, &cfg).map_err(eval_err)?,
        Driver::Expert => {
            let e = Expert::new(&t).map_err(|e| CliError::new(Kind::Sim, e))?;
            evaluate_with("expert", || Ok(e.clone()), &t, &cfg).map_err(eval_err)?
        }
        Driver::BangBang => {
            let b = BangBang::new(&t).map_err(|e| CliError::new(Kind::Sim, e))?;
            evaluate_with("bangbang", || Ok(b.clone()), &t, &cfg).map_err(eval_err)?
        }
    };
    print!("{}", EvalReport::table(std::slice::from_ref(&report)));
    if let Some(p) = report_path {
        write_file(&p, report.to_csv().as_bytes())?;
    }
    Ok(())
}

fn cmd_trace(a: TraceArgs) -> Result<()> {
    let r = Resolver::new(&a.common)?;
    let model: String = r.required(a.model, "model")?;
    let track_name: String = r.or(a.track, "track", TRACK_DEFAULT.into())?;
    let start = r.or(a.start, "start", 0)?;
    let seed = r.or(a.seed, "seed", 0)?;
    let timeout = r.or(a.timeout, "timeout", tinylidar::eval::DEFAULT_TIMEOUT_S)?;
    let out: PathBuf = r.required(a.out, "out")?;
    let t = track(&track_name)?;
    if start >= t.centerline.len() {
        return Err(CliError::new(
            Kind::Usage,
            format!(
                "--start {start} out of range; {} has {} waypoints",
                t.name,
                t.centerline.len()
            ),
        ));
    }
    let drv = driver(&model)?;
    let mut policy: Box<dyn Policy + '_> = match &drv {
        Driver::Expert => Box::new(Expert::new(&t).map_err(|e| CliError::new(Kind::Sim, e))?),
        Driver::BangBang => Box::new(BangBang::new(&t).map_err(|e| CliError::new(Kind::Sim, e))?),
        Driver::Net(m) => Box::new(NetPolicy::new(m).map_err(|e| CliError::new(Kind::Model, e))?),
    };
    let log = run_episode(&t, policy.as_mut(), start_state(&t, start), seed, timeout)
        .map_err(|e| CliError::new(Kind::Sim, e))?;
    write_file(&out, trace_csv(&log.ticks).as_bytes())?;
    let wobble = wobble_metric(&log.ticks).map_or_else(|_| "N/A".into(), |w| format!("{w:.6}"));
    println!(
        "{} after {} ticks, progress {:.2}%, wobble {wobble} rad/tick -> {}",
        log.outcome,
        log.ticks.len(),
        log.progress,
        out.display()
    );
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let r = Resolver::new(&a.common)?;
    let defaults = BenchConfig::default();
    let model: String = r.required(a.model, "model")?;
    let cfg = BenchConfig {
        iters: r.or(a.iters, "iters", defaults.iters)?,
        warmup: r.or(a.warmup, "warmup", defaults.warmup)?,
        seed: r.or(a.seed, "seed", defaults.seed)?,
    };
    if cfg.iters == 0 {
        return Err(CliError::new(Kind::Usage, "--iters must be positive"));
    }
    let m = model_or_name(&model, cfg.seed)?;
    let res = bench_latency(&m, &cfg).map_err(|e| CliError::new(Kind::Model, e))?;
    print!("{}{}", BenchResult::csv_header(), res.csv_row());
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> Result<()> {
    let r = Resolver::new(&a.common)?;
    let model: String = r.required(a.model, "model")?;
    let m = model_or_name(&model, 0)?;
    let spec = m.spec();
    let shapes = spec.shapes().map_err(|e| CliError::new(Kind::Model, e))?;
    let macs = spec.layer_macs();
    println!("model: {} ({})", spec.name, m.format_name());
    println!("input: {}", spec.input_length);
    println!(
        "{:<4} {:<30} {:>12} {:>10} {:>12}",
        "#", "layer", "output", "params", "MACs"
    );
    for (i, layer) in spec.layers.iter().enumerate() {
        println!(
            "{:<4} {:<30} {:>12} {:>10} {:>12}",
            i,
            layer.to_string(),
            shapes[i + 1].to_string(),
            layer.param_count(),
            macs[i]
        );
    }
    println!("params: {}", grouped(spec.count_params()));
    println!("macs: {}", grouped(spec.count_macs()));
    Ok(())
}

/// `1546960` -> `1,546,960`.
fn grouped(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Collect(a) => cmd_collect(a),
        Command::Train(a) => cmd_train(a),
        Command::Quantize(a) => cmd_quantize(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Inspect(a) => cmd_inspect(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error[{}]: {}", Kind::Usage, one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind, one_line(&e.msg));
            ExitCode::from(e.exit_code())
        }
    }
}
