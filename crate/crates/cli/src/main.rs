//! Batch front end for the recurrent-unit toolkit. Every subcommand reads a
//! resolved experiment config (preset, file, or manifest, plus --set
//! overrides), does one job, and emits a tidy CSV or JSON artifact for
//! scripts and plotting tools. No interactive behavior.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand_distr::{Distribution, Normal};

use liprnn_core::cell::LipschitzCell;
use liprnn_core::checkpoint::Checkpoint;
use liprnn_core::config::{preset, ExperimentConfig, PRESET_NAMES};
use liprnn_core::error::ConfigError;
use liprnn_core::linalg::{general_eigs, DenseMatrix, MAX_N};
use liprnn_core::params::SymSkewParam;
use liprnn_core::rng::{item_rng, stream};
use liprnn_core::robustness::{hessian_metrics, write_noise_curve_csv, PerturbKind};
use liprnn_core::stability::{certify, decay_rate};
use liprnn_core::train::{
    build_datasets, evaluate, evaluate_attacked, evaluate_perturbed, in_pool, run_experiment,
    Manifest, TrainError,
};

const EXIT_CODES: &str = "Exit codes:\n  0  success\n  2  config error\n  3  data or IO error\n  4  numerical divergence";

#[derive(Parser)]
#[command(
    name = "liprnn",
    version,
    about = "Train and probe continuous-time recurrent units with certified contraction",
    after_help = format!("{EXIT_CODES}\n\nEnvironment:\n  LIPRNN_DATA  fallback data directory when the config names none")
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a model and write metrics, checkpoint, and manifest
    #[command(after_help = "Artifacts in --out DIR: metrics.csv (epoch,train_loss,eval_metric,lr),\ncheckpoint.json, manifest.json, eig_trace.csv (step,maxReA,maxReW; only with\nrun.eig_stride > 0). Rerunning with --manifest reproduces metrics.csv bitwise.")]
    Train(TrainArgs),
    /// Certify a checkpoint's hidden dynamics and fit its empirical decay rate
    Stability(StabilityArgs),
    /// Empirical spectra of random symmetric-skew draws against the predicted bounds
    #[command(after_help = "CSV columns: beta,trial,min_re,max_re,bound_lo,bound_hi. The same trial\nindex reuses the same random draw at every beta, so rows with a fixed trial\nshow how the bounds tighten as beta grows.")]
    SpectrumSweep(SweepArgs),
    /// Train while recording extreme eigenvalue real parts of the hidden matrices
    #[command(name = "eig-track", after_help = "CSV columns: step,maxReA,maxReW (one row per recorded optimizer step).")]
    EigTrack(EigTrackArgs),
    /// Retrain over an alpha or beta grid and tabulate final losses
    #[command(after_help = "CSV columns: param,value,seed,final_train_loss,final_eval. eval is test\naccuracy for classification tasks and test MSE otherwise.")]
    Ablate(AblateArgs),
    /// Accuracy under input corruption at increasing amounts
    #[command(after_help = "CSV columns: amount,accuracy,stderr (binomial standard error).")]
    Perturb(PerturbArgs),
    /// Accuracy under the projected signed-gradient attack
    Attack(AttackArgs),
    /// Curvature metrics of the training loss at a checkpoint
    Hessian(HessianArgs),
    /// Print the toolkit version
    Version,
}

/// Config sources shared by the commands that need a resolved experiment.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Named preset: mnist64, mnist128, pendulum, adding
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Config file (key=value lines under [task]/[model]/[optim]/[run])
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. --set model.n=32 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Data directory holding the four MNIST IDX files
    #[arg(long = "data", value_name = "DIR")]
    data_dir: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Rerun the exact experiment a previous run's manifest describes
    #[arg(long, conflicts_with_all = ["preset", "config"])]
    manifest: Option<PathBuf>,
    /// Artifact directory
    #[arg(long = "out", value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Print the resolved config and exit without training
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Trajectory pairs for the decay fit
    #[arg(long, default_value_t = 8)]
    trials: usize,
    /// Integration horizon for the decay fit
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Matrix size per draw
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Independent draws per beta
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Comma-separated beta values in [0, 1]
    #[arg(
        long = "beta-grid",
        value_delimiter = ',',
        default_value = "0,0.125,0.25,0.375,0.5,0.625,0.75,0.875,1"
    )]
    beta_grid: Vec<f64>,
    #[arg(long, default_value_t = 0.001)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EigTrackArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Record spectra every this many optimizer steps
    #[arg(long, default_value_t = 10)]
    stride: usize,
    /// Artifact directory; without it the trace CSV goes to stdout
    #[arg(long = "out", value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Comma-separated alpha values to retrain over
    #[arg(long = "alpha-grid", value_delimiter = ',')]
    alpha_grid: Vec<f64>,
    /// Comma-separated beta values to retrain over
    #[arg(long = "beta-grid", value_delimiter = ',')]
    beta_grid: Vec<f64>,
    /// Comma-separated master seeds, one full run per (value, seed)
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PerturbArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Corruption kind: white | saltpepper
    #[arg(long, default_value = "white")]
    kind: String,
    /// Comma-separated corruption amounts (sigma or flip probability)
    #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.2,0.3")]
    amounts: Vec<f64>,
    /// Noise seed; defaults to the config's master seed
    #[arg(long)]
    eval_seed: Option<u64>,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Max-norm ball radius around each clean input
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Signed-gradient step size
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, default_value_t = 7)]
    iters: usize,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HessianArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Training items in the probed loss batch
    #[arg(long, default_value_t = 64)]
    items: usize,
    /// Random probe vectors for the trace estimate
    #[arg(long, default_value_t = 16)]
    probes: usize,
    /// Power iteration cap
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: &Cli) -> Result<(), TrainError> {
    match &cli.cmd {
        Cmd::Train(a) => cmd_train(a),
        Cmd::Stability(a) => cmd_stability(a),
        Cmd::SpectrumSweep(a) => cmd_spectrum_sweep(a),
        Cmd::EigTrack(a) => cmd_eig_track(a),
        Cmd::Ablate(a) => cmd_ablate(a),
        Cmd::Perturb(a) => cmd_perturb(a),
        Cmd::Attack(a) => cmd_attack(a),
        Cmd::Hessian(a) => cmd_hessian(a),
        Cmd::Version => {
            println!("liprnn {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn resolve_config(
    args: &ConfigArgs,
    manifest: Option<&Path>,
    out_dir: Option<&Path>,
) -> Result<ExperimentConfig, TrainError> {
    let mut cfg = if let Some(mpath) = manifest {
        Manifest::load(mpath)?.config()?
    } else if let Some(name) = &args.preset {
        preset(name).ok_or_else(|| ConfigError::Invalid {
            key: "preset".into(),
            msg: format!("unknown preset '{name}'; available: {}", PRESET_NAMES.join(", ")),
        })?
    } else if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
        ExperimentConfig::from_text(&text)?
    } else {
        return Err(ConfigError::Invalid {
            key: "config".into(),
            msg: "pass --preset NAME, --config FILE, or --manifest FILE".into(),
        }
        .into());
    };
    for kv in &args.set {
        let (key, value) = kv.split_once('=').ok_or_else(|| ConfigError::Invalid {
            key: kv.clone(),
            msg: "expected KEY=VALUE".into(),
        })?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(d) = &args.data_dir {
        cfg.data_dir = Some(d.clone());
    }
    if cfg.data_dir.is_none() {
        if let Ok(d) = std::env::var("LIPRNN_DATA") {
            if !d.is_empty() {
                cfg.data_dir = Some(PathBuf::from(d));
            }
        }
    }
    if let Some(o) = out_dir {
        cfg.out_dir = Some(o.to_path_buf());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), TrainError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            std::fs::write(p, content)?;
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn load_cell(path: &Path) -> Result<LipschitzCell, TrainError> {
    Ok(Checkpoint::load(path)?.cell)
}

fn require_classification(cfg: &ExperimentConfig, what: &str) -> Result<(), TrainError> {
    if cfg.task.is_classification() {
        Ok(())
    } else {
        Err(ConfigError::Invalid {
            key: "task.name".into(),
            msg: format!("{what} needs a classification task, got {}", cfg.task.name()),
        }
        .into())
    }
}

fn cmd_train(args: &TrainArgs) -> Result<(), TrainError> {
    let cfg = resolve_config(&args.cfg, args.manifest.as_deref(), args.out_dir.as_deref())?;
    if args.dry_run {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    let out = run_experiment(&cfg)?;
    println!(
        "final_train_loss={} final_eval={}",
        out.final_train_loss, out.final_eval
    );
    Ok(())
}

fn cmd_stability(args: &StabilityArgs) -> Result<(), TrainError> {
    let cell = load_cell(&args.checkpoint)?;
    let dynamics = cell.dynamics();
    let report = certify(&dynamics.a, &dynamics.w, 1.0)?;
    let x_const = vec![0.0; cell.p()];
    let decay = decay_rate(&cell, &x_const, args.trials, args.horizon, args.seed)?;
    let doc = serde_json::json!({
        "certified": report.certified(),
        "report": report,
        "decay": decay,
    });
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    write_output(args.out.as_deref(), &format!("{text}\n"))
}

fn cmd_spectrum_sweep(args: &SweepArgs) -> Result<(), TrainError> {
    if args.n == 0 || args.n > MAX_N {
        return Err(ConfigError::Invalid {
            key: "n".into(),
            msg: format!("matrix size must be in 1..={MAX_N}"),
        }
        .into());
    }
    if args.trials == 0 {
        return Err(ConfigError::Invalid {
            key: "trials".into(),
            msg: "need at least one draw".into(),
        }
        .into());
    }
    for &beta in &args.beta_grid {
        if !(0.0..=1.0).contains(&beta) {
            return Err(ConfigError::Invalid {
                key: "beta-grid".into(),
                msg: format!("beta {beta} outside [0, 1]"),
            }
            .into());
        }
    }
    let n = args.n;
    let sigma = 1.0 / (n as f64).sqrt();
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    let mut csv = String::from("beta,trial,min_re,max_re,bound_lo,bound_hi\n");
    for &beta in &args.beta_grid {
        for trial in 0..args.trials {
            // Same trial index draws the same M at every beta, so a fixed
            // trial traces one matrix across the whole grid.
            let mut rng = item_rng(args.seed, stream::SWEEP, trial as u64);
            let m = DenseMatrix::from_fn(n, n, |_, _| normal.sample(&mut rng));
            let param = SymSkewParam::new(m, beta, args.gamma)?;
            let s = param.materialize();
            let re = general_eigs(&s).map_err(liprnn_core::error::ModelError::from)?;
            let bounds = param
                .spectrum_interval()
                .map_err(liprnn_core::error::ModelError::from)?;
            let _ = writeln!(
                csv,
                "{beta},{trial},{},{},{},{}",
                re.min_real(),
                re.max_real(),
                bounds.lo,
                bounds.hi
            );
        }
    }
    write_output(args.out.as_deref(), &csv)
}

fn cmd_eig_track(args: &EigTrackArgs) -> Result<(), TrainError> {
    if args.stride == 0 {
        return Err(ConfigError::Invalid {
            key: "stride".into(),
            msg: "stride must be positive".into(),
        }
        .into());
    }
    let mut cfg = resolve_config(&args.cfg, None, args.out_dir.as_deref())?;
    cfg.eig_stride = args.stride;
    let out = run_experiment(&cfg)?;
    let trace = out.eig_trace.expect("positive stride records a trace");
    if cfg.out_dir.is_none() {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        print!("{}", String::from_utf8(buf).expect("csv is utf8"));
    }
    Ok(())
}

fn cmd_ablate(args: &AblateArgs) -> Result<(), TrainError> {
    if args.alpha_grid.is_empty() && args.beta_grid.is_empty() {
        return Err(ConfigError::Invalid {
            key: "grid".into(),
            msg: "pass --alpha-grid and/or --beta-grid".into(),
        }
        .into());
    }
    if args.seeds.is_empty() {
        return Err(ConfigError::Invalid {
            key: "seeds".into(),
            msg: "need at least one seed".into(),
        }
        .into());
    }
    let base = resolve_config(&args.cfg, None, None)?;
    let mut csv = String::from("param,value,seed,final_train_loss,final_eval\n");
    let grids: [(&str, &[f64]); 2] = [("alpha", &args.alpha_grid), ("beta", &args.beta_grid)];
    for (param, values) in grids {
        for &value in values {
            for &seed in &args.seeds {
                let mut cfg = base.clone();
                cfg.out_dir = None;
                cfg.seed = seed;
                match param {
                    "alpha" => cfg.alpha = value,
                    _ => cfg.beta = value,
                }
                cfg.validate()?;
                log::info!("ablate {param}={value} seed={seed}");
                let out = run_experiment(&cfg)?;
                let _ = writeln!(
                    csv,
                    "{param},{value},{seed},{},{}",
                    out.final_train_loss, out.final_eval
                );
            }
        }
    }
    write_output(args.out.as_deref(), &csv)
}

fn cmd_perturb(args: &PerturbArgs) -> Result<(), TrainError> {
    let cfg = resolve_config(&args.cfg, None, None)?;
    require_classification(&cfg, "the corruption curve")?;
    let kind = PerturbKind::parse(&args.kind).ok_or_else(|| ConfigError::Invalid {
        key: "kind".into(),
        msg: format!("unknown kind '{}'; use white or saltpepper", args.kind),
    })?;
    let cell = load_cell(&args.checkpoint)?;
    let data = build_datasets(&cfg)?;
    let seed = args.eval_seed.unwrap_or(cfg.seed);
    let rows = in_pool(cfg.threads, || -> Result<Vec<(f64, f64, f64)>, TrainError> {
        let mut rows = Vec::with_capacity(args.amounts.len());
        for &amount in &args.amounts {
            let summary = evaluate_perturbed(&cell, &data.eval, kind, amount, seed)?;
            let se = (summary.metric * (1.0 - summary.metric) / summary.items as f64).sqrt();
            rows.push((amount, summary.metric, se));
        }
        Ok(rows)
    })?;
    let mut buf = Vec::new();
    write_noise_curve_csv(&rows, &mut buf)?;
    write_output(
        args.out.as_deref(),
        &String::from_utf8(buf).expect("csv is utf8"),
    )
}

fn cmd_attack(args: &AttackArgs) -> Result<(), TrainError> {
    let cfg = resolve_config(&args.cfg, None, None)?;
    require_classification(&cfg, "the attack")?;
    let cell = load_cell(&args.checkpoint)?;
    let data = build_datasets(&cfg)?;
    let (clean, attacked) = in_pool(cfg.threads, || {
        let clean = evaluate(&cell, &data.eval)?;
        let attacked = evaluate_attacked(&cell, &data.eval, args.eps, args.step, args.iters)?;
        Ok::<_, TrainError>((clean, attacked))
    })?;
    let doc = serde_json::json!({
        "eps": args.eps,
        "step": args.step,
        "iters": args.iters,
        "items": clean.items,
        "clean_accuracy": clean.metric,
        "attacked_accuracy": attacked.metric,
        "clean_loss": clean.mean_loss,
        "attacked_loss": attacked.mean_loss,
    });
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    write_output(args.out.as_deref(), &format!("{text}\n"))
}

fn cmd_hessian(args: &HessianArgs) -> Result<(), TrainError> {
    let cfg = resolve_config(&args.cfg, None, None)?;
    let cell = load_cell(&args.checkpoint)?;
    let data = build_datasets(&cfg)?;
    let count = args.items.min(data.train.len());
    let batch: Vec<_> = (0..count).map(|i| data.train.item(i)).collect();
    let metrics = in_pool(cfg.threads, || {
        hessian_metrics(&cell, &batch, args.probes, args.iters, args.seed)
    })?;
    write_output(args.out.as_deref(), &format!("{}\n", metrics.to_json()))
}
