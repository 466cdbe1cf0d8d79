//! Training engine: builds datasets from a config, runs minibatch gradient
//! descent with the exact reverse pass, evaluates per epoch, and writes the
//! run artifacts (metrics CSV, checkpoint, manifest, optional spectra trace).
//! Every reduction is ordered and every random draw is counter-keyed, so a
//! rerun from the manifest reproduces the metrics byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::autodiff::{batch_gradients, loss_and_dy, Target};
use crate::cell::{forward, LipschitzCell, Sequence};
use crate::checkpoint::{Checkpoint, CheckpointError};
use crate::config::{ExperimentConfig, Task};
use crate::data::{
    adding_task, epoch_batches, load_mnist, mnist_sequences, pendulum_trajectories,
    LabeledSequenceSet, PermutationSpec, SeqMode, Split,
};
use crate::error::{ConfigError, DataError, ModelError};
use crate::optim::{clip_gradients, lr_schedule, OptimKind, OptimState};
use crate::rng::{stream, stream_rng};
use crate::robustness::{perturb, pgd_attack, PerturbKind};
use crate::stability::EigTrace;

pub const MNIST_TRAIN_SPLIT: usize = 50_000;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("training diverged at epoch {epoch}: {msg}")]
    Diverged { epoch: usize, msg: String },
}

impl TrainError {
    /// Process exit code: 2 config, 3 data/IO, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            TrainError::Config(_) => 2,
            TrainError::Data(_) | TrainError::Io(_) | TrainError::Checkpoint(_) => 3,
            TrainError::Model(_) | TrainError::Diverged { .. } => 4,
        }
    }
}

/// Train and evaluation splits for one task.
pub struct TaskData {
    pub train: LabeledSequenceSet,
    pub eval: LabeledSequenceSet,
}

/// Materializes the datasets a config asks for. MNIST variants read IDX files
/// from `data_dir`; synthetic tasks generate from the master seed.
pub fn build_datasets(cfg: &ExperimentConfig) -> Result<TaskData, TrainError> {
    let take = |limit: usize, available: usize| -> usize {
        if limit == 0 {
            available
        } else {
            limit.min(available)
        }
    };
    match cfg.task {
        Task::MnistPixel | Task::MnistRow8 | Task::MnistPermuted => {
            let dir = cfg.data_dir.as_ref().ok_or_else(|| ConfigError::Invalid {
                key: "run.data_dir".into(),
                msg: "mnist tasks need a data directory".into(),
            })?;
            let mnist = load_mnist(dir)?;
            let mode = match cfg.task {
                Task::MnistRow8 => SeqMode::Row8,
                _ => SeqMode::Pixel,
            };
            let perm = matches!(cfg.task, Task::MnistPermuted)
                .then(|| PermutationSpec::generate(784 / mode.group(), cfg.permutation_seed));
            let n_train = take(cfg.train_items, MNIST_TRAIN_SPLIT);
            let n_eval = take(cfg.eval_items, mnist.test_images.count());
            let train = mnist_sequences(
                &mnist.train_images,
                &mnist.train_labels,
                0..n_train,
                mode,
                perm.as_ref(),
                Split::Train,
            )?;
            let eval = mnist_sequences(
                &mnist.test_images,
                &mnist.test_labels,
                0..n_eval,
                mode,
                perm.as_ref(),
                Split::Test,
            )?;
            Ok(TaskData { train, eval })
        }
        Task::Pendulum => {
            // generated on demand, so any requested count is available
            let want = |limit: usize, default: usize| if limit == 0 { default } else { limit };
            let eval_seed = cfg.seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut train = pendulum_trajectories(want(cfg.train_items, 1000), 0.1, 50, cfg.seed);
            train.split = Split::Train;
            let mut eval = pendulum_trajectories(want(cfg.eval_items, 200), 0.1, 50, eval_seed);
            eval.split = Split::Test;
            Ok(TaskData { train, eval })
        }
        Task::Adding => {
            let want = |limit: usize, default: usize| if limit == 0 { default } else { limit };
            let eval_seed = cfg.seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut train = adding_task(want(cfg.train_items, 2000), cfg.t_len, cfg.seed);
            train.split = Split::Train;
            let mut eval = adding_task(want(cfg.eval_items, 500), cfg.t_len, eval_seed);
            eval.split = Split::Test;
            Ok(TaskData { train, eval })
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    /// Accuracy for classification tasks, mean squared error otherwise.
    pub eval_metric: f64,
    pub lr: f64,
}

pub struct TrainOutput {
    pub cell: LipschitzCell,
    pub opt: OptimState,
    pub history: Vec<EpochRow>,
    pub metrics_csv: String,
    pub eig_trace: Option<EigTrace>,
    pub final_train_loss: f64,
    pub final_eval: f64,
}

/// Builds data, trains, and writes artifacts when the config names an output
/// directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TrainOutput, TrainError> {
    cfg.validate()?;
    let data = build_datasets(cfg)?;
    let out = in_pool(cfg.threads, || train_on(cfg, &data))?;
    if cfg.out_dir.is_some() {
        write_artifacts(cfg, &out)?;
    }
    Ok(out)
}

/// Runs `f` inside a dedicated pool of `threads` workers; 0 uses the global
/// pool. Results never depend on the count, only CPU usage does.
pub fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(f)
    }
}

/// The epoch loop on prebuilt datasets.
pub fn train_on(cfg: &ExperimentConfig, data: &TaskData) -> Result<TrainOutput, TrainError> {
    if data.train.is_empty() {
        return Err(TrainError::Model(ModelError::EmptyBatch));
    }
    let spec = cfg.cell_spec();
    let mut rng = stream_rng(cfg.seed, stream::INIT);
    let mut cell = LipschitzCell::random(&spec, &mut rng)?;
    let dim = cell.param_count();
    let mut opt = match cfg.opt {
        OptimKind::Sgd => OptimState::sgd(dim, cfg.momentum),
        OptimKind::Adam => OptimState::adam(dim),
    };
    let mut trace = if cfg.eig_stride > 0 {
        let mut t = EigTrace::new();
        t.record(0, &cell)?;
        Some(t)
    } else {
        None
    };

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut step: u64 = 0;
    for epoch in 0..cfg.epochs {
        let lr = lr_schedule(epoch, cfg.lr, &cfg.decay_epochs, cfg.decay_factor);
        let batches = epoch_batches(data.train.len(), cfg.batch_size, cfg.seed, epoch as u64);
        let mut loss_sum = 0.0;
        let mut items_seen = 0usize;
        for batch in &batches {
            let items: Vec<(&Sequence, &Target)> =
                batch.iter().map(|&i| data.train.item(i)).collect();
            let (loss, mut grads) = batch_gradients(&cell, &items).map_err(|e| match e {
                ModelError::NonFiniteState { step } => TrainError::Diverged {
                    epoch,
                    msg: format!("non-finite state at sequence step {step}"),
                },
                ModelError::NonFiniteGradient { step } => TrainError::Diverged {
                    epoch,
                    msg: format!("non-finite gradient at sequence step {step}"),
                },
                other => TrainError::Model(other),
            })?;
            if !loss.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    msg: "non-finite batch loss".into(),
                });
            }
            if cfg.clip > 0.0 {
                clip_gradients(&mut grads, cfg.clip);
            }
            let gvec = grads.to_vector();
            let mut theta = cell.param_vector();
            opt.apply(&mut theta, &gvec, lr)?;
            cell.set_param_vector(&theta)?;
            loss_sum += loss * items.len() as f64;
            items_seen += items.len();
            step += 1;
            if let Some(tr) = &mut trace {
                if step % cfg.eig_stride as u64 == 0 {
                    tr.record(step, &cell)?;
                }
            }
        }
        let train_loss = loss_sum / items_seen as f64;
        let eval = evaluate(&cell, &data.eval)?;
        log::info!(
            "epoch {epoch}: train loss {train_loss:.6}, eval {:.4}, lr {lr}",
            eval.metric
        );
        history.push(EpochRow {
            epoch,
            train_loss,
            eval_metric: eval.metric,
            lr,
        });
    }

    let metrics_csv = render_metrics_csv(&history);
    let final_train_loss = history.last().map_or(f64::NAN, |r| r.train_loss);
    let final_eval = history.last().map_or(f64::NAN, |r| r.eval_metric);
    Ok(TrainOutput {
        cell,
        opt,
        history,
        metrics_csv,
        eig_trace: trace,
        final_train_loss,
        final_eval,
    })
}

fn render_metrics_csv(history: &[EpochRow]) -> String {
    let mut s = String::from("epoch,train_loss,eval_metric,lr\n");
    for r in history {
        let _ = writeln!(s, "{},{},{},{}", r.epoch, r.train_loss, r.eval_metric, r.lr);
    }
    s
}

#[derive(Debug, Clone, Copy)]
pub struct EvalSummary {
    /// Accuracy for classification sets, mean squared error otherwise.
    pub metric: f64,
    pub mean_loss: f64,
    pub items: usize,
}

pub fn predicted_class(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in y.iter().enumerate() {
        if *v > y[best] {
            best = i;
        }
    }
    best
}

/// Forward-only evaluation; items run in parallel, reduced in order.
pub fn evaluate(cell: &LipschitzCell, set: &LabeledSequenceSet) -> Result<EvalSummary, ModelError> {
    if set.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let dyn_ = cell.dynamics();
    let rows: Vec<Result<(f64, f64), ModelError>> = set
        .sequences
        .par_iter()
        .zip(&set.targets)
        .map(|(seq, target)| {
            let (_, y) = crate::cell::forward_with(cell, &dyn_, seq, None)?;
            let (loss, _) = loss_and_dy(&y, target)?;
            let hit = match target {
                Target::Class(c) => (predicted_class(&y) == *c) as usize as f64,
                Target::Vector(_) => loss,
            };
            Ok((hit, loss))
        })
        .collect();
    let mut metric_sum = 0.0;
    let mut loss_sum = 0.0;
    for r in rows {
        let (m, l) = r?;
        metric_sum += m;
        loss_sum += l;
    }
    let n = set.len() as f64;
    Ok(EvalSummary {
        metric: metric_sum / n,
        mean_loss: loss_sum / n,
        items: set.len(),
    })
}

/// Accuracy (or MSE) after corrupting every input independently. Each item
/// gets its own derived noise seed so the corruption is reproducible and
/// order-independent.
pub fn evaluate_perturbed(
    cell: &LipschitzCell,
    set: &LabeledSequenceSet,
    kind: PerturbKind,
    amount: f64,
    seed: u64,
) -> Result<EvalSummary, ModelError> {
    if set.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let dyn_ = cell.dynamics();
    let rows: Vec<Result<(f64, f64), ModelError>> = set
        .sequences
        .par_iter()
        .zip(&set.targets)
        .enumerate()
        .map(|(i, (seq, target))| {
            let item_seed = seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let noisy = perturb(seq, kind, amount, item_seed)?;
            let (_, y) = crate::cell::forward_with(cell, &dyn_, &noisy, None)?;
            let (loss, _) = loss_and_dy(&y, target)?;
            let hit = match target {
                Target::Class(c) => (predicted_class(&y) == *c) as usize as f64,
                Target::Vector(_) => loss,
            };
            Ok((hit, loss))
        })
        .collect();
    let mut metric_sum = 0.0;
    let mut loss_sum = 0.0;
    for r in rows {
        let (m, l) = r?;
        metric_sum += m;
        loss_sum += l;
    }
    let n = set.len() as f64;
    Ok(EvalSummary {
        metric: metric_sum / n,
        mean_loss: loss_sum / n,
        items: set.len(),
    })
}

/// Accuracy after running the gradient-sign attack on every item. Only
/// defined for classification sets.
pub fn evaluate_attacked(
    cell: &LipschitzCell,
    set: &LabeledSequenceSet,
    eps_inf: f64,
    step: f64,
    iters: usize,
) -> Result<EvalSummary, ModelError> {
    if set.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let dyn_ = cell.dynamics();
    let rows: Vec<Result<(f64, f64), ModelError>> = set
        .sequences
        .par_iter()
        .zip(&set.targets)
        .map(|(seq, target)| {
            let label = match target {
                Target::Class(c) => *c,
                Target::Vector(_) => {
                    return Err(ModelError::TrajectoryMismatch {
                        msg: "attack evaluation needs classification targets".into(),
                    })
                }
            };
            let adv = pgd_attack(cell, seq, label, eps_inf, step, iters)?;
            let (_, y) = crate::cell::forward_with(cell, &dyn_, &adv, None)?;
            let (loss, _) = loss_and_dy(&y, target)?;
            let hit = (predicted_class(&y) == label) as usize as f64;
            Ok((hit, loss))
        })
        .collect();
    let mut metric_sum = 0.0;
    let mut loss_sum = 0.0;
    for r in rows {
        let (m, l) = r?;
        metric_sum += m;
        loss_sum += l;
    }
    let n = set.len() as f64;
    Ok(EvalSummary {
        metric: metric_sum / n,
        mean_loss: loss_sum / n,
        items: set.len(),
    })
}

pub const MANIFEST_VERSION: u32 = 1;

/// Everything needed to rerun an experiment exactly: the canonical config
/// text, its hash, hashes of any external data files, and the hash of the
/// metrics the run produced.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    pub config_text: String,
    pub config_sha256: String,
    pub data_sha256: Vec<(String, String)>,
    pub metrics_sha256: String,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, TrainError> {
        let text = std::fs::read_to_string(path)?;
        let m: Manifest =
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
                line: 0,
                msg: format!("manifest: {e}"),
            })?;
        if m.version != MANIFEST_VERSION {
            return Err(TrainError::Config(ConfigError::Parse {
                line: 0,
                msg: format!("unsupported manifest version {}", m.version),
            }));
        }
        Ok(m)
    }

    pub fn config(&self) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::from_text(&self.config_text)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

fn hash_data_files(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>, TrainError> {
    if !cfg.task.is_mnist() {
        return Ok(Vec::new());
    }
    let dir = cfg.data_dir.as_ref().expect("validated earlier");
    let mut out = Vec::with_capacity(MNIST_FILES.len());
    for name in MNIST_FILES {
        let bytes = std::fs::read(dir.join(name))?;
        out.push((name.to_string(), sha256_hex(&bytes)));
    }
    Ok(out)
}

/// Writes metrics.csv, checkpoint.json, manifest.json, and eig_trace.csv
/// (when recorded) into the config's output directory.
pub fn write_artifacts(cfg: &ExperimentConfig, out: &TrainOutput) -> Result<PathBuf, TrainError> {
    let dir = cfg
        .out_dir
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid {
            key: "run.out_dir".into(),
            msg: "artifact writing needs an output directory".into(),
        })?
        .clone();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("metrics.csv"), &out.metrics_csv)?;
    let ckpt = Checkpoint::capture(&out.cell, Some(&out.opt), cfg.epochs, cfg.seed);
    ckpt.save(&dir.join("checkpoint.json"))?;
    if let Some(trace) = &out.eig_trace {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        std::fs::write(dir.join("eig_trace.csv"), buf)?;
    }
    let config_text = cfg.to_text();
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        seed: cfg.seed,
        config_text: config_text.clone(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        data_sha256: hash_data_files(cfg)?,
        metrics_sha256: sha256_hex(out.metrics_csv.as_bytes()),
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(dir)
}

/// Per-class prediction for a single sequence.
pub fn classify(cell: &LipschitzCell, seq: &Sequence) -> Result<usize, ModelError> {
    let (_, y) = forward(cell, seq, None)?;
    Ok(predicted_class(&y))
}
