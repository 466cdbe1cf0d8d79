//! Experiment configuration: a flat key=value format with ini-style section
//! headers, named presets carrying the stock hyperparameters, and strict
//! validation. Unknown keys are rejected with their line number so silent
//! typos cannot change an experiment.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::cell::{CellSpec, Scheme, Variant};
use crate::error::ConfigError;
use crate::optim::OptimKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Task {
    MnistPixel,
    MnistRow8,
    MnistPermuted,
    Pendulum,
    Adding,
}

impl Task {
    pub fn parse(s: &str) -> Option<Task> {
        match s {
            "mnist-pixel" => Some(Task::MnistPixel),
            "mnist-row8" => Some(Task::MnistRow8),
            "mnist-permuted" => Some(Task::MnistPermuted),
            "pendulum" => Some(Task::Pendulum),
            "adding" => Some(Task::Adding),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::MnistPixel => "mnist-pixel",
            Task::MnistRow8 => "mnist-row8",
            Task::MnistPermuted => "mnist-permuted",
            Task::Pendulum => "pendulum",
            Task::Adding => "adding",
        }
    }

    pub fn is_mnist(&self) -> bool {
        matches!(self, Task::MnistPixel | Task::MnistRow8 | Task::MnistPermuted)
    }

    pub fn is_classification(&self) -> bool {
        self.is_mnist()
    }

    /// Input width per time step.
    pub fn p(&self) -> usize {
        match self {
            Task::MnistPixel | Task::MnistPermuted => 1,
            Task::MnistRow8 => 8,
            Task::Pendulum => 2,
            Task::Adding => 2,
        }
    }

    /// Decoder output width: class count or regression dimension.
    pub fn d_out(&self) -> usize {
        match self {
            Task::MnistPixel | Task::MnistRow8 | Task::MnistPermuted => 10,
            Task::Pendulum => 2,
            Task::Adding => 1,
        }
    }
}

/// Fully resolved experiment description. Everything a run reads is in here;
/// the canonical text form (`to_text`) is what manifests embed.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    // task
    pub task: Task,
    /// Sequence length for the adding task.
    pub t_len: usize,
    /// 0 means the full available split.
    pub train_items: usize,
    /// 0 means the full available split.
    pub eval_items: usize,
    pub permutation_seed: u64,
    // model
    pub n: usize,
    pub beta: f64,
    pub gamma_a: f64,
    pub gamma_w: f64,
    pub alpha: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub variant: Variant,
    pub init_sigma: f64,
    // optimizer
    pub opt: OptimKind,
    pub lr: f64,
    pub momentum: f64,
    pub decay_epochs: Vec<usize>,
    pub decay_factor: f64,
    /// 0 disables gradient clipping.
    pub clip: f64,
    // run
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub deterministic: bool,
    /// 0 lets the runtime pick its default thread count.
    pub threads: usize,
    pub out_dir: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    /// Record hidden-matrix spectra every this many optimizer steps; 0 = off.
    pub eig_stride: usize,
}

/// Named presets with the stock hyperparameters for each task family.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    match name {
        "mnist64" => Some(mnist_defaults(Task::MnistPixel, 64)),
        "mnist128" => Some(mnist_defaults(Task::MnistPixel, 128)),
        "pendulum" => Some(pendulum_defaults()),
        "adding" => Some(adding_defaults()),
        _ => None,
    }
}

pub const PRESET_NAMES: [&str; 4] = ["mnist64", "mnist128", "pendulum", "adding"];

fn mnist_defaults(task: Task, n: usize) -> ExperimentConfig {
    ExperimentConfig {
        task,
        t_len: 0,
        train_items: 0,
        eval_items: 0,
        permutation_seed: crate::data::DEFAULT_PERMUTATION_SEED,
        n,
        beta: 0.75,
        gamma_a: 0.001,
        gamma_w: 0.001,
        alpha: 1.0,
        dt: 0.03,
        scheme: Scheme::Euler,
        variant: Variant::Lipschitz,
        init_sigma: 0.1 / n as f64,
        opt: OptimKind::Adam,
        lr: if matches!(task, Task::MnistPermuted) { 0.0035 } else { 0.003 },
        momentum: 0.9,
        decay_epochs: vec![90],
        decay_factor: 0.1,
        clip: 0.0,
        epochs: 100,
        batch_size: 128,
        seed: 0,
        deterministic: true,
        threads: 0,
        out_dir: None,
        data_dir: None,
        eig_stride: 0,
    }
}

fn pendulum_defaults() -> ExperimentConfig {
    ExperimentConfig {
        task: Task::Pendulum,
        t_len: 0,
        train_items: 1000,
        eval_items: 200,
        permutation_seed: crate::data::DEFAULT_PERMUTATION_SEED,
        n: 2,
        beta: 0.75,
        gamma_a: 0.001,
        gamma_w: 0.001,
        alpha: 1.0,
        dt: 0.1,
        scheme: Scheme::Rk2,
        variant: Variant::Lipschitz,
        init_sigma: 0.3,
        opt: OptimKind::Adam,
        lr: 0.01,
        momentum: 0.9,
        decay_epochs: vec![200, 260],
        decay_factor: 0.1,
        clip: 10.0,
        epochs: 300,
        batch_size: 32,
        seed: 0,
        deterministic: true,
        threads: 0,
        out_dir: None,
        data_dir: None,
        eig_stride: 0,
    }
}

fn adding_defaults() -> ExperimentConfig {
    ExperimentConfig {
        task: Task::Adding,
        t_len: 30,
        train_items: 24_000,
        eval_items: 500,
        permutation_seed: crate::data::DEFAULT_PERMUTATION_SEED,
        n: 32,
        beta: 0.75,
        gamma_a: 0.001,
        gamma_w: 0.001,
        alpha: 1.0,
        dt: 0.1,
        scheme: Scheme::Euler,
        variant: Variant::Lipschitz,
        init_sigma: 0.1 / 32.0,
        opt: OptimKind::Adam,
        lr: 0.01,
        momentum: 0.9,
        decay_epochs: vec![],
        decay_factor: 0.1,
        clip: 10.0,
        epochs: 10,
        batch_size: 64,
        seed: 0,
        deterministic: true,
        threads: 0,
        out_dir: None,
        data_dir: None,
        eig_stride: 0,
    }
}

/// Baseline defaults for a bare task name; presets refine these.
pub fn defaults_for(task: Task) -> ExperimentConfig {
    match task {
        Task::MnistPixel => mnist_defaults(Task::MnistPixel, 64),
        Task::MnistRow8 => mnist_defaults(Task::MnistRow8, 64),
        Task::MnistPermuted => mnist_defaults(Task::MnistPermuted, 64),
        Task::Pendulum => pendulum_defaults(),
        Task::Adding => adding_defaults(),
    }
}

impl ExperimentConfig {
    /// The model description this config trains.
    pub fn cell_spec(&self) -> CellSpec {
        CellSpec {
            n: self.n,
            p: self.task.p(),
            d_out: self.task.d_out(),
            beta: self.beta,
            gamma_a: self.gamma_a,
            gamma_w: self.gamma_w,
            alpha: self.alpha,
            dt: self.dt,
            scheme: self.scheme,
            variant: self.variant,
            init_sigma: self.init_sigma,
        }
    }

    /// Canonical text form: every field explicit, fixed order. Parsing this
    /// text reproduces the config exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[task]");
        let _ = writeln!(s, "name = {}", self.task.name());
        let _ = writeln!(s, "t_len = {}", self.t_len);
        let _ = writeln!(s, "train_items = {}", self.train_items);
        let _ = writeln!(s, "eval_items = {}", self.eval_items);
        let _ = writeln!(s, "permutation_seed = {}", self.permutation_seed);
        let _ = writeln!(s);
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "beta = {}", self.beta);
        let _ = writeln!(s, "gamma_a = {}", self.gamma_a);
        let _ = writeln!(s, "gamma_w = {}", self.gamma_w);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "dt = {}", self.dt);
        let _ = writeln!(s, "scheme = {}", scheme_name(self.scheme));
        let _ = writeln!(s, "variant = {}", variant_name(self.variant));
        let _ = writeln!(s, "init_sigma = {}", self.init_sigma);
        let _ = writeln!(s);
        let _ = writeln!(s, "[optim]");
        let _ = writeln!(s, "kind = {}", optim_name(self.opt));
        let _ = writeln!(s, "lr = {}", self.lr);
        let _ = writeln!(s, "momentum = {}", self.momentum);
        let epochs_list = self
            .decay_epochs
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(s, "decay_epochs = {epochs_list}");
        let _ = writeln!(s, "decay_factor = {}", self.decay_factor);
        let _ = writeln!(s, "clip = {}", self.clip);
        let _ = writeln!(s);
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "deterministic = {}", self.deterministic);
        let _ = writeln!(s, "threads = {}", self.threads);
        if let Some(dir) = &self.out_dir {
            let _ = writeln!(s, "out_dir = {}", dir.display());
        }
        if let Some(dir) = &self.data_dir {
            let _ = writeln!(s, "data_dir = {}", dir.display());
        }
        let _ = writeln!(s, "eig_stride = {}", self.eig_stride);
        s
    }

    /// Parses config text. The task name must appear before any key that
    /// depends on task defaults, so `name` is required first in `[task]`.
    pub fn from_text(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg: Option<ExperimentConfig> = None;
        let mut section = String::new();
        let mut pending: Vec<(usize, String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                    line: line_no,
                    msg: "unterminated section header".into(),
                })?;
                if !matches!(name, "task" | "model" | "optim" | "run") {
                    return Err(ConfigError::Parse {
                        line: line_no,
                        msg: format!("unknown section [{name}]"),
                    });
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                msg: "expected key = value".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if section.is_empty() {
                return Err(ConfigError::Parse {
                    line: line_no,
                    msg: "key before any [section] header".into(),
                });
            }
            let scoped = format!("{section}.{key}");
            if scoped == "task.name" {
                let task = Task::parse(value).ok_or_else(|| ConfigError::Parse {
                    line: line_no,
                    msg: format!("unknown task {value:?}"),
                })?;
                if cfg.is_some() {
                    return Err(ConfigError::Parse {
                        line: line_no,
                        msg: "task.name given twice".into(),
                    });
                }
                cfg = Some(defaults_for(task));
            } else {
                pending.push((line_no, scoped, value.to_string()));
            }
        }
        let mut cfg = cfg.ok_or_else(|| ConfigError::Parse {
            line: 0,
            msg: "missing required key task.name".into(),
        })?;
        for (line, key, value) in pending {
            apply_key(&mut cfg, &key, &value).map_err(|e| match e {
                ConfigError::Invalid { key, msg } => ConfigError::Parse {
                    line,
                    msg: format!("{key}: {msg}"),
                },
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line, key },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `section.key=value` override to an existing config.
    pub fn set(&mut self, scoped_key: &str, value: &str) -> Result<(), ConfigError> {
        apply_key(self, scoped_key, value)?;
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, msg: String| -> Result<(), ConfigError> {
            Err(ConfigError::Invalid {
                key: key.to_string(),
                msg,
            })
        };
        if self.n == 0 {
            return bad("model.n", "must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad("model.beta", format!("{} outside [0, 1]", self.beta));
        }
        for (key, g) in [("model.gamma_a", self.gamma_a), ("model.gamma_w", self.gamma_w)] {
            if !g.is_finite() || g < 0.0 {
                return bad(key, format!("{g} must be finite and nonnegative"));
            }
        }
        if !(0.0..=2.0).contains(&self.alpha) {
            return bad("model.alpha", format!("{} outside [0, 2]", self.alpha));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("model.dt", format!("{} must be positive", self.dt));
        }
        if !(self.init_sigma >= 0.0) || !self.init_sigma.is_finite() {
            return bad("model.init_sigma", format!("{} must be nonnegative", self.init_sigma));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return bad("optim.lr", format!("{} must be positive", self.lr));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("optim.momentum", format!("{} outside [0, 1)", self.momentum));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return bad("optim.decay_factor", format!("{} outside (0, 1]", self.decay_factor));
        }
        if !self.clip.is_finite() || self.clip < 0.0 {
            return bad("optim.clip", format!("{} must be nonnegative (0 disables)", self.clip));
        }
        if self.epochs == 0 {
            return bad("run.epochs", "must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("run.batch_size", "must be at least 1".into());
        }
        if matches!(self.task, Task::Adding) && self.t_len < 2 {
            return bad("task.t_len", format!("{} too short for two markers", self.t_len));
        }
        Ok(())
    }
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Euler => "euler",
        Scheme::Rk2 => "rk2",
    }
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Lipschitz => "lipschitz",
        Variant::NeuralOde => "neural-ode",
        Variant::Antisymmetric => "antisymmetric",
    }
}

fn optim_name(o: OptimKind) -> &'static str {
    match o {
        OptimKind::Sgd => "sgd",
        OptimKind::Adam => "adam",
    }
}

fn apply_key(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    let invalid = |key: &str, msg: String| ConfigError::Invalid {
        key: key.to_string(),
        msg,
    };
    let as_usize = |key: &str, v: &str| -> Result<usize, ConfigError> {
        v.parse().map_err(|_| invalid(key, format!("{v:?} is not a nonnegative integer")))
    };
    let as_u64 = |key: &str, v: &str| -> Result<u64, ConfigError> {
        v.parse().map_err(|_| invalid(key, format!("{v:?} is not a nonnegative integer")))
    };
    let as_f64 = |key: &str, v: &str| -> Result<f64, ConfigError> {
        v.parse().map_err(|_| invalid(key, format!("{v:?} is not a number")))
    };
    let as_bool = |key: &str, v: &str| -> Result<bool, ConfigError> {
        match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(invalid(key, format!("{v:?} is not true/false"))),
        }
    };
    match key {
        "task.name" => {
            return Err(invalid(key, "task.name may only appear first in a config file".into()))
        }
        "task.t_len" => cfg.t_len = as_usize(key, value)?,
        "task.train_items" => cfg.train_items = as_usize(key, value)?,
        "task.eval_items" => cfg.eval_items = as_usize(key, value)?,
        "task.permutation_seed" => cfg.permutation_seed = as_u64(key, value)?,
        "model.n" => {
            cfg.n = as_usize(key, value)?;
            if cfg.task.is_mnist() {
                // keep the stock initialization scale tied to the width
                cfg.init_sigma = 0.1 / cfg.n.max(1) as f64;
            }
        }
        "model.beta" => cfg.beta = as_f64(key, value)?,
        "model.gamma_a" => cfg.gamma_a = as_f64(key, value)?,
        "model.gamma_w" => cfg.gamma_w = as_f64(key, value)?,
        "model.alpha" => cfg.alpha = as_f64(key, value)?,
        "model.dt" => cfg.dt = as_f64(key, value)?,
        "model.scheme" => {
            cfg.scheme = match value {
                "euler" => Scheme::Euler,
                "rk2" => Scheme::Rk2,
                _ => return Err(invalid(key, format!("{value:?} is not euler/rk2"))),
            }
        }
        "model.variant" => {
            cfg.variant = match value {
                "lipschitz" => Variant::Lipschitz,
                "neural-ode" => Variant::NeuralOde,
                "antisymmetric" => Variant::Antisymmetric,
                _ => {
                    return Err(invalid(
                        key,
                        format!("{value:?} is not lipschitz/neural-ode/antisymmetric"),
                    ))
                }
            }
        }
        "model.init_sigma" => cfg.init_sigma = as_f64(key, value)?,
        "optim.kind" => {
            cfg.opt = match value {
                "sgd" => OptimKind::Sgd,
                "adam" => OptimKind::Adam,
                _ => return Err(invalid(key, format!("{value:?} is not sgd/adam"))),
            }
        }
        "optim.lr" => cfg.lr = as_f64(key, value)?,
        "optim.momentum" => cfg.momentum = as_f64(key, value)?,
        "optim.decay_epochs" => {
            let mut epochs = Vec::new();
            for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                epochs.push(as_usize(key, part)?);
            }
            cfg.decay_epochs = epochs;
        }
        "optim.decay_factor" => cfg.decay_factor = as_f64(key, value)?,
        "optim.clip" => cfg.clip = as_f64(key, value)?,
        "run.epochs" => cfg.epochs = as_usize(key, value)?,
        "run.batch_size" => cfg.batch_size = as_usize(key, value)?,
        "run.seed" => cfg.seed = as_u64(key, value)?,
        "run.deterministic" => cfg.deterministic = as_bool(key, value)?,
        "run.threads" => cfg.threads = as_usize(key, value)?,
        "run.out_dir" => cfg.out_dir = Some(PathBuf::from(value)),
        "run.data_dir" => cfg.data_dir = Some(PathBuf::from(value)),
        "run.eig_stride" => cfg.eig_stride = as_usize(key, value)?,
        other => {
            return Err(ConfigError::UnknownKey {
                line: 0,
                key: other.to_string(),
            })
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_exist_and_validate() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
        }
        assert!(preset("mnist1024").is_none());
    }

    #[test]
    fn stock_mnist_hyperparameters() {
        let cfg = preset("mnist128").unwrap();
        assert_eq!(cfg.n, 128);
        assert_eq!(cfg.lr, 0.003);
        assert_eq!(cfg.decay_factor, 0.1);
        assert_eq!(cfg.decay_epochs, vec![90]);
        assert_eq!(cfg.beta, 0.75);
        assert_eq!(cfg.gamma_a, 0.001);
        assert_eq!(cfg.gamma_w, 0.001);
        assert_eq!(cfg.dt, 0.03);
        assert!((cfg.init_sigma - 0.1 / 128.0).abs() < 1e-15);
    }

    #[test]
    fn text_round_trip_is_exact() {
        for name in PRESET_NAMES {
            let mut cfg = preset(name).unwrap();
            cfg.out_dir = Some(PathBuf::from("runs/demo"));
            cfg.seed = 42;
            let text = cfg.to_text();
            let back = ExperimentConfig::from_text(&text).unwrap();
            assert_eq!(back, cfg, "round trip failed for preset {name}");
        }
    }

    #[test]
    fn minimal_file_uses_task_defaults() {
        let cfg = ExperimentConfig::from_text("[task]\nname = adding\n").unwrap();
        assert_eq!(cfg.task, Task::Adding);
        assert_eq!(cfg.n, 32);
        assert_eq!(cfg.t_len, 30);
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let text = "[task]\nname = adding\n\n[model]\nwidth = 7\n";
        match ExperimentConfig::from_text(text) {
            Err(ConfigError::UnknownKey { line, key }) => {
                assert_eq!(line, 5);
                assert_eq!(key, "model.width");
            }
            other => panic!("expected unknown key, got {other:?}"),
        }
    }

    #[test]
    fn unknown_section_rejected() {
        let text = "[task]\nname = adding\n[extras]\nx = 1\n";
        assert!(matches!(
            ExperimentConfig::from_text(text),
            Err(ConfigError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn missing_task_name_rejected() {
        assert!(matches!(
            ExperimentConfig::from_text("[model]\nn = 4\n"),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn out_of_range_values_rejected() {
        let mut cfg = preset("adding").unwrap();
        assert!(cfg.set("model.beta", "1.5").is_err());
        let mut cfg2 = preset("adding").unwrap();
        assert!(cfg2.set("model.alpha", "2.5").is_err());
        let mut cfg3 = preset("adding").unwrap();
        assert!(cfg3.set("optim.lr", "0").is_err());
        cfg = preset("adding").unwrap();
        assert!(cfg.set("model.dt", "-0.1").is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# experiment\n[task]\nname = pendulum\n\n# width\n[model]\nn = 4\n";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(cfg.n, 4);
        assert_eq!(cfg.task, Task::Pendulum);
    }

    #[test]
    fn width_override_rescales_mnist_init() {
        let text = "[task]\nname = mnist-pixel\n[model]\nn = 32\n";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        assert!((cfg.init_sigma - 0.1 / 32.0).abs() < 1e-15);
        // explicit sigma after n wins
        let text2 = "[task]\nname = mnist-pixel\n[model]\nn = 32\ninit_sigma = 0.05\n";
        let cfg2 = ExperimentConfig::from_text(text2).unwrap();
        assert_eq!(cfg2.init_sigma, 0.05);
    }

    #[test]
    fn decay_list_parses_including_empty() {
        let mut cfg = preset("adding").unwrap();
        cfg.set("optim.decay_epochs", "10, 20,30").unwrap();
        assert_eq!(cfg.decay_epochs, vec![10, 20, 30]);
        cfg.set("optim.decay_epochs", "").unwrap();
        assert!(cfg.decay_epochs.is_empty());
    }

    #[test]
    fn permuted_preset_learning_rate() {
        let cfg = defaults_for(Task::MnistPermuted);
        assert_eq!(cfg.lr, 0.0035);
        assert_eq!(cfg.permutation_seed, 92916);
    }

    #[test]
    fn cell_spec_dimensions_follow_task() {
        let cfg = preset("pendulum").unwrap();
        let spec = cfg.cell_spec();
        assert_eq!(spec.p, 2);
        assert_eq!(spec.d_out, 2);
        let cfg = preset("mnist64").unwrap();
        let spec = cfg.cell_spec();
        assert_eq!(spec.p, 1);
        assert_eq!(spec.d_out, 10);
    }
}
