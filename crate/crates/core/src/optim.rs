//! Optimizers and schedules: SGD with momentum, bias-corrected Adam, stepwise
//! learning-rate decay, global-norm gradient clipping. All updates operate on
//! the cell's flattened parameter vector, so one state layout serves every
//! tensor.

use crate::autodiff::Gradients;
use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum OptimKind {
    Sgd,
    Adam,
}

/// Optimizer state over a flat parameter vector. Serialized into checkpoints
/// so paused runs resume exactly.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimState {
    pub kind: OptimKind,
    /// SGD momentum coefficient.
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    /// SGD velocity, or Adam first moment.
    buf1: Vec<f64>,
    /// Adam second moment; empty for SGD.
    buf2: Vec<f64>,
}

impl OptimState {
    pub fn sgd(dim: usize, momentum: f64) -> Self {
        Self {
            kind: OptimKind::Sgd,
            momentum,
            beta1: 0.0,
            beta2: 0.0,
            eps: 0.0,
            step: 0,
            buf1: vec![0.0; dim],
            buf2: Vec::new(),
        }
    }

    pub fn adam(dim: usize) -> Self {
        Self {
            kind: OptimKind::Adam,
            momentum: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            buf1: vec![0.0; dim],
            buf2: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.buf1.len()
    }

    /// One update with the configured rule.
    pub fn apply(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<(), ModelError> {
        match self.kind {
            OptimKind::Sgd => sgd_step(params, grads, self, lr),
            OptimKind::Adam => adam_step(params, grads, self, lr),
        }
    }
}

fn check_shapes(params: &[f64], grads: &[f64], state: &OptimState) -> Result<(), ModelError> {
    if params.len() != grads.len() {
        return Err(ModelError::Dimension {
            what: "gradient length",
            expected: params.len(),
            got: grads.len(),
        });
    }
    if params.len() != state.buf1.len() {
        return Err(ModelError::Dimension {
            what: "optimizer state length",
            expected: params.len(),
            got: state.buf1.len(),
        });
    }
    Ok(())
}

/// v ← μ·v + g;  p ← p − lr·v.
pub fn sgd_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut OptimState,
    lr: f64,
) -> Result<(), ModelError> {
    check_shapes(params, grads, state)?;
    state.step += 1;
    let mu = state.momentum;
    for i in 0..params.len() {
        state.buf1[i] = mu * state.buf1[i] + grads[i];
        params[i] -= lr * state.buf1[i];
    }
    Ok(())
}

/// Bias-corrected Adam: m̂/(√v̂ + ε) scaling.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut OptimState,
    lr: f64,
) -> Result<(), ModelError> {
    check_shapes(params, grads, state)?;
    if state.buf2.len() != params.len() {
        return Err(ModelError::Dimension {
            what: "adam second-moment length",
            expected: params.len(),
            got: state.buf2.len(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.buf1[i] = b1 * state.buf1[i] + (1.0 - b1) * g;
        state.buf2[i] = b2 * state.buf2[i] + (1.0 - b2) * g * g;
        let m_hat = state.buf1[i] / c1;
        let v_hat = state.buf2[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// base_lr multiplied by `factor` once for every listed epoch already passed
/// (epoch ≥ e).
pub fn lr_schedule(epoch: usize, base_lr: f64, decay_epochs: &[usize], factor: f64) -> f64 {
    let hits = decay_epochs.iter().filter(|&&e| epoch >= e).count() as i32;
    base_lr * factor.powi(hits)
}

/// Scales all parameter gradients so the global L2 norm is at most max_norm.
/// Returns the pre-clip norm.
pub fn clip_gradients(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}

/// Flat-vector variant of [`clip_gradients`] for callers outside the
/// Gradients type.
pub fn clip_norm(v: &mut [f64], max_norm: f64) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for x in v.iter_mut() {
            *x *= s;
        }
    }
    norm
}
