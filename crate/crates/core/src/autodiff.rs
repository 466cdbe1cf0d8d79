//! Exact reverse-mode gradients through the recorded forward pass.
//!
//! The backward pass mirrors the forward composition step by step: through
//! the decoder, then backward through each integrator step via its adjoint,
//! finally pulled back through the symmetric-skew map. No tape, no graph:
//! this model family is the only thing differentiated here.

use rayon::prelude::*;

use crate::cell::{forward_with, LipschitzCell, Scheme, Sequence, Trajectory};
use crate::error::ModelError;
use crate::linalg::{matvec_transpose_into, DenseMatrix};
use crate::params::grad_to_m;

/// Loss gradients for every trainable tensor, plus the gradient with respect
/// to the initial hidden state (used by the gradient-flow probes).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub d_m_a: DenseMatrix,
    pub d_m_w: DenseMatrix,
    pub d_u: DenseMatrix,
    pub db: Vec<f64>,
    pub d_d: DenseMatrix,
    pub dh0: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(cell: &LipschitzCell) -> Self {
        let (n, p, d) = (cell.n(), cell.p(), cell.d_out());
        Self {
            d_m_a: DenseMatrix::zeros(n, n),
            d_m_w: DenseMatrix::zeros(n, n),
            d_u: DenseMatrix::zeros(n, p),
            db: vec![0.0; n],
            d_d: DenseMatrix::zeros(d, n),
            dh0: vec![0.0; n],
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        add_mat(&mut self.d_m_a, &other.d_m_a);
        add_mat(&mut self.d_m_w, &other.d_m_w);
        add_mat(&mut self.d_u, &other.d_u);
        add_mat(&mut self.d_d, &other.d_d);
        for (a, b) in self.db.iter_mut().zip(&other.db) {
            *a += b;
        }
        for (a, b) in self.dh0.iter_mut().zip(&other.dh0) {
            *a += b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for m in [&mut self.d_m_a, &mut self.d_m_w, &mut self.d_u, &mut self.d_d] {
            for v in m.as_mut_slice() {
                *v *= c;
            }
        }
        for v in self.db.iter_mut().chain(self.dh0.iter_mut()) {
            *v *= c;
        }
    }

    /// Flattened in the cell's parameter order M_A, M_W, U, b, D
    /// (dh0 is not a parameter and is excluded).
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::new();
        v.extend_from_slice(self.d_m_a.as_slice());
        v.extend_from_slice(self.d_m_w.as_slice());
        v.extend_from_slice(self.d_u.as_slice());
        v.extend_from_slice(&self.db);
        v.extend_from_slice(self.d_d.as_slice());
        v
    }

    /// Global L2 norm over all parameter gradients.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for m in [&self.d_m_a, &self.d_m_w, &self.d_u, &self.d_d] {
            s += m.as_slice().iter().map(|v| v * v).sum::<f64>();
        }
        s += self.db.iter().map(|v| v * v).sum::<f64>();
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [&self.d_m_a, &self.d_m_w, &self.d_u, &self.d_d]
            .iter()
            .all(|m| m.as_slice().iter().all(|v| v.is_finite()))
            && self.db.iter().all(|v| v.is_finite())
            && self.dh0.iter().all(|v| v.is_finite())
    }
}

fn add_mat(a: &mut DenseMatrix, b: &DenseMatrix) {
    for (x, y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
        *x += y;
    }
}

/// Softmax cross-entropy with max-subtraction. Returns the loss and its
/// gradient softmax(logits) − onehot(label).
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>), ModelError> {
    if label >= logits.len() {
        return Err(ModelError::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut d: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = d.iter().sum();
    let loss = sum.ln() - (logits[label] - max);
    for v in d.iter_mut() {
        *v /= sum;
    }
    d[label] -= 1.0;
    Ok((loss, d))
}

/// Mean squared error and its gradient 2(pred−target)/len.
pub fn mse(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>), ModelError> {
    if pred.len() != target.len() {
        return Err(ModelError::Dimension {
            what: "mse target length",
            expected: pred.len(),
            got: target.len(),
        });
    }
    let len = pred.len().max(1) as f64;
    let mut loss = 0.0;
    let mut d = vec![0.0; pred.len()];
    for i in 0..pred.len() {
        let e = pred[i] - target[i];
        loss += e * e;
        d[i] = 2.0 * e / len;
    }
    Ok((loss / len, d))
}

/// Supervision for one sequence: a class index (cross-entropy) or a
/// regression target (MSE).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Target {
    Class(usize),
    Vector(Vec<f64>),
}

/// Loss and output-gradient for a decoder output under the target's loss.
pub fn loss_and_dy(y: &[f64], target: &Target) -> Result<(f64, Vec<f64>), ModelError> {
    match target {
        Target::Class(c) => cross_entropy(y, *c),
        Target::Vector(t) => mse(y, t),
    }
}

/// Gradients of a scalar loss with output-gradient dY at y = D·h_T, with
/// respect to every trainable tensor. Exact reverse-mode: the adjoint runs
/// backward through the same step formulas the trajectory was recorded with.
pub fn bptt(
    cell: &LipschitzCell,
    traj: &Trajectory,
    dy: &[f64],
) -> Result<Gradients, ModelError> {
    let (grads, _) = backward(cell, traj, dy, false)?;
    Ok(grads)
}

/// Like [`bptt`] but also returns ∂L/∂x_t for every input step, flattened
/// the same way the sequence stores inputs. Powers the input-space attack.
pub fn bptt_with_inputs(
    cell: &LipschitzCell,
    traj: &Trajectory,
    dy: &[f64],
) -> Result<(Gradients, Sequence), ModelError> {
    let (grads, dx) = backward(cell, traj, dy, true)?;
    Ok((
        grads,
        Sequence {
            p: traj.inputs().p,
            data: dx,
        },
    ))
}

fn backward(
    cell: &LipschitzCell,
    traj: &Trajectory,
    dy: &[f64],
    want_inputs: bool,
) -> Result<(Gradients, Vec<f64>), ModelError> {
    let n = cell.n();
    if traj.n() != n {
        return Err(ModelError::TrajectoryMismatch {
            msg: format!("trajectory hidden dim {} vs cell {}", traj.n(), n),
        });
    }
    if traj.scheme() != cell.scheme {
        return Err(ModelError::TrajectoryMismatch {
            msg: "trajectory recorded under a different scheme".into(),
        });
    }
    if traj.inputs().p != cell.p() {
        return Err(ModelError::TrajectoryMismatch {
            msg: format!("trajectory input dim {} vs cell {}", traj.inputs().p, cell.p()),
        });
    }
    if dy.len() != cell.d_out() {
        return Err(ModelError::Dimension {
            what: "dY length",
            expected: cell.d_out(),
            got: dy.len(),
        });
    }

    let dyn_ = cell.dynamics();
    let (a, w, alpha) = (&dyn_.a, &dyn_.w, dyn_.alpha);
    let dt = cell.dt;
    let t_len = traj.len_t();
    let p = cell.p();

    let mut g = Gradients::zeros_like(cell);
    // Raw gradients with respect to the materialized matrices; pulled back
    // through the parameterization at the end.
    let mut da = DenseMatrix::zeros(n, n);
    let mut dw = DenseMatrix::zeros(n, n);
    let mut dx = vec![0.0; if want_inputs { t_len * p } else { 0 }];

    // λ_T = D^T·dY and the decoder's own gradient.
    let mut lam = vec![0.0; n];
    matvec_transpose_into(&cell.d, dy, &mut lam);
    g.d_d.add_scaled_outer(1.0, dy, traj.final_state());

    let mut c = vec![0.0; n];
    let mut mu = vec![0.0; n];
    let mut next = vec![0.0; n];

    for t in (0..t_len).rev() {
        let x = traj.inputs().x(t);
        let h = traj.state(t);
        match cell.scheme {
            Scheme::Euler => {
                // c = (1 − tanh²z_t) ⊙ λ_{t+1}
                let tz = traj.tanh_z(t);
                for i in 0..n {
                    c[i] = (1.0 - tz[i] * tz[i]) * lam[i];
                }
                if alpha != 0.0 {
                    da.add_scaled_outer(dt * alpha, &lam, h);
                }
                dw.add_scaled_outer(dt, &c, h);
                g.d_u.add_scaled_outer(dt, &c, x);
                for (bi, ci) in g.db.iter_mut().zip(&c) {
                    *bi += dt * ci;
                }
                if want_inputs {
                    let dxt = &mut dx[t * p..(t + 1) * p];
                    matvec_transpose_add_scaled(&cell.u, &c, dt, dxt);
                }
                // λ_t = λ_{t+1} + dt·α·A^T λ_{t+1} + dt·W^T c
                next.copy_from_slice(&lam);
                if alpha != 0.0 {
                    matvec_transpose_add_scaled_full(a, &lam, dt * alpha, &mut next);
                }
                matvec_transpose_add_scaled_full(w, &c, dt, &mut next);
                std::mem::swap(&mut lam, &mut next);
            }
            Scheme::Rk2 => {
                let hm = traj.mid_state(t);
                let tzm = traj.mid_tanh_z(t);
                let tz = traj.tanh_z(t);
                // Stage 2 first: adjoint of h_{t+1} = h_t + dt·f(h̃).
                for i in 0..n {
                    c[i] = (1.0 - tzm[i] * tzm[i]) * lam[i];
                }
                // μ = dt·α·A^T λ + dt·W^T c̃  (the pullback onto h̃)
                mu.fill(0.0);
                if alpha != 0.0 {
                    matvec_transpose_add_scaled_full(a, &lam, dt * alpha, &mut mu);
                    da.add_scaled_outer(dt * alpha, &lam, hm);
                }
                matvec_transpose_add_scaled_full(w, &c, dt, &mut mu);
                dw.add_scaled_outer(dt, &c, hm);
                g.d_u.add_scaled_outer(dt, &c, x);
                for (bi, ci) in g.db.iter_mut().zip(&c) {
                    *bi += dt * ci;
                }
                if want_inputs {
                    let dxt = &mut dx[t * p..(t + 1) * p];
                    matvec_transpose_add_scaled(&cell.u, &c, dt, dxt);
                }
                // Stage 1: h̃ = h_t + (dt/2)·f(h_t) receives μ.
                let half = 0.5 * dt;
                for i in 0..n {
                    c[i] = (1.0 - tz[i] * tz[i]) * mu[i];
                }
                if alpha != 0.0 {
                    da.add_scaled_outer(half * alpha, &mu, h);
                }
                dw.add_scaled_outer(half, &c, h);
                g.d_u.add_scaled_outer(half, &c, x);
                for (bi, ci) in g.db.iter_mut().zip(&c) {
                    *bi += half * ci;
                }
                if want_inputs {
                    let dxt = &mut dx[t * p..(t + 1) * p];
                    matvec_transpose_add_scaled(&cell.u, &c, half, dxt);
                }
                // λ_t = λ_{t+1} + μ + (dt/2)·α·A^T μ + (dt/2)·W^T c
                next.copy_from_slice(&lam);
                for (ni, mi) in next.iter_mut().zip(&mu) {
                    *ni += mi;
                }
                if alpha != 0.0 {
                    matvec_transpose_add_scaled_full(a, &mu, half * alpha, &mut next);
                }
                matvec_transpose_add_scaled_full(w, &c, half, &mut next);
                std::mem::swap(&mut lam, &mut next);
            }
        }
        if lam.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteGradient { step: t });
        }
    }

    g.dh0 = lam;
    g.d_m_a = grad_to_m(&da, cell.a_param.beta()).map_err(ModelError::Linalg)?;
    g.d_m_w = grad_to_m(&dw, cell.effective_w_beta()).map_err(ModelError::Linalg)?;
    Ok((g, dx))
}

/// out += c · U^T v, for the input-gradient slot of one step.
#[inline]
fn matvec_transpose_add_scaled(u: &DenseMatrix, v: &[f64], c: f64, out: &mut [f64]) {
    debug_assert_eq!(u.rows(), v.len());
    debug_assert_eq!(u.cols(), out.len());
    for (i, &vi) in v.iter().enumerate() {
        let cv = c * vi;
        if cv == 0.0 {
            continue;
        }
        for (o, &uij) in out.iter_mut().zip(u.row(i)) {
            *o += cv * uij;
        }
    }
}

/// out += c · A^T v for square A.
#[inline]
fn matvec_transpose_add_scaled_full(a: &DenseMatrix, v: &[f64], c: f64, out: &mut [f64]) {
    matvec_transpose_add_scaled(a, v, c, out);
}

/// Mean loss and mean gradients over a batch. Per-item work runs in
/// parallel; the reduction always sums in batch order, so results are
/// independent of thread count.
pub fn batch_gradients(
    cell: &LipschitzCell,
    items: &[(&Sequence, &Target)],
) -> Result<(f64, Gradients), ModelError> {
    if items.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let dyn_ = cell.dynamics();
    let results: Vec<Result<(f64, Gradients), ModelError>> = items
        .par_iter()
        .map(|(seq, target)| {
            let (traj, y) = forward_with(cell, &dyn_, seq, None)?;
            let (loss, dy) = loss_and_dy(&y, target)?;
            let grads = bptt(cell, &traj, &dy)?;
            Ok((loss, grads))
        })
        .collect();

    let inv = 1.0 / items.len() as f64;
    let mut total = Gradients::zeros_like(cell);
    let mut loss_sum = 0.0;
    for r in results {
        let (loss, grads) = r?;
        loss_sum += loss;
        total.add_assign(&grads);
    }
    total.scale(inv);
    Ok((loss_sum * inv, total))
}
