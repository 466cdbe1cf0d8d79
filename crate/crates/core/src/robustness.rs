//! Input corruption, a gradient-sign attack in input space, and curvature
//! metrics of the training loss with respect to the parameters.

use rand::distributions::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::autodiff::{batch_gradients, bptt_with_inputs, loss_and_dy, Target};
use crate::cell::{forward, LipschitzCell, Sequence};
use crate::error::ModelError;
use crate::rng::{item_rng, stream, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PerturbKind {
    /// Additive iid Gaussian noise on every entry.
    White,
    /// Each entry independently replaced by 0 or 1 (equal odds).
    SaltPepper,
}

impl PerturbKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "white" => Some(PerturbKind::White),
            "saltpepper" => Some(PerturbKind::SaltPepper),
            _ => None,
        }
    }
}

/// Corrupts a copy of the sequence. For white noise `amount` is the standard
/// deviation; for salt-and-pepper it is the per-entry flip probability.
pub fn perturb(
    seq: &Sequence,
    kind: PerturbKind,
    amount: f64,
    seed: u64,
) -> Result<Sequence, ModelError> {
    if !amount.is_finite() || amount < 0.0 {
        return Err(ModelError::OutOfRange {
            what: "perturb amount",
            value: amount,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if matches!(kind, PerturbKind::SaltPepper) && amount > 1.0 {
        return Err(ModelError::OutOfRange {
            what: "flip probability",
            value: amount,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let mut out = seq.clone();
    if amount == 0.0 {
        return Ok(out);
    }
    let mut rng = stream_rng(seed, stream::PERTURB);
    match kind {
        PerturbKind::White => {
            for v in out.data.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *v += amount * g;
            }
        }
        PerturbKind::SaltPepper => {
            for v in out.data.iter_mut() {
                if rng.gen::<f64>() < amount {
                    *v = if rng.gen::<bool>() { 1.0 } else { 0.0 };
                }
            }
        }
    }
    Ok(out)
}

/// Gradient-sign attack: repeatedly steps the input along sign(∂L/∂x), then
/// projects back into the ‖x−x₀‖_∞ ≤ eps_inf ball and the [0,1] box. The
/// input gradient comes from the exact reverse pass through the integrator.
pub fn pgd_attack(
    cell: &LipschitzCell,
    x0: &Sequence,
    label: usize,
    eps_inf: f64,
    step: f64,
    iters: usize,
) -> Result<Sequence, ModelError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(ModelError::OutOfRange {
            what: "attack step",
            value: step,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if iters == 0 {
        return Err(ModelError::OutOfRange {
            what: "attack iterations",
            value: 0.0,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    if !eps_inf.is_finite() || eps_inf < 0.0 {
        return Err(ModelError::OutOfRange {
            what: "eps_inf",
            value: eps_inf,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if eps_inf == 0.0 {
        return Ok(x0.clone());
    }
    let target = Target::Class(label);
    let mut x = x0.clone();
    for _ in 0..iters {
        let (traj, y) = forward(cell, &x, None)?;
        let (_, dy) = loss_and_dy(&y, &target)?;
        let (_, dx) = bptt_with_inputs(cell, &traj, &dy)?;
        for (i, v) in x.data.iter_mut().enumerate() {
            let g = dx.data[i];
            let s = if g > 0.0 {
                1.0
            } else if g < 0.0 {
                -1.0
            } else {
                0.0
            };
            let moved = *v + step * s;
            let lo = (x0.data[i] - eps_inf).max(0.0);
            let hi = (x0.data[i] + eps_inf).min(1.0);
            *v = moved.clamp(lo.min(hi), hi.max(lo));
        }
        for (v, v0) in x.data.iter().zip(&x0.data) {
            assert!((v - v0).abs() <= eps_inf + 1e-12, "left the attack ball");
            assert!((-1e-12..=1.0 + 1e-12).contains(v), "left the data box");
        }
    }
    Ok(x)
}

/// Hessian-vector product by central differences of the gradient around
/// theta: [g(θ+rv̂) − g(θ−rv̂)]·‖v‖/2r with r = 1e-4·(1+‖θ‖). Second-order
/// accurate in r; adequate for extreme-eigenvalue and trace estimation.
pub fn hvp_with<F>(grad_fn: F, theta: &[f64], v: &[f64]) -> Result<Vec<f64>, ModelError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, ModelError>,
{
    if v.len() != theta.len() {
        return Err(ModelError::Dimension {
            what: "direction vector",
            expected: theta.len(),
            got: v.len(),
        });
    }
    let vnorm = crate::linalg::norm2(v);
    if vnorm <= 0.0 {
        return Err(ModelError::OutOfRange {
            what: "direction norm",
            value: vnorm,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let tnorm = crate::linalg::norm2(theta);
    let r = 1e-4 * (1.0 + tnorm);
    let mut plus = theta.to_vec();
    let mut minus = theta.to_vec();
    for i in 0..theta.len() {
        let d = r * v[i] / vnorm;
        plus[i] += d;
        minus[i] -= d;
    }
    let gp = grad_fn(&plus)?;
    let gm = grad_fn(&minus)?;
    let scale = vnorm / (2.0 * r);
    Ok(gp
        .iter()
        .zip(&gm)
        .map(|(p, m)| (p - m) * scale)
        .collect())
}

/// Curvature in one parameter direction for the mean batch loss.
pub fn hvp(
    cell: &LipschitzCell,
    batch: &[(&Sequence, &Target)],
    v: &[f64],
) -> Result<Vec<f64>, ModelError> {
    let theta = cell.param_vector();
    hvp_with(|t| batch_grad_at(cell, batch, t), &theta, v)
}

fn batch_grad_at(
    cell: &LipschitzCell,
    batch: &[(&Sequence, &Target)],
    theta: &[f64],
) -> Result<Vec<f64>, ModelError> {
    let mut probe = cell.clone();
    probe.set_param_vector(theta)?;
    Ok(batch_gradients(&probe, batch)?.1.to_vector())
}

/// Spectral summary of the loss Hessian. `condition` is λ_max/λ_min and is
/// absent when λ_min is too close to zero to divide by.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct HessianMetrics {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub trace_estimate: f64,
    pub trace_stderr: f64,
    pub condition: Option<f64>,
    pub probes: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl HessianMetrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

/// Power-iteration extremes plus a Hutchinson trace estimate, all through the
/// differenced Hessian-vector product. λ_min comes from power iteration on
/// the reflected operator λ_max·I − H, whose dominant eigenvalue is always
/// the spread λ_max − λ_min.
pub fn hessian_metrics_with<F>(
    grad_fn: F,
    theta: &[f64],
    probes: usize,
    iters: usize,
    seed: u64,
) -> Result<HessianMetrics, ModelError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, ModelError> + Sync,
{
    if probes < 10 {
        return Err(ModelError::OutOfRange {
            what: "trace probes",
            value: probes as f64,
            lo: 10.0,
            hi: f64::INFINITY,
        });
    }
    if iters < 20 {
        return Err(ModelError::OutOfRange {
            what: "power iterations",
            value: iters as f64,
            lo: 20.0,
            hi: f64::INFINITY,
        });
    }
    let dim = theta.len();

    let mut rng = stream_rng(seed, stream::POWER_ITER);
    let v0: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let (lambda_max, it_max, conv_max) =
        power_iteration(&grad_fn, theta, v0, iters, |w, _| Ok(w))?;

    let v1: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let (spread, it_min, conv_min) = power_iteration(&grad_fn, theta, v1, iters, |w, v| {
        // reflect: (λ_max·I − H)v = λ_max·v − Hv
        Ok(v.iter().zip(w).map(|(vi, wi)| lambda_max * vi - wi).collect())
    })?;
    let lambda_min = lambda_max - spread;

    // Rademacher probes are independent per index, so the parallel map with an
    // ordered reduction is reproducible under any thread count.
    let estimates: Vec<f64> = (0..probes as u64)
        .into_par_iter()
        .map(|i| {
            let mut prng = item_rng(seed, stream::HUTCHINSON, i);
            let z: Vec<f64> = (0..dim)
                .map(|_| if prng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let hz = hvp_with(&grad_fn, theta, &z)?;
            Ok(z.iter().zip(&hz).map(|(a, b)| a * b).sum::<f64>())
        })
        .collect::<Result<_, ModelError>>()?;
    let trace_estimate = estimates.iter().sum::<f64>() / probes as f64;
    let var = estimates
        .iter()
        .map(|e| (e - trace_estimate) * (e - trace_estimate))
        .sum::<f64>()
        / (probes as f64 - 1.0);
    let trace_stderr = (var / probes as f64).sqrt();

    let condition = if lambda_min.abs() > 1e-12 {
        Some(lambda_max / lambda_min)
    } else {
        None
    };
    Ok(HessianMetrics {
        lambda_max,
        lambda_min,
        trace_estimate,
        trace_stderr,
        condition,
        probes,
        iterations: it_max.max(it_min),
        converged: conv_max && conv_min,
    })
}

/// Hessian metrics for the mean loss of a batch at the cell's parameters.
pub fn hessian_metrics(
    cell: &LipschitzCell,
    batch: &[(&Sequence, &Target)],
    probes: usize,
    iters: usize,
    seed: u64,
) -> Result<HessianMetrics, ModelError> {
    let theta = cell.param_vector();
    hessian_metrics_with(
        |t| batch_grad_at(cell, batch, t),
        &theta,
        probes,
        iters,
        seed,
    )
}

/// Rayleigh-quotient power iteration on op(Hv, v); returns (eigenvalue,
/// iterations used, converged).
fn power_iteration<F, Op>(
    grad_fn: &F,
    theta: &[f64],
    mut v: Vec<f64>,
    iters: usize,
    op: Op,
) -> Result<(f64, usize, bool), ModelError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, ModelError>,
    Op: Fn(Vec<f64>, &[f64]) -> Result<Vec<f64>, ModelError>,
{
    normalize(&mut v);
    let mut rho_prev = f64::INFINITY;
    for k in 1..=iters {
        let hv = hvp_with(grad_fn, theta, &v)?;
        let w = op(hv, &v)?;
        let rho: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let wnorm = crate::linalg::norm2(&w);
        if wnorm <= 1e-300 {
            // operator annihilates the probe: eigenvalue 0 on this subspace
            return Ok((0.0, k, true));
        }
        if (rho - rho_prev).abs() <= 1e-4 * (1e-12 + rho.abs()) {
            return Ok((rho, k, true));
        }
        rho_prev = rho;
        v = w;
        normalize(&mut v);
    }
    Ok((rho_prev, iters, false))
}

fn normalize(v: &mut [f64]) {
    let n = crate::linalg::norm2(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Writes an accuracy-vs-corruption curve.
pub fn write_noise_curve_csv(
    rows: &[(f64, f64, f64)],
    mut w: impl std::io::Write,
) -> std::io::Result<()> {
    writeln!(w, "amount,accuracy,stderr")?;
    for (amount, accuracy, stderr) in rows {
        writeln!(w, "{amount},{accuracy},{stderr}")?;
    }
    Ok(())
}
