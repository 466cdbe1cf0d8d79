//! Contraction certificates and empirical probes for the hidden dynamics
//! ḣ = α·A·h + tanh(W h + U x + b): sufficient-condition checks on the
//! materialized matrices, an orthogonal reduction of the linear term,
//! decay-rate fits from trajectory pairs, and spectra tracked over training.

use rand::distributions::Distribution;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::cell::{Dynamics, LipschitzCell};
use crate::error::{LinalgError, ModelError};
use crate::linalg::{
    general_eigs, matvec_add_into, matvec_into, norm2, sym_eigs, singular_values, DenseMatrix,
};
use crate::rng::{item_rng, stream};

/// W counts as singular when its smallest singular value is at or below this.
pub const SINGULARITY_TOL: f64 = 1e-10;
/// Definiteness verdicts require the extreme eigenvalue to clear zero by this.
pub const DEFINITE_MARGIN: f64 = 1e-10;
/// Trajectory distance below this is noise floor; fits stop there.
const DISTANCE_FLOOR: f64 = 1e-12;
/// Trajectory distance above this counts as blown up.
const DISTANCE_CEIL: f64 = 1e12;

/// Certificate verdict for one (A, W) pair. `cond_a` is the gap condition
/// σ_min(A^sym) > M·σ_max(W); `cond_b` is the definiteness pair
/// W+W^T ≺ 0, A^T W + W^T A ≻ 0. Either one, on top of a strictly negative
/// symmetric spectrum and nonsingular W, certifies global contraction.
/// Convention: A^sym = ½(A+A^T), halved.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct StabilityReport {
    pub sym_spectrum_a: Vec<f64>,
    pub sigma_min_asym: f64,
    pub sigma_max_w: f64,
    pub sigma_min_w: f64,
    pub lipschitz_m: f64,
    pub cond_a_holds: bool,
    /// σ_min(A^sym) − M·σ_max(W); cond_a needs this positive.
    pub cond_a_margin: f64,
    pub cond_b_holds: bool,
    /// λ_max(W+W^T); cond_b needs this negative.
    pub cond_b_w_margin: f64,
    /// λ_min(A^T W + W^T A); cond_b needs this positive.
    pub cond_b_cross_margin: f64,
    pub w_nonsingular: bool,
}

impl StabilityReport {
    pub fn certified(&self) -> bool {
        self.cond_a_holds || self.cond_b_holds
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Checks the sufficient conditions for global contraction of the hidden
/// dynamics, treating the activation as `lipschitz_m`-Lipschitz (1 for tanh).
pub fn certify(
    a: &DenseMatrix,
    w: &DenseMatrix,
    lipschitz_m: f64,
) -> Result<StabilityReport, ModelError> {
    if a.rows() != a.cols() || w.rows() != w.cols() || a.rows() != w.rows() {
        return Err(ModelError::Dimension {
            what: "certificate matrices",
            expected: a.rows(),
            got: w.rows(),
        });
    }
    if !(lipschitz_m > 0.0) || !lipschitz_m.is_finite() {
        return Err(ModelError::OutOfRange {
            what: "lipschitz_m",
            value: lipschitz_m,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }

    let asym = a.symmetric_part()?;
    let (sym_spectrum_a, _) = sym_eigs(&asym)?;
    let all_negative = sym_spectrum_a.last().is_some_and(|&hi| hi < 0.0);

    let sv_asym = singular_values(&asym)?;
    let sigma_min_asym = sv_asym.last().copied().unwrap_or(0.0);
    let sv_w = singular_values(w)?;
    let sigma_max_w = sv_w.first().copied().unwrap_or(0.0);
    let sigma_min_w = sv_w.last().copied().unwrap_or(0.0);
    let w_nonsingular = sigma_min_w > SINGULARITY_TOL;

    let cond_a_margin = sigma_min_asym - lipschitz_m * sigma_max_w;
    let cond_a_holds = all_negative && w_nonsingular && cond_a_margin > 0.0;

    let w_plus_wt = w.add(&w.transpose())?;
    let (spec_w, _) = sym_eigs(&w_plus_wt)?;
    let cond_b_w_margin = spec_w.last().copied().unwrap_or(0.0);

    let cross = a.transpose().matmul(w)?.add(&w.transpose().matmul(a)?)?;
    let (spec_cross, _) = sym_eigs(&cross.symmetric_part()?)?;
    let cond_b_cross_margin = spec_cross.first().copied().unwrap_or(0.0);

    let cond_b_holds = all_negative
        && w_nonsingular
        && cond_b_w_margin < -DEFINITE_MARGIN
        && cond_b_cross_margin > DEFINITE_MARGIN;

    Ok(StabilityReport {
        sym_spectrum_a,
        sigma_min_asym,
        sigma_max_w,
        sigma_min_w,
        lipschitz_m,
        cond_a_holds,
        cond_a_margin,
        cond_b_holds,
        cond_b_w_margin,
        cond_b_cross_margin,
        w_nonsingular,
    })
}

/// Change of variables z = P^T h that diagonalizes a symmetric A: returns the
/// diagonal entries (ascending), L = P^T, and V = W·P, so the transformed
/// dynamics read ż = diag(d)·z + L·tanh(V z + U x + b).
#[derive(Debug, Clone)]
pub struct CghTransform {
    pub ddiag: Vec<f64>,
    pub l: DenseMatrix,
    pub v: DenseMatrix,
}

impl CghTransform {
    /// The orthogonal basis itself, P = L^T.
    pub fn p(&self) -> DenseMatrix {
        self.l.transpose()
    }
}

pub fn cgh_transform(a: &DenseMatrix, w: &DenseMatrix) -> Result<CghTransform, ModelError> {
    if a.rows() != w.rows() || a.cols() != w.cols() {
        return Err(ModelError::Dimension {
            what: "transform matrices",
            expected: a.rows(),
            got: w.rows(),
        });
    }
    let sv_w = singular_values(w)?;
    let sigma_min_w = sv_w.last().copied().unwrap_or(0.0);
    if sigma_min_w <= SINGULARITY_TOL {
        return Err(ModelError::Linalg(LinalgError::Singular {
            sigma_min: sigma_min_w,
        }));
    }
    let (ddiag, p) = sym_eigs(a)?;
    let n = a.rows();
    let diag = DenseMatrix::from_fn(n, n, |i, j| if i == j { ddiag[i] } else { 0.0 });
    let recon = p.matmul(&diag)?.matmul(&p.transpose())?;
    let residual = a.sub(&recon)?.frobenius_norm();
    debug_assert!(
        residual <= 1e-8 * (1.0 + a.frobenius_norm()),
        "diagonalization residual {residual}"
    );
    Ok(CghTransform {
        ddiag,
        l: p.transpose(),
        v: w.matmul(&p)?,
    })
}

/// Least-squares exponential fit of inter-trajectory distance. Positive
/// lambda_hat means contraction; `diverged` flags any trial whose distance
/// grew or blew up.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DecayFit {
    pub lambda_hat: f64,
    pub c_hat: f64,
    pub diverged: bool,
    pub per_trial_lambda: Vec<f64>,
}

/// Estimates the contraction rate empirically: integrates pairs of
/// trajectories from random initial states under a constant input, with the
/// two-stage scheme at a quarter of the cell's training step so integrator
/// error does not pollute the fit, then regresses log distance on time.
pub fn decay_rate(
    cell: &LipschitzCell,
    x_const: &[f64],
    trials: usize,
    horizon: f64,
    seed: u64,
) -> Result<DecayFit, ModelError> {
    if trials < 2 {
        return Err(ModelError::OutOfRange {
            what: "trials",
            value: trials as f64,
            lo: 2.0,
            hi: f64::INFINITY,
        });
    }
    if x_const.len() != cell.p() {
        return Err(ModelError::Dimension {
            what: "input dim",
            expected: cell.p(),
            got: x_const.len(),
        });
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(ModelError::OutOfRange {
            what: "horizon",
            value: horizon,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let dyn_ = cell.dynamics();
    let dt = cell.dt / 4.0;
    let n_steps = (horizon / dt).ceil() as usize;
    let n = cell.n();

    let fits: Vec<(f64, f64, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = item_rng(seed, stream::DECAY_TRIALS, trial);
            let mut h1: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut h2: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut scratch = StepScratch::new(n);
            let mut samples: Vec<(f64, f64)> = Vec::with_capacity(n_steps + 1);
            let mut blew_up = false;
            for k in 0..=n_steps {
                let d: f64 = h1
                    .iter()
                    .zip(&h2)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if !d.is_finite() || d > DISTANCE_CEIL {
                    blew_up = true;
                    break;
                }
                if d <= DISTANCE_FLOOR {
                    break;
                }
                samples.push((k as f64 * dt, d.ln()));
                if k < n_steps {
                    fine_rk2_step(cell, &dyn_, dt, &mut h1, x_const, &mut scratch);
                    fine_rk2_step(cell, &dyn_, dt, &mut h2, x_const, &mut scratch);
                }
            }
            let (slope, intercept) = fit_line(&samples);
            let lambda = -slope;
            let d0 = samples.first().map_or(1.0, |&(_, y)| y.exp());
            let c = intercept.exp() / d0;
            (lambda, c, blew_up || lambda <= 0.0)
        })
        .collect();

    let lambda_hat = fits.iter().map(|f| f.0).sum::<f64>() / trials as f64;
    let c_hat = fits.iter().map(|f| f.1).sum::<f64>() / trials as f64;
    let diverged = fits.iter().any(|f| f.2);
    Ok(DecayFit {
        lambda_hat,
        c_hat,
        diverged,
        per_trial_lambda: fits.into_iter().map(|f| f.0).collect(),
    })
}

struct StepScratch {
    z: Vec<f64>,
    k: Vec<f64>,
    mid: Vec<f64>,
}

impl StepScratch {
    fn new(n: usize) -> Self {
        Self {
            z: vec![0.0; n],
            k: vec![0.0; n],
            mid: vec![0.0; n],
        }
    }
}

/// Midpoint step at an explicit dt, in place, with pre-materialized matrices.
fn fine_rk2_step(
    cell: &LipschitzCell,
    dyn_: &Dynamics,
    dt: f64,
    h: &mut [f64],
    x: &[f64],
    s: &mut StepScratch,
) {
    field(cell, dyn_, h, x, s);
    for i in 0..h.len() {
        s.mid[i] = h[i] + 0.5 * dt * s.k[i];
    }
    let mid = std::mem::take(&mut s.mid);
    field(cell, dyn_, &mid, x, s);
    s.mid = mid;
    for i in 0..h.len() {
        h[i] += dt * s.k[i];
    }
}

/// k = α·A·h + tanh(W h + U x + b), written into s.k.
fn field(cell: &LipschitzCell, dyn_: &Dynamics, h: &[f64], x: &[f64], s: &mut StepScratch) {
    matvec_into(&dyn_.w, h, &mut s.z);
    matvec_add_into(&cell.u, x, &mut s.z);
    for (zi, bi) in s.z.iter_mut().zip(&cell.b) {
        *zi += bi;
    }
    if dyn_.alpha != 0.0 {
        matvec_into(&dyn_.a, h, &mut s.k);
        for v in s.k.iter_mut() {
            *v *= dyn_.alpha;
        }
    } else {
        s.k.fill(0.0);
    }
    for (ki, zi) in s.k.iter_mut().zip(&s.z) {
        *ki += zi.tanh();
    }
}

/// Ordinary least squares y = intercept + slope·t; degenerate inputs fit flat.
fn fit_line(samples: &[(f64, f64)]) -> (f64, f64) {
    if samples.len() < 2 {
        return (0.0, samples.first().map_or(0.0, |&(_, y)| y));
    }
    let m = samples.len() as f64;
    let tbar = samples.iter().map(|s| s.0).sum::<f64>() / m;
    let ybar = samples.iter().map(|s| s.1).sum::<f64>() / m;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(t, y) in samples {
        num += (t - tbar) * (y - ybar);
        den += (t - tbar) * (t - tbar);
    }
    let slope = if den > 0.0 { num / den } else { 0.0 };
    (slope, ybar - slope * tbar)
}

/// Largest real parts of the materialized A and W spectra, sampled along a
/// training run.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct EigTrace {
    pub entries: Vec<EigEntry>,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct EigEntry {
    pub step: u64,
    pub max_re_a: f64,
    pub max_re_w: f64,
}

impl EigTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the current spectra. Steps must arrive strictly increasing.
    pub fn record(&mut self, step: u64, cell: &LipschitzCell) -> Result<(), ModelError> {
        assert!(
            self.entries.last().map_or(true, |e| e.step < step),
            "eig trace steps must increase"
        );
        let a = cell.materialize_a();
        let w = cell.materialize_w();
        let max_re_a = general_eigs(&a)?.max_real();
        let max_re_w = general_eigs(&w)?.max_real();
        self.entries.push(EigEntry {
            step,
            max_re_a,
            max_re_w,
        });
        Ok(())
    }

    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "step,maxReA,maxReW")?;
        for e in &self.entries {
            writeln!(w, "{},{},{}", e.step, e.max_re_a, e.max_re_w)?;
        }
        Ok(())
    }
}

/// Euclidean distance between two state vectors.
pub fn state_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&diff)
}
