//! The recurrent unit: continuous-time dynamics
//!
//! ```text
//! ḣ = α·A·h + tanh(W·h + U·x + b),    y = D·h,
//! ```
//!
//! discretized by explicit Euler or a two-stage Runge-Kutta step. A and W
//! are materialized from symmetric-skew parameterizations; configuration
//! flags recover two baselines (no linear term, and skew-only W) and the
//! ablation knob α.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::ModelError;
use crate::linalg::{matvec_add_into, matvec_into, DenseMatrix};
use crate::params::{materialize_with, SymSkewParam};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Scheme {
    Euler,
    Rk2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Variant {
    /// Full model: linear term gated by α, W from the symmetric-skew map.
    Lipschitz,
    /// No linear hidden term (α treated as 0); otherwise identical.
    NeuralOde,
    /// No linear term and W forced skew-symmetric minus γ_W·I.
    Antisymmetric,
}

pub const ALPHA_MAX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LipschitzCell {
    pub a_param: SymSkewParam,
    pub w_param: SymSkewParam,
    /// Input weights, N×p.
    pub u: DenseMatrix,
    /// Bias, length N.
    pub b: Vec<f64>,
    /// Decoder, d×N.
    pub d: DenseMatrix,
    /// Gain on the linear hidden term; ignored by the no-linear variants.
    pub alpha: f64,
    /// Integrator step size.
    pub dt: f64,
    pub scheme: Scheme,
    pub variant: Variant,
}

/// Dimensions and init hyperparameters for building a fresh cell.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CellSpec {
    pub n: usize,
    pub p: usize,
    pub d_out: usize,
    pub beta: f64,
    pub gamma_a: f64,
    pub gamma_w: f64,
    pub alpha: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub variant: Variant,
    /// Standard deviation of the Gaussian init for the hidden matrices M.
    pub init_sigma: f64,
}

impl LipschitzCell {
    pub fn new(
        a_param: SymSkewParam,
        w_param: SymSkewParam,
        u: DenseMatrix,
        b: Vec<f64>,
        d: DenseMatrix,
        alpha: f64,
        dt: f64,
        scheme: Scheme,
        variant: Variant,
    ) -> Result<Self, ModelError> {
        let n = a_param.n();
        if w_param.n() != n {
            return Err(ModelError::Dimension {
                what: "W param size",
                expected: n,
                got: w_param.n(),
            });
        }
        if u.rows() != n {
            return Err(ModelError::Dimension {
                what: "U rows",
                expected: n,
                got: u.rows(),
            });
        }
        if b.len() != n {
            return Err(ModelError::Dimension {
                what: "b length",
                expected: n,
                got: b.len(),
            });
        }
        if d.cols() != n {
            return Err(ModelError::Dimension {
                what: "D cols",
                expected: n,
                got: d.cols(),
            });
        }
        if !(0.0..=ALPHA_MAX).contains(&alpha) || !alpha.is_finite() {
            return Err(ModelError::OutOfRange {
                what: "alpha",
                value: alpha,
                lo: 0.0,
                hi: ALPHA_MAX,
            });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ModelError::OutOfRange {
                what: "dt",
                value: dt,
                lo: f64::MIN_POSITIVE,
                hi: f64::INFINITY,
            });
        }
        Ok(Self {
            a_param,
            w_param,
            u,
            b,
            d,
            alpha,
            dt,
            scheme,
            variant,
        })
    }

    /// Fresh cell with Gaussian init. M_A and M_W entries are N(0, σ²) with
    /// σ = spec.init_sigma; U entries N(0, 1/p); b zero; D entries N(0, 1/N).
    /// The draw order (M_A, M_W, U, b, D) is fixed and variant-independent,
    /// so different variants built from the same seed share every weight.
    pub fn random(spec: &CellSpec, rng: &mut impl Rng) -> Result<Self, ModelError> {
        let CellSpec {
            n, p, d_out: d, ..
        } = *spec;
        let mut gauss =
            |rows: usize, cols: usize, sd: f64| -> DenseMatrix {
                let mut m = DenseMatrix::zeros(rows, cols);
                for v in m.as_mut_slice() {
                    let g: f64 = rng.sample(StandardNormal);
                    *v = sd * g;
                }
                m
            };
        let m_a = gauss(n, n, spec.init_sigma);
        let m_w = gauss(n, n, spec.init_sigma);
        // dense-layer default for the input and output maps: uniform over
        // +-1/sqrt(fan_in), bias included. With scalar inputs the bias spread
        // is what differentiates the units early in training.
        let mut uniform = |rows: usize, cols: usize, bound: f64| -> DenseMatrix {
            let mut m = DenseMatrix::zeros(rows, cols);
            for v in m.as_mut_slice() {
                *v = rng.gen_range(-bound..bound);
            }
            m
        };
        let in_bound = 1.0 / (p as f64).sqrt();
        let u = uniform(n, p, in_bound);
        let b = uniform(n, 1, in_bound).as_slice().to_vec();
        let d_mat = uniform(d, n, 1.0 / (n as f64).sqrt());
        LipschitzCell::new(
            SymSkewParam::new(m_a, spec.beta, spec.gamma_a)?,
            SymSkewParam::new(m_w, spec.beta, spec.gamma_w)?,
            u,
            b,
            d_mat,
            spec.alpha,
            spec.dt,
            spec.scheme,
            spec.variant,
        )
    }

    pub fn n(&self) -> usize {
        self.a_param.n()
    }

    pub fn p(&self) -> usize {
        self.u.cols()
    }

    pub fn d_out(&self) -> usize {
        self.d.rows()
    }

    /// α actually applied to the linear term: 0 for the no-linear variants.
    pub fn effective_alpha(&self) -> f64 {
        match self.variant {
            Variant::Lipschitz => self.alpha,
            Variant::NeuralOde | Variant::Antisymmetric => 0.0,
        }
    }

    /// β used when materializing W: forced to 1 (pure skew) for the
    /// antisymmetric variant, the configured β otherwise.
    pub fn effective_w_beta(&self) -> f64 {
        match self.variant {
            Variant::Antisymmetric => 1.0,
            _ => self.w_param.beta(),
        }
    }

    pub fn materialize_a(&self) -> DenseMatrix {
        self.a_param.materialize()
    }

    pub fn materialize_w(&self) -> DenseMatrix {
        materialize_with(
            self.w_param.m(),
            self.effective_w_beta(),
            self.w_param.gamma(),
        )
    }

    /// Number of trainable scalars: M_A, M_W, U, b, D.
    pub fn param_count(&self) -> usize {
        let (n, p, d) = (self.n(), self.p(), self.d_out());
        2 * n * n + n * p + n + d * n
    }

    /// Trainable parameters flattened in the fixed order M_A, M_W, U, b, D.
    /// The optimizers and the Hessian probes all speak this layout.
    pub fn param_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        v.extend_from_slice(self.a_param.m().as_slice());
        v.extend_from_slice(self.w_param.m().as_slice());
        v.extend_from_slice(self.u.as_slice());
        v.extend_from_slice(&self.b);
        v.extend_from_slice(self.d.as_slice());
        v
    }

    /// Inverse of [`param_vector`](Self::param_vector).
    pub fn set_param_vector(&mut self, v: &[f64]) -> Result<(), ModelError> {
        if v.len() != self.param_count() {
            return Err(ModelError::Dimension {
                what: "parameter vector length",
                expected: self.param_count(),
                got: v.len(),
            });
        }
        let n = self.n();
        let mut at = 0;
        let mut take = |len: usize| {
            let s = &v[at..at + len];
            at += len;
            s
        };
        let u_len = n * self.u.cols();
        let b_len = self.b.len();
        let d_len = self.d.rows() * n;
        self.a_param.m_mut().as_mut_slice().copy_from_slice(take(n * n));
        self.w_param.m_mut().as_mut_slice().copy_from_slice(take(n * n));
        self.u.as_mut_slice().copy_from_slice(take(u_len));
        self.b.copy_from_slice(take(b_len));
        self.d.as_mut_slice().copy_from_slice(take(d_len));
        Ok(())
    }

    /// Materializes the matrices once for a whole forward/backward pass.
    pub fn dynamics(&self) -> Dynamics {
        Dynamics {
            a: self.materialize_a(),
            w: self.materialize_w(),
            alpha: self.effective_alpha(),
        }
    }
}

/// Materialized hidden matrices, valid until the parameters change.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub a: DenseMatrix,
    pub w: DenseMatrix,
    pub alpha: f64,
}

/// One input sequence, stored flat: data[t·p .. (t+1)·p] is x_t.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Sequence {
    pub p: usize,
    pub data: Vec<f64>,
}

impl Sequence {
    pub fn new(p: usize, data: Vec<f64>) -> Self {
        assert!(p > 0 && data.len() % p == 0, "sequence length not a multiple of p");
        Self { p, data }
    }

    pub fn from_vectors(vs: &[Vec<f64>]) -> Self {
        let p = vs.first().map_or(1, |v| v.len());
        let mut data = Vec::with_capacity(vs.len() * p);
        for v in vs {
            assert_eq!(v.len(), p, "ragged sequence");
            data.extend_from_slice(v);
        }
        Self { p: p.max(1), data }
    }

    pub fn len_t(&self) -> usize {
        self.data.len() / self.p
    }

    #[inline]
    pub fn x(&self, t: usize) -> &[f64] {
        &self.data[t * self.p..(t + 1) * self.p]
    }
}

/// Everything the backward pass needs from one forward pass: hidden states,
/// tanh of every preactivation (the derivative 1−tanh² is recomputed from
/// these), midpoint quantities for the two-stage scheme, and the inputs.
/// Flat buffers: row t of `states` is h_t.
#[derive(Debug, Clone)]
pub struct Trajectory {
    n: usize,
    t_len: usize,
    scheme: Scheme,
    states: Vec<f64>,     // (T+1)·N
    tanh_z: Vec<f64>,     // T·N
    mid_states: Vec<f64>, // T·N for Rk2, empty for Euler
    mid_tanh_z: Vec<f64>, // T·N for Rk2, empty for Euler
    inputs: Sequence,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len_t(&self) -> usize {
        self.t_len
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    #[inline]
    pub fn state(&self, t: usize) -> &[f64] {
        &self.states[t * self.n..(t + 1) * self.n]
    }

    #[inline]
    pub fn tanh_z(&self, t: usize) -> &[f64] {
        &self.tanh_z[t * self.n..(t + 1) * self.n]
    }

    #[inline]
    pub fn mid_state(&self, t: usize) -> &[f64] {
        &self.mid_states[t * self.n..(t + 1) * self.n]
    }

    #[inline]
    pub fn mid_tanh_z(&self, t: usize) -> &[f64] {
        &self.mid_tanh_z[t * self.n..(t + 1) * self.n]
    }

    pub fn inputs(&self) -> &Sequence {
        &self.inputs
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.t_len)
    }
}

/// α·A·h + tanh(W·h + U·x + b).
pub fn rhs(cell: &LipschitzCell, h: &[f64], x: &[f64]) -> Result<Vec<f64>, ModelError> {
    check_dims(cell, h, x)?;
    let dyn_ = cell.dynamics();
    let n = cell.n();
    let mut z = vec![0.0; n];
    preact(&dyn_.w, &cell.u, &cell.b, h, x, &mut z);
    let mut out = vec![0.0; n];
    if dyn_.alpha != 0.0 {
        matvec_into(&dyn_.a, h, &mut out);
        for v in out.iter_mut() {
            *v *= dyn_.alpha;
        }
    }
    for (o, zi) in out.iter_mut().zip(&z) {
        *o += zi.tanh();
    }
    Ok(out)
}

/// h_{t+1} = h_t + dt·rhs(h_t, x_t), preactivation evaluated once.
pub fn euler_step(cell: &LipschitzCell, h: &[f64], x: &[f64]) -> Result<Vec<f64>, ModelError> {
    let r = rhs(cell, h, x)?;
    let mut out = h.to_vec();
    for (o, ri) in out.iter_mut().zip(&r) {
        *o += cell.dt * ri;
    }
    Ok(out)
}

/// Two-stage step: a half Euler step to the midpoint, then a full step using
/// the midpoint field. The same input x_t feeds both stages.
pub fn rk2_step(cell: &LipschitzCell, h: &[f64], x: &[f64]) -> Result<Vec<f64>, ModelError> {
    check_dims(cell, h, x)?;
    let r1 = rhs(cell, h, x)?;
    let mut hmid = h.to_vec();
    for (m, ri) in hmid.iter_mut().zip(&r1) {
        *m += 0.5 * cell.dt * ri;
    }
    let r2 = rhs(cell, &hmid, x)?;
    let mut out = h.to_vec();
    for (o, ri) in out.iter_mut().zip(&r2) {
        *o += cell.dt * ri;
    }
    Ok(out)
}

/// Runs the configured step over the whole sequence from h0 (zero vector if
/// omitted), recording everything the backward pass needs. Returns the
/// trajectory and the decoder output y = D·h_T.
pub fn forward(
    cell: &LipschitzCell,
    seq: &Sequence,
    h0: Option<&[f64]>,
) -> Result<(Trajectory, Vec<f64>), ModelError> {
    let dyn_ = cell.dynamics();
    forward_with(cell, &dyn_, seq, h0)
}

/// Forward pass with pre-materialized dynamics; the training loop calls this
/// so materialization happens once per parameter update, not per sequence.
pub fn forward_with(
    cell: &LipschitzCell,
    dyn_: &Dynamics,
    seq: &Sequence,
    h0: Option<&[f64]>,
) -> Result<(Trajectory, Vec<f64>), ModelError> {
    let n = cell.n();
    if seq.p != cell.p() {
        return Err(ModelError::Dimension {
            what: "input dim",
            expected: cell.p(),
            got: seq.p,
        });
    }
    if let Some(h) = h0 {
        if h.len() != n {
            return Err(ModelError::Dimension {
                what: "h0 length",
                expected: n,
                got: h.len(),
            });
        }
    }
    let t_len = seq.len_t();
    let rk2 = matches!(cell.scheme, Scheme::Rk2);

    let mut states = vec![0.0; (t_len + 1) * n];
    if let Some(h) = h0 {
        states[..n].copy_from_slice(h);
    }
    let mut tanh_z = vec![0.0; t_len * n];
    let mut mid_states = vec![0.0; if rk2 { t_len * n } else { 0 }];
    let mut mid_tanh_z = vec![0.0; if rk2 { t_len * n } else { 0 }];

    let dt = cell.dt;
    let alpha = dyn_.alpha;
    let mut ah = vec![0.0; n];
    let mut z = vec![0.0; n];

    for t in 0..t_len {
        let x = seq.x(t);
        let (head, tail) = states.split_at_mut((t + 1) * n);
        let h = &head[t * n..];
        let hn = &mut tail[..n];
        let tz = &mut tanh_z[t * n..(t + 1) * n];

        preact(&dyn_.w, &cell.u, &cell.b, h, x, &mut z);
        for (o, zi) in tz.iter_mut().zip(&z) {
            *o = zi.tanh();
        }
        if alpha != 0.0 {
            matvec_into(&dyn_.a, h, &mut ah);
        } else {
            ah.fill(0.0);
        }

        if !rk2 {
            for i in 0..n {
                hn[i] = h[i] + dt * (alpha * ah[i] + tz[i]);
            }
        } else {
            let hm = &mut mid_states[t * n..(t + 1) * n];
            for i in 0..n {
                hm[i] = h[i] + 0.5 * dt * (alpha * ah[i] + tz[i]);
            }
            let tzm = &mut mid_tanh_z[t * n..(t + 1) * n];
            preact(&dyn_.w, &cell.u, &cell.b, hm, x, &mut z);
            for (o, zi) in tzm.iter_mut().zip(&z) {
                *o = zi.tanh();
            }
            if alpha != 0.0 {
                matvec_into(&dyn_.a, hm, &mut ah);
            } else {
                ah.fill(0.0);
            }
            for i in 0..n {
                hn[i] = h[i] + dt * (alpha * ah[i] + tzm[i]);
            }
        }
        if hn.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteState { step: t });
        }
    }

    let y = crate::linalg::matvec(&cell.d, &states[t_len * n..]).map_err(ModelError::Linalg)?;
    let traj = Trajectory {
        n,
        t_len,
        scheme: cell.scheme,
        states,
        tanh_z,
        mid_states,
        mid_tanh_z,
        inputs: seq.clone(),
    };
    Ok((traj, y))
}

/// z = W·h + U·x + b.
#[inline]
fn preact(w: &DenseMatrix, u: &DenseMatrix, b: &[f64], h: &[f64], x: &[f64], z: &mut [f64]) {
    matvec_into(w, h, z);
    matvec_add_into(u, x, z);
    for (zi, bi) in z.iter_mut().zip(b) {
        *zi += bi;
    }
}

fn check_dims(cell: &LipschitzCell, h: &[f64], x: &[f64]) -> Result<(), ModelError> {
    if h.len() != cell.n() {
        return Err(ModelError::Dimension {
            what: "hidden dim",
            expected: cell.n(),
            got: h.len(),
        });
    }
    if x.len() != cell.p() {
        return Err(ModelError::Dimension {
            what: "input dim",
            expected: cell.p(),
            got: x.len(),
        });
    }
    Ok(())
}
