//! Symmetric-skew weight parameterization.
//!
//! A free matrix M and scalars (β, γ) produce the hidden-to-hidden matrix
//!
//! ```text
//! S = (1−β)(M + M^T) + β(M − M^T) − γI.
//! ```
//!
//! β blends the symmetric and skew parts and thereby controls the width of
//! the real-part spectrum of S; γ shifts every real part left. Training
//! updates M only; β and γ stay fixed for a run.

use crate::error::{LinalgError, ModelError};
use crate::linalg::{sym_eigs, DenseMatrix};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SymSkewParam {
    m: DenseMatrix,
    beta: f64,
    gamma: f64,
}

/// Closed interval certified to contain every Re λ(S) and every
/// eigenvalue of ½(S + S^T).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectrumInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SymSkewParam {
    /// β must lie in [0,1]; values below 0.5 are legal but logged, since the
    /// useful regime in practice is [0.5, 1]. γ must be ≥ 0.
    pub fn new(m: DenseMatrix, beta: f64, gamma: f64) -> Result<Self, ModelError> {
        m.require_square().map_err(ModelError::Linalg)?;
        if !(0.0..=1.0).contains(&beta) || !beta.is_finite() {
            return Err(ModelError::OutOfRange {
                what: "beta",
                value: beta,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if beta < 0.5 {
            log::warn!("beta={beta} is outside the recommended range [0.5, 1]");
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(ModelError::OutOfRange {
                what: "gamma",
                value: gamma,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        Ok(Self { m, beta, gamma })
    }

    pub fn n(&self) -> usize {
        self.m.rows()
    }

    pub fn m(&self) -> &DenseMatrix {
        &self.m
    }

    pub fn m_mut(&mut self) -> &mut DenseMatrix {
        &mut self.m
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// S = (1−β)(M+M^T) + β(M−M^T) − γI.
    pub fn materialize(&self) -> DenseMatrix {
        materialize_with(&self.m, self.beta, self.gamma)
    }

    /// Certified real-part bounds for the spectrum of S:
    /// [2(1−β)·λ_min(M^sym) − γ, 2(1−β)·λ_max(M^sym) − γ], M^sym = ½(M+M^T).
    ///
    /// The factor 2 comes from S + S^T = 2(1−β)(M+M^T) − 2γI, whose halved
    /// symmetrization bounds all real parts; with M^sym defined as the halved
    /// sum, the endpoint constant is 2(1−β). The single-factor variant
    /// (1−β)·λ − γ is too narrow and is exposed separately only for
    /// comparison plots.
    pub fn spectrum_interval(&self) -> Result<SpectrumInterval, LinalgError> {
        let msym = self.m.symmetric_part()?;
        let (eigs, _) = sym_eigs(&msym)?;
        let c = 2.0 * (1.0 - self.beta);
        let lo = c * eigs.first().copied().unwrap_or(0.0) - self.gamma;
        let hi = c * eigs.last().copied().unwrap_or(0.0) - self.gamma;
        Ok(SpectrumInterval { lo, hi })
    }

    /// The narrower single-factor bound [(1−β)λ_min − γ, (1−β)λ_max − γ].
    /// Not certified; emitted alongside the certified interval in sweep
    /// output so the two conventions can be compared on one plot.
    pub fn narrow_interval(&self) -> Result<SpectrumInterval, LinalgError> {
        let msym = self.m.symmetric_part()?;
        let (eigs, _) = sym_eigs(&msym)?;
        let c = 1.0 - self.beta;
        Ok(SpectrumInterval {
            lo: c * eigs.first().copied().unwrap_or(0.0) - self.gamma,
            hi: c * eigs.last().copied().unwrap_or(0.0) - self.gamma,
        })
    }
}

/// Materialization with explicit (β, γ); used by variants that override β.
pub(crate) fn materialize_with(m: &DenseMatrix, beta: f64, gamma: f64) -> DenseMatrix {
    let n = m.rows();
    DenseMatrix::from_fn(n, n, |i, j| {
        let mij = m.get(i, j);
        let mji = m.get(j, i);
        let mut v = (1.0 - beta) * (mij + mji) + beta * (mij - mji);
        if i == j {
            v -= gamma;
        }
        v
    })
}

/// Pullback of a gradient through the parameterization: with G = ∂L/∂S,
/// ∂L/∂M = (1−β)(G + G^T) + β(G − G^T). The γ term has no M dependence.
pub fn grad_to_m(grad_s: &DenseMatrix, beta: f64) -> Result<DenseMatrix, LinalgError> {
    grad_s.require_square()?;
    let n = grad_s.rows();
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        let gij = grad_s.get(i, j);
        let gji = grad_s.get(j, i);
        (1.0 - beta) * (gij + gji) + beta * (gij - gji)
    }))
}
