//! Eigenvalues of general real square matrices.
//!
//! Householder reduction to upper Hessenberg form followed by Francis
//! double-shift QR iteration, following the classic EISPACK/Jama routines.
//! Eigenvalues only: downstream consumers need real parts of spectra, never
//! general eigenvectors.

use super::DenseMatrix;
use crate::error::LinalgError;

pub const MAX_N: usize = 2048;

/// Eigenvalues of a real matrix as (real, imaginary) pairs, sorted by
/// descending real part with the imaginary part as tie-break.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ComplexSpectrum {
    eigs: Vec<(f64, f64)>,
}

impl ComplexSpectrum {
    pub(crate) fn from_unsorted(mut eigs: Vec<(f64, f64)>) -> Self {
        eigs.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(b.1.partial_cmp(&a.1).unwrap())
        });
        Self { eigs }
    }

    pub fn eigenvalues(&self) -> &[(f64, f64)] {
        &self.eigs
    }

    pub fn len(&self) -> usize {
        self.eigs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigs.is_empty()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.eigs.iter().map(|e| e.0).collect()
    }

    /// Largest real part; eigenvalues are sorted so this is the first entry.
    pub fn max_real(&self) -> f64 {
        self.eigs.first().map_or(f64::NAN, |e| e.0)
    }

    pub fn min_real(&self) -> f64 {
        self.eigs.last().map_or(f64::NAN, |e| e.0)
    }
}

/// Full spectrum of a real square matrix, n ≤ 2048.
///
/// The eigenvalue sum is checked against the trace to 1e-8·(1+|trace|);
/// failing that check reports an internal inconsistency rather than
/// returning silently wrong values.
pub fn general_eigs(a: &DenseMatrix) -> Result<ComplexSpectrum, LinalgError> {
    a.require_square()?;
    let n = a.rows();
    if n > MAX_N {
        return Err(LinalgError::TooLarge { n, max: MAX_N });
    }
    if n == 0 {
        return Ok(ComplexSpectrum::from_unsorted(Vec::new()));
    }
    let mut h = a.clone();
    if n > 2 {
        hessenberg(&mut h);
    }
    let (re, im) = hqr_eigenvalues(&mut h)?;

    let sum: f64 = re.iter().sum();
    let trace = a.trace();
    if (sum - trace).abs() > 1e-8 * (1.0 + trace.abs()) {
        return Err(LinalgError::TraceCheck { sum, trace });
    }
    Ok(ComplexSpectrum::from_unsorted(
        re.into_iter().zip(im).collect(),
    ))
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(h: &mut DenseMatrix) {
    let n = h.rows();
    let low = 0;
    let high = n - 1;
    let mut ort = vec![0.0; n];

    for m in low + 1..high {
        let mut scale = 0.0;
        for i in m..=high {
            scale += h.get(i, m - 1).abs();
        }
        if scale == 0.0 {
            continue;
        }
        // Householder vector for column m-1.
        let mut hsum = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h.get(i, m - 1) / scale;
            hsum += ort[i] * ort[i];
        }
        let mut g = hsum.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hsum -= ort[m] * g;
        ort[m] -= g;

        // Apply H = (I - u u^T / hsum) from the left and right.
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h.get(i, j);
            }
            f /= hsum;
            for i in m..=high {
                let v = h.get(i, j) - f * ort[i];
                h.set(i, j, v);
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h.get(i, j);
            }
            f /= hsum;
            for j in m..=high {
                let v = h.get(i, j) - f * ort[j];
                h.set(i, j, v);
            }
        }
        ort[m] *= scale;
        h.set(m, m - 1, scale * g);
    }
    // Zero out the area below the subdiagonal left by the reduction.
    for i in 2..n {
        for j in 0..i - 1 {
            h.set(i, j, 0.0);
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix; eigenvalues only.
/// Budget: 30·n sweeps total, after which the already deflated part of the
/// spectrum is reported in the error.
#[allow(clippy::many_single_char_names)]
fn hqr_eigenvalues(hm: &mut DenseMatrix) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
    let nn = hm.rows();
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    let mut found = vec![false; nn];

    let low: isize = 0;
    let high: isize = nn as isize - 1;
    let eps = 2.0f64.powi(-52);
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut x, mut y, mut w): (f64, f64, f64);
    let _ = (p, q, s, z);

    let g = |hm: &DenseMatrix, i: isize, j: isize| hm.get(i as usize, j as usize);

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += hm.get(i, j).abs();
        }
    }

    let budget = 30 * nn;
    let mut total_sweeps = 0usize;
    let mut iter = 0;
    let mut n = high;

    while n >= low {
        // Look for a single small subdiagonal element.
        let mut l = n;
        while l > low {
            s = g(hm, l - 1, l - 1).abs() + g(hm, l, l).abs();
            if s == 0.0 {
                s = norm;
            }
            if g(hm, l, l - 1).abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            let v = g(hm, n, n) + exshift;
            hm.set(n as usize, n as usize, v);
            d[n as usize] = v;
            e[n as usize] = 0.0;
            found[n as usize] = true;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found.
            w = g(hm, n, n - 1) * g(hm, n - 1, n);
            p = (g(hm, n - 1, n - 1) - g(hm, n, n)) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            let vnn = g(hm, n, n) + exshift;
            hm.set(n as usize, n as usize, vnn);
            let vn1 = g(hm, n - 1, n - 1) + exshift;
            hm.set(n as usize - 1, n as usize - 1, vn1);
            x = vnn;
            if q >= 0.0 {
                // Real pair.
                z = if p >= 0.0 { p + z } else { p - z };
                d[n as usize - 1] = x + z;
                d[n as usize] = d[n as usize - 1];
                if z != 0.0 {
                    d[n as usize] = x - w / z;
                }
                e[n as usize - 1] = 0.0;
                e[n as usize] = 0.0;
            } else {
                // Complex conjugate pair.
                d[n as usize - 1] = x + p;
                d[n as usize] = x + p;
                e[n as usize - 1] = z;
                e[n as usize] = -z;
            }
            found[n as usize] = true;
            found[n as usize - 1] = true;
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet: perform one double QR sweep.
            if total_sweeps >= budget {
                let partial: Vec<(f64, f64)> = (0..nn)
                    .filter(|&i| found[i])
                    .map(|i| (d[i], e[i]))
                    .collect();
                return Err(LinalgError::NoConvergence {
                    sweeps: total_sweeps,
                    n: nn,
                    found: partial.len(),
                    partial,
                });
            }
            total_sweeps += 1;

            x = g(hm, n, n);
            y = g(hm, n - 1, n - 1);
            w = g(hm, n, n - 1) * g(hm, n - 1, n);

            // Wilkinson's original ad hoc shift.
            if iter == 10 || iter == 20 {
                exshift += x;
                for i in low..=n {
                    let v = g(hm, i, i) - x;
                    hm.set(i as usize, i as usize, v);
                }
                s = g(hm, n, n - 1).abs() + g(hm, n - 1, n - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            iter += 1;

            // Look for two consecutive small subdiagonal elements.
            let mut m = n - 2;
            while m >= l {
                z = g(hm, m, m);
                r = x - z;
                s = y - z;
                p = (r * s - w) / g(hm, m + 1, m) + g(hm, m, m + 1);
                q = g(hm, m + 1, m + 1) - z - r - s;
                r = g(hm, m + 2, m + 1);
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if g(hm, m, m - 1).abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (g(hm, m - 1, m - 1).abs() + z.abs() + g(hm, m + 1, m + 1).abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=n {
                hm.set(i as usize, i as usize - 2, 0.0);
                if i > m + 2 {
                    hm.set(i as usize, i as usize - 3, 0.0);
                }
            }

            // Double QR step on rows l..n and columns m..n.
            for k in m..n {
                let notlast = k != n - 1;
                if k != m {
                    p = g(hm, k, k - 1);
                    q = g(hm, k + 1, k - 1);
                    r = if notlast { g(hm, k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        hm.set(k as usize, k as usize - 1, -s * x);
                    } else if l != m {
                        let v = -g(hm, k, k - 1);
                        hm.set(k as usize, k as usize - 1, v);
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    // Row modification.
                    for j in k as usize..nn {
                        let mut f = hm.get(k as usize, j) + q * hm.get(k as usize + 1, j);
                        if notlast {
                            f += r * hm.get(k as usize + 2, j);
                        }
                        let v0 = hm.get(k as usize, j) - f * x;
                        hm.set(k as usize, j, v0);
                        let v1 = hm.get(k as usize + 1, j) - f * y;
                        hm.set(k as usize + 1, j, v1);
                        if notlast {
                            let v2 = hm.get(k as usize + 2, j) - f * z;
                            hm.set(k as usize + 2, j, v2);
                        }
                    }

                    // Column modification.
                    let imax = n.min(k + 3) as usize;
                    for i in 0..=imax {
                        let mut f = x * hm.get(i, k as usize) + y * hm.get(i, k as usize + 1);
                        if notlast {
                            f += z * hm.get(i, k as usize + 2);
                        }
                        let v0 = hm.get(i, k as usize) - f;
                        hm.set(i, k as usize, v0);
                        let v1 = hm.get(i, k as usize + 1) - f * q;
                        hm.set(i, k as usize + 1, v1);
                        if notlast {
                            let v2 = hm.get(i, k as usize + 2) - f * r;
                            hm.set(i, k as usize + 2, v2);
                        }
                    }
                }
            }
        }
    }
    Ok((d, e))
}
