//! Cyclic Jacobi eigensolver for symmetric matrices.
//!
//! Chosen for robustness over speed: unconditionally convergent, and the
//! rotation accumulation gives orthonormal eigenvectors for free.

use super::DenseMatrix;
use crate::error::LinalgError;

const MAX_SWEEPS: usize = 60;

/// Eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order and a matrix whose k-th column is
/// the eigenvector for the k-th eigenvalue, orthonormal to 1e-10.
/// Input must be symmetric: ‖S − S^T‖_max ≤ 1e-10·(1 + ‖S‖_max).
pub fn sym_eigs(s: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix), LinalgError> {
    s.require_square()?;
    let tol = 1e-10 * (1.0 + s.max_abs());
    let asym = s.max_asymmetry();
    if asym > tol {
        return Err(LinalgError::NotSymmetric {
            max_asym: asym,
            tol,
        });
    }
    let n = s.rows();
    if n == 0 {
        return Ok((Vec::new(), DenseMatrix::zeros(0, 0)));
    }

    // Work on an exactly symmetrized copy so roundoff asymmetry cannot bias
    // the rotations.
    let mut a = s.symmetric_part()?;
    let mut v = DenseMatrix::identity(n);
    if n == 1 {
        return Ok((vec![a.get(0, 0)], v));
    }

    let frob = a.frobenius_norm();
    let stop = 1e-14 * frob;

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        if off_norm(&a) <= stop {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
    }
    if !converged && off_norm(&a) > stop {
        let partial: Vec<(f64, f64)> = (0..n).map(|i| (a.get(i, i), 0.0)).collect();
        return Err(LinalgError::NoConvergence {
            sweeps,
            n,
            found: n,
            partial,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).unwrap());
    let eigs: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let vecs = DenseMatrix::from_fn(n, n, |i, k| v.get(i, order[k]));
    Ok((eigs, vecs))
}

/// One Jacobi rotation zeroing a[p][q], accumulated into v.
fn rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    if apq == 0.0 {
        return;
    }
    let tau = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
    // Smaller-magnitude root of t^2 + 2·tau·t - 1 = 0 keeps rotations small.
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = a.rows();
    // A <- J^T A J, applied as column then row updates.
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, c * akp - s * akq);
        a.set(k, q, s * akp + c * akq);
    }
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, c * apk - s * aqk);
        a.set(q, k, s * apk + c * aqk);
    }
    // Pin the annihilated pair to exact zero.
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

fn off_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let x = a.get(i, j);
                sum += x * x;
            }
        }
    }
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_sorted_ascending() {
        let s = DenseMatrix::new(3, 3, vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        let (eigs, _) = sym_eigs(&s).unwrap();
        assert_eq!(eigs, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn known_two_by_two() {
        let s = DenseMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let (eigs, v) = sym_eigs(&s).unwrap();
        assert!((eigs[0] + 1.0).abs() < 1e-12);
        assert!((eigs[1] - 1.0).abs() < 1e-12);
        // Eigenvectors are (1,-1)/sqrt2 and (1,1)/sqrt2 up to sign.
        assert!((v.get(0, 0).abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        let s = DenseMatrix::new(2, 2, vec![0.0, 1.0, -1.0, 0.0]).unwrap();
        let err = sym_eigs(&s).unwrap_err();
        assert!(matches!(err, LinalgError::NotSymmetric { .. }));
        assert!(err.to_string().contains("general_eigs"));
    }

    #[test]
    fn one_by_one() {
        let s = DenseMatrix::new(1, 1, vec![-2.5]).unwrap();
        let (eigs, v) = sym_eigs(&s).unwrap();
        assert_eq!(eigs, vec![-2.5]);
        assert_eq!(v.get(0, 0), 1.0);
    }
}
