//! Dense real matrix kernels and eigen/singular-value solvers.
//!
//! Everything here is f64, row-major, and pure: values are immutable once
//! constructed and safe to share across threads.

mod jacobi;
mod schur;

pub use jacobi::sym_eigs;
pub use schur::{general_eigs, ComplexSpectrum, MAX_N};

use std::io::{BufRead, Write};

use crate::error::LinalgError;

/// Row-major dense matrix of 64-bit reals.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, validating length and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadLength {
                rows,
                cols,
                expected: rows * cols,
                got: data.len(),
            });
        }
        for (k, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(LinalgError::NonFinite {
                    row: k / cols.max(1),
                    col: k % cols.max(1),
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Scalar multiple of the identity.
    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// (self + self^T) / 2. Requires square input.
    pub fn symmetric_part(&self) -> Result<DenseMatrix, LinalgError> {
        self.require_square()?;
        let n = self.rows;
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::ShapeMismatch {
                op: "matmul",
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: rhs.rows,
                rhs_cols: rhs.cols,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let arow = self.row(i);
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &aik) in arow.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += aik * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    /// self += c * u v^T. The workhorse of gradient accumulation.
    pub fn add_scaled_outer(&mut self, c: f64, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (i, &ui) in u.iter().enumerate() {
            let cu = c * ui;
            if cu == 0.0 {
                continue;
            }
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (r, &vj) in row.iter_mut().zip(v) {
                *r += cu * vj;
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entry of self - self^T; zero for exactly symmetric input.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.rows.min(self.cols);
        let mut m = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                m = m.max((self.data[i * self.cols + j] - self.data[j * self.cols + i]).abs());
            }
        }
        m
    }

    pub(crate) fn require_square(&self) -> Result<(), LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    fn zip_with(
        &self,
        rhs: &DenseMatrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<DenseMatrix, LinalgError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(LinalgError::ShapeMismatch {
                op,
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: rhs.rows,
                rhs_cols: rhs.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Writes the debugging text format: "rows cols" then one line per row,
    /// 17 significant digits so values round-trip exactly.
    pub fn write_text(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row = self.row(i);
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    write!(w, " ")?;
                }
                write!(w, "{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Parses the text format produced by [`write_text`](Self::write_text).
    pub fn read_text(r: &mut impl BufRead) -> Result<Self, LinalgError> {
        let mut header = String::new();
        r.read_line(&mut header).map_err(|e| LinalgError::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
        let mut it = header.split_whitespace();
        let parse_dim = |tok: Option<&str>, line| {
            tok.ok_or(LinalgError::Parse {
                line,
                msg: "missing dimension".into(),
            })?
            .parse::<usize>()
            .map_err(|e| LinalgError::Parse {
                line,
                msg: e.to_string(),
            })
        };
        let rows = parse_dim(it.next(), 1)?;
        let cols = parse_dim(it.next(), 1)?;
        let mut data = Vec::with_capacity(rows * cols);
        let mut line = String::new();
        for i in 0..rows {
            line.clear();
            r.read_line(&mut line).map_err(|e| LinalgError::Parse {
                line: i + 2,
                msg: e.to_string(),
            })?;
            let mut count = 0;
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| LinalgError::Parse {
                    line: i + 2,
                    msg: format!("bad number {tok:?}"),
                })?;
                data.push(v);
                count += 1;
            }
            if count != cols {
                return Err(LinalgError::Parse {
                    line: i + 2,
                    msg: format!("expected {cols} entries, found {count}"),
                });
            }
        }
        DenseMatrix::new(rows, cols, data)
    }
}

/// result[i] = sum_j A[i,j] * x[j].
pub fn matvec(a: &DenseMatrix, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if a.cols != x.len() {
        return Err(LinalgError::VectorDimension {
            op: "matvec",
            lhs_rows: a.rows,
            lhs_cols: a.cols,
            rhs_len: x.len(),
        });
    }
    let mut out = vec![0.0; a.rows];
    matvec_into(a, x, &mut out);
    Ok(out)
}

/// Allocation-free matvec for hot loops; shapes must already agree.
#[inline]
pub fn matvec_into(a: &DenseMatrix, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(a.cols, x.len());
    debug_assert_eq!(a.rows, out.len());
    for (o, row) in out.iter_mut().zip(a.data.chunks_exact(a.cols.max(1))) {
        *o = dot(row, x);
    }
}

/// out += A x; allocation-free accumulate for hot loops.
#[inline]
pub fn matvec_add_into(a: &DenseMatrix, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(a.cols, x.len());
    debug_assert_eq!(a.rows, out.len());
    for (o, row) in out.iter_mut().zip(a.data.chunks_exact(a.cols.max(1))) {
        *o += dot(row, x);
    }
}

/// out[j] = sum_i A[i,j] * x[i], i.e. A^T x, without forming the transpose.
pub fn matvec_transpose_into(a: &DenseMatrix, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(a.rows, x.len());
    debug_assert_eq!(a.cols, out.len());
    out.fill(0.0);
    for (row, &xi) in a.data.chunks_exact(a.cols.max(1)).zip(x) {
        if xi == 0.0 {
            continue;
        }
        for (o, &aij) in out.iter_mut().zip(row) {
            *o += xi * aij;
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// a += c * b.
pub fn axpy(c: f64, b: &[f64], a: &mut [f64]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, &y) in a.iter_mut().zip(b) {
        *x += c * y;
    }
}

/// Singular values of A: square roots of the eigenvalues of the smaller
/// Gram matrix (A^T A or A A^T), clamped at zero, in descending order.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    let gram = if a.cols <= a.rows {
        a.transpose().matmul(a)?
    } else {
        a.matmul(&a.transpose())?
    };
    // The Gram product is symmetric up to roundoff; symmetrize exactly.
    let gram = gram.symmetric_part()?;
    let (eigs, _) = sym_eigs(&gram)?;
    let mut sv: Vec<f64> = eigs.iter().map(|&l| l.max(0.0).sqrt()).collect();
    sv.reverse();
    Ok(sv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_identity() {
        let a = DenseMatrix::identity(3);
        let y = matvec(&a, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn matvec_zero() {
        let a = DenseMatrix::zeros(2, 2);
        let y = matvec(&a, &[5.0, -7.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn matvec_hand_case() {
        let a = DenseMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = matvec(&a, &[1.0, 1.0]).unwrap();
        assert_eq!(y, vec![3.0, 7.0]);
    }

    #[test]
    fn matvec_dimension_error_names_shapes() {
        let a = DenseMatrix::zeros(2, 3);
        let err = matvec(&a, &[1.0, 2.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("2 entries"), "{msg}");
    }

    #[test]
    fn constructor_rejects_nan() {
        let err = DenseMatrix::new(2, 2, vec![0.0, f64::NAN, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, LinalgError::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn constructor_rejects_bad_length() {
        let err = DenseMatrix::new(2, 2, vec![0.0; 3]).unwrap_err();
        assert!(matches!(err, LinalgError::BadLength { got: 3, .. }));
    }

    #[test]
    fn one_by_one_supported() {
        let a = DenseMatrix::new(1, 1, vec![-4.0]).unwrap();
        assert_eq!(matvec(&a, &[2.0]).unwrap(), vec![-8.0]);
        assert_eq!(singular_values(&a).unwrap(), vec![4.0]);
    }

    #[test]
    fn text_format_round_trips() {
        let a = DenseMatrix::new(
            2,
            3,
            vec![
                1.0 / 3.0,
                -2.5e-17,
                std::f64::consts::PI,
                1e300,
                -0.0,
                7.125,
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        a.write_text(&mut buf).unwrap();
        let b = DenseMatrix::read_text(&mut buf.as_slice()).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.cols, b.cols);
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert_eq!(x.to_bits(), y.to_bits(), "{x} vs {y}");
        }
    }

    #[test]
    fn transpose_matmul_agree_with_hand_result() {
        let a = DenseMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let at = a.transpose();
        let g = at.matmul(&a).unwrap();
        // A^T A computed by hand.
        let expect = [17.0, 22.0, 27.0, 22.0, 29.0, 36.0, 27.0, 36.0, 45.0];
        for (x, y) in g.as_slice().iter().zip(expect.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
