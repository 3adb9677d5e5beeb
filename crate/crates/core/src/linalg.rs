//! Small dense linear algebra: a row-major matrix, the cyclic Jacobi
//! eigensolver for symmetric matrices, and Cholesky solves.

use serde::Serialize;

use crate::error::{FsacfError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
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
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(FsacfError::InvalidArgument(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(FsacfError::InvalidArgument(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ self`.
    pub fn gram(&self) -> Matrix {
        let c = self.cols;
        let mut g = Matrix::zeros(c, c);
        for r in 0..self.rows {
            let row = self.row(r);
            for a in 0..c {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                for (out, &rb) in g.data[a * c + a..(a + 1) * c].iter_mut().zip(&row[a..]) {
                    *out += ra * rb;
                }
            }
        }
        for a in 0..c {
            for b in 0..a {
                g.data[a * c + b] = g.data[b * c + a];
            }
        }
        g
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector of `values[k]`.
    pub vectors: Matrix,
    pub sweeps: usize,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the off-diagonal Frobenius mass drops below
/// `1e-12 · ‖A‖_F`.
pub fn symmetric_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    let n = a.rows;
    if n != a.cols {
        return Err(FsacfError::InvalidArgument(
            "eigensolver needs a square matrix".into(),
        ));
    }
    let mut m = a.clone();
    // symmetrize against rounding in the caller
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let mut v = Matrix::identity(n);
    let scale = m.frobenius();
    let target = 1e-12 * scale;

    let off = |m: &Matrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while scale > 0.0 && off(&m) > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(FsacfError::Degenerate(format!(
                "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Solves `A X = B` for symmetric positive-definite `A` by Cholesky
/// factorization. Pivots below `1e-12 · max diag(A)` are reported as singular.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.rows;
    if a.cols != n || b.rows != n {
        return Err(FsacfError::InvalidArgument(
            "dimension mismatch in SPD solve".into(),
        ));
    }
    let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0, f64::max);
    let floor = 1e-12 * max_diag;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(FsacfError::Singular {
                column: j,
                pivot: d,
            });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    let mut x = b.clone();
    for c in 0..b.cols {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_closed_form() {
        let a = Matrix::from_row_major(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = symmetric_eigen(&a).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let v0 = (e.vectors[(0, 0)], e.vectors[(1, 0)]);
        assert!((v0.0.abs() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((v0.0 - v0.1).abs() < 1e-14);
    }

    #[test]
    fn eigen_residual_and_orthonormality() {
        let n = 30;
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (i as f64, j as f64);
                a[(i, j)] = (-(x - y).powi(2) / 40.0).exp() + if i == j { 0.1 * x } else { 0.0 };
            }
        }
        let e = symmetric_eigen(&a).unwrap();
        for w in e.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
        assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-10);
        for k in 0..n {
            let mut r = 0.0;
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a[(i, j)] * e.vectors[(j, k)]).sum();
                r += (av - e.values[k] * e.vectors[(i, k)]).powi(2);
            }
            assert!(r.sqrt() <= 1e-9 * e.values[0]);
            for l in 0..n {
                let d: f64 = (0..n).map(|i| e.vectors[(i, k)] * e.vectors[(i, l)]).sum();
                let expect = if k == l { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_matrix_is_already_diagonal() {
        let e = symmetric_eigen(&Matrix::zeros(4, 4)).unwrap();
        assert_eq!(e.sweeps, 0);
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spd_solve_and_singularity() {
        let a = Matrix::from_row_major(3, 3, vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0])
            .unwrap();
        let b = Matrix::from_row_major(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let x = solve_spd(&a, &b).unwrap();
        let back = a.matmul(&x).unwrap();
        for i in 0..3 {
            assert!((back[(i, 0)] - b[(i, 0)]).abs() < 1e-13);
        }
        let s = Matrix::from_row_major(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            solve_spd(&s, &Matrix::identity(2)),
            Err(FsacfError::Singular { column: 1, .. })
        ));
    }
}
