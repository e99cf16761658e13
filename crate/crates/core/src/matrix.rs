//! Dense square matrices for small phase spaces.
//!
//! Storage is a flat row-major `Vec<f64>`. Systems here are 2n-dimensional
//! with n typically 1, so nothing is blocked or sparse. State vectors are
//! plain `Vec<f64>` / `&[f64]`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::pade::{self, PadePair};

/// Relative pivot threshold for [`Lu::factor`], scaled by `max |a_ij|`.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// Scaled 1-norm target before the Padé kernel of [`expm`] is applied.
const EXPM_SCALED_NORM: f64 = 0.5;
const EXPM_MAX_SQUARINGS: u32 = 40;
/// Diagonal order of the kernel; its truncation error at norm 0.5 is ~1e-24.
const EXPM_PADE_ORDER: usize = 8;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from rows, rejecting ragged or non-finite input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("matrix must have at least one row".into()));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        let m = Self { dim, data };
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// `self += factor * other`
    pub fn add_scaled(&mut self, factor: f64, other: &Matrix) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "dimension mismatch");
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Entrywise max norm, the norm used for every defect report.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Commutator `self * other - other * self`.
    pub fn commutator(&self, other: &Matrix) -> Matrix {
        &(self * other) - &(other * self)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.dim)).finish()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        let mut out = self.clone();
        out.add_scaled(1.0, rhs);
        out
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        let mut out = self.clone();
        out.add_scaled(-1.0, rhs);
        out
    }
}

impl Neg for &Matrix {
    type Output = Matrix;

    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

/// The standard symplectic form `J = [[0, I], [-I, 0]]` of size 2n.
pub fn symplectic_j(n: usize) -> Matrix {
    assert!(n >= 1, "half-dimension must be positive");
    let mut j = Matrix::zeros(2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `J⁻¹ = -J = Jᵀ`.
pub fn symplectic_j_inverse(n: usize) -> Matrix {
    symplectic_j(n).transpose()
}

fn half_dim(m: &Matrix) -> Result<usize> {
    if m.dim() % 2 != 0 {
        return Err(Error::OddDimension(m.dim()));
    }
    Ok(m.dim() / 2)
}

/// True iff `‖JB + BᵀJ‖_max <= tol`.
pub fn is_infinitesimal_symplectic(b: &Matrix, tol: f64) -> Result<bool> {
    let j = symplectic_j(half_dim(b)?);
    let defect = &(&j * b) + &(&b.transpose() * &j);
    Ok(defect.norm_max() <= tol)
}

/// `‖SᵀJS - J‖_max`; zero iff `S` is symplectic.
pub fn symplectic_defect(s: &Matrix) -> Result<f64> {
    let j = symplectic_j(half_dim(s)?);
    let sjs = &(&s.transpose() * &j) * s;
    Ok((&sjs - &j).norm_max())
}

/// Row-pivoted LU factorization, kept so several right-hand sides can share it.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Self> {
        let n = a.dim();
        let tolerance = PIVOT_TOLERANCE * a.norm_max();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > tolerance) {
                return Err(Error::SingularMatrix { pivot, tolerance });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    lu.data.swap(p * n + j, k * n + j);
                }
            }
            let diag = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / diag;
                lu[(i, k)] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= factor * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.dim();
        assert_eq!(b.len(), n, "dimension mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        let n = b.dim();
        let mut out = Matrix::zeros(n);
        let bt = b.transpose();
        for (j, col) in bt.data.chunks(n).enumerate() {
            for (i, v) in self.solve(col).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

/// Solves `A x = b` by row-pivoted elimination.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.len(),
        });
    }
    Ok(Lu::factor(a)?.solve(b))
}

/// Matrix exponential by scaling and squaring around a diagonal Padé kernel.
///
/// The input is scaled by `2^-s` until its 1-norm is at most 0.5; more than
/// 40 squarings is reported as [`Error::Overflow`].
pub fn expm(a: &Matrix) -> Result<Matrix> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let norm = a.norm_one();
    let squarings = if norm <= EXPM_SCALED_NORM {
        0
    } else {
        (norm / EXPM_SCALED_NORM).log2().ceil() as u32
    };
    if squarings > EXPM_MAX_SQUARINGS {
        return Err(Error::Overflow {
            norm,
            max_squarings: EXPM_MAX_SQUARINGS,
        });
    }
    let scaled = a.scale(0.5f64.powi(squarings as i32));
    let order = PadePair::new(EXPM_PADE_ORDER, EXPM_PADE_ORDER)?;
    let mut result = pade::transfer_matrix(&scaled, order)?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    if !result.is_finite() {
        return Err(Error::Overflow {
            norm,
            max_squarings: EXPM_MAX_SQUARINGS,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn rot_generator(theta: f64) -> Matrix {
        Matrix::from_rows(&[[0.0, -theta], [theta, 0.0]]).unwrap()
    }

    /// Plain Taylor summation; only trustworthy for small norms.
    fn taylor_exp(a: &Matrix, terms: usize) -> Matrix {
        let mut sum = Matrix::identity(a.dim());
        let mut term = Matrix::identity(a.dim());
        for k in 1..terms {
            term = (&term * a).scale(1.0 / k as f64);
            sum = &sum + &term;
        }
        sum
    }

    #[test]
    fn j_blocks() {
        let j = symplectic_j(1);
        assert_eq!(j.rows(), vec![vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let jj = &j * &j;
        assert_eq!(jj, Matrix::identity(2).scale(-1.0));
        let j2 = symplectic_j(2);
        assert_eq!(&j2.transpose() * &j2, Matrix::identity(4));
        assert_eq!(symplectic_j_inverse(3), symplectic_j(3).scale(-1.0));
    }

    #[test]
    fn solve_trivial() {
        let v = vec![3.0, -1.5];
        assert_eq!(solve(&Matrix::identity(2), &v).unwrap(), v);
        let x = solve(&Matrix::identity(2).scale(2.0), &[2.0, 4.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
    }

    #[test]
    fn solve_needs_pivoting() {
        let a = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(solve(&a, &[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn solve_singular() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(solve(&a, &[1.0, 1.0]), Err(Error::SingularMatrix { .. })));
        assert!(matches!(
            solve(&Matrix::zeros(3), &[0.0; 3]),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn solve_dimension_mismatch() {
        assert!(matches!(
            solve(&Matrix::identity(2), &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn from_rows_validates() {
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(matches!(
            Matrix::from_rows(&[[f64::NAN]]),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn expm_zero_is_identity() {
        assert_eq!(expm(&Matrix::zeros(4)).unwrap(), Matrix::identity(4));
    }

    #[test]
    fn expm_quarter_rotation() {
        let e = expm(&rot_generator(FRAC_PI_2)).unwrap();
        let expected = rot_generator(1.0);
        assert!((&e - &expected).norm_max() < 1e-14, "{e:?}");
        // Taylor oracle after scaling by 2^-3, then squared back.
        let mut t = taylor_exp(&rot_generator(FRAC_PI_2 / 8.0), 30);
        for _ in 0..3 {
            t = &t * &t;
        }
        assert!((&e - &t).norm_max() < 1e-13);
    }

    #[test]
    fn expm_block_diagonal() {
        let a = Matrix::from_rows(&[
            [0.3, 1.0, 0.0, 0.0],
            [-0.2, 0.1, 0.0, 0.0],
            [0.0, 0.0, -1.2, 0.4],
            [0.0, 0.0, 2.0, 0.5],
        ])
        .unwrap();
        let e = expm(&a).unwrap();
        let b1 = expm(&Matrix::from_rows(&[[0.3, 1.0], [-0.2, 0.1]]).unwrap()).unwrap();
        let b2 = expm(&Matrix::from_rows(&[[-1.2, 0.4], [2.0, 0.5]]).unwrap()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((e[(i, j)] - b1[(i, j)]).abs() < 1e-14);
                assert!((e[(i + 2, j + 2)] - b2[(i, j)]).abs() < 1e-14);
                assert_eq!(e[(i, j + 2)], 0.0);
                assert_eq!(e[(i + 2, j)], 0.0);
            }
        }
    }

    #[test]
    fn expm_scalar_matches_exp() {
        for x in [-20.0, -1.0, 0.25, 3.0, 15.0] {
            let e = expm(&Matrix::diagonal(&[x])).unwrap();
            assert!((e[(0, 0)] / x.exp() - 1.0).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn expm_overflow() {
        let big = Matrix::diagonal(&[1e14, 1.0]);
        assert!(matches!(expm(&big), Err(Error::Overflow { .. })));
        let nan = Matrix::diagonal(&[f64::INFINITY]);
        assert!(expm(&nan).is_err());
    }

    #[test]
    fn infinitesimal_symplectic_examples() {
        let j = symplectic_j(1);
        assert!(is_infinitesimal_symplectic(&j, 1e-15).unwrap());
        assert!(!is_infinitesimal_symplectic(&Matrix::identity(2), 1e-3).unwrap());
        assert_eq!(
            is_infinitesimal_symplectic(&Matrix::identity(3), 1.0),
            Err(Error::OddDimension(3))
        );
        // J⁻¹C with C symmetric.
        let c = Matrix::from_rows(&[
            [2.0, 0.3, -1.0, 0.5],
            [0.3, 1.0, 0.7, 0.2],
            [-1.0, 0.7, 0.4, -0.6],
            [0.5, 0.2, -0.6, 3.0],
        ])
        .unwrap();
        let b = &symplectic_j_inverse(2) * &c;
        assert!(is_infinitesimal_symplectic(&b, 1e-14).unwrap());
    }

    #[test]
    fn symplectic_defect_examples() {
        assert_eq!(symplectic_defect(&Matrix::identity(2)).unwrap(), 0.0);
        assert_eq!(symplectic_defect(&symplectic_j(2)).unwrap(), 0.0);
        assert_eq!(symplectic_defect(&Matrix::diagonal(&[2.0, 0.5])).unwrap(), 0.0);
        // det = 2: not area preserving.
        let d = symplectic_defect(&Matrix::diagonal(&[2.0, 1.0])).unwrap();
        assert_eq!(d, 1.0);
        assert_eq!(
            symplectic_defect(&Matrix::identity(1)),
            Err(Error::OddDimension(1))
        );
    }
}
