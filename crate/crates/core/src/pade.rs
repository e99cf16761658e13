//! (r,s) Padé approximants of the exponential.
//!
//! `P(B) = D(B)⁻¹ N(B)` with
//! `N(B) = I + Σ_{i=1..r} a_i Bⁱ` and `D(B) = I + Σ_{i=1..s} b_i (-B)ⁱ`,
//! where `a_i = (r+s-i)! r! / ((r+s)! i! (r-i)!)` and `b_i` is the same
//! expression with `r` and `s` swapped. `exp(B) - P(B) = O(B^{r+s+1})`, and
//! diagonal pairs `(k,k)` map infinitesimal symplectic `B` to symplectic
//! matrices.
//!
//! Note that for `(4,4)` the `B²` coefficient is `3/28`. Some printed
//! four-stage schemes show `1/24` there; that value does not follow from the
//! factorial formula and is not used.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::{Lu, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PadePair {
    r: usize,
    s: usize,
}

impl PadePair {
    pub fn new(r: usize, s: usize) -> Result<Self> {
        if r + s == 0 {
            return Err(Error::InvalidPadePair { r, s });
        }
        Ok(Self { r, s })
    }

    /// The symmetric pair `(k,k)`.
    pub fn diagonal(k: usize) -> Result<Self> {
        Self::new(k, k)
    }

    pub fn r(self) -> usize {
        self.r
    }

    pub fn s(self) -> usize {
        self.s
    }

    /// `r + s`, the order of agreement with `exp`.
    pub fn degree(self) -> usize {
        self.r + self.s
    }

    pub fn is_diagonal(self) -> bool {
        self.r == self.s
    }
}

impl fmt::Display for PadePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.r, self.s)
    }
}

/// Numerator (`a_1..a_r`) and denominator (`b_1..b_s`) coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PadeCoefficients {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

/// `c_1..c_p` with `c_i = (p+q-i)! p! / ((p+q)! i! (p-i)!)`, via the ratio
/// `c_{i+1} / c_i = (p-i) / ((i+1)(p+q-i))`.
fn one_sided(p: usize, q: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(p);
    let mut c = 1.0;
    for i in 0..p {
        c *= (p - i) as f64 / ((i + 1) as f64 * (p + q - i) as f64);
        out.push(c);
    }
    out
}

pub fn coefficients(order: PadePair) -> PadeCoefficients {
    PadeCoefficients {
        numerator: one_sided(order.r, order.s),
        denominator: one_sided(order.s, order.r),
    }
}

/// Leading error constant `c` in `exp(x) - P(x) = c x^{r+s+1} + ...`.
pub fn error_constant(order: PadePair) -> f64 {
    let r = order.r as f64;
    let sign = if order.s % 2 == 0 { 1.0 } else { -1.0 };
    // r! s! / ((r+s)! (r+s+1)!), accumulated as a product of ratios.
    let mut c = 1.0 / (order.degree() as f64 + 1.0);
    for i in 1..=order.s {
        c *= i as f64 / (r + i as f64);
    }
    for i in 1..=(order.r + order.s) {
        c /= i as f64;
    }
    sign * c
}

/// Evaluates `Σ_{i=0..} coeff_i Mⁱ` (with `coeff_0 = 1`) by Horner's rule.
fn matrix_poly(m: &Matrix, coeffs: &[f64]) -> Matrix {
    let n = m.dim();
    let Some(&last) = coeffs.last() else {
        return Matrix::identity(n);
    };
    let mut acc = Matrix::identity(n).scale(last);
    for &c in coeffs.iter().rev().skip(1).chain(std::iter::once(&1.0)) {
        acc = m * &acc;
        for i in 0..n {
            acc[(i, i)] += c;
        }
    }
    acc
}

pub fn numerator_matrix(b: &Matrix, order: PadePair) -> Matrix {
    matrix_poly(b, &coefficients(order).numerator)
}

pub fn denominator_matrix(b: &Matrix, order: PadePair) -> Matrix {
    matrix_poly(&-b, &coefficients(order).denominator)
}

fn factor_denominator(b: &Matrix, coeffs: &PadeCoefficients) -> Result<Lu> {
    let d = matrix_poly(&-b, &coeffs.denominator);
    Lu::factor(&d).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::SingularDenominator,
        other => other,
    })
}

/// `D(B)⁻¹ N(B) x` with one linear solve; the numerator is applied with
/// matrix-vector products only.
pub fn apply(b: &Matrix, order: PadePair, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            actual: x.len(),
        });
    }
    let coeffs = coefficients(order);
    let mut y: Vec<f64> = match coeffs.numerator.last() {
        Some(&last) => x.iter().map(|v| last * v).collect(),
        None => x.to_vec(),
    };
    if !coeffs.numerator.is_empty() {
        for &c in coeffs.numerator.iter().rev().skip(1).chain(std::iter::once(&1.0)) {
            y = b.mul_vec(&y);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi += c * xi;
            }
        }
    }
    Ok(factor_denominator(b, &coeffs)?.solve(&y))
}

/// The full transfer matrix `D(B)⁻¹ N(B)`.
pub fn transfer_matrix(b: &Matrix, order: PadePair) -> Result<Matrix> {
    let coeffs = coefficients(order);
    let n = matrix_poly(b, &coeffs.numerator);
    Ok(factor_denominator(b, &coeffs)?.solve_matrix(&n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{expm, symplectic_defect, symplectic_j, symplectic_j_inverse};

    fn pair(r: usize, s: usize) -> PadePair {
        PadePair::new(r, s).unwrap()
    }

    fn assert_coeffs(actual: &[f64], expected: &[f64]) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() <= 1e-16 * e.abs().max(1.0), "{a} vs {e}");
        }
    }

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn zero_pair_rejected() {
        assert_eq!(PadePair::new(0, 0), Err(Error::InvalidPadePair { r: 0, s: 0 }));
        assert!(PadePair::new(0, 3).is_ok());
    }

    #[test]
    fn printed_coefficients() {
        let c = coefficients(pair(1, 1));
        assert_coeffs(&c.numerator, &[0.5]);
        assert_coeffs(&c.denominator, &[0.5]);
        let c = coefficients(pair(2, 2));
        assert_coeffs(&c.numerator, &[0.5, 1.0 / 12.0]);
        assert_coeffs(&c.denominator, &[0.5, 1.0 / 12.0]);
        let c = coefficients(pair(3, 3));
        assert_coeffs(&c.numerator, &[0.5, 0.1, 1.0 / 120.0]);
    }

    #[test]
    fn four_four_follows_factorial_formula() {
        let c = coefficients(pair(4, 4));
        assert_coeffs(&c.numerator, &[0.5, 3.0 / 28.0, 1.0 / 84.0, 1.0 / 1680.0]);
        assert!((c.numerator[1] - 1.0 / 24.0).abs() > 1e-3);
    }

    #[test]
    fn recurrence_matches_factorials() {
        for r in 0..=8 {
            for s in 0..=8 {
                if r + s == 0 {
                    continue;
                }
                let c = coefficients(pair(r, s));
                for i in 1..=r {
                    let direct = factorial(r + s - i) * factorial(r)
                        / (factorial(r + s) * factorial(i) * factorial(r - i));
                    assert!((c.numerator[i - 1] / direct - 1.0).abs() < 1e-14);
                }
                for i in 1..=s {
                    let direct = factorial(r + s - i) * factorial(s)
                        / (factorial(r + s) * factorial(i) * factorial(s - i));
                    assert!((c.denominator[i - 1] / direct - 1.0).abs() < 1e-14);
                }
                if r > 0 {
                    assert!((c.numerator[0] - r as f64 / (r + s) as f64).abs() < 1e-15);
                }
                if s > 0 {
                    assert!((c.denominator[0] - s as f64 / (r + s) as f64).abs() < 1e-15);
                }
                assert!(c.numerator.iter().chain(&c.denominator).all(|&v| v > 0.0));
            }
        }
    }

    #[test]
    fn zero_generator_is_identity() {
        let x = [0.3, -2.0, 1.0, 4.0];
        for (r, s) in [(1, 1), (0, 2), (3, 0), (2, 5)] {
            assert_eq!(apply(&Matrix::zeros(4), pair(r, s), &x).unwrap(), x.to_vec());
            assert_eq!(
                transfer_matrix(&Matrix::zeros(4), pair(r, s)).unwrap(),
                Matrix::identity(4)
            );
        }
    }

    #[test]
    fn cayley_rotation_preserves_norm() {
        let x = [0.6, -1.7];
        for theta in [0.01, 0.5, 2.0, 10.0] {
            let b = Matrix::from_rows(&[[0.0, -theta], [theta, 0.0]]).unwrap();
            let y = apply(&b, pair(1, 1), &x).unwrap();
            let n0 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let n1 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n0 - n1).abs() < 1e-14, "theta={theta}");
        }
    }

    #[test]
    fn scalar_residual_constant() {
        // (exp(μ) - P(μ)) / μ^{r+s+1} approaches the constant as μ → 0.
        for (r, s) in [(1, 1), (1, 2), (2, 1), (2, 2), (0, 1), (1, 0)] {
            let order = pair(r, s);
            let c = error_constant(order);
            let ratio = |mu: f64| {
                let p = transfer_matrix(&Matrix::diagonal(&[mu]), order).unwrap()[(0, 0)];
                (mu.exp() - p) / mu.powi(order.degree() as i32 + 1)
            };
            let e1 = (ratio(0.04) - c).abs();
            let e2 = (ratio(0.02) - c).abs();
            assert!(e2 < 0.6 * e1, "({r},{s}) ratio not converging: {e1} {e2}");
            assert!(e2 < 0.1 * c.abs(), "({r},{s}): {} vs {c}", ratio(0.02));
        }
        assert!((error_constant(pair(1, 1)) + 1.0 / 12.0).abs() < 1e-16);
        assert!((error_constant(pair(2, 2)) - 1.0 / 720.0).abs() < 1e-17);
    }

    #[test]
    fn apply_matches_transfer_matrix() {
        let b = Matrix::from_rows(&[[0.1, 0.7, -0.3], [0.2, -0.4, 0.5], [0.9, 0.0, 0.25]]).unwrap();
        let x = [1.0, -2.0, 0.5];
        for (r, s) in [(1, 1), (2, 3), (4, 4), (3, 0), (0, 3)] {
            let direct = apply(&b, pair(r, s), &x).unwrap();
            let via = transfer_matrix(&b, pair(r, s)).unwrap().mul_vec(&x);
            for (a, v) in direct.iter().zip(&via) {
                assert!((a - v).abs() <= 1e-13 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn diagonal_pairs_are_symplectic() {
        let c = Matrix::from_rows(&[[1.3, -0.4], [-0.4, 0.8]]).unwrap();
        let b = &symplectic_j_inverse(1) * &c;
        for k in 1..=4 {
            let t = transfer_matrix(&b, pair(k, k)).unwrap();
            let bound = 1e-10 * (1.0 + b.norm_max()).powi(3);
            assert!(symplectic_defect(&t).unwrap() <= bound);
            // N J Nᵀ = D J Dᵀ, the criterion for D⁻¹N to be symplectic.
            let n = numerator_matrix(&b, pair(k, k));
            let d = denominator_matrix(&b, pair(k, k));
            let j = symplectic_j(1);
            let lhs = &(&n * &j) * &n.transpose();
            let rhs = &(&d * &j) * &d.transpose();
            assert!((&lhs - &rhs).norm_max() < 1e-13);
        }
    }

    #[test]
    fn off_diagonal_pair_is_not_symplectic() {
        let t = transfer_matrix(&symplectic_j(1), pair(1, 2)).unwrap();
        assert!(symplectic_defect(&t).unwrap() > 1e-6);
    }

    #[test]
    fn singular_denominator() {
        // D_(1,1)(B) = I - B/2 is singular at B = 2I.
        let b = Matrix::identity(2).scale(2.0);
        assert_eq!(apply(&b, pair(1, 1), &[1.0, 1.0]), Err(Error::SingularDenominator));
        assert_eq!(transfer_matrix(&b, pair(1, 1)), Err(Error::SingularDenominator));
    }

    #[test]
    fn high_order_close_to_expm() {
        let b = Matrix::from_rows(&[[0.0, -0.3], [0.3, 0.0]]).unwrap();
        let e = expm(&b).unwrap();
        let p = transfer_matrix(&b, pair(4, 4)).unwrap();
        // Leading residual term is c·B⁹ with ‖B⁹‖ = 0.3⁹ for a rotation.
        let lead = error_constant(pair(4, 4)).abs() * 0.3f64.powi(9);
        let err = (&e - &p).norm_max();
        assert!(err < 1.1 * lead && err > 0.9 * lead, "{err} vs {lead}");
    }
}
