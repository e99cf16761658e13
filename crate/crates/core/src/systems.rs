//! Linear stochastic Hamiltonian systems and their exact solutions.
//!
//! Two families are supported:
//!
//! * [`LinearShs`]: Stratonovich `dX = A⁰X dt + Σ AⁱX ∘ dWⁱ` with every `Aⁱ`
//!   infinitesimal symplectic (`J Aⁱ` symmetric, i.e. `Aⁱ = J⁻¹Cⁱ`).
//! * [`AdditiveShs`]: Itô `dZ = G Z dt + Σ J⁻¹Rᵢ dWⁱ` with `G = J⁻¹C̃⁰`,
//!   `C̃⁰` symmetric and `Rᵢ = (C̃₁ⁱ, -C̃₂ⁱ)` the gradient of the linear
//!   Hamiltonian `H̃ᵢ = <C̃₁ⁱ, p> - <C̃₂ⁱ, q>`.

use crate::error::{Error, Result};
use crate::matrix::{expm, is_infinitesimal_symplectic, symplectic_j, symplectic_j_inverse, Matrix};
use crate::noise::StepNoise;

/// Tolerance on `‖J A + Aᵀ J‖_max` when validating generators.
pub const GENERATOR_TOLERANCE: f64 = 1e-10;
/// Generators whose commutators stay below this are treated as commuting.
pub const COMMUTING_TOLERANCE: f64 = 1e-12;
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LinearShs {
    n: usize,
    generators: Vec<Matrix>,
    commuting: bool,
}

impl LinearShs {
    /// Validates `[A⁰, A¹, …, Aᵐ]`; `m >= 1` diffusion generators are required.
    pub fn new(generators: Vec<Matrix>) -> Result<Self> {
        if generators.len() < 2 {
            return Err(Error::InvalidArgument(
                "need a drift generator and at least one diffusion generator".into(),
            ));
        }
        let dim = generators[0].dim();
        if dim % 2 != 0 {
            return Err(Error::OddDimension(dim));
        }
        for (i, a) in generators.iter().enumerate() {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: a.dim(),
                });
            }
            if !a.is_finite() {
                return Err(Error::NonFinite);
            }
            if !is_infinitesimal_symplectic(a, GENERATOR_TOLERANCE)? {
                return Err(Error::NotInfinitesimalSymplectic(i));
            }
        }
        let commuting = generators.iter().enumerate().all(|(i, a)| {
            generators[i + 1..]
                .iter()
                .all(|b| a.commutator(b).norm_max() <= COMMUTING_TOLERANCE)
        });
        Ok(Self {
            n: dim / 2,
            generators,
            commuting,
        })
    }

    /// Builds the generators `Aⁱ = J⁻¹Cⁱ` from symmetric Hamiltonian matrices.
    pub fn from_hamiltonians(hamiltonians: &[Matrix]) -> Result<Self> {
        let Some(first) = hamiltonians.first() else {
            return Err(Error::InvalidArgument("no Hamiltonian matrices".into()));
        };
        if first.dim() % 2 != 0 {
            return Err(Error::OddDimension(first.dim()));
        }
        let j_inv = symplectic_j_inverse(first.dim() / 2);
        let mut generators = Vec::with_capacity(hamiltonians.len());
        for c in hamiltonians {
            if c.dim() != first.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    actual: c.dim(),
                });
            }
            if !c.is_symmetric(SYMMETRY_TOLERANCE) {
                return Err(Error::NotSymmetric);
            }
            generators.push(&j_inv * c);
        }
        Self::new(generators)
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Number of Wiener channels `m`.
    pub fn channels(&self) -> usize {
        self.generators.len() - 1
    }

    pub fn drift(&self) -> &Matrix {
        &self.generators[0]
    }

    /// `Aⁱ` for `i` in `1..=m`.
    pub fn diffusion(&self, i: usize) -> &Matrix {
        &self.generators[i]
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }

    /// `Cⁱ = J Aⁱ`, the symmetric matrices of the quadratic Hamiltonians.
    pub fn hamiltonian_matrices(&self) -> Vec<Matrix> {
        let j = symplectic_j(self.n);
        self.generators.iter().map(|a| &j * a).collect()
    }

    pub fn is_commuting(&self) -> bool {
        self.commuting
    }

    /// `h A⁰ + Σᵢ √h wᵢ Aⁱ`.
    pub fn step_generator(&self, h: f64, weights: &[f64]) -> Matrix {
        assert_eq!(weights.len(), self.channels(), "one weight per channel");
        let mut b = self.drift().scale(h);
        let sh = h.sqrt();
        for (a, w) in self.generators[1..].iter().zip(weights) {
            b.add_scaled(sh * w, a);
        }
        b
    }
}

/// Closed-form step `exp(hA⁰ + Σ √h ξⁱ Aⁱ) x` driven by the raw Gaussians.
/// Only valid for commuting generator families.
pub fn exact_linear_step(sys: &LinearShs, x: &[f64], h: f64, noise: &StepNoise) -> Result<Vec<f64>> {
    if !sys.is_commuting() {
        return Err(Error::NonCommutingGenerators);
    }
    check_len(x, sys.dim())?;
    if noise.channels() != sys.channels() {
        return Err(Error::DimensionMismatch {
            expected: sys.channels(),
            actual: noise.channels(),
        });
    }
    Ok(expm(&sys.step_generator(h, &noise.xi))?.mul_vec(x))
}

fn check_len(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AdditiveShs {
    n: usize,
    c0: Matrix,
    c1: Vec<Vec<f64>>,
    c2: Vec<Vec<f64>>,
    generator: Matrix,
    noise_vectors: Vec<Vec<f64>>,
}

impl AdditiveShs {
    pub fn new(c0: Matrix, c1: Vec<Vec<f64>>, c2: Vec<Vec<f64>>) -> Result<Self> {
        let dim = c0.dim();
        if dim % 2 != 0 {
            return Err(Error::OddDimension(dim));
        }
        if !c0.is_finite() {
            return Err(Error::NonFinite);
        }
        if !c0.is_symmetric(SYMMETRY_TOLERANCE) {
            return Err(Error::NotSymmetric);
        }
        let n = dim / 2;
        if c1.is_empty() || c1.len() != c2.len() {
            return Err(Error::InvalidArgument(format!(
                "need matching non-empty noise coefficient lists, got {} and {}",
                c1.len(),
                c2.len()
            )));
        }
        for v in c1.iter().chain(&c2) {
            check_len(v, n)?;
        }
        let j_inv = symplectic_j_inverse(n);
        let generator = &j_inv * &c0;
        let noise_vectors = c1
            .iter()
            .zip(&c2)
            .map(|(a, b)| {
                let r: Vec<f64> = a.iter().copied().chain(b.iter().map(|v| -v)).collect();
                j_inv.mul_vec(&r)
            })
            .collect();
        Ok(Self {
            n,
            c0,
            c1,
            c2,
            generator,
            noise_vectors,
        })
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn channels(&self) -> usize {
        self.noise_vectors.len()
    }

    pub fn c0(&self) -> &Matrix {
        &self.c0
    }

    pub fn c1(&self) -> &[Vec<f64>] {
        &self.c1
    }

    pub fn c2(&self) -> &[Vec<f64>] {
        &self.c2
    }

    /// `G = J⁻¹ C̃⁰`.
    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    /// `J⁻¹ Rᵢ` per channel.
    pub fn noise_vectors(&self) -> &[Vec<f64>] {
        &self.noise_vectors
    }
}

/// `exp(hG) z + Σᵢ I_exactⁱ`.
pub fn exact_additive_step(sys: &AdditiveShs, z: &[f64], h: f64, i_exact: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_len(z, sys.dim())?;
    if i_exact.len() != sys.channels() {
        return Err(Error::DimensionMismatch {
            expected: sys.channels(),
            actual: i_exact.len(),
        });
    }
    let mut out = expm(&sys.generator().scale(h))?.mul_vec(z);
    for integral in i_exact {
        check_len(integral, sys.dim())?;
        for (o, v) in out.iter_mut().zip(integral) {
            *o += v;
        }
    }
    Ok(out)
}

/// `½ xᵀ C x`.
pub fn hamiltonian_quadratic(c: &Matrix, x: &[f64]) -> f64 {
    let cx = c.mul_vec(x);
    0.5 * x.iter().zip(&cx).map(|(a, b)| a * b).sum::<f64>()
}

/// Kubo oscillator `dP = -aQ dt - σQ∘dW`, `dQ = aP dt + σP∘dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KuboParams {
    pub a: f64,
    pub sigma: f64,
    pub p0: f64,
    pub q0: f64,
}

impl Default for KuboParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            sigma: 1.0,
            p0: 1.0,
            q0: 0.0,
        }
    }
}

impl KuboParams {
    pub fn initial_state(&self) -> Vec<f64> {
        vec![self.p0, self.q0]
    }

    pub fn system(&self) -> Result<LinearShs> {
        let rot = Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]])?;
        LinearShs::new(vec![rot.scale(self.a), rot.scale(self.sigma)])
    }

    /// Matrix of the conserved quantity `p² + q²` as `½ xᵀ C x`.
    pub fn invariant_matrix(&self) -> Matrix {
        Matrix::identity(2).scale(2.0)
    }
}

/// Closed-form Kubo solution at time `t` given `W(t) = w`.
pub fn exact_kubo(params: &KuboParams, t: f64, w: f64) -> [f64; 2] {
    let phase = params.a * t + params.sigma * w;
    let (s, c) = phase.sin_cos();
    [params.p0 * c - params.q0 * s, params.p0 * s + params.q0 * c]
}

/// Linear stochastic oscillator `dp = -q dt + σ dW`, `dq = p dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub sigma: f64,
    pub p0: f64,
    pub q0: f64,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        Self {
            sigma: 0.3,
            p0: 0.0,
            q0: 1.0,
        }
    }
}

impl OscillatorParams {
    pub fn initial_state(&self) -> Vec<f64> {
        vec![self.p0, self.q0]
    }

    /// `H = ½(p² + q²)`, `H₁ = -σq`.
    pub fn system(&self) -> Result<AdditiveShs> {
        AdditiveShs::new(Matrix::identity(2), vec![vec![0.0]], vec![vec![self.sigma]])
    }

    /// `E(p² + q²)(t) = p0² + q0² + σ² t`.
    pub fn second_moment(&self, t: f64) -> f64 {
        self.p0 * self.p0 + self.q0 * self.q0 + self.sigma * self.sigma * t
    }
}
