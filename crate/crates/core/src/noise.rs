//! Reproducible random inputs for the integrators.
//!
//! Every Monte-Carlo path owns a [`NoiseStream`] keyed by `(seed, path_index)`.
//! The stream is ChaCha8 with the seed (little-endian, zero padded) as key
//! and the path index as stream id, so paths are independent substreams of a
//! counter-based generator and can be simulated in any order. Uniforms are
//! `(k + 1/2) 2⁻⁵³` for the top 53 bits `k` of each 64-bit output; Gaussians
//! are the standard normal quantile of one uniform each.
//!
//! Linear schemes consume [`StepNoise`]: raw Gaussians `ξ` and their
//! truncation `ζ = clamp(ξ, -A_h, A_h)` with `A_h = √(2ℓ|ln h|)`. Additive
//! schemes consume exact joint draws of the Wiener increment and the Itô
//! integrals of the exact and Padé kernels, see [`additive_joint_spec`].

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::matrix::{expm, Matrix};
use crate::pade::{self, PadePair};
use crate::quadrature::mapped_rule;

/// Minimum number of Gauss–Legendre nodes accepted by [`additive_joint_spec`].
pub const MIN_QUAD_NODES: usize = 8;
/// Default node count for per-step covariance quadrature.
pub const DEFAULT_QUAD_NODES: usize = 32;

/// Pivots below this fraction of their own diagonal entry are treated as zero.
const PSD_PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    path_index: u64,
    rng: ChaCha8Rng,
    normal: Normal,
}

impl NoiseStream {
    pub fn new(seed: u64, path_index: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(path_index);
        Self {
            seed,
            path_index,
            rng,
            normal: Normal::standard(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        let k = self.rng.next_u64() >> 11;
        (k as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn gaussian(&mut self) -> f64 {
        let u = self.uniform();
        self.normal.inverse_cdf(u)
    }

    pub fn fill_gaussian(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.gaussian();
        }
    }

    /// Draws `m` fresh standard Gaussians and truncates them at `A_h`.
    pub fn step_noise(&mut self, h: f64, m: usize, ell: f64) -> Result<StepNoise> {
        let a_h = truncation_bound(h, ell)?;
        if m == 0 {
            return Err(Error::InvalidArgument("need at least one noise channel".into()));
        }
        let xi: Vec<f64> = (0..m).map(|_| self.gaussian()).collect();
        Ok(StepNoise::with_bound(h, xi, ell, a_h))
    }
}

/// Clamps `xi` to `[-a_h, a_h]`.
pub fn truncate(xi: f64, a_h: f64) -> f64 {
    xi.clamp(-a_h, a_h)
}

/// `A_h = √(2ℓ|ln h|)`; requires `0 < h < 1` and `ℓ >= 1`.
pub fn truncation_bound(h: f64, ell: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::DegenerateStep(h));
    }
    if !(ell >= 1.0) || !ell.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "truncation level must be >= 1, got {ell}"
        )));
    }
    Ok((2.0 * ell * h.ln().abs()).sqrt())
}

/// Per-step random data for the linear schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct StepNoise {
    pub h: f64,
    /// Raw standard Gaussians, one per channel.
    pub xi: Vec<f64>,
    /// `xi` truncated at `a_h`.
    pub zeta: Vec<f64>,
    pub ell: f64,
    pub a_h: f64,
}

impl StepNoise {
    /// Wraps externally produced Gaussians (e.g. sums of finer increments).
    pub fn from_gaussians(h: f64, xi: Vec<f64>, ell: f64) -> Result<Self> {
        let a_h = truncation_bound(h, ell)?;
        Ok(Self::with_bound(h, xi, ell, a_h))
    }

    fn with_bound(h: f64, xi: Vec<f64>, ell: f64, a_h: f64) -> Self {
        let zeta = xi.iter().map(|&x| truncate(x, a_h)).collect();
        Self {
            h,
            xi,
            zeta,
            ell,
            a_h,
        }
    }

    pub fn channels(&self) -> usize {
        self.xi.len()
    }

    /// Wiener increments `√h ξ`.
    pub fn increments(&self) -> Vec<f64> {
        let sh = self.h.sqrt();
        self.xi.iter().map(|x| sh * x).collect()
    }
}

/// Exact law of the per-step Gaussian block used by the additive schemes.
///
/// For channel `i` with noise vector `v_i` the block holds
/// `ΔWⁱ`, `I_exactⁱ = ∫₀ʰ e^{(h-θ)G} v_i dWⁱ(θ)` and, when a kernel order is
/// given, `I_schemeⁱ = ∫₀ʰ P((h-θ)G) v_i dWⁱ(θ)`. The stacked vector is laid
/// out as all `ΔW`, then all `I_exact`, then all `I_scheme`, channel-major
/// inside each group.
#[derive(Debug, Clone)]
pub struct JointGaussianSpec {
    h: f64,
    channels: usize,
    dim: usize,
    kernel_order: Option<PadePair>,
    covariance: Matrix,
    cholesky: Matrix,
}

/// One draw from a [`JointGaussianSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    pub dw: Vec<f64>,
    pub exact: Vec<Vec<f64>>,
    pub scheme: Option<Vec<Vec<f64>>>,
}

impl JointGaussianSpec {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// State dimension `2n`.
    pub fn state_dim(&self) -> usize {
        self.dim
    }

    pub fn kernel_order(&self) -> Option<PadePair> {
        self.kernel_order
    }

    pub fn len(&self) -> usize {
        self.covariance.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    /// Lower-triangular `L` with `L Lᵀ = covariance`.
    pub fn cholesky_factor(&self) -> &Matrix {
        &self.cholesky
    }

    fn exact_offset(&self, channel: usize) -> usize {
        self.channels + channel * self.dim
    }

    fn scheme_offset(&self, channel: usize) -> usize {
        self.channels * (1 + self.dim) + channel * self.dim
    }

    /// Splits a stacked vector into its blocks.
    pub fn unstack(&self, stacked: &[f64]) -> JointSample {
        assert_eq!(stacked.len(), self.len(), "dimension mismatch");
        let block = |off: usize| stacked[off..off + self.dim].to_vec();
        JointSample {
            dw: stacked[..self.channels].to_vec(),
            exact: (0..self.channels).map(|i| block(self.exact_offset(i))).collect(),
            scheme: self
                .kernel_order
                .map(|_| (0..self.channels).map(|i| block(self.scheme_offset(i))).collect()),
        }
    }

    /// `L g` for a fresh standard Gaussian vector `g`.
    pub fn sample_stacked(&self, stream: &mut NoiseStream) -> Vec<f64> {
        let mut g = vec![0.0; self.len()];
        stream.fill_gaussian(&mut g);
        let l = &self.cholesky;
        (0..g.len())
            .map(|i| (0..=i).map(|j| l[(i, j)] * g[j]).sum())
            .collect()
    }

    pub fn sample(&self, stream: &mut NoiseStream) -> JointSample {
        self.unstack(&self.sample_stacked(stream))
    }
}

/// Same as [`JointGaussianSpec::sample`].
pub fn sample_joint(spec: &JointGaussianSpec, stream: &mut NoiseStream) -> JointSample {
    spec.sample(stream)
}

/// Builds the joint law of `(ΔW, I_exact, I_scheme)` for one step of size
/// `h`, with every covariance block computed by `quad_nodes`-point
/// Gauss–Legendre quadrature of the deterministic kernels (Itô isometry).
///
/// The factor is computed for the equivalent vector
/// `(ΔW, I_exact, I_scheme - I_exact)`, whose last block has variance of
/// order `h^{2(ř+š)+3}` and would be lost to cancellation otherwise; the
/// result is mapped back by a unit lower-triangular transform so it stays
/// the Cholesky factor of the reported covariance.
pub fn additive_joint_spec(
    generator: &Matrix,
    noise_vectors: &[Vec<f64>],
    h: f64,
    kernel_order: Option<PadePair>,
    quad_nodes: usize,
) -> Result<JointGaussianSpec> {
    let dim = generator.dim();
    let channels = noise_vectors.len();
    if channels == 0 {
        return Err(Error::InvalidArgument("need at least one noise channel".into()));
    }
    if let Some(v) = noise_vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: v.len(),
        });
    }
    if quad_nodes < MIN_QUAD_NODES {
        return Err(Error::InvalidArgument(format!(
            "quadrature needs at least {MIN_QUAD_NODES} nodes, got {quad_nodes}"
        )));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
    }

    let per_channel = if kernel_order.is_some() { 1 + 2 * dim } else { 1 + dim };
    let total = channels * per_channel;
    let mut cov = Matrix::zeros(total);
    let mut cov_diff = Matrix::zeros(total);

    let scheme_base = channels * (1 + dim);
    // Kernel rows (k, k') for node u: k is in terms of I_scheme, k' of the difference.
    for (node, (u, w)) in mapped_rule(quad_nodes, 0.0, h).into_iter().enumerate() {
        let ug = generator.scale(u);
        let exact_kernel = expm(&ug).map_err(|_| Error::QuadratureFailure { node })?;
        let scheme_kernel = kernel_order
            .map(|order| pade::transfer_matrix(&ug, order))
            .transpose()
            .map_err(|_| Error::QuadratureFailure { node })?;
        for (ch, v) in noise_vectors.iter().enumerate() {
            let mut k = vec![0.0; total];
            k[ch] = 1.0;
            let ke = exact_kernel.mul_vec(v);
            k[channels + ch * dim..channels + (ch + 1) * dim].copy_from_slice(&ke);
            let mut kd = k.clone();
            if let Some(sk) = &scheme_kernel {
                let ks = sk.mul_vec(v);
                let off = scheme_base + ch * dim;
                for c in 0..dim {
                    k[off + c] = ks[c];
                    kd[off + c] = ks[c] - ke[c];
                }
            }
            accumulate_outer(&mut cov, w, &k);
            accumulate_outer(&mut cov_diff, w, &kd);
        }
    }

    let mut cholesky = semidefinite_cholesky(&cov_diff)?;
    if kernel_order.is_some() {
        // Undo the difference transform: scheme rows += matching exact rows.
        for ch in 0..channels {
            for c in 0..dim {
                let e = channels + ch * dim + c;
                let s = scheme_base + ch * dim + c;
                for j in 0..total {
                    cholesky[(s, j)] += cholesky[(e, j)];
                }
            }
        }
    }

    Ok(JointGaussianSpec {
        h,
        channels,
        dim,
        kernel_order,
        covariance: cov,
        cholesky,
    })
}

fn accumulate_outer(acc: &mut Matrix, w: f64, k: &[f64]) {
    for (i, &ki) in k.iter().enumerate() {
        if ki == 0.0 {
            continue;
        }
        for (j, &kj) in k.iter().enumerate().skip(i) {
            let v = w * ki * kj;
            acc[(i, j)] += v;
            if j != i {
                acc[(j, i)] += v;
            }
        }
    }
}

/// Cholesky factor of a positive semidefinite matrix. A pivot that falls to
/// within `PSD_PIVOT_TOLERANCE` of its original diagonal entry marks a
/// direction with no independent variance; its column is set to zero.
pub fn semidefinite_cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.dim();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let diag = a[(j, j)];
        let pivot = diag - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        let tol = PSD_PIVOT_TOLERANCE * diag.abs();
        if pivot <= tol {
            if pivot < -1e-8 * diag.abs() {
                return Err(Error::InvalidArgument(format!(
                    "covariance is not positive semidefinite (pivot {pivot:e} at {j})"
                )));
            }
            continue;
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let s = a[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}
