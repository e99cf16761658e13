//! Padé-based one-step schemes, reference steppers and trajectory driver.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::{expm, symplectic_defect, Matrix};
use crate::noise::{additive_joint_spec, JointGaussianSpec, JointSample, NoiseStream, StepNoise, DEFAULT_QUAD_NODES};
use crate::pade::{self, PadePair};
use crate::systems::{exact_linear_step, hamiltonian_quadratic, AdditiveShs, LinearShs};

/// Fine steps per coarse step for the reference path of non-commuting systems.
pub const REFERENCE_REFINEMENT: usize = 64;

/// Padé scheme for linear multiplicative noise with truncated increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSchemeSpec {
    pub order: PadePair,
    pub ell: f64,
}

impl LinearSchemeSpec {
    /// Truncation level defaults to `r + s`.
    pub fn new(order: PadePair) -> Self {
        Self {
            order,
            ell: order.degree() as f64,
        }
    }

    pub fn with_ell(order: PadePair, ell: f64) -> Result<Self> {
        if !(ell >= 1.0) || !ell.is_finite() {
            return Err(Error::InvalidArgument(format!("truncation level must be >= 1, got {ell}")));
        }
        Ok(Self { order, ell })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearScheme {
    Pade(LinearSchemeSpec),
    /// Explicit Euler–Maruyama on the Itô form of the equation.
    EulerMaruyama,
    /// Closed-form step; commuting systems only.
    Exact,
}

impl LinearScheme {
    fn ell(&self) -> f64 {
        match self {
            LinearScheme::Pade(spec) => spec.ell,
            _ => 1.0,
        }
    }
}

impl fmt::Display for LinearScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinearScheme::Pade(spec) => write!(f, "pade{}", spec.order),
            LinearScheme::EulerMaruyama => f.write_str("euler-maruyama"),
            LinearScheme::Exact => f.write_str("exact"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdditiveVariant {
    /// Stochastic integral of a Padé kernel, sampled jointly with the exact one.
    Integral,
    /// Left-rectangle rule `P_(1,1)(hG) v ΔW`.
    LeftRectangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdditiveSchemeSpec {
    pub drift_order: PadePair,
    pub kernel_order: PadePair,
    pub variant: AdditiveVariant,
}

impl AdditiveSchemeSpec {
    /// The integral variant needs `r̂ + ŝ = ř + š + 2` and `ř, š >= 1`.
    pub fn integral(drift_order: PadePair, kernel_order: PadePair) -> Result<Self> {
        if kernel_order.r() < 1 || kernel_order.s() < 1 {
            return Err(Error::InvalidPadePair {
                r: kernel_order.r(),
                s: kernel_order.s(),
            });
        }
        if drift_order.degree() != kernel_order.degree() + 2 {
            return Err(Error::InvalidArgument(format!(
                "drift order {drift_order} must have degree {} for kernel {kernel_order}",
                kernel_order.degree() + 2
            )));
        }
        Ok(Self {
            drift_order,
            kernel_order,
            variant: AdditiveVariant::Integral,
        })
    }

    pub fn left_rectangle(drift_order: PadePair) -> Self {
        Self {
            drift_order,
            kernel_order: PadePair::diagonal(1).expect("(1,1) is valid"),
            variant: AdditiveVariant::LeftRectangle,
        }
    }

    /// Expected strong order.
    pub fn order(&self) -> usize {
        match self.variant {
            AdditiveVariant::Integral => self.kernel_order.degree() + 1,
            AdditiveVariant::LeftRectangle => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdditiveScheme {
    Pade(AdditiveSchemeSpec),
    Exact,
}

impl fmt::Display for AdditiveScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdditiveScheme::Pade(spec) => match spec.variant {
                AdditiveVariant::Integral => {
                    write!(f, "pade{}-integral{}", spec.drift_order, spec.kernel_order)
                }
                AdditiveVariant::LeftRectangle => write!(f, "pade{}-left-rectangle", spec.drift_order),
            },
            AdditiveScheme::Exact => f.write_str("exact"),
        }
    }
}

/// One step `P_(r,s)(hA⁰ + Σ √h ζⁱAⁱ) x`.
pub fn step_linear(sys: &LinearShs, spec: &LinearSchemeSpec, x: &[f64], h: f64, noise: &StepNoise) -> Result<Vec<f64>> {
    check_noise(sys, x, noise)?;
    pade::apply(&sys.step_generator(h, &noise.zeta), spec.order, x)
}

/// `x + h(A⁰ + ½ΣAⁱAⁱ)x + Σ √h ξⁱ Aⁱ x`.
pub fn step_euler_maruyama(sys: &LinearShs, x: &[f64], h: f64, noise: &StepNoise) -> Result<Vec<f64>> {
    check_noise(sys, x, noise)?;
    Ok(euler_maruyama_matrix(sys, h, &noise.xi).mul_vec(x))
}

fn euler_maruyama_matrix(sys: &LinearShs, h: f64, xi: &[f64]) -> Matrix {
    let mut m = Matrix::identity(sys.dim());
    m.add_scaled(1.0, &sys.step_generator(h, xi));
    for i in 1..=sys.channels() {
        let a = sys.diffusion(i);
        m.add_scaled(0.5 * h, &(a * a));
    }
    m
}

fn check_noise(sys: &LinearShs, x: &[f64], noise: &StepNoise) -> Result<()> {
    if x.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            actual: x.len(),
        });
    }
    if noise.channels() != sys.channels() {
        return Err(Error::DimensionMismatch {
            expected: sys.channels(),
            actual: noise.channels(),
        });
    }
    Ok(())
}

/// One step `P_(r̂,ŝ)(hG) z + Σ I_schemeⁱ` (or the left-rectangle variant).
pub fn step_additive(sys: &AdditiveShs, spec: &AdditiveSchemeSpec, z: &[f64], h: f64, joint: &JointSample) -> Result<Vec<f64>> {
    let drift = pade::transfer_matrix(&sys.generator().scale(h), spec.drift_order)?;
    let kernel = match spec.variant {
        AdditiveVariant::Integral => None,
        AdditiveVariant::LeftRectangle => Some(pade::transfer_matrix(&sys.generator().scale(h), spec.kernel_order)?),
    };
    additive_update(sys, spec.variant, &drift, kernel.as_ref(), z, joint)
}

fn additive_update(
    sys: &AdditiveShs,
    variant: AdditiveVariant,
    drift: &Matrix,
    kernel: Option<&Matrix>,
    z: &[f64],
    joint: &JointSample,
) -> Result<Vec<f64>> {
    if z.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            actual: z.len(),
        });
    }
    if joint.dw.len() != sys.channels() {
        return Err(Error::SpecMismatch(format!(
            "noise block has {} channels, system has {}",
            joint.dw.len(),
            sys.channels()
        )));
    }
    let mut out = drift.mul_vec(z);
    match variant {
        AdditiveVariant::Integral => {
            let scheme = joint
                .scheme
                .as_ref()
                .ok_or_else(|| Error::SpecMismatch("noise block carries no scheme integrals".into()))?;
            for integral in scheme {
                add_into(&mut out, integral);
            }
        }
        AdditiveVariant::LeftRectangle => {
            let kernel = kernel.expect("left-rectangle kernel");
            for (v, dw) in sys.noise_vectors().iter().zip(&joint.dw) {
                let kv = kernel.mul_vec(v);
                for (o, k) in out.iter_mut().zip(kv) {
                    *o += k * dw;
                }
            }
        }
    }
    Ok(out)
}

fn add_into(out: &mut [f64], v: &[f64]) {
    for (o, x) in out.iter_mut().zip(v) {
        *o += x;
    }
}

/// A prepared scheme at a fixed step size, coupled to a reference solution
/// driven by the same noise.
pub trait Stepper: Sync {
    type Noise;

    fn dim(&self) -> usize;
    fn step_size(&self) -> f64;
    /// Draws the random data for one step.
    fn sample(&self, stream: &mut NoiseStream) -> Result<Self::Noise>;
    fn advance(&self, x: &[f64], noise: &Self::Noise) -> Result<Vec<f64>>;
    /// Reference (exact or finely resolved) step on the same noise.
    fn advance_reference(&self, x: &[f64], noise: &Self::Noise) -> Result<Vec<f64>>;
    /// One-step map of `advance` as a matrix.
    fn transfer_matrix(&self, noise: &Self::Noise) -> Result<Matrix>;
}

#[derive(Debug, Clone)]
pub struct LinearNoise {
    pub coarse: StepNoise,
    /// Fine-step noise whose increments sum to the coarse ones.
    pub fine: Option<Vec<StepNoise>>,
}

#[derive(Debug, Clone)]
pub struct LinearStepper<'a> {
    sys: &'a LinearShs,
    scheme: LinearScheme,
    h: f64,
    fine_reference: bool,
}

impl<'a> LinearStepper<'a> {
    pub fn new(sys: &'a LinearShs, scheme: LinearScheme, h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::DegenerateStep(h));
        }
        if scheme == LinearScheme::Exact && !sys.is_commuting() {
            return Err(Error::NonCommutingGenerators);
        }
        Ok(Self {
            sys,
            scheme,
            h,
            fine_reference: false,
        })
    }

    /// For non-commuting systems the reference becomes the same scheme run
    /// with `REFERENCE_REFINEMENT` times smaller steps.
    pub fn with_reference(mut self) -> Self {
        self.fine_reference = !self.sys.is_commuting();
        self
    }

    pub fn scheme(&self) -> LinearScheme {
        self.scheme
    }

    fn step(&self, x: &[f64], h: f64, noise: &StepNoise) -> Result<Vec<f64>> {
        match &self.scheme {
            LinearScheme::Pade(spec) => step_linear(self.sys, spec, x, h, noise),
            LinearScheme::EulerMaruyama => step_euler_maruyama(self.sys, x, h, noise),
            LinearScheme::Exact => exact_linear_step(self.sys, x, h, noise),
        }
    }
}

impl Stepper for LinearStepper<'_> {
    type Noise = LinearNoise;

    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn step_size(&self) -> f64 {
        self.h
    }

    fn sample(&self, stream: &mut NoiseStream) -> Result<LinearNoise> {
        let m = self.sys.channels();
        let ell = self.scheme.ell();
        if !self.fine_reference {
            return Ok(LinearNoise {
                coarse: stream.step_noise(self.h, m, ell)?,
                fine: None,
            });
        }
        let hf = self.h / REFERENCE_REFINEMENT as f64;
        let fine = (0..REFERENCE_REFINEMENT)
            .map(|_| stream.step_noise(hf, m, ell))
            .collect::<Result<Vec<_>>>()?;
        let norm = (REFERENCE_REFINEMENT as f64).sqrt();
        let xi = (0..m)
            .map(|i| fine.iter().map(|f| f.xi[i]).sum::<f64>() / norm)
            .collect();
        Ok(LinearNoise {
            coarse: StepNoise::from_gaussians(self.h, xi, ell)?,
            fine: Some(fine),
        })
    }

    fn advance(&self, x: &[f64], noise: &LinearNoise) -> Result<Vec<f64>> {
        self.step(x, self.h, &noise.coarse)
    }

    fn advance_reference(&self, x: &[f64], noise: &LinearNoise) -> Result<Vec<f64>> {
        match &noise.fine {
            Some(fine) => {
                let hf = self.h / REFERENCE_REFINEMENT as f64;
                let mut y = x.to_vec();
                for f in fine {
                    y = self.step(&y, hf, f)?;
                }
                Ok(y)
            }
            None => exact_linear_step(self.sys, x, self.h, &noise.coarse),
        }
    }

    fn transfer_matrix(&self, noise: &LinearNoise) -> Result<Matrix> {
        let n = &noise.coarse;
        match &self.scheme {
            LinearScheme::Pade(spec) => pade::transfer_matrix(&self.sys.step_generator(self.h, &n.zeta), spec.order),
            LinearScheme::EulerMaruyama => Ok(euler_maruyama_matrix(self.sys, self.h, &n.xi)),
            LinearScheme::Exact => expm(&self.sys.step_generator(self.h, &n.xi)),
        }
    }
}

/// Additive-noise stepper with the drift propagator and joint Gaussian law
/// precomputed for its step size.
#[derive(Debug, Clone)]
pub struct AdditiveStepper<'a> {
    sys: &'a AdditiveShs,
    scheme: AdditiveScheme,
    h: f64,
    joint: JointGaussianSpec,
    drift: Matrix,
    exact_drift: Matrix,
    kernel: Option<Matrix>,
}

impl<'a> AdditiveStepper<'a> {
    pub fn new(sys: &'a AdditiveShs, scheme: AdditiveScheme, h: f64) -> Result<Self> {
        Self::with_quadrature(sys, scheme, h, DEFAULT_QUAD_NODES)
    }

    pub fn with_quadrature(sys: &'a AdditiveShs, scheme: AdditiveScheme, h: f64, quad_nodes: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::DegenerateStep(h));
        }
        let hg = sys.generator().scale(h);
        let exact_drift = expm(&hg)?;
        let (drift, kernel, kernel_order) = match &scheme {
            AdditiveScheme::Exact => (exact_drift.clone(), None, None),
            AdditiveScheme::Pade(spec) => {
                let drift = pade::transfer_matrix(&hg, spec.drift_order)?;
                match spec.variant {
                    AdditiveVariant::Integral => (drift, None, Some(spec.kernel_order)),
                    AdditiveVariant::LeftRectangle => {
                        let k = pade::transfer_matrix(&hg, spec.kernel_order)?;
                        (drift, Some(k), None)
                    }
                }
            }
        };
        let joint = additive_joint_spec(sys.generator(), sys.noise_vectors(), h, kernel_order, quad_nodes)?;
        Ok(Self {
            sys,
            scheme,
            h,
            joint,
            drift,
            exact_drift,
            kernel,
        })
    }

    pub fn scheme(&self) -> AdditiveScheme {
        self.scheme
    }

    pub fn joint_spec(&self) -> &JointGaussianSpec {
        &self.joint
    }

    /// Matrix applied to the state each step.
    pub fn drift_matrix(&self) -> &Matrix {
        &self.drift
    }
}

impl Stepper for AdditiveStepper<'_> {
    type Noise = JointSample;

    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn step_size(&self) -> f64 {
        self.h
    }

    fn sample(&self, stream: &mut NoiseStream) -> Result<JointSample> {
        Ok(self.joint.sample(stream))
    }

    fn advance(&self, z: &[f64], noise: &JointSample) -> Result<Vec<f64>> {
        match &self.scheme {
            AdditiveScheme::Exact => self.advance_reference(z, noise),
            AdditiveScheme::Pade(spec) => additive_update(self.sys, spec.variant, &self.drift, self.kernel.as_ref(), z, noise),
        }
    }

    fn advance_reference(&self, z: &[f64], noise: &JointSample) -> Result<Vec<f64>> {
        if z.len() != self.sys.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.sys.dim(),
                actual: z.len(),
            });
        }
        let mut out = self.exact_drift.mul_vec(z);
        for integral in &noise.exact {
            add_into(&mut out, integral);
        }
        Ok(out)
    }

    fn transfer_matrix(&self, _noise: &JointSample) -> Result<Matrix> {
        Ok(self.drift.clone())
    }
}

/// What to record along a trajectory besides the states.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// `C` of a quadratic `H(x) = ½ xᵀCx` to evaluate at every recorded state.
    pub hamiltonian: Option<Matrix>,
    /// Record `‖SᵀJS - J‖_max` of each step's one-step map.
    pub defect: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub hamiltonian: Option<Vec<f64>>,
    /// Entry `k` is the defect of the map that produced state `k`; the
    /// initial state gets 0.
    pub defect: Option<Vec<f64>>,
}

/// Runs `steps` steps of the scheme from `x0`.
pub fn integrate<S: Stepper>(stepper: &S, x0: &[f64], steps: usize, stream: &mut NoiseStream, diagnostics: &Diagnostics) -> Result<Trajectory> {
    if x0.len() != stepper.dim() {
        return Err(Error::DimensionMismatch {
            expected: stepper.dim(),
            actual: x0.len(),
        });
    }
    let h = stepper.step_size();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut defect = diagnostics.defect.then(|| Vec::with_capacity(steps + 1));
    times.push(0.0);
    states.push(x0.to_vec());
    if let Some(d) = defect.as_mut() {
        d.push(0.0);
    }
    let wrap = |step: usize| move |e: Error| Error::StepFailed { step, source: Box::new(e) };
    for k in 1..=steps {
        let noise = stepper.sample(stream).map_err(wrap(k))?;
        let next = stepper.advance(&states[k - 1], &noise).map_err(wrap(k))?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(wrap(k)(Error::NonFinite));
        }
        if let Some(d) = defect.as_mut() {
            let s = stepper.transfer_matrix(&noise).map_err(wrap(k))?;
            d.push(symplectic_defect(&s).map_err(wrap(k))?);
        }
        times.push(k as f64 * h);
        states.push(next);
    }
    let hamiltonian = diagnostics
        .hamiltonian
        .as_ref()
        .map(|c| states.iter().map(|x| hamiltonian_quadratic(c, x)).collect());
    Ok(Trajectory {
        h,
        times,
        states,
        hamiltonian,
        defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pade::coefficients;
    use crate::systems::{KuboParams, OscillatorParams};

    fn pair(r: usize, s: usize) -> PadePair {
        PadePair::new(r, s).unwrap()
    }

    fn noise(h: f64, xi: f64) -> StepNoise {
        StepNoise::from_gaussians(h, vec![xi], 2.0).unwrap()
    }

    #[test]
    fn kubo_step_matches_explicit_rational_forms() {
        // With K² = -I the Padé approximants of θK reduce to rational
        // functions of θ² times (I, K).
        let kubo = KuboParams { a: 0.8, sigma: 0.6, p0: 1.0, q0: 0.0 }.system().unwrap();
        let h = 0.05;
        let xi = 0.7;
        let nz = noise(h, xi);
        let theta = 0.8 * h + 0.6 * h.sqrt() * xi;
        let t2 = theta * theta;
        let x = [0.3, -1.1];
        let k = |v: &[f64; 2]| [-v[1], v[0]];
        let combo = |c_i: f64, c_k: f64| {
            let kx = k(&x);
            [c_i * x[0] + c_k * kx[0], c_i * x[1] + c_k * kx[1]]
        };
        let cases: Vec<(PadePair, [f64; 2])> = vec![
            (pair(1, 1), {
                let d = 4.0 + t2;
                combo((4.0 - t2) / d, 4.0 * theta / d)
            }),
            (pair(2, 2), {
                // (1 + θK/2 - θ²/12)/(1 - θK/2 - θ²/12)
                let a = 1.0 - t2 / 12.0;
                let d = a * a + t2 / 4.0;
                combo((a * a - t2 / 4.0) / d, a * theta / d)
            }),
            (pair(4, 4), {
                let c = coefficients(pair(4, 4)).numerator;
                assert!((c[1] - 3.0 / 28.0).abs() < 1e-16);
                let re = 1.0 - c[1] * t2 + c[3] * t2 * t2;
                let im = theta * (c[0] - c[2] * t2);
                let d = re * re + im * im;
                combo((re * re - im * im) / d, 2.0 * re * im / d)
            }),
        ];
        for (order, expect) in cases {
            let got = step_linear(&kubo, &LinearSchemeSpec::new(order), &x, h, &nz).unwrap();
            assert!((got[0] - expect[0]).abs() < 1e-12 && (got[1] - expect[1]).abs() < 1e-12, "{order}");
        }
    }

    #[test]
    fn truncation_only_affects_large_draws() {
        let kubo = KuboParams::default().system().unwrap();
        let spec = LinearSchemeSpec::new(pair(1, 1));
        let h = 0.01;
        let big = noise(h, 50.0);
        assert!(big.zeta[0] < big.xi[0]);
        let clamped = StepNoise::from_gaussians(h, vec![big.a_h], 2.0).unwrap();
        assert_eq!(
            step_linear(&kubo, &spec, &[1.0, 0.0], h, &big).unwrap(),
            step_linear(&kubo, &spec, &[1.0, 0.0], h, &clamped).unwrap()
        );
    }

    #[test]
    fn diagonal_schemes_conserve_kubo_norm() {
        let params = KuboParams::default();
        let kubo = params.system().unwrap();
        for k in 1..=4 {
            let stepper = LinearStepper::new(&kubo, LinearScheme::Pade(LinearSchemeSpec::new(pair(k, k))), 0.02).unwrap();
            let diag = Diagnostics {
                hamiltonian: Some(params.invariant_matrix()),
                defect: true,
            };
            let traj = integrate(&stepper, &params.initial_state(), 5000, &mut NoiseStream::new(3, 0), &diag).unwrap();
            let h = traj.hamiltonian.unwrap();
            assert!(h.iter().all(|v| (v - h[0]).abs() <= 1e-8), "k={k}");
            assert!(traj.defect.unwrap().iter().all(|&d| d <= 1e-9));
        }
    }

    #[test]
    fn euler_maruyama_drifts() {
        let params = KuboParams::default();
        let kubo = params.system().unwrap();
        let stepper = LinearStepper::new(&kubo, LinearScheme::EulerMaruyama, 0.02).unwrap();
        let diag = Diagnostics {
            hamiltonian: Some(params.invariant_matrix()),
            defect: false,
        };
        let traj = integrate(&stepper, &params.initial_state(), 5000, &mut NoiseStream::new(3, 0), &diag).unwrap();
        let h = traj.hamiltonian.unwrap();
        let drift = h.iter().map(|v| (v - h[0]).abs()).fold(0.0, f64::max);
        assert!(drift > 1e-2);
    }

    #[test]
    fn exact_scheme_rejected_for_non_commuting() {
        let c0 = Matrix::identity(2);
        let c1 = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let sys = LinearShs::from_hamiltonians(&[c0, c1]).unwrap();
        assert_eq!(LinearStepper::new(&sys, LinearScheme::Exact, 0.1).unwrap_err(), Error::NonCommutingGenerators);
        assert!(LinearStepper::new(&sys, LinearScheme::EulerMaruyama, 1.5).is_err());
    }

    #[test]
    fn fine_reference_sums_increments() {
        let c0 = Matrix::identity(2);
        let c1 = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let sys = LinearShs::from_hamiltonians(&[c0, c1]).unwrap();
        let stepper = LinearStepper::new(&sys, LinearScheme::Pade(LinearSchemeSpec::new(pair(2, 2))), 0.1)
            .unwrap()
            .with_reference();
        let n = stepper.sample(&mut NoiseStream::new(9, 4)).unwrap();
        let fine = n.fine.as_ref().unwrap();
        assert_eq!(fine.len(), REFERENCE_REFINEMENT);
        let dw: f64 = fine.iter().map(|f| f.increments()[0]).sum();
        assert!((dw - n.coarse.increments()[0]).abs() < 1e-13);
        let x = [1.0, 0.5];
        let coarse = stepper.advance(&x, &n).unwrap();
        let fine = stepper.advance_reference(&x, &n).unwrap();
        assert!((coarse[0] - fine[0]).abs() < 1e-2);
    }

    #[test]
    fn additive_drift_forms() {
        // For G = J⁻¹ with G² = -I: (2,2)-Padé of hG and the (1,1) kernel.
        let osc = OscillatorParams::default().system().unwrap();
        let h = 0.1;
        let spec = AdditiveSchemeSpec::integral(pair(2, 2), pair(1, 1)).unwrap();
        let stepper = AdditiveStepper::new(&osc, AdditiveScheme::Pade(spec), h).unwrap();
        let a = 1.0 - h * h / 12.0;
        let d = a * a + h * h / 4.0;
        let (c, s) = ((a * a - h * h / 4.0) / d, a * h / d);
        let expect = Matrix::from_rows(&[[c, -s], [s, c]]).unwrap();
        assert!((stepper.drift_matrix() - &expect).norm_max() < 1e-15);
        let lr = AdditiveStepper::new(&osc, AdditiveScheme::Pade(AdditiveSchemeSpec::left_rectangle(pair(1, 1))), h).unwrap();
        let d = 4.0 + h * h;
        let expect = Matrix::from_rows(&[[(4.0 - h * h) / d, -4.0 * h / d], [4.0 * h / d, (4.0 - h * h) / d]]).unwrap();
        assert!((lr.drift_matrix() - &expect).norm_max() < 1e-15);
        // Left rectangle adds P11(hG) v ΔW.
        let joint = JointSample {
            dw: vec![0.2],
            exact: vec![vec![0.0, 0.0]],
            scheme: None,
        };
        let z = lr.advance(&[0.0, 0.0], &joint).unwrap();
        assert!((z[0] - expect[(0, 0)] * 0.3 * 0.2).abs() < 1e-16);
        assert!((z[1] - expect[(1, 0)] * 0.3 * 0.2).abs() < 1e-16);
        assert!(matches!(stepper.advance(&[0.0, 0.0], &joint), Err(Error::SpecMismatch(_))));
        let free = step_additive(&osc, &spec, &[0.4, 0.1], h, &JointSample { scheme: Some(vec![vec![0.0, 0.0]]), ..joint }).unwrap();
        let want = expect_mul(&stepper, &[0.4, 0.1]);
        assert!((free[0] - want[0]).abs() < 1e-15 && (free[1] - want[1]).abs() < 1e-15);
    }

    fn expect_mul(stepper: &AdditiveStepper<'_>, z: &[f64]) -> Vec<f64> {
        stepper.drift_matrix().mul_vec(z)
    }

    #[test]
    fn integral_spec_validation() {
        assert!(AdditiveSchemeSpec::integral(pair(2, 2), pair(1, 1)).is_ok());
        assert!(AdditiveSchemeSpec::integral(pair(3, 2), pair(2, 1)).is_ok());
        assert!(AdditiveSchemeSpec::integral(pair(1, 1), pair(1, 1)).is_err());
        assert!(AdditiveSchemeSpec::integral(pair(3, 0), pair(1, 0)).is_err());
        assert_eq!(AdditiveSchemeSpec::integral(pair(2, 2), pair(1, 1)).unwrap().order(), 3);
        assert_eq!(AdditiveSchemeSpec::left_rectangle(pair(1, 1)).order(), 1);
    }

    #[test]
    fn step_failure_reports_step_index() {
        // A¹ = diag(-1, 1), so I - B/2 is singular once √h ζ = 2.
        let c = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let sys = LinearShs::from_hamiltonians(&[c.scale(0.0), c]).unwrap();
        let h = 0.25;
        let spec = LinearSchemeSpec::new(pair(1, 1));
        let bad = StepNoise {
            h,
            xi: vec![4.0],
            zeta: vec![4.0],
            ell: 2.0,
            a_h: 10.0,
        };
        assert_eq!(step_linear(&sys, &spec, &[1.0, 1.0], h, &bad).unwrap_err(), Error::SingularDenominator);
    }
}
