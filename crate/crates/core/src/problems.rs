//! Analytic toy benchmarks: a sum of Gaussian bumps over an isotropic
//! Gaussian input, with training data that avoids the most extreme bump.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::distributions::{EmpiricalDistribution, QuantileBlock};
use crate::rng::{stream_rng, Stream};
use crate::training::{Dataset, Observable};
use crate::{Error, Result};

/// `A / (2 pi sqrt(s)) * exp(-|x - c|^2 / (2 s))`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub amplitude: f64,
    pub center: [f64; 2],
    pub s: f64,
}

impl GaussianBump {
    pub const fn new(amplitude: f64, center: [f64; 2], s: f64) -> Self {
        Self { amplitude, center, s }
    }

    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        let r2 = (x1 - self.center[0]).powi(2) + (x2 - self.center[1]).powi(2);
        self.amplitude / (2.0 * std::f64::consts::PI * self.s.sqrt()) * (-r2 / (2.0 * self.s)).exp()
    }
}

pub const TOY_BUMPS: [GaussianBump; 5] = [
    GaussianBump::new(1.5, [2.0, 2.0], 0.5),
    GaussianBump::new(1.5, [-1.0, -1.0], 0.7),
    GaussianBump::new(1.0, [2.0, -2.0], 0.3),
    GaussianBump::new(0.5, [0.0, 1.0], 0.9),
    GaussianBump::new(1.25, [0.5, -0.5], 0.6),
];

pub const TOY_INPUT_SIGMA2: f64 = 10.0;

/// Quantile levels for the scalar toy: dense near 0 and near 1.
pub const TOY1D_QUANTILE_BLOCKS: [QuantileBlock; 11] = [
    QuantileBlock::new(0.0, 1e-4, 10),
    QuantileBlock::new(1e-4, 1e-3, 10),
    QuantileBlock::new(1e-3, 1e-2, 10),
    QuantileBlock::new(1e-2, 1e-1, 9),
    QuantileBlock::new(1e-1, 1.0 - 1e-1, 20),
    QuantileBlock::new(1.0 - 1e-1, 1.0 - 1e-2, 21),
    QuantileBlock::new(1.0 - 1e-2, 1.0 - 1e-3, 21),
    QuantileBlock::new(1.0 - 1e-3, 1.0 - 1e-4, 21),
    QuantileBlock::new(1.0 - 1e-4, 1.0 - 1e-5, 21),
    QuantileBlock::new(1.0 - 1e-5, 1.0 - 1e-6, 21),
    QuantileBlock::new(1.0 - 1e-6, 1.0 - 1e-7, 21),
];

/// Quantile levels for the two-component toy.
pub const TOY2D_QUANTILE_BLOCKS: [QuantileBlock; 7] = [
    QuantileBlock::new(0.0, 1.0 - 1e-1, 41),
    QuantileBlock::new(1.0 - 1e-1, 1.0 - 1e-2, 21),
    QuantileBlock::new(1.0 - 1e-2, 1.0 - 1e-3, 21),
    QuantileBlock::new(1.0 - 1e-3, 1.0 - 1e-4, 21),
    QuantileBlock::new(1.0 - 1e-4, 1.0 - 1e-5, 21),
    QuantileBlock::new(1.0 - 1e-5, 1.0 - 1e-6, 21),
    QuantileBlock::new(1.0 - 1e-6, 1.0 - 1e-7, 21),
];

pub fn toy1d_y(x1: f64, x2: f64) -> f64 {
    TOY_BUMPS.iter().map(|b| b.value(x1, x2)).sum()
}

pub fn toy2d_u(x1: f64, x2: f64) -> [f64; 2] {
    use std::f64::consts::PI;
    [toy1d_y(x1, x2), -0.1 * (PI / 3.0 * x1).sin() * (PI / 4.0 * x2).sin()]
}

pub fn toy2d_g(u1: f64, u2: f64) -> f64 {
    2.0 * u1.abs() + u2.abs() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyMode {
    /// state is the scalar `y`
    OneD,
    /// state is `(u1, u2)` observed through `2|u1| + |u2|/2`
    TwoD,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyProblemSpec {
    pub bumps: Vec<GaussianBump>,
    pub input_sigma2: f64,
    pub mode: ToyMode,
}

impl ToyProblemSpec {
    pub fn toy1d() -> Self {
        Self { bumps: TOY_BUMPS.to_vec(), input_sigma2: TOY_INPUT_SIGMA2, mode: ToyMode::OneD }
    }

    pub fn toy2d() -> Self {
        Self { bumps: TOY_BUMPS.to_vec(), input_sigma2: TOY_INPUT_SIGMA2, mode: ToyMode::TwoD }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bumps.is_empty() {
            return Err(Error::InvalidArgument("toy problem needs at least one bump".into()));
        }
        if self.bumps.iter().any(|b| !(b.s > 0.0)) {
            return Err(Error::InvalidArgument("bump variance must be positive".into()));
        }
        if !(self.input_sigma2 > 0.0) {
            return Err(Error::InvalidArgument("input variance must be positive".into()));
        }
        Ok(())
    }

    fn bump_sum(&self, x1: f64, x2: f64) -> f64 {
        self.bumps.iter().map(|b| b.value(x1, x2)).sum()
    }

    pub fn state_dim(&self) -> usize {
        match self.mode {
            ToyMode::OneD => 1,
            ToyMode::TwoD => 2,
        }
    }

    pub fn state(&self, x1: f64, x2: f64) -> Vec<f64> {
        let y = self.bump_sum(x1, x2);
        match self.mode {
            ToyMode::OneD => vec![y],
            ToyMode::TwoD => {
                use std::f64::consts::PI;
                vec![y, -0.1 * (PI / 3.0 * x1).sin() * (PI / 4.0 * x2).sin()]
            }
        }
    }

    pub fn observable(&self) -> Observable {
        match self.mode {
            ToyMode::OneD => Observable::Identity,
            ToyMode::TwoD => Observable::WeightedAbsSum { weights: vec![2.0, 0.5] },
        }
    }

    /// `g(u(x))`
    pub fn truth(&self, x1: f64, x2: f64) -> f64 {
        self.observable().value(&self.state(x1, x2))
    }

    pub fn quantile_blocks(&self) -> &'static [QuantileBlock] {
        match self.mode {
            ToyMode::OneD => &TOY1D_QUANTILE_BLOCKS,
            ToyMode::TwoD => &TOY2D_QUANTILE_BLOCKS,
        }
    }
}

/// IID draws from `N(0, sigma2 I_2)` as an `(n, 2)` matrix.
pub fn sample_inputs(n: usize, sigma2: f64, seed: u64, stream: Stream) -> Result<Array2<f64>> {
    if n == 0 || !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!("need n >= 1 and sigma2 > 0, got ({n}, {sigma2})")));
    }
    let normal = Normal::new(0.0, sigma2.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = stream_rng(seed, stream);
    Ok(Array2::from_shape_simple_fn((n, 2), || normal.sample(&mut rng)))
}

/// Ball of inputs kept out of the training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Default for Exclusion {
    fn default() -> Self {
        Self { center: [2.0, 2.0], radius: 1.5 }
    }
}

impl Exclusion {
    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        (x1 - self.center[0]).hypot(x2 - self.center[1]) <= self.radius
    }
}

/// Rejection-samples `n` inputs outside `exclusion` and attaches states and
/// observables from the analytic maps.
pub fn build_training_set(n: usize, exclusion: Exclusion, seed: u64, problem: &ToyProblemSpec) -> Result<Dataset> {
    problem.validate()?;
    if n == 0 || !(exclusion.radius >= 0.0) {
        return Err(Error::InvalidArgument("need n >= 1 and a non-negative radius".into()));
    }
    let normal = Normal::new(0.0, problem.input_sigma2.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = stream_rng(seed, Stream::TrainingData);
    let max_attempts = 1000 * n + 1000;
    let mut inputs = Vec::with_capacity(2 * n);
    let mut attempts = 0usize;
    while inputs.len() < 2 * n {
        if attempts >= max_attempts {
            return Err(Error::ExclusionTooLarge { rate: (inputs.len() / 2) as f64 / attempts as f64 });
        }
        attempts += 1;
        let (x1, x2) = (normal.sample(&mut rng), normal.sample(&mut rng));
        if !exclusion.contains(x1, x2) {
            inputs.extend([x1, x2]);
        }
    }
    let inputs = Array2::from_shape_vec((n, 2), inputs).expect("2n values");
    let m = problem.state_dim();
    let states = Array2::from_shape_vec(
        (n, m),
        inputs.rows().into_iter().flat_map(|r| problem.state(r[0], r[1])).collect(),
    )
    .expect("n*m values");
    Dataset::new(inputs, states, &problem.observable())
}

/// Empirical law of `g(u(x))` over `n_mc` IID inputs.
pub fn reference_distribution(problem: &ToyProblemSpec, n_mc: usize, seed: u64) -> Result<EmpiricalDistribution> {
    problem.validate()?;
    if n_mc < 10_000 {
        return Err(Error::InvalidArgument(format!("reference sample needs at least 1e4 draws, got {n_mc}")));
    }
    let x = sample_inputs(n_mc, problem.input_sigma2, seed, Stream::Reference)?;
    EmpiricalDistribution::new(x.rows().into_iter().map(|r| problem.truth(r[0], r[1])).collect())
}

/// Truth evaluated on every row of an `(n, 2)` input matrix.
pub fn truth_values(problem: &ToyProblemSpec, inputs: &Array2<f64>) -> Vec<f64> {
    inputs.rows().into_iter().map(|r| problem.truth(r[0], r[1])).collect()
}

/// Uniform draw helper for property tests over the input plane.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> (f64, f64) {
    (rng.random_range(-half_width..half_width), rng.random_range(-half_width..half_width))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::build_quantile_set;
    use std::f64::consts::PI;

    #[test]
    fn far_field_decays() {
        assert!(toy1d_y(100.0, 100.0) < 1e-300);
    }

    #[test]
    fn peak_value_term_by_term() {
        // hand-evaluated printed formula at (2, 2)
        let t1 = 1.5 / (2.0 * PI * 0.5f64.sqrt());
        let t2 = 1.5 / (2.0 * PI * 0.7f64.sqrt()) * (-(9.0 + 9.0) / 1.4f64).exp();
        let t3 = 1.0 / (2.0 * PI * 0.3f64.sqrt()) * (-(0.0 + 16.0) / 0.6f64).exp();
        let t4 = 0.5 / (2.0 * PI * 0.9f64.sqrt()) * (-(4.0 + 1.0) / 1.8f64).exp();
        let t5 = 1.25 / (2.0 * PI * 0.6f64.sqrt()) * (-(2.25 + 6.25) / 1.2f64).exp();
        assert!((toy1d_y(2.0, 2.0) - (t1 + t2 + t3 + t4 + t5)).abs() < 1e-15);
    }

    #[test]
    fn positive_and_finite() {
        let mut rng = stream_rng(1, Stream::Property);
        for _ in 0..100_000 {
            let (a, b) = random_point(&mut rng, 70.0);
            let y = toy1d_y(a, b);
            assert!(y.is_finite() && y >= 0.0);
            let u = toy2d_u(a, b);
            assert!(u[1].abs() <= 0.1 && u[1].is_finite());
            assert_eq!(u[0], y);
        }
        for _ in 0..1000 {
            let (a, b) = random_point(&mut rng, 6.0);
            assert!(toy1d_y(a, b) > 0.0);
        }
    }

    #[test]
    fn fourier_mode_examples() {
        assert_eq!(toy2d_u(0.0, 0.0)[1].abs(), 0.0);
        assert!((toy2d_u(1.5, 2.0)[1] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn observable_examples() {
        assert_eq!(toy2d_g(0.0, 0.0), 0.0);
        assert_eq!(toy2d_g(1.0, -2.0), 3.0);
        assert_eq!(toy2d_g(-3.0, 0.0), 6.0);
        let p = ToyProblemSpec::toy2d();
        let u = toy2d_u(0.3, -1.2);
        assert_eq!(p.truth(0.3, -1.2), toy2d_g(u[0], u[1]));
    }

    #[test]
    fn input_moments() {
        let n = 100_000;
        let x = sample_inputs(n, 10.0, 42, Stream::Pool).unwrap();
        for c in 0..2 {
            let col = x.column(c);
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!(mean.abs() < 4.0 * (10.0 / n as f64).sqrt());
            assert!((var - 10.0).abs() < 0.5);
        }
        assert_eq!(x, sample_inputs(n, 10.0, 42, Stream::Pool).unwrap());
        assert!(sample_inputs(0, 10.0, 1, Stream::Pool).is_err());
    }

    #[test]
    fn training_set_respects_exclusion() {
        let p = ToyProblemSpec::toy1d();
        let ex = Exclusion::default();
        let d = build_training_set(500, ex, 3, &p).unwrap();
        assert!(d.inputs.rows().into_iter().all(|r| !ex.contains(r[0], r[1])));
        for (r, y) in d.inputs.rows().into_iter().zip(&d.observables) {
            assert_eq!(*y, toy1d_y(r[0], r[1]));
        }
        // radius 0 is a plain IID sample
        let plain = build_training_set(50, Exclusion { radius: 0.0, ..ex }, 3, &p).unwrap();
        assert_eq!(plain.len(), 50);
        let huge = Exclusion { center: [0.0, 0.0], radius: 1e3 };
        assert!(matches!(build_training_set(5, huge, 1, &p), Err(Error::ExclusionTooLarge { .. })));
    }

    #[test]
    fn two_component_training_set() {
        let p = ToyProblemSpec::toy2d();
        let d = build_training_set(20, Exclusion::default(), 4, &p).unwrap();
        assert_eq!(d.states.ncols(), 2);
        for (u, y) in d.states.rows().into_iter().zip(&d.observables) {
            assert!((toy2d_g(u[0], u[1]) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_quantiles_are_ordered() {
        let p = ToyProblemSpec::toy1d();
        let r = reference_distribution(&p, 20_000, 1).unwrap();
        assert!(r.min() >= 0.0);
        assert!(r.quantile(0.999).unwrap() >= r.quantile(0.9).unwrap());
        assert!(reference_distribution(&p, 100, 1).is_err());
    }

    #[test]
    fn printed_quantile_sets() {
        let q1 = build_quantile_set(&TOY1D_QUANTILE_BLOCKS, 0.0).unwrap();
        assert_eq!(q1.probs()[0], 0.0);
        assert_eq!(*q1.probs().last().unwrap(), 1.0 - 1e-7);
        assert!(q1.probs().windows(2).all(|w| w[0] < w[1]));
        let q2 = build_quantile_set(&TOY2D_QUANTILE_BLOCKS, 0.0).unwrap();
        assert_eq!(q2.probs()[0], 0.0);
        assert_eq!(*q2.probs().last().unwrap(), 1.0 - 1e-7);
    }
}
