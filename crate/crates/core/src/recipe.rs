//! End-to-end toy experiment: data, reference law, ERM baseline, tail
//! regularized model and their evaluation. Shared by the CLI and the
//! acceptance tests so both run the exact same protocol.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::distributions::{build_quantile_set, EmpiricalDistribution, QuantileSet};
use crate::model::{AdamConfig, MlpParams};
use crate::problems::{build_training_set, reference_distribution, sample_inputs, truth_values, Exclusion, ToyProblemSpec};
use crate::rng::{stream_rng, Stream};
use crate::training::{
    pool_observables, train_erm_observed, train_iict_observed, Dataset, ErmConfig, EtaConfig, StepView, TrainOutcome,
};
use crate::wasserstein::w1_tail;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyRecipe {
    pub problem: ToyProblemSpec,
    pub n_train: usize,
    pub exclusion: Exclusion,
    pub pool_size: usize,
    pub n_reference: usize,
    pub n_eval: usize,
    pub hidden: Vec<usize>,
    pub erm: ErmConfig,
    pub eta: EtaConfig,
    /// Lowest quantile level in the evaluation tail-W1.
    pub eval_tau: f64,
    pub seed: u64,
}

/// Seed whose 100-point training sets contain no observable above the
/// reference 0.99-quantile for either toy problem.
pub const DEFAULT_SEED: u64 = 3;

impl ToyRecipe {
    pub fn toy1d() -> Self {
        Self {
            problem: ToyProblemSpec::toy1d(),
            n_train: 100,
            exclusion: Exclusion::default(),
            pool_size: 10_000,
            n_reference: 1_000_000,
            n_eval: 100_000,
            hidden: vec![256, 256, 256],
            erm: ErmConfig { steps: 3000, adam: AdamConfig::default(), batch_size: None, seed: DEFAULT_SEED },
            eta: EtaConfig { seed: DEFAULT_SEED, ..EtaConfig::default() },
            eval_tau: 0.9,
            seed: DEFAULT_SEED,
        }
    }

    pub fn toy2d() -> Self {
        Self { problem: ToyProblemSpec::toy2d(), ..Self::toy1d() }
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![2];
        dims.extend(&self.hidden);
        dims.push(self.problem.state_dim());
        dims
    }

    pub fn quantile_set(&self) -> Result<QuantileSet> {
        build_quantile_set(self.problem.quantile_blocks(), 0.0)
    }

    pub fn eval_quantile_set(&self) -> Result<QuantileSet> {
        self.quantile_set()?.tail(self.eval_tau)
    }

    pub fn init_model(&self) -> Result<MlpParams> {
        MlpParams::glorot(&self.layer_dims(), &mut stream_rng(self.seed, Stream::Init))
    }

    pub fn prepare(&self) -> Result<ToyData> {
        let data = build_training_set(self.n_train, self.exclusion, self.seed, &self.problem)?;
        let pool = sample_inputs(self.pool_size, self.problem.input_sigma2, self.seed, Stream::Pool)?;
        let reference = reference_distribution(&self.problem, self.n_reference, self.seed)?;
        Ok(ToyData { data, pool, reference })
    }

    pub fn eval_inputs(&self) -> Result<Array2<f64>> {
        sample_inputs(self.n_eval, self.problem.input_sigma2, self.seed, Stream::Evaluation)
    }

    pub fn train_erm<F>(&self, data: &ToyData, observer: F) -> Result<TrainOutcome>
    where
        F: FnMut(&StepView) -> Result<()>,
    {
        train_erm_observed(&data.data, self.init_model()?, &self.erm, observer)
    }

    pub fn train_eta<F>(&self, data: &ToyData, pretrained: MlpParams, observer: F) -> Result<TrainOutcome>
    where
        F: FnMut(&StepView) -> Result<()>,
    {
        train_iict_observed(
            &data.data,
            data.pool.view(),
            &self.quantile_set()?,
            &data.reference,
            &self.problem.observable(),
            pretrained,
            &self.eta,
            observer,
        )
    }

    /// Tail-W1 between the model's push-forward over `inputs` and the
    /// reference, over the evaluation quantile levels.
    pub fn tail_w1(&self, model: &MlpParams, inputs: ArrayView2<f64>, reference: &EmpiricalDistribution) -> Result<f64> {
        let push = EmpiricalDistribution::new(pool_observables(model, inputs, &self.problem.observable())?)?;
        w1_tail(&push, reference, &self.eval_quantile_set()?)
    }

    /// Same statistic for the exact map, the Monte-Carlo floor.
    pub fn truth_tail_w1(&self, inputs: &Array2<f64>, reference: &EmpiricalDistribution) -> Result<f64> {
        let push = EmpiricalDistribution::new(truth_values(&self.problem, inputs))?;
        w1_tail(&push, reference, &self.eval_quantile_set()?)
    }
}

pub struct ToyData {
    pub data: Dataset,
    pub pool: Array2<f64>,
    pub reference: EmpiricalDistribution,
}

/// Root mean squared state error over the dataset.
pub fn rmse(model: &MlpParams, data: &Dataset) -> Result<f64> {
    let pred = model.forward_batch(data.inputs.view())?;
    if pred.dim() != data.states.dim() {
        return Err(Error::DimensionMismatch { expected: data.states.len(), got: pred.len() });
    }
    let sq: f64 = (&pred - &data.states).iter().map(|r| r * r).sum();
    Ok((sq / pred.len() as f64).sqrt())
}
