//! Empirical risk minimization and the tail-regularized training loop.
//!
//! The tail term compares sorted model observables on an unlabeled input
//! pool with reference quantiles. Which pool points sit at which quantile
//! level is recomputed only every `omega` steps; in between the selected
//! points are frozen, so the loss is an ordinary differentiable function of
//! the parameters.

mod dataset;
mod observable;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::distributions::{rank_for, QuantileSet, QuantileSource};
use crate::model::{adam_step, AdamConfig, AdamState, MlpParams};
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

pub use dataset::Dataset;
pub use observable::Observable;

/// Mean over the batch of `|f(x_i) - u_i|^2`, and its parameter gradient.
pub fn erm_loss(model: &MlpParams, inputs: ArrayView2<f64>, states: ArrayView2<f64>) -> Result<(f64, MlpParams)> {
    let n = inputs.nrows();
    if n == 0 {
        return Err(Error::EmptyDistribution);
    }
    if states.dim() != (n, model.output_dim()) {
        return Err(Error::DimensionMismatch { expected: n * model.output_dim(), got: states.len() });
    }
    let tape = model.forward_tape(inputs)?;
    let resid = tape.output() - &states;
    let loss = resid.iter().map(|r| r * r).sum::<f64>() / n as f64;
    let upstream = resid * (2.0 / n as f64);
    Ok((loss, model.backward(&tape, upstream.view())?))
}

/// Pool points selected for each quantile level, plus the output component
/// that triggered `g` at each selected point when `g` selects a coordinate
/// and tracking is on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSets {
    pub input_indices: Vec<usize>,
    pub component_indices: Option<Vec<usize>>,
}

fn pool_outputs(model: &MlpParams, pool: ArrayView2<f64>) -> Result<Array2<f64>> {
    const CHUNK: usize = 4096;
    if pool.nrows() <= CHUNK {
        return model.forward_batch(pool);
    }
    let mut out = Array2::zeros((pool.nrows(), model.output_dim()));
    for (src, mut dst) in pool.axis_chunks_iter(Axis(0), CHUNK).zip(out.axis_chunks_iter_mut(Axis(0), CHUNK)) {
        dst.assign(&model.forward_batch(src)?);
    }
    Ok(out)
}

/// `g(model(x))` for every pool point.
pub fn pool_observables(model: &MlpParams, pool: ArrayView2<f64>, g: &Observable) -> Result<Vec<f64>> {
    g.check_dim(model.output_dim())?;
    let out = pool_outputs(model, pool)?;
    Ok(out.rows().into_iter().map(|r| g.value(r.as_slice().expect("row-major"))).collect())
}

/// Sorts the pool by `g(model(x))` (stable, ties by pool index) and records
/// the point at rank `ceil(q n)` for every level `q`.
pub fn update_index(
    model: &MlpParams,
    levels: &[f64],
    pool: ArrayView2<f64>,
    g: &Observable,
    track_components: bool,
) -> Result<IndexSets> {
    let n = pool.nrows();
    if n == 0 {
        return Err(Error::EmptyDistribution);
    }
    g.check_dim(model.output_dim())?;
    let out = pool_outputs(model, pool)?;
    let values: Vec<f64> = out.rows().into_iter().map(|r| g.value(r.as_slice().expect("row-major"))).collect();
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut input_indices = Vec::with_capacity(levels.len());
    for &q in levels {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::ProbabilityOutOfRange(q));
        }
        input_indices.push(order[rank_for(q, n) - 1]);
    }
    let component_indices = match track_components && g.is_selecting() {
        false => None,
        true => Some(
            input_indices
                .iter()
                .map(|&i| g.trigger(out.row(i).as_slice().expect("row-major")).unwrap_or(0))
                .collect(),
        ),
    };
    Ok(IndexSets { input_indices, component_indices })
}

impl IndexSets {
    pub fn len(&self) -> usize {
        self.input_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input_indices.is_empty()
    }

    fn validate(&self, levels: usize, pool: usize, m: usize) -> Result<()> {
        if self.input_indices.len() != levels {
            return Err(Error::DimensionMismatch { expected: levels, got: self.input_indices.len() });
        }
        if let Some(&index) = self.input_indices.iter().find(|&&i| i >= pool) {
            return Err(Error::InvalidIndex { index, len: pool });
        }
        if let Some(j) = &self.component_indices {
            if j.len() != levels {
                return Err(Error::DimensionMismatch { expected: levels, got: j.len() });
            }
            if let Some(&index) = j.iter().find(|&&c| c >= m) {
                return Err(Error::InvalidIndex { index, len: m });
            }
        }
        Ok(())
    }

    /// Checks, by counting rather than sorting, that every recorded point
    /// occupies its rank under the stable ordering of the current model.
    pub fn verify(&self, model: &MlpParams, levels: &[f64], pool: ArrayView2<f64>, g: &Observable) -> Result<bool> {
        self.validate(levels.len(), pool.nrows(), model.output_dim())?;
        let values = pool_observables(model, pool, g)?;
        let n = values.len();
        Ok(levels.iter().zip(&self.input_indices).all(|(&q, &i)| {
            let v = values[i];
            let before = values.iter().enumerate().filter(|&(k, &w)| w < v || (w == v && k < i)).count();
            before + 1 == rank_for(q, n)
        }))
    }
}

/// Reference quantiles `F^{-1}(q)` for every level.
pub fn reference_quantiles<S: QuantileSource + ?Sized>(reference: &S, levels: &[f64]) -> Result<Vec<f64>> {
    levels.iter().map(|&q| reference.quantile(q)).collect()
}

/// `(1/|Q|) sum_i |g_i - target_i|` over the frozen pool points, with its
/// parameter gradient. When component indices are present, `g` is replaced
/// by its frozen-component form at each point.
pub fn w1_tail_loss(
    model: &MlpParams,
    sets: &IndexSets,
    targets: &[f64],
    pool: ArrayView2<f64>,
    g: &Observable,
) -> Result<(f64, MlpParams)> {
    let m = model.output_dim();
    g.check_dim(m)?;
    sets.validate(targets.len(), pool.nrows(), m)?;
    if targets.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let x = pool.select(Axis(0), &sets.input_indices);
    let tape = model.forward_tape(x.view())?;
    let nq = targets.len() as f64;
    let mut upstream = Array2::zeros((targets.len(), m));
    let mut loss = 0.0;
    for (i, (row, &target)) in tape.output().rows().into_iter().zip(targets).enumerate() {
        let u = row.as_slice().expect("row-major");
        let (value, du) = match &sets.component_indices {
            Some(j) => g.frozen(u, j[i]),
            None => (g.value(u), g.gradient(u)),
        };
        let diff = value - target;
        loss += diff.abs();
        let s = if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        };
        for (c, d) in du.into_iter().enumerate() {
            upstream[[i, c]] = s * d / nq;
        }
    }
    Ok((loss / nq, model.backward(&tape, upstream.view())?))
}

/// One row of the per-step training log, evaluated before the update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub step: usize,
    pub erm_loss: f64,
    pub tail_w1_loss: f64,
    pub total: f64,
    pub refresh: bool,
}

pub const LOG_HEADER: &str = "step,erm_loss,tail_w1_loss,total,refresh_flag";

pub fn log_to_csv(rows: &[LogRow]) -> String {
    let mut s = String::from(LOG_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.step, r.erm_loss, r.tail_w1_loss, r.total, u8::from(r.refresh)));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErmConfig {
    pub steps: usize,
    pub adam: AdamConfig,
    /// `None` means full batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for ErmConfig {
    fn default() -> Self {
        Self { steps: 3000, adam: AdamConfig::default(), batch_size: None, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaConfig {
    pub lambda: f64,
    /// Only levels at or above `tau` enter the tail term; 0 keeps all.
    pub tau: f64,
    pub omega: usize,
    pub steps: usize,
    pub adam: AdamConfig,
    pub batch_size: Option<usize>,
    pub track_components: bool,
    pub seed: u64,
}

impl Default for EtaConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            tau: 0.0,
            omega: 30,
            steps: 3000,
            adam: AdamConfig::default(),
            batch_size: None,
            track_components: true,
            seed: 0,
        }
    }
}

impl EtaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::InvalidArgument(format!("tau must lie in [0, 1), got {}", self.tau)));
        }
        if self.omega == 0 {
            return Err(Error::InvalidArgument("omega must be >= 1".into()));
        }
        Ok(())
    }
}

/// What an observer sees at each step, before the parameters move.
pub struct StepView<'a> {
    pub row: &'a LogRow,
    pub params: &'a MlpParams,
    /// Rows of the dataset in this step's ERM batch; `None` for full batch.
    pub batch: Option<&'a [usize]>,
    pub index_sets: Option<&'a IndexSets>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpParams,
    pub log: Vec<LogRow>,
    pub refreshes: usize,
}

struct Batcher {
    rng: rand_chacha::ChaCha8Rng,
    size: Option<usize>,
    n: usize,
}

impl Batcher {
    fn new(seed: u64, size: Option<usize>, n: usize) -> Result<Self> {
        if size == Some(0) {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        Ok(Self { rng: stream_rng(seed, Stream::Batching), size: size.filter(|&b| b < n), n })
    }

    fn next(&mut self) -> Option<Vec<usize>> {
        self.size.map(|b| {
            let mut idx = sample(&mut self.rng, self.n, b).into_vec();
            idx.sort_unstable();
            idx
        })
    }
}

fn batch_erm(model: &MlpParams, data: &Dataset, batch: Option<&[usize]>) -> Result<(f64, MlpParams)> {
    match batch {
        None => erm_loss(model, data.inputs.view(), data.states.view()),
        Some(idx) => {
            let x = data.inputs.select(Axis(0), idx);
            let u = data.states.select(Axis(0), idx);
            erm_loss(model, x.view(), u.view())
        }
    }
}

fn check_model(model: &MlpParams, data: &Dataset) -> Result<()> {
    if model.input_dim() != data.input_dim() {
        return Err(Error::DimensionMismatch { expected: model.input_dim(), got: data.input_dim() });
    }
    if model.output_dim() != data.state_dim() {
        return Err(Error::DimensionMismatch { expected: model.output_dim(), got: data.state_dim() });
    }
    Ok(())
}

fn apply_update(params: &mut MlpParams, grads: &MlpParams, state: &mut AdamState, step: usize) -> Result<()> {
    adam_step(params, grads, state)?;
    if !params.is_finite() {
        return Err(Error::TrainingDiverged { step });
    }
    Ok(())
}

pub fn train_erm(data: &Dataset, init: MlpParams, cfg: &ErmConfig) -> Result<TrainOutcome> {
    train_erm_observed(data, init, cfg, |_| Ok(()))
}

/// Adam on the ERM loss from `init` with a fresh optimizer state.
pub fn train_erm_observed<F>(data: &Dataset, init: MlpParams, cfg: &ErmConfig, mut observer: F) -> Result<TrainOutcome>
where
    F: FnMut(&StepView) -> Result<()>,
{
    check_model(&init, data)?;
    let mut params = init;
    let mut state = AdamState::new(&params, cfg.adam);
    let mut batcher = Batcher::new(cfg.seed, cfg.batch_size, data.len())?;
    let mut log = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let batch = batcher.next();
        let (erm, grads) = batch_erm(&params, data, batch.as_deref())?;
        if !erm.is_finite() {
            return Err(Error::TrainingDiverged { step });
        }
        let row = LogRow { step, erm_loss: erm, tail_w1_loss: 0.0, total: erm, refresh: false };
        observer(&StepView { row: &row, params: &params, batch: batch.as_deref(), index_sets: None })?;
        log.push(row);
        apply_update(&mut params, &grads, &mut state, step)?;
    }
    Ok(TrainOutcome { model: params, log, refreshes: 0 })
}

pub fn train_iict<S: QuantileSource + ?Sized>(
    data: &Dataset,
    pool: ArrayView2<f64>,
    levels: &QuantileSet,
    reference: &S,
    g: &Observable,
    pretrained: MlpParams,
    cfg: &EtaConfig,
) -> Result<TrainOutcome> {
    train_iict_observed(data, pool, levels, reference, g, pretrained, cfg, |_| Ok(()))
}

/// Adam on `erm + lambda * tail` starting from `pretrained`, with a fresh
/// optimizer state. Index sets are computed before the first step and
/// refreshed before every step `k > 0` with `k % omega == 0`.
#[allow(clippy::too_many_arguments)]
pub fn train_iict_observed<S, F>(
    data: &Dataset,
    pool: ArrayView2<f64>,
    levels: &QuantileSet,
    reference: &S,
    g: &Observable,
    pretrained: MlpParams,
    cfg: &EtaConfig,
    mut observer: F,
) -> Result<TrainOutcome>
where
    S: QuantileSource + ?Sized,
    F: FnMut(&StepView) -> Result<()>,
{
    cfg.validate()?;
    check_model(&pretrained, data)?;
    if pool.ncols() != data.input_dim() {
        return Err(Error::DimensionMismatch { expected: data.input_dim(), got: pool.ncols() });
    }
    let levels = if cfg.tau > 0.0 { levels.tail(cfg.tau)? } else { levels.clone() };
    let targets = reference_quantiles(reference, levels.probs())?;

    let mut params = pretrained;
    let mut state = AdamState::new(&params, cfg.adam);
    let mut batcher = Batcher::new(cfg.seed, cfg.batch_size, data.len())?;
    let mut log = Vec::with_capacity(cfg.steps);
    let mut sets: Option<IndexSets> = None;
    let mut refreshes = 0;
    for step in 0..cfg.steps {
        let refresh = step % cfg.omega == 0;
        if refresh {
            sets = Some(update_index(&params, levels.probs(), pool, g, cfg.track_components)?);
            refreshes += 1;
        }
        let current = sets.as_ref().expect("set at step 0");
        let batch = batcher.next();
        let (erm, mut grads) = batch_erm(&params, data, batch.as_deref())?;
        let (tail, tail_grads) = w1_tail_loss(&params, current, &targets, pool, g)?;
        let total = erm + cfg.lambda * tail;
        if !total.is_finite() {
            return Err(Error::TrainingDiverged { step });
        }
        // skipping the add keeps lambda = 0 bitwise equal to plain ERM
        if cfg.lambda != 0.0 {
            grads.add_scaled(&tail_grads, cfg.lambda);
        }
        let row = LogRow { step, erm_loss: erm, tail_w1_loss: tail, total, refresh };
        observer(&StepView { row: &row, params: &params, batch: batch.as_deref(), index_sets: Some(current) })?;
        log.push(row);
        apply_update(&mut params, &grads, &mut state, step)?;
    }
    Ok(TrainOutcome { model: params, log, refreshes })
}
