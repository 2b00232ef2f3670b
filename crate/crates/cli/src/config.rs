use std::path::{Path, PathBuf};

use eta_core::distributions::{build_quantile_set, QuantileBlock, QuantileSet};
use eta_core::model::AdamConfig;
use eta_core::problems::{Exclusion, ToyProblemSpec};
use eta_core::recipe::{ToyRecipe, DEFAULT_SEED};
use eta_core::training::{ErmConfig, EtaConfig, Observable};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Toy1d,
    Toy2d,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    /// Samples of the exact toy map written by `gen-data`.
    Analytic,
    Csv,
    Gevd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    Identity,
    Max,
    WeightedAbsSum,
}

/// Flat experiment configuration. Every key is optional; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub seed: u64,
    pub out_dir: PathBuf,

    // data files; default to the files gen-data writes into out_dir
    pub data_csv: Option<PathBuf>,
    pub pool_csv: Option<PathBuf>,
    pub reference_csv: Option<PathBuf>,
    /// Observable for csv problems.
    pub observable: ObservableKind,
    pub observable_weights: Vec<f64>,

    pub reference: ReferenceKind,
    pub gevd_kappa: Option<f64>,
    pub gevd_zeta: Option<f64>,
    pub gevd_sigma: Option<f64>,
    pub gevd_gamma: Option<f64>,

    pub n_train: usize,
    pub exclusion_center: [f64; 2],
    pub exclusion_radius: f64,
    pub pool_size: usize,
    pub n_reference: usize,
    pub n_eval: usize,

    pub hidden: Vec<usize>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Learning rate of the tail-regularized phase; `lr` when unset.
    pub eta_lr: Option<f64>,
    pub erm_steps: usize,
    pub eta_steps: usize,
    pub lambda: f64,
    pub tau: f64,
    pub omega: usize,
    /// 0 means full batch.
    pub batch_size: usize,
    pub track_components: bool,
    /// Each entry is `[a, b, n]`; the problem's default levels when unset.
    pub quantile_blocks: Option<Vec<(f64, f64, usize)>>,
    /// 0 disables intermediate checkpoints.
    pub checkpoint_every: usize,

    pub eval_tau: f64,
    pub t_star_quantile: f64,
    pub pdf_points: usize,
    pub threshold_count: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let r = ToyRecipe::toy1d();
        Self {
            problem: ProblemKind::Toy1d,
            seed: DEFAULT_SEED,
            out_dir: PathBuf::from("out"),
            data_csv: None,
            pool_csv: None,
            reference_csv: None,
            observable: ObservableKind::Identity,
            observable_weights: Vec::new(),
            reference: ReferenceKind::Analytic,
            gevd_kappa: None,
            gevd_zeta: None,
            gevd_sigma: None,
            gevd_gamma: None,
            n_train: r.n_train,
            exclusion_center: r.exclusion.center,
            exclusion_radius: r.exclusion.radius,
            pool_size: r.pool_size,
            n_reference: r.n_reference,
            n_eval: r.n_eval,
            hidden: r.hidden,
            lr: r.erm.adam.lr,
            beta1: r.erm.adam.beta1,
            beta2: r.erm.adam.beta2,
            eps: r.erm.adam.eps,
            eta_lr: None,
            erm_steps: r.erm.steps,
            eta_steps: r.eta.steps,
            lambda: r.eta.lambda,
            tau: r.eta.tau,
            omega: r.eta.omega,
            batch_size: 0,
            track_components: r.eta.track_components,
            quantile_blocks: None,
            checkpoint_every: 0,
            eval_tau: r.eval_tau,
            t_star_quantile: 0.99,
            pdf_points: 200,
            threshold_count: 25,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::usage(msg)
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let checks: [(bool, &str); 9] = [
            (self.n_train >= 1, "n_train must be >= 1"),
            (self.pool_size >= 1, "pool_size must be >= 1"),
            (self.n_eval >= 1, "n_eval must be >= 1"),
            (self.hidden.iter().all(|&h| h >= 1), "hidden widths must be >= 1"),
            (self.lr > 0.0 && self.eta_lr.is_none_or(|l| l > 0.0), "learning rates must be positive"),
            ((0.0..1.0).contains(&self.eval_tau), "eval_tau must lie in [0, 1)"),
            (self.t_star_quantile > 0.0 && self.t_star_quantile < 1.0, "t_star_quantile must lie in (0, 1)"),
            (self.pdf_points >= 2 && self.threshold_count >= 2, "pdf_points and threshold_count must be >= 2"),
            (self.exclusion_radius >= 0.0, "exclusion_radius must be >= 0"),
        ];
        if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(usage(*msg));
        }
        self.eta_config().validate()?;
        self.quantile_set()?;
        self.observable_fn()?;
        match (self.problem, self.reference) {
            (ProblemKind::Csv, ReferenceKind::Analytic) => {
                return Err(usage("csv problems need reference = \"csv\" or \"gevd\""));
            }
            (_, ReferenceKind::Gevd) if self.gevd_kappa.is_none() || self.gevd_zeta.is_none() || self.gevd_sigma.is_none() => {
                return Err(usage("reference = \"gevd\" needs gevd_kappa, gevd_zeta and gevd_sigma"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| usage(e.to_string()))
    }

    pub fn toy_problem(&self) -> Option<ToyProblemSpec> {
        match self.problem {
            ProblemKind::Toy1d => Some(ToyProblemSpec::toy1d()),
            ProblemKind::Toy2d => Some(ToyProblemSpec::toy2d()),
            ProblemKind::Csv => None,
        }
    }

    pub fn observable_fn(&self) -> Result<Observable, CliError> {
        if let Some(p) = self.toy_problem() {
            return Ok(p.observable());
        }
        Ok(match self.observable {
            ObservableKind::Identity => Observable::Identity,
            ObservableKind::Max => Observable::Max,
            ObservableKind::WeightedAbsSum if self.observable_weights.is_empty() => {
                return Err(usage("weighted_abs_sum needs observable_weights"));
            }
            ObservableKind::WeightedAbsSum => Observable::WeightedAbsSum { weights: self.observable_weights.clone() },
        })
    }

    pub fn exclusion(&self) -> Exclusion {
        Exclusion { center: self.exclusion_center, radius: self.exclusion_radius }
    }

    pub fn quantile_set(&self) -> Result<QuantileSet, CliError> {
        let blocks: Vec<QuantileBlock> = match (&self.quantile_blocks, self.toy_problem()) {
            (Some(b), _) => b.iter().copied().map(QuantileBlock::from).collect(),
            (None, Some(p)) => p.quantile_blocks().to_vec(),
            (None, None) => return Err(usage("csv problems need quantile_blocks")),
        };
        Ok(build_quantile_set(&blocks, 0.0)?)
    }

    fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig { lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }

    fn batch(&self) -> Option<usize> {
        (self.batch_size > 0).then_some(self.batch_size)
    }

    pub fn erm_config(&self) -> ErmConfig {
        ErmConfig { steps: self.erm_steps, adam: self.adam(self.lr), batch_size: self.batch(), seed: self.seed }
    }

    pub fn eta_config(&self) -> EtaConfig {
        EtaConfig {
            lambda: self.lambda,
            tau: self.tau,
            omega: self.omega,
            steps: self.eta_steps,
            adam: self.adam(self.eta_lr.unwrap_or(self.lr)),
            batch_size: self.batch(),
            track_components: self.track_components,
            seed: self.seed,
        }
    }

    fn in_out(&self, explicit: &Option<PathBuf>, name: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.out_dir.join(name))
    }

    pub fn data_path(&self) -> PathBuf {
        self.in_out(&self.data_csv, "dataset.csv")
    }

    pub fn pool_path(&self) -> PathBuf {
        self.in_out(&self.pool_csv, "pool.csv")
    }

    pub fn reference_path(&self) -> PathBuf {
        self.in_out(&self.reference_csv, "reference.csv")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = ExperimentConfig::default();
        let text = c.to_toml().unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("lamda = 1.0").is_err());
        let c: ExperimentConfig = toml::from_str("lambda = 0.5\nproblem = \"toy2d\"").unwrap();
        assert_eq!((c.lambda, c.problem), (0.5, ProblemKind::Toy2d));
    }

    #[test]
    fn invalid_values_fail_validation() {
        let c = ExperimentConfig { omega: 0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = ExperimentConfig { problem: ProblemKind::Csv, ..Default::default() };
        assert!(c.validate().is_err());
        let c = ExperimentConfig { reference: ReferenceKind::Gevd, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
