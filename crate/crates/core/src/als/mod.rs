//! Weighted alternating least squares for the squared RG objectives.

mod full;
mod rows;

pub use full::{als_fit_full_matrix, full_matrix_objective, full_matrix_step, FullMatrixFit};
pub use rows::{update_context_rows, update_object_rows, HalfStepReport};

use std::time::Instant;

use crate::data::{InteractionMatrix, TargetMatrices};
use crate::epoch::EpochLog;
use crate::error::{Error, Result};
use crate::loss::{rg_dataset_loss, InteractionForm, LossKind, RegConvention, RgObjective};
use crate::model::{FactorModel, Init};

/// Gram matrix G = Σ_r f_r f_rᵀ of a factor's rows and their sum Σ_r f_r.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    pub k: usize,
    /// Full K×K row-major buffer.
    pub g: Vec<f64>,
    pub sum: Vec<f64>,
}

impl Gram {
    /// out = G v.
    pub fn g_times(&self, v: &[f64], out: &mut [f64]) {
        let k = self.k;
        for (i, o) in out.iter_mut().enumerate() {
            *o = crate::linalg::dot(&self.g[i * k..(i + 1) * k], v);
        }
    }
}

/// One O(rows·K²) pass over a row-major factor with K columns.
pub fn gram_precompute(factor: &[f64], k: usize) -> Gram {
    let mut g = vec![0.0; k * k];
    let mut sum = vec![0.0; k];
    for row in factor.chunks_exact(k) {
        crate::linalg::syr_lower(1.0, row, &mut g, k);
        crate::linalg::axpy(1.0, row, &mut sum);
    }
    crate::linalg::symmetrize_lower(&mut g, k);
    Gram { k, g, sum }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlsConfig {
    pub factors: usize,
    pub lambda: f64,
    pub kind: LossKind,
    pub interaction_form: InteractionForm,
    pub regularization: RegConvention,
    pub max_iters: usize,
    pub tolerance: f64,
    pub init: Init,
    pub seed: u64,
    pub pd_floor: f64,
    pub parallel: bool,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            factors: 8,
            lambda: 0.1,
            kind: LossKind::Rgx,
            interaction_form: InteractionForm::RankOne,
            regularization: RegConvention::WeightScaled,
            max_iters: 20,
            tolerance: 1e-4,
            init: Init::default(),
            seed: 0,
            pd_floor: 1e-10,
            parallel: false,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factors == 0 {
            return Err(Error::config("factors must be >= 1"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::config("lambda must be a finite value >= 0"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config("tolerance must be > 0"));
        }
        if !(self.pd_floor > 0.0) {
            return Err(Error::config("pd_floor must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AlsFit {
    pub model: FactorModel,
    pub initial_objective: f64,
    pub logs: Vec<EpochLog>,
    pub converged: bool,
}

/// Step-wise ALS driver; one [`AlsTrainer::step`] is a context half-step
/// followed by an object half-step.
pub struct AlsTrainer<'a> {
    matrix: &'a InteractionMatrix,
    targets: &'a TargetMatrices,
    cfg: AlsConfig,
    model: FactorModel,
    iteration: usize,
    elapsed: f64,
    objective: f64,
}

impl<'a> AlsTrainer<'a> {
    pub fn new(matrix: &'a InteractionMatrix, targets: &'a TargetMatrices, cfg: AlsConfig) -> Result<Self> {
        cfg.validate()?;
        let model = FactorModel::init(matrix.n_rows(), matrix.n_cols(), cfg.factors, cfg.init, cfg.seed)?;
        Self::with_model(matrix, targets, cfg, model)
    }

    pub fn with_model(
        matrix: &'a InteractionMatrix,
        targets: &'a TargetMatrices,
        cfg: AlsConfig,
        model: FactorModel,
    ) -> Result<Self> {
        cfg.validate()?;
        if model.dim() != cfg.factors {
            return Err(Error::dims(format!("model has K={} but config asks for {}", model.dim(), cfg.factors)));
        }
        let mut t = AlsTrainer { matrix, targets, cfg, model, iteration: 0, elapsed: 0.0, objective: 0.0 };
        t.objective = t.evaluate()?.total(t.cfg.regularization);
        Ok(t)
    }

    pub fn evaluate(&self) -> Result<RgObjective> {
        rg_dataset_loss(
            self.matrix,
            &self.model,
            self.targets,
            self.cfg.lambda,
            self.cfg.kind,
            self.cfg.interaction_form,
        )
    }

    pub fn model(&self) -> &FactorModel {
        &self.model
    }

    pub fn into_model(self) -> FactorModel {
        self.model
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn config(&self) -> &AlsConfig {
        &self.cfg
    }

    /// One full iteration. The wall clock covers the two half-steps only;
    /// the objective evaluation is excluded.
    pub fn step(&mut self) -> Result<EpochLog> {
        let start = Instant::now();
        update_context_rows(&mut self.model, self.matrix, self.targets, &self.cfg)?;
        update_object_rows(&mut self.model, self.matrix, self.targets, &self.cfg)?;
        self.elapsed += start.elapsed().as_secs_f64();
        self.iteration += 1;
        self.objective = self.evaluate()?.total(self.cfg.regularization);
        if !self.objective.is_finite() {
            return Err(Error::Diverged { epoch: self.iteration, loss: self.objective });
        }
        Ok(EpochLog::new(self.iteration, self.elapsed, self.objective))
    }
}

/// Runs ALS until the relative objective decrease drops below the tolerance
/// or `max_iters` iterations have run.
pub fn als_fit(matrix: &InteractionMatrix, targets: &TargetMatrices, cfg: &AlsConfig) -> Result<AlsFit> {
    let mut trainer = AlsTrainer::new(matrix, targets, cfg.clone())?;
    let initial_objective = trainer.objective();
    let mut logs = Vec::new();
    let mut converged = false;
    let mut prev = initial_objective;
    for _ in 0..cfg.max_iters {
        let log = trainer.step()?;
        let cur = log.train_loss;
        logs.push(log);
        if (prev - cur) / prev.abs().max(f64::MIN_POSITIVE) < cfg.tolerance {
            converged = true;
            break;
        }
        prev = cur;
    }
    Ok(AlsFit { model: trainer.into_model(), initial_objective, logs, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_matrix, build_targets, InteractionSet, TargetVariant};

    #[test]
    fn gram_examples() {
        let g = gram_precompute(&[1.0, 0.0, 0.0, 1.0], 2);
        assert_eq!(g.g, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(g.sum, vec![1.0, 1.0]);
        let g = gram_precompute(&[0.0; 6], 3);
        assert!(g.g.iter().chain(&g.sum).all(|&v| v == 0.0));
    }

    #[test]
    fn zero_iterations_return_init() {
        let set = InteractionSet::new(2, 3, vec![(0, 0), (1, 2)]).unwrap();
        let m = build_matrix(&set).unwrap();
        let t = build_targets(&m, TargetVariant::Full).unwrap();
        let cfg = AlsConfig { factors: 2, max_iters: 0, seed: 3, ..AlsConfig::default() };
        let fit = als_fit(&m, &t, &cfg).unwrap();
        assert_eq!(fit.model, FactorModel::init(2, 3, 2, cfg.init, 3).unwrap());
        assert!(fit.logs.is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(AlsConfig { tolerance: 0.0, ..AlsConfig::default() }.validate().is_err());
        assert!(AlsConfig { pd_floor: 0.0, ..AlsConfig::default() }.validate().is_err());
        assert!(AlsConfig { lambda: -1.0, ..AlsConfig::default() }.validate().is_err());
    }
}
