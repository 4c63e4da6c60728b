use super::config::{LossName, OptimizerName, RunConfig, TargetChoice};
use super::train::train_on;
use crate::data::InteractionSet;
use crate::error::Result;

/// λ, α and β grid for the squared losses.
pub const RG_GRID: [f64; 8] = [0.0, 1.0, 0.5, 0.1, 0.05, 0.01, 0.005, 0.001];
pub const WRMF_LAMBDA_GRID: [f64; 4] = [0.0, 0.1, 0.01, 0.001];
pub const WRMF_ALPHA_GRID: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];
pub const LR_GRID: [f64; 3] = [0.1, 0.01, 0.001];
pub const WEIGHT_DECAY_GRID: [f64; 4] = [0.0, 1e-6, 1e-5, 1e-4];

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub learning_rates: Vec<f64>,
    pub weight_decays: Vec<f64>,
}

impl GridSpec {
    /// Default grid for the config's loss. Axes the loss does not use hold
    /// the config's current value only.
    pub fn for_config(cfg: &RunConfig) -> GridSpec {
        let one = |v: f64| vec![v];
        match (cfg.loss, cfg.optimizer) {
            (LossName::Wrmf, _) => GridSpec {
                lambdas: WRMF_LAMBDA_GRID.to_vec(),
                alphas: WRMF_ALPHA_GRID.to_vec(),
                betas: one(cfg.beta),
                learning_rates: one(cfg.learning_rate),
                weight_decays: one(cfg.weight_decay),
            },
            (_, OptimizerName::Sgd) => GridSpec {
                lambdas: one(cfg.lambda),
                alphas: one(cfg.alpha),
                betas: one(cfg.beta),
                learning_rates: LR_GRID.to_vec(),
                weight_decays: WEIGHT_DECAY_GRID.to_vec(),
            },
            (loss, _) => {
                let hyper = cfg.targets == TargetChoice::Hyper;
                GridSpec {
                    lambdas: RG_GRID.to_vec(),
                    alphas: if hyper { RG_GRID.to_vec() } else { one(cfg.alpha) },
                    betas: if hyper && loss == LossName::Rgx { RG_GRID.to_vec() } else { one(cfg.beta) },
                    learning_rates: one(cfg.learning_rate),
                    weight_decays: one(cfg.weight_decay),
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len() * self.alphas.len() * self.betas.len() * self.learning_rates.len() * self.weight_decays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Best validation value of the stop metric; `None` when the run failed
    /// or nothing was evaluated.
    pub best_value: Option<f64>,
    pub best_epoch: usize,
    pub error: Option<String>,
}

/// Trains one run per grid point. A failing point (for instance an
/// indefinite ALS system) is recorded and the search continues.
pub fn grid_search(
    base: &RunConfig,
    spec: &GridSpec,
    train: &InteractionSet,
    valid: &InteractionSet,
) -> Result<Vec<GridPoint>> {
    let mut out = Vec::with_capacity(spec.len());
    for &lambda in &spec.lambdas {
        for &alpha in &spec.alphas {
            for &beta in &spec.betas {
                for &learning_rate in &spec.learning_rates {
                    for &weight_decay in &spec.weight_decays {
                        let cfg = RunConfig { lambda, alpha, beta, learning_rate, weight_decay, ..base.clone() };
                        let mut point = GridPoint {
                            lambda,
                            alpha,
                            beta,
                            learning_rate,
                            weight_decay,
                            best_value: None,
                            best_epoch: 0,
                            error: None,
                        };
                        match train_on(&cfg, train, valid) {
                            Ok(o) => {
                                point.best_value = o.best_value;
                                point.best_epoch = o.best_epoch;
                            }
                            Err(e) => point.error = Some(e.to_string()),
                        }
                        out.push(point);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Index of the point with the highest best value.
pub fn best_point(points: &[GridPoint]) -> Option<usize> {
    points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.best_value.map(|v| (i, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
}
