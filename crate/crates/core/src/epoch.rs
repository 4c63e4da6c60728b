use serde::{Deserialize, Serialize};

/// One logged point of a training run. Engines fill the first three fields;
/// the harness adds evaluation time and validation metrics.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Cumulative training time, evaluation excluded.
    pub wall_clock_s: f64,
    pub train_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ndcg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mrr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<f64>,
}

impl EpochLog {
    pub fn new(epoch: usize, wall_clock_s: f64, train_loss: f64) -> Self {
        EpochLog { epoch, wall_clock_s, train_loss, ..Default::default() }
    }
}
