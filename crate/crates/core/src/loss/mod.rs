//! Loss functions and their analytic gradients with respect to scores.
//!
//! Per-context losses take a score row `o` (length N) and return a
//! [`LossValue`]; the gradient, when requested, has the same length as the
//! score input.

mod dataset;
mod pairwise;
mod rg;
mod softmax;
mod wsl;

pub use dataset::{rg_dataset_loss, InteractionForm, LossKind, RegConvention, RgObjective};
pub(crate) use dataset::column_weight_sums;
pub use pairwise::{bce_loss, bpr_loss, sigmoid, softplus};
pub use rg::{
    rg2_absorbed, rg2_context_loss, rg2_squared_form, rgx_context_loss, rgx_squared_form,
    squared_targets,
};
pub use softmax::{
    log_sum_exp, sm_context_loss, sm_loss, softmax_probs, ssm_loss, Proposal, SampledBatch,
};
pub use wsl::wsl_loss;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
}

impl LossValue {
    fn new(value: f64, gradient: Option<Vec<f64>>) -> Self {
        LossValue { value, gradient }
    }
}

/// A context's score row together with its positive objects I_x.
#[derive(Debug, Clone, Copy)]
pub struct ScoreVector<'a> {
    scores: &'a [f64],
    positives: &'a [u32],
}

impl<'a> ScoreVector<'a> {
    /// `positives` must be non-empty, strictly increasing and within `[0, N)`.
    pub fn new(scores: &'a [f64], positives: &'a [u32]) -> Result<Self> {
        if positives.is_empty() {
            return Err(Error::precondition("a context needs at least one positive"));
        }
        if positives.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::precondition("positive ids must be sorted and unique"));
        }
        if *positives.last().unwrap() as usize >= scores.len() {
            return Err(Error::precondition("positive id outside the score row"));
        }
        Ok(ScoreVector { scores, positives })
    }

    pub fn scores(&self) -> &'a [f64] {
        self.scores
    }

    pub fn positives(&self) -> &'a [u32] {
        self.positives
    }

    /// N.
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

pub(crate) fn check_finite(o: &[f64]) -> Result<()> {
    match o.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::InvalidScore { index }),
        None => Ok(()),
    }
}
