use super::{check_finite, LossValue, ScoreVector};
use crate::error::{Error, Result};

/// log Σ exp(o), max-shifted.
pub fn log_sum_exp(o: &[f64]) -> f64 {
    let max = o.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + o.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Max-shifted softmax of a finite score row.
pub fn softmax_probs(o: &[f64]) -> Result<Vec<f64>> {
    check_finite(o)?;
    if o.is_empty() {
        return Err(Error::precondition("empty score vector"));
    }
    let max = o.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = o.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    Ok(p)
}

/// Softmax cross-entropy −log p_y, gradient p − e_y.
pub fn sm_loss(o: &[f64], y: usize, with_gradient: bool) -> Result<LossValue> {
    if y >= o.len() {
        return Err(Error::precondition(format!("object {y} outside score row of {}", o.len())));
    }
    check_finite(o)?;
    let value = log_sum_exp(o) - o[y];
    let gradient = with_gradient.then(|| {
        let mut g = softmax_probs(o).expect("scores checked finite");
        g[y] -= 1.0;
        g
    });
    Ok(LossValue::new(value, gradient))
}

/// Softmax loss summed over every positive of the context: Σ_{y∈I_x} −log p_y.
pub fn sm_context_loss(sv: ScoreVector<'_>, with_gradient: bool) -> Result<LossValue> {
    let o = sv.scores();
    check_finite(o)?;
    let count = sv.positives().len() as f64;
    let lse = log_sum_exp(o);
    let value = sv.positives().iter().map(|&y| lse - o[y as usize]).sum();
    let gradient = with_gradient.then(|| {
        let mut g = softmax_probs(o).expect("scores checked finite");
        g.iter_mut().for_each(|v| *v *= count);
        for &y in sv.positives() {
            g[y as usize] -= 1.0;
        }
        g
    });
    Ok(LossValue::new(value, gradient))
}

/// Proposal distribution the negatives were drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum Proposal {
    /// q = 1/N; the logit correction vanishes.
    Uniform,
    /// Explicit per-object probabilities over the full object set.
    Probabilities(Vec<f64>),
}

/// One positive and `n` negatives drawn with replacement from a proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledBatch {
    pub positive: u32,
    pub negatives: Vec<u32>,
    pub proposal: Proposal,
    pub n_objects: usize,
}

impl SampledBatch {
    pub fn uniform(positive: u32, negatives: Vec<u32>, n_objects: usize) -> Self {
        SampledBatch { positive, negatives, proposal: Proposal::Uniform, n_objects }
    }

    /// log(N·q_y) for a sampled negative.
    fn correction(&self, y: u32) -> Result<f64> {
        match &self.proposal {
            Proposal::Uniform => Ok(0.0),
            Proposal::Probabilities(q) => {
                let qy = q.get(y as usize).copied().unwrap_or(0.0);
                if !(qy > 0.0) {
                    return Err(Error::InvalidProposal { object: y, probability: qy });
                }
                Ok((self.n_objects as f64 * qy).ln())
            }
        }
    }
}

/// Sampled softmax with logit correction. `o_values[0]` is the positive's
/// score and `o_values[1..]` the negatives' scores in batch order; the
/// gradient is with respect to `o_values`.
pub fn ssm_loss(batch: &SampledBatch, o_values: &[f64], with_gradient: bool) -> Result<LossValue> {
    if batch.negatives.is_empty() {
        return Err(Error::precondition("sampled softmax needs n >= 1 negatives"));
    }
    if o_values.len() != batch.negatives.len() + 1 {
        return Err(Error::dims(format!(
            "{} scores for a batch of 1 + {} ids",
            o_values.len(),
            batch.negatives.len()
        )));
    }
    if let Proposal::Probabilities(q) = &batch.proposal {
        if q.len() != batch.n_objects || (q.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::precondition("proposal must be a distribution over all N objects"));
        }
    }
    check_finite(o_values)?;
    let mut corrected = Vec::with_capacity(o_values.len());
    corrected.push(o_values[0]);
    for (&y, &o) in batch.negatives.iter().zip(&o_values[1..]) {
        corrected.push(o - batch.correction(y)?);
    }
    let value = log_sum_exp(&corrected) - corrected[0];
    let gradient = with_gradient.then(|| {
        let mut g = softmax_probs(&corrected).expect("scores checked finite");
        g[0] -= 1.0;
        g
    });
    Ok(LossValue::new(value, gradient))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn uniform_and_shifted_logits() {
        assert_eq!(softmax_probs(&[0.0; 4]).unwrap(), vec![0.25; 4]);
        for p in softmax_probs(&[7.5; 3]).unwrap() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = softmax_probs(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((p[0] - E / (E + 3.0)).abs() < 1e-15);
        assert!((p[0] - 0.4754).abs() < 1e-4);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(softmax_probs(&[0.0, f64::NAN]), Err(Error::InvalidScore { index: 1 })));
        assert!(sm_loss(&[f64::INFINITY, 0.0], 0, false).is_err());
    }

    #[test]
    fn sm_values() {
        let l = sm_loss(&[0.0; 4], 0, true).unwrap();
        assert!((l.value - 4f64.ln()).abs() < 1e-15);
        assert_eq!(l.gradient.unwrap(), vec![-0.75, 0.25, 0.25, 0.25]);
        let l = sm_loss(&[1.0, 0.0, 0.0, 0.0], 0, false).unwrap();
        assert!((l.value - (1.0 + 3.0 / E).ln()).abs() < 1e-15);
        assert!((l.value - 0.7437).abs() < 1e-4);
        let l = sm_loss(&[50.0, 0.0, 0.0], 0, false).unwrap();
        assert!(l.value < 1e-20);
    }

    #[test]
    fn sm_shift_invariance() {
        let o = [0.3, -1.2, 2.0, 0.1];
        let a = sm_loss(&o, 2, false).unwrap().value;
        let shifted: Vec<f64> = o.iter().map(|v| v + 123.4).collect();
        assert!((a - sm_loss(&shifted, 2, false).unwrap().value).abs() < 1e-10);
    }

    #[test]
    fn ssm_uniform_needs_no_correction() {
        let b = SampledBatch::uniform(0, vec![3], 8);
        let l = ssm_loss(&b, &[0.0, 0.0], true).unwrap();
        assert!((l.value - LN_2).abs() < 1e-15);
        assert_eq!(l.gradient.unwrap(), vec![-0.5, 0.5]);
    }

    #[test]
    fn ssm_contract_errors() {
        let b = SampledBatch::uniform(0, vec![], 4);
        assert!(matches!(ssm_loss(&b, &[0.0], false), Err(Error::Precondition(_))));
        let b = SampledBatch {
            positive: 0,
            negatives: vec![2],
            proposal: Proposal::Probabilities(vec![0.5, 0.5, 0.0, 0.0]),
            n_objects: 4,
        };
        assert!(matches!(ssm_loss(&b, &[0.0, 0.0], false), Err(Error::InvalidProposal { object: 2, .. })));
    }

    #[test]
    fn ssm_nonuniform_correction() {
        // q_y = 1/2 with N = 4: corrected negative logit is o - ln 2.
        let b = SampledBatch {
            positive: 0,
            negatives: vec![1],
            proposal: Proposal::Probabilities(vec![0.25, 0.5, 0.125, 0.125]),
            n_objects: 4,
        };
        let l = ssm_loss(&b, &[0.0, 0.0], false).unwrap();
        assert!((l.value - (1.0f64 + 0.5).ln()).abs() < 1e-15);
    }
}
