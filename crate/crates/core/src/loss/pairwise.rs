use super::LossValue;
use crate::error::Result;

/// log(1 + e^z) without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// −log σ(o_pos − o_neg); gradient is `[∂/∂o_pos, ∂/∂o_neg]`.
pub fn bpr_loss(positive: f64, negative: f64, with_gradient: bool) -> Result<LossValue> {
    super::check_finite(&[positive, negative])?;
    let diff = positive - negative;
    let g = sigmoid(-diff);
    Ok(LossValue::new(softplus(-diff), with_gradient.then(|| vec![-g, g])))
}

/// −log σ(o) for a positive label, −log(1 − σ(o)) otherwise.
pub fn bce_loss(score: f64, label: bool, with_gradient: bool) -> Result<LossValue> {
    super::check_finite(&[score])?;
    let (value, grad) = if label {
        (softplus(-score), sigmoid(score) - 1.0)
    } else {
        (softplus(score), sigmoid(score))
    };
    Ok(LossValue::new(value, with_gradient.then(|| vec![grad])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn ties_cost_log_two() {
        assert!((bpr_loss(0.7, 0.7, false).unwrap().value - LN_2).abs() < 1e-15);
        assert!((bce_loss(0.0, true, false).unwrap().value - LN_2).abs() < 1e-15);
        assert!((bce_loss(0.0, false, false).unwrap().value - LN_2).abs() < 1e-15);
    }

    #[test]
    fn extreme_scores_stay_finite() {
        assert!(bce_loss(-800.0, true, false).unwrap().value.is_finite());
        assert!(bpr_loss(0.0, 900.0, true).unwrap().value.is_finite());
        assert!(bce_loss(40.0, true, false).unwrap().value < 1e-15);
    }
}
