//! Second-order expansions of the per-context softmax loss at o = 0.
//!
//! The canonical forms keep the expansion's own scale, so that
//! `sm_context_loss(o) ≈ rgx_context_loss(o) + |I_x|(log N − 1/2)` holds
//! with a third-order remainder. Training code may use the absorbed scale
//! (multiplied by 2N), which changes neither minimizer nor ranking.

use super::{LossValue, ScoreVector};
use crate::error::Result;

/// Per-context targets S_y = r_y·N/|I_x| − 1.
pub fn squared_targets(sv: ScoreVector<'_>) -> Vec<f64> {
    let n = sv.len() as f64;
    let pos = n / sv.positives().len() as f64 - 1.0;
    let mut s = vec![-1.0; sv.len()];
    for &y in sv.positives() {
        s[y as usize] = pos;
    }
    s
}

/// −Σ_{y∈I_x} o_y + (|I_x|/2N)‖o + 1‖².
pub fn rg2_context_loss(sv: ScoreVector<'_>, with_gradient: bool) -> Result<LossValue> {
    let o = sv.scores();
    super::check_finite(o)?;
    let n = o.len() as f64;
    let count = sv.positives().len() as f64;
    let linear: f64 = sv.positives().iter().map(|&y| o[y as usize]).sum();
    let sq: f64 = o.iter().map(|v| (v + 1.0) * (v + 1.0)).sum();
    let value = count * sq / (2.0 * n) - linear;
    let gradient = with_gradient.then(|| {
        let mut g: Vec<f64> = o.iter().map(|v| count * (v + 1.0) / n).collect();
        for &y in sv.positives() {
            g[y as usize] -= 1.0;
        }
        g
    });
    Ok(LossValue::new(value, gradient))
}

/// RG² minus the score-interaction term (|I_x|/2N²)(1ᵀo)².
pub fn rgx_context_loss(sv: ScoreVector<'_>, with_gradient: bool) -> Result<LossValue> {
    let base = rg2_context_loss(sv, with_gradient)?;
    let n = sv.len() as f64;
    let count = sv.positives().len() as f64;
    let total: f64 = sv.scores().iter().sum();
    let value = base.value - count * total * total / (2.0 * n * n);
    let gradient = base.gradient.map(|mut g| {
        let shift = count * total / (n * n);
        g.iter_mut().for_each(|v| *v -= shift);
        g
    });
    Ok(LossValue::new(value, gradient))
}

/// (|I_x|/2N) Σ_y (o_y − S_y)²; differs from the canonical RG² value by the
/// constant N/2 − |I_x|.
pub fn rg2_squared_form(sv: ScoreVector<'_>) -> f64 {
    let n = sv.len() as f64;
    let count = sv.positives().len() as f64;
    let s = squared_targets(sv);
    let sq: f64 = sv.scores().iter().zip(&s).map(|(o, t)| (o - t) * (o - t)).sum();
    count * sq / (2.0 * n)
}

/// Squared form of RG×: [`rg2_squared_form`] − (|I_x|/2N²)(1ᵀo)².
pub fn rgx_squared_form(sv: ScoreVector<'_>) -> f64 {
    let n = sv.len() as f64;
    let count = sv.positives().len() as f64;
    let total: f64 = sv.scores().iter().sum();
    rg2_squared_form(sv) - count * total * total / (2.0 * n * n)
}

/// Absorbed-coefficient scale |I_x| Σ_y (o_y − S_y)² = 2N × [`rg2_squared_form`].
pub fn rg2_absorbed(sv: ScoreVector<'_>) -> f64 {
    2.0 * sv.len() as f64 * rg2_squared_form(sv)
}
