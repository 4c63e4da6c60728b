use crate::error::{Error, Result};
use crate::loss::{check_finite, log_sum_exp, softmax_probs};

/// Zeroth, first and second order terms of −log softmax_y at `o0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorTerms {
    pub zeroth: f64,
    pub first: Vec<f64>,
    /// N×N row-major: diag(p) − p pᵀ.
    pub hessian: Vec<f64>,
    pub expansion_point: Vec<f64>,
}

pub fn sm_taylor_terms(o0: &[f64], y: usize) -> Result<TaylorTerms> {
    if y >= o0.len() {
        return Err(Error::precondition("object outside the score row"));
    }
    let p = softmax_probs(o0)?;
    let n = p.len();
    let mut first = p.clone();
    first[y] -= 1.0;
    let mut hessian = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            hessian[i * n + j] = if i == j { p[i] } else { 0.0 } - p[i] * p[j];
        }
    }
    Ok(TaylorTerms { zeroth: log_sum_exp(o0) - o0[y], first, hessian, expansion_point: o0.to_vec() })
}

/// Which quadratic is compared against the softmax loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    Rg2,
    Rgx,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub t: f64,
    pub residual: f64,
    /// residual / t², or 0 at t = 0.
    pub scaled: f64,
}

/// |SM(o) − (RG(o) + |I|(log N − 1/2))| with both sides centred at o = 0 so
/// that no O(1) constants cancel: SM − |I| log N is evaluated as
/// Σ_{y∈I} [log1p(mean(expm1(o))) − o_y] and RG − |I|/2 in expanded form.
/// The shared −Σ_{y∈I} o_y term is dropped from both sides.
pub fn taylor_residual(o: &[f64], n_positives: usize, expansion: Expansion) -> Result<f64> {
    check_finite(o)?;
    let n = o.len() as f64;
    let c = n_positives as f64;
    let mean_expm1 = o.iter().map(|v| v.exp_m1()).sum::<f64>() / n;
    let sm = c * mean_expm1.ln_1p();
    let total: f64 = o.iter().sum();
    let sq: f64 = o.iter().map(|v| v * v).sum();
    let mut rg = c / (2.0 * n) * (sq + 2.0 * total);
    if expansion == Expansion::Rgx {
        rg -= c / (2.0 * n * n) * total * total;
    }
    Ok((sm - rg).abs())
}

/// Residuals along o = t·v for a unit direction v and strictly decreasing
/// non-negative scales.
pub fn taylor_residual_sweep(
    v: &[f64],
    n_positives: usize,
    scales: &[f64],
    expansion: Expansion,
) -> Result<Vec<SweepPoint>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::precondition("direction must have unit norm"));
    }
    if n_positives == 0 || n_positives > v.len() {
        return Err(Error::precondition("need 1 <= |I| <= N"));
    }
    if scales.iter().any(|&t| !(t >= 0.0)) || scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::precondition("scales must be non-negative and strictly decreasing"));
    }
    let mut o = vec![0.0; v.len()];
    scales
        .iter()
        .map(|&t| {
            o.iter_mut().zip(v).for_each(|(o, v)| *o = t * v);
            let residual = taylor_residual(&o, n_positives, expansion)?;
            let scaled = if t == 0.0 { 0.0 } else { residual / (t * t) };
            Ok(SweepPoint { t, residual, scaled })
        })
        .collect()
}

/// 0.1·2^(−k) for k = 0..=10, ending near 1e-4.
pub fn default_scales() -> Vec<f64> {
    (0..=10).map(|k| 0.1 * 0.5f64.powi(k)).collect()
}
