use std::f64::consts::E;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub dataset_size: usize,
    /// Bound on the loss.
    pub b: f64,
    /// Lipschitz constant of the loss.
    pub l: f64,
    pub delta: f64,
    /// Optional caps on the factor norms; when set, `l` must exceed
    /// [`lipschitz_floor`].
    pub caps: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub d: f64,
    pub epsilon: f64,
}

/// 2(2√N·C_P·C_Q + 1 + N).
pub fn lipschitz_floor(n: usize, c_p: f64, c_q: f64) -> f64 {
    2.0 * (2.0 * (n as f64).sqrt() * c_p * c_q + 1.0 + n as f64)
}

/// Pseudo-dimension K(M+N)·ln(16eM/K) of rank-K factorizations.
pub fn pseudo_dimension(k: usize, m: usize, n: usize) -> f64 {
    k as f64 * (m + n) as f64 * (16.0 * E * m as f64 / k as f64).ln()
}

fn check(d: f64, b: f64, l: f64, dataset_size: usize, delta: f64) -> Result<()> {
    if dataset_size == 0 {
        return Err(Error::InvalidBoundInput("|D| must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidBoundInput("delta must lie in (0, 1)".into()));
    }
    if !(d > 0.0) || !(b > 0.0) || !(l > 0.0) {
        return Err(Error::InvalidBoundInput("d, B and L must be positive".into()));
    }
    Ok(())
}

/// ε = 16·((d+1)·B⁴·e^{d+1}·L^d / (|D|·δ))^{1/(d+2)}, in log space.
pub fn epsilon_log_space(d: f64, b: f64, l: f64, dataset_size: usize, delta: f64) -> Result<f64> {
    check(d, b, l, dataset_size, delta)?;
    let log = (d + 1.0).ln() + 4.0 * b.ln() + (d + 1.0) + d * l.ln() - (dataset_size as f64).ln() - delta.ln();
    Ok(16.0 * (log / (d + 2.0)).exp())
}

/// The same formula evaluated literally; `None` when an intermediate
/// overflows or underflows.
pub fn epsilon_direct(d: f64, b: f64, l: f64, dataset_size: usize, delta: f64) -> Result<Option<f64>> {
    check(d, b, l, dataset_size, delta)?;
    let num = (d + 1.0) * b.powi(4) * (d + 1.0).exp() * l.powf(d);
    let inner = num / (dataset_size as f64 * delta);
    if !inner.is_finite() || inner == 0.0 {
        return Ok(None);
    }
    Ok(Some(16.0 * inner.powf(1.0 / (d + 2.0))))
}

pub fn generalization_bound(inputs: &BoundInputs) -> Result<Bound> {
    if inputs.k == 0 || inputs.m == 0 || inputs.n == 0 {
        return Err(Error::InvalidBoundInput("K, M and N must be positive".into()));
    }
    if let Some((c_p, c_q)) = inputs.caps {
        let floor = lipschitz_floor(inputs.n, c_p, c_q);
        if !(inputs.l > floor) {
            return Err(Error::InvalidBoundInput(format!("L = {} must exceed {floor} for these caps", inputs.l)));
        }
    }
    let d = pseudo_dimension(inputs.k, inputs.m, inputs.n);
    let epsilon = epsilon_log_space(d, inputs.b, inputs.l, inputs.dataset_size, inputs.delta)?;
    Ok(Bound { d, epsilon })
}
