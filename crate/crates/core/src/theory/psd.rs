use crate::error::{Error, Result};
use crate::linalg::min_eigenvalue;

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::precondition("probabilities must lie in [0, 1]"));
    }
    if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::precondition("probabilities must sum to 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdCondition {
    pub value: f64,
    pub holds: bool,
}

/// 1/N − Σp³/Σp² + Σp²; sufficient for (1/N)I − diag(p) + p pᵀ ⪰ 0 along p.
pub fn psd_condition(p: &[f64]) -> Result<PsdCondition> {
    check_distribution(p)?;
    let s2: f64 = p.iter().map(|v| v * v).sum();
    let s3: f64 = p.iter().map(|v| v * v * v).sum();
    // Grouped so the concentration terms cancel before 1/N is added.
    let value = 1.0 / p.len() as f64 + (s2 - s3 / s2);
    Ok(PsdCondition { value, holds: value >= 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dominance {
    /// Smallest eigenvalue of A = (1/N)I − diag(p) + p pᵀ.
    pub min_eigenvalue: f64,
    /// pᵀAp / pᵀp.
    pub rayleigh_along_p: f64,
}

pub fn hessian_dominance_check(p: &[f64]) -> Result<Dominance> {
    check_distribution(p)?;
    let n = p.len();
    let inv = 1.0 / n as f64;
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = p[i] * p[j];
        }
        a[i * n + i] += inv - p[i];
    }
    let ap: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i * n + j] * p[j]).sum()).collect();
    let pap: f64 = ap.iter().zip(p).map(|(a, b)| a * b).sum();
    let pp: f64 = p.iter().map(|v| v * v).sum();
    Ok(Dominance { min_eigenvalue: min_eigenvalue(&a, n), rayleigh_along_p: pap / pp })
}
