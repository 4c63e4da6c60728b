use crate::error::{Error, Result};
use crate::loss::{rg2_context_loss, rgx_context_loss, squared_targets, ScoreVector};

/// D_φ(s, t) = φ(t) − φ(s) − ⟨∇φ(s), t − s⟩.
pub fn bregman_divergence<F, G>(phi: F, grad: G, s: &[f64], t: &[f64]) -> f64
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let g = grad(s);
    let inner: f64 = g.iter().zip(t.iter().zip(s)).map(|(g, (t, s))| g * (t - s)).sum();
    phi(t) - phi(s) - inner
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BregmanReport {
    /// Spread of 2N·RG²(o) − D_φ₂(η, o) over the samples.
    pub rg2_spread: f64,
    /// Spread of 2N·RG×(o) − D_φ×(η, o) over the samples.
    pub rgx_spread: f64,
    /// max |φ×(o + c·1) − φ×(o)| over the samples and a few shifts.
    pub shift_deviation: f64,
}

impl BregmanReport {
    pub fn max_deviation(&self) -> f64 {
        self.rg2_spread.max(self.rgx_spread).max(self.shift_deviation)
    }
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

/// Checks that the canonical RG² and RG× losses of one context equal, up to
/// an o-independent constant and the 2N scale, the Bregman divergences of
/// φ₂(o) = |I|‖o‖² and φ×(o) = |I| oᵀ(I − 11ᵀ/N)o from the targets η.
pub fn bregman_equivalence_check(samples: &[Vec<f64>], positives: &[u32]) -> Result<BregmanReport> {
    let first = samples.first().ok_or_else(|| Error::precondition("need at least one score sample"))?;
    let n = first.len();
    if samples.iter().any(|o| o.len() != n) {
        return Err(Error::dims("score samples differ in length"));
    }
    let eta = squared_targets(ScoreVector::new(first, positives)?);
    let c = positives.len() as f64;
    let nf = n as f64;
    let phi2 = |o: &[f64]| c * o.iter().map(|v| v * v).sum::<f64>();
    let grad2 = |o: &[f64]| o.iter().map(|v| 2.0 * c * v).collect::<Vec<_>>();
    let phix = |o: &[f64]| {
        let total: f64 = o.iter().sum();
        c * (o.iter().map(|v| v * v).sum::<f64>() - total * total / nf)
    };
    let gradx = |o: &[f64]| {
        let mean: f64 = o.iter().sum::<f64>() / nf;
        o.iter().map(|v| 2.0 * c * (v - mean)).collect::<Vec<_>>()
    };

    let mut d2 = Vec::with_capacity(samples.len());
    let mut dx = Vec::with_capacity(samples.len());
    let mut shift_deviation: f64 = 0.0;
    for o in samples {
        let sv = ScoreVector::new(o, positives)?;
        d2.push(2.0 * nf * rg2_context_loss(sv, false)?.value - bregman_divergence(phi2, grad2, &eta, o));
        dx.push(2.0 * nf * rgx_context_loss(sv, false)?.value - bregman_divergence(phix, gradx, &eta, o));
        for shift in [-3.0, 0.5, 7.0] {
            let moved: Vec<f64> = o.iter().map(|v| v + shift).collect();
            let scale = phix(o).abs().max(1.0);
            shift_deviation = shift_deviation.max((phix(&moved) - phix(o)).abs() / scale);
        }
    }
    Ok(BregmanReport { rg2_spread: spread(&d2), rgx_spread: spread(&dx), shift_deviation })
}
