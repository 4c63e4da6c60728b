use super::InteractionMatrix;
use crate::error::{Error, Result};

/// How the per-pair weights W and per-context interaction coefficients V are set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetVariant {
    /// Expansion of the full softmax: W = |I_x| everywhere, V_x = |I_x| / N.
    Full,
    /// Expansion of uniformly sampled softmax with `negatives` samples:
    /// W = |I_x| on positives and |I_x|(n+1)/N on negatives, V_x = |I_x|(n+1)/N².
    SampledDerived { negatives: usize },
    /// W = 1 on positives, `alpha` on negatives, V_x = `beta`.
    Hyperparameterized { alpha: f64, beta: f64 },
    /// Classic WRMF: binary targets, weight `alpha + 1` on positives and 1 elsewhere, no V.
    Wrmf { alpha: f64 },
}

/// Targets S, weights W and coefficients V for the squared ALS objective.
///
/// S is never stored densely: every negative pair shares `s_neg`, positives of
/// context x take `s_pos[x]`. The same holds for W (`w_neg[x]`, `w_pos[x]`),
/// so memory stays O(M) on top of the interaction matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMatrices {
    pub variant: TargetVariant,
    pub n_objects: usize,
    pub s_neg: f64,
    pub s_pos: Vec<f64>,
    pub w_pos: Vec<f64>,
    pub w_neg: Vec<f64>,
    pub v: Vec<f64>,
}

impl TargetMatrices {
    pub fn n_contexts(&self) -> usize {
        self.s_pos.len()
    }

    #[inline]
    pub fn target(&self, x: usize, positive: bool) -> f64 {
        if positive {
            self.s_pos[x]
        } else {
            self.s_neg
        }
    }

    #[inline]
    pub fn weight(&self, x: usize, positive: bool) -> f64 {
        if positive {
            self.w_pos[x]
        } else {
            self.w_neg[x]
        }
    }

    /// Σ_y W_{x,y} for a context with `degree` positives.
    pub fn row_weight_sum(&self, x: usize, degree: usize) -> f64 {
        self.w_neg[x] * self.n_objects as f64 + (self.w_pos[x] - self.w_neg[x]) * degree as f64
    }

    /// True when every pair of every context shares one weight (W diagonal per context).
    pub fn is_row_constant(&self) -> bool {
        self.w_pos.iter().zip(&self.w_neg).all(|(p, n)| p == n)
    }

    pub fn has_interaction(&self) -> bool {
        self.v.iter().any(|&v| v != 0.0)
    }
}

/// Builds the targets of the squared realization: S_{x,y} = r_{x,y}·N/|I_x| − 1
/// (binary r for WRMF) together with the variant's W and V.
pub fn build_targets(matrix: &InteractionMatrix, variant: TargetVariant) -> Result<TargetMatrices> {
    let m = matrix.n_rows();
    let n = matrix.n_cols() as f64;
    match variant {
        TargetVariant::SampledDerived { negatives: 0 } => {
            return Err(Error::precondition("sampled-derived targets need n >= 1"));
        }
        TargetVariant::Hyperparameterized { alpha, beta } if !(alpha > 0.0) || !beta.is_finite() => {
            return Err(Error::precondition("hyperparameterized targets need alpha > 0"));
        }
        TargetVariant::Wrmf { alpha } if !(alpha >= 0.0) => {
            return Err(Error::precondition("WRMF needs alpha >= 0"));
        }
        _ => {}
    }

    let mut out = TargetMatrices {
        variant,
        n_objects: matrix.n_cols(),
        s_neg: -1.0,
        s_pos: Vec::with_capacity(m),
        w_pos: Vec::with_capacity(m),
        w_neg: Vec::with_capacity(m),
        v: Vec::with_capacity(m),
    };
    if let TargetVariant::Wrmf { alpha } = variant {
        out.s_neg = 0.0;
        out.s_pos = vec![1.0; m];
        out.w_pos = vec![alpha + 1.0; m];
        out.w_neg = vec![1.0; m];
        out.v = vec![0.0; m];
        return Ok(out);
    }

    for x in 0..m {
        let deg = matrix.degree(x);
        if deg == 0 {
            return Err(Error::ZeroDegree { context: x as u32 });
        }
        let d = deg as f64;
        out.s_pos.push(n / d - 1.0);
        let (wp, wn, v) = match variant {
            TargetVariant::Full => (d, d, d / n),
            TargetVariant::SampledDerived { negatives } => {
                let k = negatives as f64 + 1.0;
                (d, d * k / n, d * k / (n * n))
            }
            TargetVariant::Hyperparameterized { alpha, beta } => (1.0, alpha, beta),
            TargetVariant::Wrmf { .. } => unreachable!(),
        };
        out.w_pos.push(wp);
        out.w_neg.push(wn);
        out.v.push(v);
    }
    Ok(out)
}
