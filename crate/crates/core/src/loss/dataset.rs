use crate::als::gram_precompute;
use crate::data::{InteractionMatrix, TargetMatrices};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::FactorModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    Rg2,
    #[default]
    Rgx,
}

/// Shape of the RG× interaction quadratic in factor space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InteractionForm {
    /// V_x (P_x·q̄)², the exact second-order term.
    #[default]
    RankOne,
    /// V_x P_x QᵀQ P_xᵀ.
    Gram,
}

/// How λ enters the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegConvention {
    /// λ(Σ_y W_xy)‖P_x‖² + λ(Σ_x W_xy)‖Q_y‖², the form the ALS updates solve.
    #[default]
    WeightScaled,
    /// λ(‖P‖² + ‖Q‖²).
    Plain,
}

/// The dataset objective split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RgObjective {
    /// Σ W (S − o)².
    pub data: f64,
    /// Σ_x V_x·(interaction quadratic); subtracted for RG×, zero for RG².
    pub interaction: f64,
    pub reg_plain: f64,
    pub reg_weighted: f64,
}

impl RgObjective {
    pub fn total(&self, convention: RegConvention) -> f64 {
        let reg = match convention {
            RegConvention::WeightScaled => self.reg_weighted,
            RegConvention::Plain => self.reg_plain,
        };
        self.data - self.interaction + reg
    }
}

/// Dataset-level squared-form objective. Negatives are handled through the
/// Gram matrix and column sums of Q, so the cost is O(|D|K + (M+N)K²).
pub fn rg_dataset_loss(
    matrix: &InteractionMatrix,
    model: &FactorModel,
    targets: &TargetMatrices,
    lambda: f64,
    kind: LossKind,
    form: InteractionForm,
) -> Result<RgObjective> {
    let (m, n, k) = (model.n_contexts(), model.n_objects(), model.dim());
    if matrix.n_rows() != m || matrix.n_cols() != n {
        return Err(Error::dims(format!(
            "model is {m}x{n} but the matrix is {}x{}",
            matrix.n_rows(),
            matrix.n_cols()
        )));
    }
    if targets.n_contexts() != m || targets.n_objects != n {
        return Err(Error::dims("targets do not match the matrix"));
    }
    let gram = gram_precompute(model.q(), k);
    let nf = n as f64;
    let s_neg = targets.s_neg;
    let mut data = 0.0;
    let mut interaction = 0.0;
    let mut reg_p = 0.0;
    let mut reg_p_weighted = 0.0;
    let mut gp = vec![0.0; k];
    for x in 0..m {
        let p = model.p_row(x);
        let row = matrix.row(x);
        gram.g_times(p, &mut gp);
        let pgp = dot(p, &gp);
        let pq = dot(p, &gram.sum);
        let (w_pos, w_neg, s_pos) = (targets.w_pos[x], targets.w_neg[x], targets.s_pos[x]);
        let mut row_data = w_neg * (nf * s_neg * s_neg - 2.0 * s_neg * pq + pgp);
        for &y in row {
            let o = dot(p, model.q_row(y as usize));
            row_data += w_pos * (s_pos - o) * (s_pos - o) - w_neg * (s_neg - o) * (s_neg - o);
        }
        data += row_data;
        if kind == LossKind::Rgx {
            interaction += targets.v[x]
                * match form {
                    InteractionForm::RankOne => pq * pq,
                    InteractionForm::Gram => pgp,
                };
        }
        let norm = dot(p, p);
        reg_p += norm;
        reg_p_weighted += targets.row_weight_sum(x, row.len()) * norm;
    }
    let col_weights = column_weight_sums(matrix, targets);
    let mut reg_q = 0.0;
    let mut reg_q_weighted = 0.0;
    for y in 0..n {
        let q = model.q_row(y);
        let norm = dot(q, q);
        reg_q += norm;
        reg_q_weighted += col_weights[y] * norm;
    }
    Ok(RgObjective {
        data,
        interaction,
        reg_plain: lambda * (reg_p + reg_q),
        reg_weighted: lambda * (reg_p_weighted + reg_q_weighted),
    })
}

/// Σ_x W_xy for every object y.
pub(crate) fn column_weight_sums(matrix: &InteractionMatrix, targets: &TargetMatrices) -> Vec<f64> {
    let base: f64 = targets.w_neg.iter().sum();
    (0..matrix.n_cols())
        .map(|y| {
            base + matrix
                .col(y)
                .iter()
                .map(|&x| targets.w_pos[x as usize] - targets.w_neg[x as usize])
                .sum::<f64>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_matrix, build_targets, InteractionSet, TargetVariant};
    use crate::model::Init;

    fn instance() -> (InteractionMatrix, FactorModel) {
        let set = InteractionSet::new(4, 3, vec![(0, 0), (0, 2), (1, 1), (2, 0), (3, 2), (3, 1)]).unwrap();
        let model = FactorModel::init(4, 3, 2, Init::Gaussian(0.7), 5).unwrap();
        (build_matrix(&set).unwrap(), model)
    }

    // Dense double loop straight from the definition.
    fn brute(matrix: &InteractionMatrix, model: &FactorModel, t: &TargetMatrices, form: InteractionForm) -> f64 {
        let (m, n) = (model.n_contexts(), model.n_objects());
        let mut total = 0.0;
        for x in 0..m {
            let o = model.scores(x);
            for y in 0..n {
                let pos = matrix.contains(x, y as u32);
                total += t.weight(x, pos) * (t.target(x, pos) - o[y]).powi(2);
            }
            let inter = match form {
                InteractionForm::RankOne => o.iter().sum::<f64>().powi(2),
                InteractionForm::Gram => (0..n)
                    .map(|y| dot(model.q_row(y), model.p_row(x)).powi(2))
                    .sum(),
            };
            total -= t.v[x] * inter;
        }
        total
    }

    #[test]
    fn zero_model_is_weighted_target_energy() {
        let (matrix, _) = instance();
        let t = build_targets(&matrix, TargetVariant::Full).unwrap();
        let zero = FactorModel::zeros(4, 3, 2);
        let obj = rg_dataset_loss(&matrix, &zero, &t, 0.3, LossKind::Rgx, InteractionForm::RankOne).unwrap();
        let mut expect = 0.0;
        for x in 0..4 {
            for y in 0..3u32 {
                let pos = matrix.contains(x, y);
                expect += t.weight(x, pos) * t.target(x, pos).powi(2);
            }
        }
        assert_eq!(obj.total(RegConvention::Plain), expect);
    }

    #[test]
    fn matches_dense_oracle() {
        let (matrix, model) = instance();
        for variant in [
            TargetVariant::Full,
            TargetVariant::SampledDerived { negatives: 2 },
            TargetVariant::Hyperparameterized { alpha: 0.4, beta: 0.2 },
        ] {
            let t = build_targets(&matrix, variant).unwrap();
            for form in [InteractionForm::RankOne, InteractionForm::Gram] {
                let obj = rg_dataset_loss(&matrix, &model, &t, 0.0, LossKind::Rgx, form).unwrap();
                let b = brute(&matrix, &model, &t, form);
                assert!((obj.total(RegConvention::Plain) - b).abs() < 1e-10, "{variant:?} {form:?}");
            }
        }
    }

    #[test]
    fn monotone_in_lambda() {
        let (matrix, model) = instance();
        let t = build_targets(&matrix, TargetVariant::Full).unwrap();
        let value = |l| {
            rg_dataset_loss(&matrix, &model, &t, l, LossKind::Rg2, InteractionForm::RankOne).unwrap()
        };
        for conv in [RegConvention::Plain, RegConvention::WeightScaled] {
            assert!(value(0.1).total(conv) < value(0.2).total(conv));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let (matrix, _) = instance();
        let t = build_targets(&matrix, TargetVariant::Full).unwrap();
        let wrong = FactorModel::zeros(4, 5, 2);
        assert!(matches!(
            rg_dataset_loss(&matrix, &wrong, &t, 0.1, LossKind::Rg2, InteractionForm::Gram),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
