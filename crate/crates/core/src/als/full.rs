//! Whole-matrix alternation for row-constant weights W = diag(w_x), using
//! the ‖P Qᵀ‖²_F regularizer:
//! P = (W + λI)⁻¹ W S Q (QᵀQ)⁻¹ and Q = Sᵀ W P (λ PᵀP + Pᵀ W P)⁻¹.

use super::gram_precompute;
use crate::data::{InteractionMatrix, TargetMatrices};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, matvec, spd_inverse, symmetrize_lower, syr_lower};
use crate::loss::{rg_dataset_loss, InteractionForm, LossKind};
use crate::model::FactorModel;

#[derive(Debug, Clone)]
pub struct FullMatrixFit {
    pub model: FactorModel,
    /// Objective at the start and after every half-step.
    pub objectives: Vec<f64>,
    pub iterations: usize,
}

/// Σ_x w_x ‖S_x − P_x Qᵀ‖² + λ‖P Qᵀ‖²_F.
pub fn full_matrix_objective(
    matrix: &InteractionMatrix,
    model: &FactorModel,
    targets: &TargetMatrices,
    lambda: f64,
) -> Result<f64> {
    let data = rg_dataset_loss(matrix, model, targets, 0.0, LossKind::Rg2, InteractionForm::RankOne)?.data;
    let k = model.dim();
    let gp = gram_precompute(model.p(), k);
    let gq = gram_precompute(model.q(), k);
    Ok(data + lambda * dot(&gp.g, &gq.g))
}

fn inverse_with_jitter(a: &[f64], k: usize, what: &str) -> Result<Vec<f64>> {
    if let Some(inv) = spd_inverse(a, k) {
        return Ok(inv);
    }
    let trace: f64 = (0..k).map(|i| a[i * k + i]).sum();
    let eps = 1e-10 * trace / k as f64;
    let mut j = a.to_vec();
    for i in 0..k {
        j[i * k + i] += eps;
    }
    spd_inverse(&j, k).ok_or_else(|| Error::Singular(what.to_string()))
}

fn update_p(model: &mut FactorModel, matrix: &InteractionMatrix, t: &TargetMatrices, lambda: f64) -> Result<()> {
    let k = model.dim();
    let gram = gram_precompute(model.q(), k);
    let inv = inverse_with_jitter(&gram.g, k, "QᵀQ")?;
    let mut new_p = vec![0.0; model.p().len()];
    let mut sq = vec![0.0; k];
    for x in 0..matrix.n_rows() {
        sq.iter_mut().zip(&gram.sum).for_each(|(o, s)| *o = t.s_neg * s);
        for &y in matrix.row(x) {
            axpy(t.s_pos[x] - t.s_neg, model.q_row(y as usize), &mut sq);
        }
        let w = t.w_neg[x];
        let row = matvec(&inv, &sq, k);
        new_p[x * k..(x + 1) * k].iter_mut().zip(&row).for_each(|(o, r)| *o = w / (w + lambda) * r);
    }
    model.p_mut().copy_from_slice(&new_p);
    Ok(())
}

fn update_q(model: &mut FactorModel, matrix: &InteractionMatrix, t: &TargetMatrices, lambda: f64) -> Result<()> {
    let k = model.dim();
    let mut mat = vec![0.0; k * k];
    let mut base = vec![0.0; k];
    for x in 0..matrix.n_rows() {
        let px = model.p_row(x);
        syr_lower(lambda + t.w_neg[x], px, &mut mat, k);
        axpy(t.s_neg * t.w_neg[x], px, &mut base);
    }
    symmetrize_lower(&mut mat, k);
    let inv = inverse_with_jitter(&mat, k, "λPᵀP + PᵀWP")?;
    let mut new_q = vec![0.0; model.q().len()];
    let mut r = vec![0.0; k];
    for y in 0..matrix.n_cols() {
        r.copy_from_slice(&base);
        for &x in matrix.col(y) {
            let x = x as usize;
            axpy((t.s_pos[x] - t.s_neg) * t.w_neg[x], model.p_row(x), &mut r);
        }
        new_q[y * k..(y + 1) * k].copy_from_slice(&matvec(&inv, &r, k));
    }
    model.q_mut().copy_from_slice(&new_q);
    Ok(())
}

/// One whole-matrix iteration: P update, then Q update.
pub fn full_matrix_step(
    model: &mut FactorModel,
    matrix: &InteractionMatrix,
    targets: &TargetMatrices,
    lambda: f64,
) -> Result<()> {
    if !targets.is_row_constant() {
        return Err(Error::precondition("full-matrix ALS needs one weight per context"));
    }
    update_p(model, matrix, targets, lambda)?;
    update_q(model, matrix, targets, lambda)
}

/// Alternates whole-matrix updates from `initial` until the relative
/// decrease over one iteration is below `tolerance` or `max_iters` is hit.
pub fn als_fit_full_matrix(
    matrix: &InteractionMatrix,
    targets: &TargetMatrices,
    lambda: f64,
    max_iters: usize,
    tolerance: f64,
    initial: FactorModel,
) -> Result<FullMatrixFit> {
    if !targets.is_row_constant() {
        return Err(Error::precondition("full-matrix ALS needs one weight per context"));
    }
    if !(lambda >= 0.0) || !(tolerance > 0.0) {
        return Err(Error::config("need lambda >= 0 and tolerance > 0"));
    }
    let mut model = initial;
    let mut objectives = vec![full_matrix_objective(matrix, &model, targets, lambda)?];
    let mut iterations = 0;
    for _ in 0..max_iters {
        let prev = *objectives.last().unwrap();
        update_p(&mut model, matrix, targets, lambda)?;
        objectives.push(full_matrix_objective(matrix, &model, targets, lambda)?);
        update_q(&mut model, matrix, targets, lambda)?;
        let cur = full_matrix_objective(matrix, &model, targets, lambda)?;
        objectives.push(cur);
        iterations += 1;
        if (prev - cur) / prev.abs().max(f64::MIN_POSITIVE) < tolerance {
            break;
        }
    }
    Ok(FullMatrixFit { model, objectives, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_matrix, build_targets, InteractionSet, TargetVariant};

    #[test]
    fn scalar_hand_solve() {
        // M = 1, N = 2, I = {0}: S = [1, -1], w = 1.
        let m = build_matrix(&InteractionSet::new(1, 2, vec![(0, 0)]).unwrap()).unwrap();
        let t = build_targets(&m, TargetVariant::Full).unwrap();
        let init = FactorModel::from_parts(1, 2, 1, vec![1.0], vec![2.0, 1.0]).unwrap();
        let fit = als_fit_full_matrix(&m, &t, 0.5, 1, 1e-12, init).unwrap();
        // P = w/(w+λ) · (S·q)/(qᵀq) = (1/1.5)·(2 − 1)/5
        let p = 1.0 / 1.5 * 1.0 / 5.0;
        assert!((fit.model.p()[0] - p).abs() < 1e-15);
        // Q_y = S_y w p / (λp² + w p²)
        assert!((fit.model.q()[0] - 1.0 / (1.5 * p)).abs() < 1e-12);
        assert!((fit.model.q()[1] + 1.0 / (1.5 * p)).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_constant_rows() {
        let m = build_matrix(&InteractionSet::new(1, 2, vec![(0, 0)]).unwrap()).unwrap();
        let t = build_targets(&m, TargetVariant::Wrmf { alpha: 2.0 }).unwrap();
        let init = FactorModel::zeros(1, 2, 1);
        assert!(als_fit_full_matrix(&m, &t, 0.1, 3, 1e-4, init).is_err());
    }
}
