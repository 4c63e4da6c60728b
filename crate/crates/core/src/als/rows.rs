use std::time::Instant;

use rayon::prelude::*;

use super::{gram_precompute, AlsConfig};
use crate::data::{InteractionMatrix, TargetMatrices};
use crate::error::{Error, Result, Side};
use crate::linalg::{axpy, cholesky_solve, guarded_factor, spd_inverse, symmetrize_lower, syr_lower};
use crate::loss::{InteractionForm, LossKind, RegConvention};
use crate::model::FactorModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfStepReport {
    pub side: Side,
    pub rows: usize,
    pub seconds: f64,
    /// True when the object rows were solved jointly through the shared
    /// column sum (rank-one RG× with nonzero V).
    pub coupled: bool,
}

fn check_dims(model: &FactorModel, matrix: &InteractionMatrix, targets: &TargetMatrices, cfg: &AlsConfig) -> Result<()> {
    if model.n_contexts() != matrix.n_rows() || model.n_objects() != matrix.n_cols() {
        return Err(Error::dims("model does not match the interaction matrix"));
    }
    if targets.n_contexts() != matrix.n_rows() || targets.n_objects != matrix.n_cols() {
        return Err(Error::dims("targets do not match the interaction matrix"));
    }
    if model.dim() != cfg.factors {
        return Err(Error::dims(format!("model has K={} but config asks for {}", model.dim(), cfg.factors)));
    }
    Ok(())
}

/// Runs `solve(row, out_row)` for every row, in parallel if asked. Rows are
/// independent, so both modes give identical results; the reported error is
/// always the lowest failing row.
fn for_each_row<F>(out: &mut [f64], width: usize, parallel: bool, solve: F) -> Result<()>
where
    F: Fn(usize, &mut [f64], &mut Vec<f64>) -> Result<()> + Sync,
{
    if parallel {
        let results: Vec<Result<()>> = out
            .par_chunks_mut(width)
            .enumerate()
            .map_init(Vec::new, |scratch, (i, row)| solve(i, row, scratch))
            .collect();
        results.into_iter().collect()
    } else {
        let mut scratch = Vec::new();
        for (i, row) in out.chunks_mut(width).enumerate() {
            solve(i, row, &mut scratch)?;
        }
        Ok(())
    }
}

/// Solves every context row against fixed Q:
/// (Qᵀ W̃_x Q + r_x I − [RG×] V_x G_int) P_xᵀ = Qᵀ W̃_x S_xᵀ.
pub fn update_context_rows(
    model: &mut FactorModel,
    matrix: &InteractionMatrix,
    targets: &TargetMatrices,
    cfg: &AlsConfig,
) -> Result<HalfStepReport> {
    check_dims(model, matrix, targets, cfg)?;
    let start = Instant::now();
    let k = model.dim();
    let q = model.q();
    let gram = gram_precompute(q, k);
    let g_int: Option<Vec<f64>> = match (cfg.kind, cfg.interaction_form) {
        (LossKind::Rg2, _) => None,
        (LossKind::Rgx, InteractionForm::Gram) => Some(gram.g.clone()),
        (LossKind::Rgx, InteractionForm::RankOne) => {
            let mut o = vec![0.0; k * k];
            syr_lower(1.0, &gram.sum, &mut o, k);
            Some(o)
        }
    };
    let s_neg = targets.s_neg;
    let mut new_p = vec![0.0; model.p().len()];
    for_each_row(&mut new_p, k, cfg.parallel, |x, out, scratch| {
        let row = matrix.row(x);
        let (w_pos, w_neg) = (targets.w_pos[x], targets.w_neg[x]);
        let mut a: Vec<f64> = gram.g.iter().map(|g| w_neg * g).collect();
        out.iter_mut().zip(&gram.sum).for_each(|(o, s)| *o = w_neg * s_neg * s);
        let coef = w_pos * targets.s_pos[x] - w_neg * s_neg;
        for &y in row {
            let qy = &q[y as usize * k..(y as usize + 1) * k];
            syr_lower(w_pos - w_neg, qy, &mut a, k);
            axpy(coef, qy, out);
        }
        let reg = match cfg.regularization {
            RegConvention::WeightScaled => cfg.lambda * targets.row_weight_sum(x, row.len()),
            RegConvention::Plain => cfg.lambda,
        };
        for i in 0..k {
            a[i * k + i] += reg;
        }
        if let Some(g) = &g_int {
            let v = targets.v[x];
            a.iter_mut().zip(g).for_each(|(a, g)| *a -= v * g);
        }
        if !guarded_factor(&mut a, k, cfg.pd_floor, scratch) {
            return Err(Error::NotPositiveDefinite { side: Side::Context, row: x, floor: cfg.pd_floor });
        }
        cholesky_solve(&a, out, k);
        Ok(())
    })?;
    model.p_mut().copy_from_slice(&new_p);
    Ok(HalfStepReport { side: Side::Context, rows: matrix.n_rows(), seconds: start.elapsed().as_secs_f64(), coupled: false })
}

/// Solves every object row against fixed P. With the Gram interaction form
/// the RG× correction Pᵀ Ṽ P is the same for every row. With the rank-one
/// form the interaction couples all rows through q̄ = Σ_y Q_y; the exact
/// joint minimizer is recovered by first solving the K×K system
/// (S⁻¹ − G_V) q̄ = S⁻¹ Σ_y A_y⁻¹ b_y with S = Σ_y A_y⁻¹, G_V = Pᵀ Ṽ P, and then
/// Q_y = A_y⁻¹ (b_y + G_V q̄).
pub fn update_object_rows(
    model: &mut FactorModel,
    matrix: &InteractionMatrix,
    targets: &TargetMatrices,
    cfg: &AlsConfig,
) -> Result<HalfStepReport> {
    check_dims(model, matrix, targets, cfg)?;
    let start = Instant::now();
    let (m, n, k) = (matrix.n_rows(), matrix.n_cols(), model.dim());
    let p = model.p();
    let s_neg = targets.s_neg;

    // Shared negative-weight Gram, right-hand side and interaction Gram.
    let mut base = vec![0.0; k * k];
    let mut base_rhs = vec![0.0; k];
    let mut g_v = vec![0.0; k * k];
    for x in 0..m {
        let px = &p[x * k..(x + 1) * k];
        syr_lower(targets.w_neg[x], px, &mut base, k);
        axpy(targets.w_neg[x] * s_neg, px, &mut base_rhs);
        syr_lower(targets.v[x], px, &mut g_v, k);
    }
    symmetrize_lower(&mut g_v, k);
    let interaction = cfg.kind == LossKind::Rgx && targets.has_interaction();
    let coupled = interaction && cfg.interaction_form == InteractionForm::RankOne;
    let col_weights = match cfg.regularization {
        RegConvention::WeightScaled => Some(crate::loss::column_weight_sums(matrix, targets)),
        RegConvention::Plain => None,
    };

    // System matrix and right-hand side of object y, before any coupling.
    let system = |y: usize, a: &mut Vec<f64>, b: &mut [f64]| {
        a.clear();
        a.extend_from_slice(&base);
        b.copy_from_slice(&base_rhs);
        for &x in matrix.col(y) {
            let x = x as usize;
            let px = &p[x * k..(x + 1) * k];
            let (w_pos, w_neg) = (targets.w_pos[x], targets.w_neg[x]);
            syr_lower(w_pos - w_neg, px, a, k);
            axpy(w_pos * targets.s_pos[x] - w_neg * s_neg, px, b);
        }
        let reg = col_weights.as_ref().map_or(cfg.lambda, |c| cfg.lambda * c[y]);
        for i in 0..k {
            a[i * k + i] += reg;
        }
    };

    let mut new_q = vec![0.0; n * k];
    if !coupled {
        let subtract = interaction.then_some(&g_v);
        for_each_row(&mut new_q, k, cfg.parallel, |y, out, scratch| {
            let mut a = Vec::with_capacity(k * k);
            system(y, &mut a, out);
            if let Some(g) = subtract {
                a.iter_mut().zip(g).for_each(|(a, g)| *a -= g);
            }
            if !guarded_factor(&mut a, k, cfg.pd_floor, scratch) {
                return Err(Error::NotPositiveDefinite { side: Side::Object, row: y, floor: cfg.pd_floor });
            }
            cholesky_solve(&a, out, k);
            Ok(())
        })?;
    } else {
        // Pass 1: factor every A_y, keep the factors, solve A_y u_y = b_y.
        let mut factors = vec![0.0; n * k * k];
        let mut rhs = vec![0.0; n * k];
        let solve_one = |y: usize, l: &mut [f64], out: &mut [f64], scratch: &mut Vec<f64>| -> Result<()> {
            let mut a = Vec::with_capacity(k * k);
            system(y, &mut a, out);
            if !guarded_factor(&mut a, k, cfg.pd_floor, scratch) {
                return Err(Error::NotPositiveDefinite { side: Side::Object, row: y, floor: cfg.pd_floor });
            }
            l.copy_from_slice(&a);
            Ok(())
        };
        if cfg.parallel {
            let results: Vec<Result<()>> = factors
                .par_chunks_mut(k * k)
                .zip(rhs.par_chunks_mut(k))
                .enumerate()
                .map_init(Vec::new, |s, (y, (l, b))| solve_one(y, l, b, s))
                .collect();
            results.into_iter().collect::<Result<()>>()?;
        } else {
            let mut s = Vec::new();
            for (y, (l, b)) in factors.chunks_mut(k * k).zip(rhs.chunks_mut(k)).enumerate() {
                solve_one(y, l, b, &mut s)?;
            }
        }
        // Accumulate S = Σ A_y⁻¹ and u = Σ A_y⁻¹ b_y in object order.
        let mut s_mat = vec![0.0; k * k];
        let mut u = vec![0.0; k];
        let mut col = vec![0.0; k];
        for y in 0..n {
            let l = &factors[y * k * k..(y + 1) * k * k];
            let mut ub = rhs[y * k..(y + 1) * k].to_vec();
            cholesky_solve(l, &mut ub, k);
            axpy(1.0, &ub, &mut u);
            for j in 0..k {
                col.iter_mut().for_each(|c| *c = 0.0);
                col[j] = 1.0;
                cholesky_solve(l, &mut col, k);
                for i in 0..k {
                    s_mat[i * k + j] += col[i];
                }
            }
        }
        let s_inv = spd_inverse(&s_mat, k).ok_or(Error::CoupledNotPositiveDefinite { floor: cfg.pd_floor })?;
        let mut joint: Vec<f64> = s_inv.iter().zip(&g_v).map(|(a, b)| a - b).collect();
        let mut qbar = crate::linalg::matvec(&s_inv, &u, k);
        let mut scratch = Vec::new();
        if !guarded_factor(&mut joint, k, cfg.pd_floor, &mut scratch) {
            return Err(Error::CoupledNotPositiveDefinite { floor: cfg.pd_floor });
        }
        cholesky_solve(&joint, &mut qbar, k);
        let shift = crate::linalg::matvec(&g_v, &qbar, k);
        // Pass 2: Q_y = A_y⁻¹ (b_y + G_V q̄).
        for y in 0..n {
            let out = &mut new_q[y * k..(y + 1) * k];
            out.copy_from_slice(&rhs[y * k..(y + 1) * k]);
            axpy(1.0, &shift, out);
            cholesky_solve(&factors[y * k * k..(y + 1) * k * k], out, k);
        }
    }
    model.q_mut().copy_from_slice(&new_q);
    Ok(HalfStepReport { side: Side::Object, rows: n, seconds: start.elapsed().as_secs_f64(), coupled })
}
