//! Dense reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rgrank::data::{build_matrix, InteractionMatrix, InteractionSet, TargetMatrices};
use rgrank::loss::{InteractionForm, LossKind};
use rgrank::FactorModel;

/// Dense S and W (row-major M×N) read off the target description.
pub fn dense_targets(matrix: &InteractionMatrix, t: &TargetMatrices) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (matrix.n_rows(), matrix.n_cols());
    let mut s = vec![t.s_neg; m * n];
    let mut w = vec![0.0; m * n];
    for x in 0..m {
        for y in 0..n {
            w[x * n + y] = t.w_neg[x];
        }
        for &y in matrix.row(x) {
            s[x * n + y as usize] = t.s_pos[x];
            w[x * n + y as usize] = t.w_pos[x];
        }
    }
    (s, w)
}

/// Σ W(S − PQᵀ)² − Σ_x V_x·I_x + λ Σ_x (Σ_y W)‖P_x‖² + λ Σ_y (Σ_x W)‖Q_y‖²,
/// with I_x = (Σ_y o_xy)² for the rank-one form and Σ_y o_xy² for the Gram
/// form, evaluated by brute force.
pub fn dense_objective(
    matrix: &InteractionMatrix,
    model: &FactorModel,
    t: &TargetMatrices,
    lambda: f64,
    kind: LossKind,
    form: InteractionForm,
) -> f64 {
    let (m, n, k) = (model.n_contexts(), model.n_objects(), model.dim());
    let (s, w) = dense_targets(matrix, t);
    let mut total = 0.0;
    let mut col_w = vec![0.0; n];
    for x in 0..m {
        let mut row_sum = 0.0;
        let mut sq_sum = 0.0;
        let mut row_w = 0.0;
        for y in 0..n {
            let o: f64 = (0..k).map(|i| model.p()[x * k + i] * model.q()[y * k + i]).sum();
            let (sv, wv) = (s[x * n + y], w[x * n + y]);
            total += wv * (sv - o) * (sv - o);
            row_sum += o;
            sq_sum += o * o;
            row_w += wv;
            col_w[y] += wv;
        }
        if kind == LossKind::Rgx {
            total -= t.v[x] * if form == InteractionForm::RankOne { row_sum * row_sum } else { sq_sum };
        }
        total += lambda * row_w * (0..k).map(|i| model.p()[x * k + i].powi(2)).sum::<f64>();
    }
    for y in 0..n {
        total += lambda * col_w[y] * (0..k).map(|i| model.q()[y * k + i].powi(2)).sum::<f64>();
    }
    total
}

/// Gradient of [`dense_objective`] with respect to P and Q (row-major).
pub fn dense_gradient(
    matrix: &InteractionMatrix,
    model: &FactorModel,
    t: &TargetMatrices,
    lambda: f64,
    kind: LossKind,
    form: InteractionForm,
) -> (Vec<f64>, Vec<f64>) {
    let (m, n, k) = (model.n_contexts(), model.n_objects(), model.dim());
    let (s, w) = dense_targets(matrix, t);
    let (p, q) = (model.p(), model.q());
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut gp = vec![0.0; m * k];
    let mut gq = vec![0.0; n * k];
    let mut qbar = vec![0.0; k];
    for y in 0..n {
        for i in 0..k {
            qbar[i] += q[y * k + i];
        }
    }
    let mut col_w = vec![0.0; n];
    for x in 0..m {
        let px = &p[x * k..(x + 1) * k];
        let row_w: f64 = (0..n).map(|y| w[x * n + y]).sum();
        let pq = dot(px, &qbar);
        for y in 0..n {
            let qy = &q[y * k..(y + 1) * k];
            let o = dot(px, qy);
            let (sv, wv) = (s[x * n + y], w[x * n + y]);
            col_w[y] += wv;
            let mut coef = 2.0 * wv * (o - sv);
            if kind == LossKind::Rgx {
                coef -= 2.0 * t.v[x] * if form == InteractionForm::RankOne { pq } else { o };
            }
            for i in 0..k {
                gp[x * k + i] += coef * qy[i];
                gq[y * k + i] += coef * px[i];
            }
        }
        for i in 0..k {
            gp[x * k + i] += 2.0 * lambda * row_w * px[i];
        }
    }
    for y in 0..n {
        for i in 0..k {
            gq[y * k + i] += 2.0 * lambda * col_w[y] * q[y * k + i];
        }
    }
    (gp, gq)
}

/// Minimizer of a strictly convex quadratic from objective values alone:
/// gradient at 0 and Hessian from unit-step differences, which are exact
/// for quadratics up to rounding, then an LU solve.
pub fn quadratic_minimizer<F: Fn(&[f64]) -> f64>(f: F, dim: usize) -> Vec<f64> {
    let origin = vec![0.0; dim];
    let f0 = f(&origin);
    let unit = |i: usize, s: f64| {
        let mut v = origin.clone();
        v[i] = s;
        v
    };
    let fi: Vec<f64> = (0..dim).map(|i| f(&unit(i, 1.0))).collect();
    let g = DVector::from_iterator(dim, (0..dim).map(|i| (fi[i] - f(&unit(i, -1.0))) / 2.0));
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..=i {
            let mut v = unit(i, 1.0);
            v[j] += 1.0;
            let hij = f(&v) - fi[i] - fi[j] + f0;
            h[(i, j)] = hij;
            h[(j, i)] = hij;
        }
    }
    let x = h.lu().solve(&(-g)).expect("Hessian is singular");
    x.iter().copied().collect()
}

/// Central finite-difference gradient with step h·max(1, |x_i|).
pub fn fd_gradient<F: FnMut(&[f64]) -> f64>(x: &[f64], h: f64, mut f: F) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(1.0);
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// max |a − b| / max(1, max |b|).
pub fn rel_dev(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Every context gets between 1 and N − 1 distinct positives.
pub fn random_matrix<R: Rng>(rng: &mut R, m: usize, n: usize) -> InteractionMatrix {
    let mut entries = Vec::new();
    for x in 0..m as u32 {
        let c = rng.random_range(1..n);
        let mut ids: Vec<u32> = (0..n as u32).collect();
        ids.shuffle(rng);
        entries.extend(ids[..c].iter().map(|&y| (x, y)));
    }
    build_matrix(&InteractionSet::new(m, n, entries).unwrap()).unwrap()
}

pub fn normal_vec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}
