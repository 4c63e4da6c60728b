//! DCG regret of score-induced rankings and its transfer to RG² excess risk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::metrics::rank_items;

/// c_i = 1 / log_base(1 + i) for ranks 1..=n.
pub fn discounts(n: usize, base: f64) -> Vec<f64> {
    (1..=n).map(|i| base.ln() / ((1 + i) as f64).ln()).collect()
}

/// Σ_i c_i f_B[π(i)] for the ranking π.
pub fn expected_dcg(ranking: &[u32], f_b: &[f64], c: &[f64]) -> f64 {
    ranking.iter().zip(c).map(|(&y, c)| c * f_b[y as usize]).sum()
}

/// Optimal expected DCG minus the expected DCG of the ranking induced by
/// `scores` (descending, ties by ascending id).
pub fn dcg_regret(scores: &[f64], f_b: &[f64], base: f64) -> Result<f64> {
    if scores.len() != f_b.len() {
        return Err(Error::dims("scores and Bayes scores differ in length"));
    }
    let c = discounts(f_b.len(), base);
    let best = rank_items(f_b, &[])?;
    let ours = rank_items(scores, &[])?;
    Ok(expected_dcg(&best, f_b, &c) - expected_dcg(&ours, f_b, &c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// regret(f) ≤ (2Σc²)^{1/2} ‖f − f_B‖.
pub fn dcg_regret_bound_check(f: &[f64], f_b: &[f64], base: f64) -> Result<RegretCheck> {
    if f_b.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::precondition("Bayes scores must lie in [0, 1]"));
    }
    let lhs = dcg_regret(f, f_b, base)?;
    let c = discounts(f_b.len(), base);
    let csq: f64 = c.iter().map(|v| v * v).sum();
    let dist: f64 = f.iter().zip(f_b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let rhs = (2.0 * csq).sqrt() * dist;
    Ok(RegretCheck { lhs, rhs, holds: lhs <= rhs + 1e-12 })
}

/// Minimizer of the population RG² risk −f_Bᵀo + (m/2N)‖o + 1‖²: (N/m) f_B − 1.
pub fn rg2_minimizer(f_b: &[f64], m: usize) -> Vec<f64> {
    let scale = f_b.len() as f64 / m as f64;
    f_b.iter().map(|v| scale * v - 1.0).collect()
}

/// Population RG² risk at o minus its minimum: (m/2N)‖o − η̄‖².
pub fn rg2_excess_risk(o: &[f64], f_b: &[f64], m: usize) -> f64 {
    let eta = rg2_minimizer(f_b, m);
    let d: f64 = o.iter().zip(&eta).map(|(a, b)| (a - b) * (a - b)).sum();
    m as f64 / (2.0 * f_b.len() as f64) * d
}

/// Least-squares fit of a non-increasing sequence (pool adjacent violators).
pub fn isotonic_non_increasing(z: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(z.len());
    for &v in z {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 >= s1 / c1 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s0 + s1, c0 + c1);
        }
    }
    blocks.into_iter().flat_map(|(s, c)| std::iter::repeat_n(s / c as f64, c)).collect()
}

fn permutations(n: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur: Vec<u32> = (0..n as u32).collect();
    heap_permute(n, &mut cur, &mut out);
    out
}

fn heap_permute(k: usize, a: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if k <= 1 {
        out.push(a.clone());
        return;
    }
    for i in 0..k - 1 {
        heap_permute(k - 1, a, out);
        if k % 2 == 0 {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
    }
    heap_permute(k - 1, a, out);
}

/// sup over score vectors o of regret(o) / (excess risk)^{1/2} for one f_B.
/// For each ranking π the smallest excess risk among scores inducing π is
/// the squared distance from η̄ to the cone {o_π(1) ≥ … ≥ o_π(N)}, found by
/// isotonic regression of η̄ read in π order.
pub fn transfer_supremum(f_b: &[f64], m: usize, base: f64) -> Result<f64> {
    let n = f_b.len();
    if n > 8 {
        return Err(Error::precondition("exhaustive supremum needs N <= 8"));
    }
    let c = discounts(n, base);
    let best = expected_dcg(&rank_items(f_b, &[])?, f_b, &c);
    let eta = rg2_minimizer(f_b, m);
    let mut sup: f64 = 0.0;
    for pi in permutations(n) {
        let regret = best - expected_dcg(&pi, f_b, &c);
        if regret <= 1e-15 {
            continue;
        }
        let z: Vec<f64> = pi.iter().map(|&y| eta[y as usize]).collect();
        let fit = isotonic_non_increasing(&z);
        let dist2: f64 = z.iter().zip(&fit).map(|(a, b)| (a - b) * (a - b)).sum();
        let excess = m as f64 / (2.0 * n as f64) * dist2;
        if excess <= 0.0 {
            return Err(Error::precondition("positive regret at zero excess risk"));
        }
        sup = sup.max(regret / excess.sqrt());
    }
    Ok(sup)
}

/// Every f_B with entries from `levels` whose entries sum to m.
pub fn bayes_grid_family(n: usize, m: usize, levels: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut cur = vec![0.0; n];
    fn rec(i: usize, cur: &mut Vec<f64>, levels: &[f64], m: f64, out: &mut Vec<Vec<f64>>) {
        if i == cur.len() {
            if (cur.iter().sum::<f64>() - m).abs() < 1e-12 {
                out.push(cur.clone());
            }
            return;
        }
        for &l in levels {
            cur[i] = l;
            rec(i + 1, cur, levels, m, out);
        }
    }
    rec(0, &mut cur, levels, m as f64, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    /// Fitted constant: largest exact supremum over the family.
    pub c_fit: f64,
    /// (2Σc² · 2m/N)^{1/2}, implied by the DCG regret bound.
    pub c_theory: f64,
    pub heldout: usize,
    pub violations: usize,
    /// Largest regret / (excess risk)^{1/2} seen on held-out instances.
    pub worst_heldout_ratio: f64,
}

/// Fits C over `family` and checks regret ≤ C·(RG² excess)^{1/2} on
/// `heldout` random instances (f_B drawn from the family, o random around
/// the minimizer at mixed scales).
pub fn rg2_regret_transfer_check(
    family: &[Vec<f64>],
    m: usize,
    heldout: usize,
    seed: u64,
    base: f64,
) -> Result<TransferReport> {
    let first = family.first().ok_or_else(|| Error::precondition("empty instance family"))?;
    let n = first.len();
    if m == 0 || m >= n {
        return Err(Error::precondition("need 1 <= |I| < N"));
    }
    let mut c_fit: f64 = 0.0;
    for f_b in family {
        if f_b.len() != n {
            return Err(Error::dims("family members differ in length"));
        }
        c_fit = c_fit.max(transfer_supremum(f_b, m, base)?);
    }
    let csq: f64 = discounts(n, base).iter().map(|v| v * v).sum();
    let c_theory = (2.0 * csq * 2.0 * m as f64 / n as f64).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..heldout {
        let f_b = &family[rng.random_range(0..family.len())];
        let eta = rg2_minimizer(f_b, m);
        let scale = 10f64.powf(rng.random_range(-3.0..1.0));
        let o: Vec<f64> = eta.iter().map(|e| e + scale * unit.sample(&mut rng)).collect();
        let regret = dcg_regret(&o, f_b, base)?;
        let excess = rg2_excess_risk(&o, f_b, m);
        if regret > c_fit * excess.sqrt() + 1e-12 {
            violations += 1;
        }
        if excess > 0.0 {
            worst = worst.max(regret / excess.sqrt());
        }
    }
    Ok(TransferReport { c_fit, c_theory, heldout, violations, worst_heldout_ratio: worst })
}
