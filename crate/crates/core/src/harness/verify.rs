//! Runtime invariant suites behind the `verify` subcommand.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::als::{update_context_rows, update_object_rows, AlsConfig};
use crate::data::{build_matrix, build_targets, InteractionMatrix, InteractionSet, TargetMatrices, TargetVariant};
use crate::error::{Error, Result};
use crate::loss::{
    bce_loss, bpr_loss, rg2_context_loss, rg2_squared_form, rg_dataset_loss, rgx_context_loss, rgx_squared_form,
    sm_context_loss, ssm_loss, wsl_loss, InteractionForm, LossKind, LossValue, Proposal, RegConvention,
    SampledBatch, ScoreVector,
};
use crate::metrics::{map_at_k, mrr_at_k, ndcg_at_k, MetricConfig};
use crate::model::FactorModel;
use crate::theory::{
    bayes_grid_family, bregman_equivalence_check, dcg_regret_bound_check, epsilon_direct, epsilon_log_space,
    hessian_dominance_check, psd_condition, rg2_regret_transfer_check, taylor_residual_sweep, Expansion,
};

pub const SUITES: &[&str] = &["taylor", "gradients", "als", "squared", "consistency", "psd", "metrics", "bregman", "bound"];

/// Operations whose analytic gradients the `gradients` suite checks.
pub const GRADIENT_OPS: &[&str] = &["sm", "ssm", "bpr", "bce", "wsl", "rg2", "rgx"];

/// Adds `size` to the first gradient component of `operation` before it is
/// compared with finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct Fault {
    pub operation: String,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    /// Worst value of the suite's test statistic.
    pub worst: f64,
    /// Limit the statistic is held to.
    pub tolerance: f64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        SuiteReport { name, checks: 0, worst: 0.0, tolerance, failures: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Records one statistic that must not exceed the tolerance.
    fn bound(&mut self, value: f64, what: impl FnOnce() -> String) {
        self.checks += 1;
        if value.is_nan() || value > self.worst {
            self.worst = value;
        }
        if !(value <= self.tolerance) {
            self.fail(format!("{}: {value:e} exceeds {:e}", what(), self.tolerance));
        }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.fail(what());
        }
    }

    fn fail(&mut self, msg: String) {
        // keep reports readable when a whole family fails
        if self.failures.len() < 20 {
            self.failures.push(msg);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            let status = if s.passed() { "PASS" } else { "FAIL" };
            out.push_str(&format!(
                "{status} {:<12} checks={:<7} worst={:.3e} tol={:.1e}\n",
                s.name, s.checks, s.worst, s.tolerance
            ));
            for f in &s.failures {
                out.push_str(&format!("    {f}\n"));
            }
        }
        out
    }
}

/// Runs the named suites, or all of them when `selection` is empty.
pub fn run_verify(selection: &[String], opts: &VerifyOptions) -> Result<VerifyReport> {
    for s in selection {
        if !SUITES.contains(&s.as_str()) {
            return Err(Error::config(format!("unknown suite '{s}' (expected one of: {})", SUITES.join(", "))));
        }
    }
    if let Some(f) = &opts.fault {
        if !GRADIENT_OPS.contains(&f.operation.as_str()) {
            return Err(Error::config(format!("cannot inject a fault into '{}'", f.operation)));
        }
    }
    let mut suites = Vec::new();
    for &name in SUITES {
        if !selection.is_empty() && !selection.iter().any(|s| s == name) {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        suites.push(match name {
            "taylor" => taylor(&mut rng)?,
            "gradients" => gradients(&mut rng, opts.fault.as_ref())?,
            "als" => als(&mut rng)?,
            "squared" => squared(&mut rng)?,
            "consistency" => consistency(opts.seed)?,
            "psd" => psd(&mut rng)?,
            "metrics" => metrics(&mut rng)?,
            "bregman" => bregman(&mut rng)?,
            _ => bound()?,
        });
    }
    Ok(VerifyReport { suites })
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

fn random_positives(rng: &mut ChaCha8Rng, n: usize) -> Vec<u32> {
    let c = rng.random_range(1..=n);
    let mut ids: Vec<u32> = (0..n as u32).collect();
    ids.shuffle(rng);
    let mut pos = ids[..c].to_vec();
    pos.sort_unstable();
    pos
}

fn taylor(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("taylor", 0.2);
    let mut scales = crate::theory::default_scales();
    scales.push(0.0);
    for n in [3usize, 8, 32] {
        for _ in 0..20 {
            let mut v = normal_vec(rng, n, 1.0);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            let c = rng.random_range(1..=n);
            let sweep = taylor_residual_sweep(&v, c, &scales, Expansion::Rgx)?;
            let last = sweep.last().unwrap();
            r.require(last.residual == 0.0, || format!("N={n}: residual at t=0 is {:e}", last.residual));
            let pts = &sweep[..sweep.len() - 1];
            for w in pts.windows(2) {
                if w[0].scaled == 0.0 {
                    continue;
                }
                let ratio = w[1].scaled / w[0].scaled;
                r.bound((ratio - 0.5).abs(), || format!("N={n}, t={:e}: halving ratio {ratio}", w[1].t));
            }
        }
    }
    Ok(r)
}

/// max |a − fd| / max(1, max |fd|) with a central difference of step h.
fn fd_deviation<F: FnMut(&[f64]) -> Result<f64>>(x: &[f64], analytic: &[f64], mut f: F) -> Result<f64> {
    let mut fd = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        fd[i] = (up - down) / (2.0 * h);
    }
    let scale = fd.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    Ok(analytic.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale)
}

fn grad_of(v: LossValue) -> Vec<f64> {
    v.gradient.expect("gradient requested")
}

fn gradients(rng: &mut ChaCha8Rng, fault: Option<&Fault>) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("gradients", 1e-5);
    for &op in GRADIENT_OPS {
        for _ in 0..100 {
            let n = rng.random_range(2..=16);
            let x = normal_vec(rng, n, 1.5);
            let (mut g, dev): (Vec<f64>, Box<dyn Fn(&[f64], &[f64]) -> Result<f64>>) = match op {
                "sm" | "rg2" | "rgx" => {
                    let pos = random_positives(rng, n);
                    let eval = move |o: &[f64], grad: bool| -> Result<LossValue> {
                        let sv = ScoreVector::new(o, &pos)?;
                        match op {
                            "sm" => sm_context_loss(sv, grad),
                            "rg2" => rg2_context_loss(sv, grad),
                            _ => rgx_context_loss(sv, grad),
                        }
                    };
                    let g = grad_of(eval(&x, true)?);
                    (g, Box::new(move |x: &[f64], g: &[f64]| fd_deviation(x, g, |o| Ok(eval(o, false)?.value))))
                }
                "ssm" => {
                    let big_n = 50;
                    let negatives: Vec<u32> = (1..n).map(|_| rng.random_range(1..big_n as u32)).collect();
                    let raw: Vec<f64> = (0..big_n).map(|_| rng.random_range(0.1..1.0)).collect();
                    let total: f64 = raw.iter().sum();
                    let q = raw.iter().map(|v| v / total).collect();
                    let batch = SampledBatch { positive: 0, negatives, proposal: Proposal::Probabilities(q), n_objects: big_n };
                    let g = grad_of(ssm_loss(&batch, &x, true)?);
                    (g, Box::new(move |x: &[f64], g: &[f64]| fd_deviation(x, g, |o| Ok(ssm_loss(&batch, o, false)?.value))))
                }
                "bpr" => {
                    let g = grad_of(bpr_loss(x[0], x[1], true)?);
                    (g, Box::new(|x: &[f64], g: &[f64]| fd_deviation(&x[..2], g, |o| Ok(bpr_loss(o[0], o[1], false)?.value))))
                }
                "bce" => {
                    let label = rng.random_bool(0.5);
                    let g = grad_of(bce_loss(x[0], label, true)?);
                    (g, Box::new(move |x: &[f64], g: &[f64]| fd_deviation(&x[..1], g, |o| Ok(bce_loss(o[0], label, false)?.value))))
                }
                _ => {
                    let (m, cols) = (2, n.min(8));
                    let entries: Vec<(u32, u32)> = (0..m as u32).map(|c| (c, rng.random_range(0..cols as u32))).collect();
                    let matrix = build_matrix(&InteractionSet::new(m, cols, entries)?)?;
                    let alpha = rng.random_range(0.0..4.0);
                    let scores = normal_vec(rng, m * cols, 1.0);
                    let g = grad_of(wsl_loss(&matrix, &scores, alpha, true)?);
                    let check = move |_: &[f64], g: &[f64]| {
                        fd_deviation(&scores, g, |s| Ok(wsl_loss(&matrix, s, alpha, false)?.value))
                    };
                    (g, Box::new(check))
                }
            };
            if let Some(f) = fault.filter(|f| f.operation == op) {
                g[0] += f.size;
            }
            let d = dev(&x, &g)?;
            r.bound(d, || format!("gradient of {op} (N={n}) deviates from finite differences"));
        }
    }
    Ok(r)
}

fn random_instance(rng: &mut ChaCha8Rng) -> Result<InteractionMatrix> {
    let m = rng.random_range(2..=8);
    let n = rng.random_range(3..=8);
    let mut entries = Vec::new();
    for x in 0..m as u32 {
        let c = rng.random_range(1..n);
        let mut ids: Vec<u32> = (0..n as u32).collect();
        ids.shuffle(rng);
        entries.extend(ids[..c].iter().map(|&y| (x, y)));
    }
    build_matrix(&InteractionSet::new(m, n, entries)?)
}

fn objective(matrix: &InteractionMatrix, model: &FactorModel, t: &TargetMatrices, cfg: &AlsConfig) -> Result<f64> {
    Ok(rg_dataset_loss(matrix, model, t, cfg.lambda, cfg.kind, cfg.interaction_form)?.total(cfg.regularization))
}

fn als(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("als", 1e-6);
    for i in 0..30 {
        let matrix = random_instance(rng)?;
        let variant = [TargetVariant::Full, TargetVariant::SampledDerived { negatives: 2 }, TargetVariant::Wrmf { alpha: 2.0 }][i % 3];
        let t = build_targets(&matrix, variant)?;
        let cfg = AlsConfig {
            factors: rng.random_range(1..=3),
            lambda: rng.random_range(0.05..1.0),
            kind: if i % 2 == 0 { LossKind::Rgx } else { LossKind::Rg2 },
            interaction_form: InteractionForm::RankOne,
            regularization: RegConvention::WeightScaled,
            seed: i as u64,
            ..Default::default()
        };
        let (m, n, k) = (matrix.n_rows(), matrix.n_cols(), cfg.factors);
        let mut model = FactorModel::from_parts(m, n, k, normal_vec(rng, m * k, 0.5), normal_vec(rng, n * k, 0.5))?;
        let mut prev = objective(&matrix, &model, &t, &cfg)?;
        for _ in 0..3 {
            for side in [0, 1] {
                if side == 0 {
                    update_context_rows(&mut model, &matrix, &t, &cfg)?;
                } else {
                    update_object_rows(&mut model, &matrix, &t, &cfg)?;
                }
                let cur = objective(&matrix, &model, &t, &cfg)?;
                r.require(cur <= prev + 1e-10 * prev.abs().max(1.0), || {
                    format!("instance {i}: objective rose from {prev} to {cur}")
                });
                prev = cur;
                // gradient of the objective in the block just solved
                let block = if side == 0 { model.p().to_vec() } else { model.q().to_vec() };
                let zero = vec![0.0; block.len()];
                let dev = fd_deviation(&block, &zero, |b| {
                    let (p, q) = if side == 0 { (b.to_vec(), model.q().to_vec()) } else { (model.p().to_vec(), b.to_vec()) };
                    objective(&matrix, &FactorModel::from_parts(m, n, k, p, q)?, &t, &cfg)
                })?;
                r.bound(dev, || format!("instance {i}: gradient after {} update", if side == 0 { "context" } else { "object" }));
            }
        }
    }
    Ok(r)
}

fn squared(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("squared", 1e-10);
    for _ in 0..50 {
        let n = rng.random_range(2..=16);
        let pos = random_positives(rng, n);
        let mut d2 = Vec::new();
        let mut dx = Vec::new();
        for _ in 0..10 {
            let o = normal_vec(rng, n, 1.0);
            let sv = ScoreVector::new(&o, &pos)?;
            d2.push(rg2_context_loss(sv, false)?.value - rg2_squared_form(sv));
            dx.push(rgx_context_loss(sv, false)?.value - rgx_squared_form(sv));
        }
        for (name, d) in [("rg2", d2), ("rgx", dx)] {
            let spread = d.iter().fold(f64::MIN, |a, &b| a.max(b)) - d.iter().fold(f64::MAX, |a, &b| a.min(b));
            r.bound(spread, || format!("{name} (N={n}): canonical minus squared form varies"));
        }
    }
    Ok(r)
}

const LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn consistency(seed: u64) -> Result<SuiteReport> {
    // statistic: regret minus its bound (must stay <= 0)
    let mut r = SuiteReport::new("consistency", 1e-12);
    r.worst = f64::NEG_INFINITY;
    for n in 1..=4usize {
        let grid = bayes_grid_all(n);
        for f_b in &grid {
            for f in &grid {
                let c = dcg_regret_bound_check(f, f_b, 2.0)?;
                r.bound(c.lhs - c.rhs, || format!("DCG regret bound fails for f={f:?}, f_B={f_b:?}"));
            }
        }
    }
    for m in 1..4 {
        let family = bayes_grid_family(4, m, &LEVELS);
        let t = rg2_regret_transfer_check(&family, m, 10_000, seed ^ m as u64, 2.0)?;
        r.require(t.c_fit.is_finite() && t.c_fit > 0.0, || format!("m={m}: fitted constant {}", t.c_fit));
        r.require(t.violations == 0, || format!("m={m}: {} held-out violations of C={}", t.violations, t.c_fit));
        r.require(t.c_fit <= t.c_theory + 1e-12, || format!("m={m}: C_fit {} above C_theory {}", t.c_fit, t.c_theory));
    }
    Ok(r)
}

fn bayes_grid_all(n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out.into_iter().flat_map(|v| LEVELS.iter().map(move |&l| [v.clone(), vec![l]].concat())).collect();
    }
    out
}

fn psd(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("psd", 1e-12);
    for n in 2..=64usize {
        let inv = 1.0 / n as f64;
        let uniform = psd_condition(&vec![inv; n])?;
        let mut one_hot = vec![0.0; n];
        one_hot[rng.random_range(0..n)] = 1.0;
        let hot = psd_condition(&one_hot)?;
        for (name, c) in [("uniform", uniform), ("one-hot", hot)] {
            r.bound((c.value - inv).abs(), || format!("{name} N={n}: value {} is not 1/N", c.value));
        }
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0f64).powi(3)).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let c = psd_condition(&p)?;
        let d = hessian_dominance_check(&p)?;
        r.bound((c.value - d.rayleigh_along_p).abs(), || format!("N={n}: condition disagrees with the Rayleigh quotient"));
    }
    let mut p = vec![0.5 / 9.0; 10];
    p[0] = 0.5;
    let c = psd_condition(&p)?;
    r.require(c.value < 0.0 && !c.holds, || format!("counterexample evaluates to {}", c.value));
    Ok(r)
}

fn metrics(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("metrics", 1e-12);
    let n = 8;
    for k in [1usize, 3, 10] {
        let cfg = MetricConfig::with_cutoff(k);
        for pattern in 1u32..(1 << n) {
            let relevant: Vec<u32> = (0..n as u32).filter(|i| pattern >> i & 1 == 1).collect();
            for _ in 0..20 {
                let mut ranking: Vec<u32> = (0..n as u32).collect();
                ranking.shuffle(rng);
                let (nd, mr, ap) = direct_metrics(&ranking, pattern, k);
                let got = (
                    ndcg_at_k(&ranking, &relevant, &cfg).unwrap(),
                    mrr_at_k(&ranking, &relevant, &cfg).unwrap(),
                    map_at_k(&ranking, &relevant, &cfg).unwrap(),
                );
                let dev = (got.0 - nd).abs().max((got.1 - mr).abs()).max((got.2 - ap).abs());
                r.bound(dev, || format!("K={k}, pattern {pattern:08b}, ranking {ranking:?}"));
            }
        }
    }
    Ok(r)
}

fn direct_metrics(ranking: &[u32], pattern: u32, k: usize) -> (f64, f64, f64) {
    let rel = |y: u32| pattern >> y & 1 == 1;
    let n_rel = pattern.count_ones() as usize;
    let (mut dcg, mut idcg, mut rr, mut ap, mut hits) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..k.min(ranking.len()) {
        let disc = 1.0 / ((i + 2) as f64).log2();
        if i < n_rel {
            idcg += disc;
        }
        if rel(ranking[i]) {
            dcg += disc;
            hits += 1.0;
            ap += hits / (i + 1) as f64;
            if rr == 0.0 {
                rr = 1.0 / (i + 1) as f64;
            }
        }
    }
    (dcg / idcg, rr, ap / n_rel.min(k) as f64)
}

fn bregman(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("bregman", 1e-8);
    for _ in 0..50 {
        let n = rng.random_range(2..=12);
        let pos = random_positives(rng, n);
        let samples: Vec<Vec<f64>> = (0..8).map(|_| normal_vec(rng, n, 2.0)).collect();
        let rep = bregman_equivalence_check(&samples, &pos)?;
        r.bound(rep.max_deviation(), || format!("N={n}: Bregman form deviates ({rep:?})"));
    }
    Ok(r)
}

fn bound() -> Result<SuiteReport> {
    let mut r = SuiteReport::new("bound", 1e-10);
    let eps = epsilon_log_space(2.0, 1.0, 2.0, 1000, 0.5)?;
    let hand = 16.0 * (3.0 * std::f64::consts::E.powi(3) * 4.0 / 500.0f64).powf(0.25);
    r.bound(((eps - hand) / hand).abs(), || format!("hand instance gives {eps}, expected {hand}"));
    for (d, b, l, size, delta) in [(5.0, 2.0, 3.0, 10_000, 0.05), (40.0, 1.5, 10.0, 1_000_000, 0.01)] {
        let log = epsilon_log_space(d, b, l, size, delta)?;
        match epsilon_direct(d, b, l, size, delta)? {
            Some(direct) => r.bound(((log - direct) / direct).abs(), || format!("d={d}: log-space and direct disagree")),
            None => r.require(false, || format!("d={d}: direct evaluation overflowed")),
        }
    }
    let huge = epsilon_log_space(1e6, 2.0, 100.0, 1_000_000, 0.05)?;
    r.require(huge.is_finite(), || "log-space evaluation overflowed at d = 1e6".into());
    r.require(epsilon_direct(1e6, 2.0, 100.0, 1_000_000, 0.05)?.is_none(), || {
        "direct evaluation should overflow at d = 1e6".into()
    });
    Ok(r)
}
