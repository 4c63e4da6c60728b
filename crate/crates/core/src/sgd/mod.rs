//! Mini-batch stochastic training of the factor model under SM, SSM, BPR
//! and BCE. Only rows touched by a batch are read, decayed and updated.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::InteractionMatrix;
use crate::epoch::EpochLog;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};
use crate::loss::{bce_loss, bpr_loss, log_sum_exp, softmax_probs, ssm_loss, SampledBatch};
use crate::model::{FactorModel, Init};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgdLoss {
    Sm,
    Ssm,
    Bpr,
    Bce,
}

impl SgdLoss {
    pub fn is_sampled(self) -> bool {
        self != SgdLoss::Sm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateRule {
    Plain,
    /// Adam with decays 0.9 / 0.999 and ε = 1e-8, applied lazily to touched rows.
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    pub loss: SgdLoss,
    pub factors: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub n_negatives: usize,
    pub epochs: usize,
    pub seed: u64,
    pub update_rule: UpdateRule,
    pub init: Init,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            loss: SgdLoss::Sm,
            factors: 8,
            learning_rate: 0.01,
            weight_decay: 0.0,
            batch_size: 256,
            n_negatives: 10,
            epochs: 50,
            seed: 0,
            update_rule: UpdateRule::Adam,
            init: Init::Gaussian(0.1),
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factors == 0 {
            return Err(Error::config("factors must be >= 1"));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("learning rate must be a finite value >= 0"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::config("weight decay must be >= 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be >= 1"));
        }
        if self.loss.is_sampled() && self.n_negatives == 0 {
            return Err(Error::config("sampled losses need n_negatives >= 1"));
        }
        Ok(())
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// `n` object ids uniform over [0, n_objects), with replacement.
pub fn sample_negatives<R: Rng>(n_objects: usize, n: usize, rng: &mut R) -> Vec<u32> {
    (0..n).map(|_| rng.random_range(0..n_objects as u32)).collect()
}

/// Rows written by one batch, in first-touch order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchReport {
    /// Mean loss over the batch's positive pairs.
    pub loss: f64,
    pub touched_contexts: Vec<u32>,
    pub touched_objects: Vec<u32>,
}

/// Dense gradient buffer with a list of rows that hold nonzero data.
struct RowGrads {
    k: usize,
    data: Vec<f64>,
    mark: Vec<bool>,
    touched: Vec<u32>,
}

impl RowGrads {
    fn new(rows: usize, k: usize) -> Self {
        RowGrads { k, data: vec![0.0; rows * k], mark: vec![false; rows], touched: Vec::new() }
    }

    fn row(&mut self, r: usize) -> &mut [f64] {
        if !self.mark[r] {
            self.mark[r] = true;
            self.touched.push(r as u32);
        }
        &mut self.data[r * self.k..(r + 1) * self.k]
    }

    fn clear(&mut self) {
        for &r in &self.touched {
            let r = r as usize;
            self.mark[r] = false;
            self.data[r * self.k..(r + 1) * self.k].iter_mut().for_each(|v| *v = 0.0);
        }
        self.touched.clear();
    }
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    fn new(len: usize) -> Self {
        AdamState { m: vec![0.0; len], v: vec![0.0; len] }
    }
}

pub struct SgdTrainer<'a> {
    matrix: &'a InteractionMatrix,
    cfg: SgdConfig,
    model: FactorModel,
    rng: ChaCha8Rng,
    pairs: Vec<(u32, u32)>,
    grad_p: RowGrads,
    grad_q: RowGrads,
    adam: Option<(AdamState, AdamState)>,
    step: u64,
    epoch: usize,
    elapsed: f64,
}

impl<'a> SgdTrainer<'a> {
    pub fn new(matrix: &'a InteractionMatrix, cfg: SgdConfig) -> Result<Self> {
        cfg.validate()?;
        let model = FactorModel::init(matrix.n_rows(), matrix.n_cols(), cfg.factors, cfg.init, cfg.seed)?;
        Self::with_model(matrix, cfg, model)
    }

    pub fn with_model(matrix: &'a InteractionMatrix, cfg: SgdConfig, model: FactorModel) -> Result<Self> {
        cfg.validate()?;
        if model.n_contexts() != matrix.n_rows() || model.n_objects() != matrix.n_cols() || model.dim() != cfg.factors {
            return Err(Error::dims("model does not match the matrix and config"));
        }
        let k = cfg.factors;
        let pairs = (0..matrix.n_rows())
            .flat_map(|x| matrix.row(x).iter().map(move |&y| (x as u32, y)))
            .collect();
        let adam = (cfg.update_rule == UpdateRule::Adam)
            .then(|| (AdamState::new(model.p().len()), AdamState::new(model.q().len())));
        // The sampling stream is separate from the initialization stream.
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed_5eed_5eed);
        Ok(SgdTrainer {
            matrix,
            grad_p: RowGrads::new(matrix.n_rows(), k),
            grad_q: RowGrads::new(matrix.n_cols(), k),
            cfg,
            model,
            rng,
            pairs,
            adam,
            step: 0,
            epoch: 0,
            elapsed: 0.0,
        })
    }

    pub fn model(&self) -> &FactorModel {
        &self.model
    }

    pub fn into_model(self) -> FactorModel {
        self.model
    }

    pub fn config(&self) -> &SgdConfig {
        &self.cfg
    }

    /// Loss of one positive pair; adds its gradient into the row buffers.
    fn pair(&mut self, x: usize, y: u32, scale: f64) -> Result<f64> {
        let k = self.cfg.factors;
        let n = self.matrix.n_cols();
        let px = self.model.p_row(x).to_vec();
        match self.cfg.loss {
            SgdLoss::Sm => {
                let o = self.model.scores(x);
                super::loss::check_finite(&o)?;
                let value = log_sum_exp(&o) - o[y as usize];
                let mut g = softmax_probs(&o)?;
                g[y as usize] -= 1.0;
                let gp = self.grad_p.row(x);
                for (j, &gj) in g.iter().enumerate() {
                    axpy(scale * gj, &self.model.q()[j * k..(j + 1) * k], gp);
                }
                for (j, &gj) in g.iter().enumerate() {
                    axpy(scale * gj, &px, self.grad_q.row(j));
                }
                Ok(value)
            }
            SgdLoss::Ssm => {
                let negatives = sample_negatives(n, self.cfg.n_negatives, &mut self.rng);
                let mut ids = Vec::with_capacity(negatives.len() + 1);
                ids.push(y);
                ids.extend_from_slice(&negatives);
                let o: Vec<f64> = ids.iter().map(|&j| dot(&px, self.model.q_row(j as usize))).collect();
                let batch = SampledBatch::uniform(y, negatives, n);
                let lv = ssm_loss(&batch, &o, true)?;
                self.route(x, &px, &ids, &lv.gradient.unwrap(), scale);
                Ok(lv.value)
            }
            SgdLoss::Bpr => {
                let negatives = sample_negatives(n, self.cfg.n_negatives, &mut self.rng);
                let op = dot(&px, self.model.q_row(y as usize));
                let mut value = 0.0;
                for &j in &negatives {
                    let lv = bpr_loss(op, dot(&px, self.model.q_row(j as usize)), true)?;
                    value += lv.value;
                    self.route(x, &px, &[y, j], &lv.gradient.unwrap(), scale);
                }
                Ok(value)
            }
            SgdLoss::Bce => {
                let negatives = sample_negatives(n, self.cfg.n_negatives, &mut self.rng);
                let lv = bce_loss(dot(&px, self.model.q_row(y as usize)), true, true)?;
                let mut value = lv.value;
                self.route(x, &px, &[y], &lv.gradient.unwrap(), scale);
                for &j in &negatives {
                    let lv = bce_loss(dot(&px, self.model.q_row(j as usize)), false, true)?;
                    value += lv.value;
                    self.route(x, &px, &[j], &lv.gradient.unwrap(), scale);
                }
                Ok(value)
            }
        }
    }

    /// Chain rule from score gradients g (aligned with ids) to P_x and Q_ids.
    fn route(&mut self, x: usize, px: &[f64], ids: &[u32], g: &[f64], scale: f64) {
        let k = self.cfg.factors;
        let gp = self.grad_p.row(x);
        for (&j, &gj) in ids.iter().zip(g) {
            axpy(scale * gj, &self.model.q()[j as usize * k..(j as usize + 1) * k], gp);
        }
        for (&j, &gj) in ids.iter().zip(g) {
            axpy(scale * gj, px, self.grad_q.row(j as usize));
        }
    }

    /// One optimizer step on the mean loss of `batch` (positive pairs).
    pub fn train_batch(&mut self, batch: &[(u32, u32)]) -> Result<BatchReport> {
        if batch.is_empty() {
            return Ok(BatchReport::default());
        }
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for &(x, y) in batch {
            total += self.pair(x as usize, y, scale)?;
        }
        let loss = total * scale;
        if !loss.is_finite() {
            self.grad_p.clear();
            self.grad_q.clear();
            return Err(Error::Diverged { epoch: self.epoch + 1, loss });
        }
        self.step += 1;
        let (lr, wd, k) = (self.cfg.learning_rate, self.cfg.weight_decay, self.cfg.factors);
        let bias = self.adam.as_ref().map(|_| {
            let t = self.step as i32;
            (1.0 - BETA1.powi(t), 1.0 - BETA2.powi(t))
        });
        let (p, q) = self.model.factors_mut();
        let (sp, sq) = match self.adam.as_mut() {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        };
        apply(&self.grad_p, p, sp, k, lr, wd, bias);
        apply(&self.grad_q, q, sq, k, lr, wd, bias);
        let report = BatchReport {
            loss,
            touched_contexts: self.grad_p.touched.clone(),
            touched_objects: self.grad_q.touched.clone(),
        };
        self.grad_p.clear();
        self.grad_q.clear();
        Ok(report)
    }

    /// One shuffled pass over all positive pairs.
    pub fn run_epoch(&mut self) -> Result<EpochLog> {
        let start = Instant::now();
        let mut pairs = std::mem::take(&mut self.pairs);
        pairs.shuffle(&mut self.rng);
        let mut total = 0.0;
        let mut result = Ok(());
        for chunk in pairs.chunks(self.cfg.batch_size) {
            match self.train_batch(chunk) {
                Ok(r) => total += r.loss * chunk.len() as f64,
                Err(e) => {
                    result = Err(e);
                    break;
                }
            }
        }
        self.pairs = pairs;
        result?;
        self.elapsed += start.elapsed().as_secs_f64();
        self.epoch += 1;
        let mean = total / self.pairs.len().max(1) as f64;
        Ok(EpochLog::new(self.epoch, self.elapsed, mean))
    }
}

fn apply(
    grads: &RowGrads,
    params: &mut [f64],
    mut state: Option<&mut AdamState>,
    k: usize,
    lr: f64,
    wd: f64,
    bias: Option<(f64, f64)>,
) {
    for &r in &grads.touched {
        let range = r as usize * k..(r as usize + 1) * k;
        let g = &grads.data[range.clone()];
        let w = &mut params[range.clone()];
        match (state.as_deref_mut(), bias) {
            (Some(s), Some((b1, b2))) => {
                for ((i, wi), gi) in range.clone().zip(w.iter_mut()).zip(g) {
                    let gi = gi + wd * *wi;
                    s.m[i] = BETA1 * s.m[i] + (1.0 - BETA1) * gi;
                    s.v[i] = BETA2 * s.v[i] + (1.0 - BETA2) * gi * gi;
                    *wi -= lr * (s.m[i] / b1) / ((s.v[i] / b2).sqrt() + ADAM_EPS);
                }
            }
            _ => {
                for (wi, gi) in w.iter_mut().zip(g) {
                    *wi -= lr * (gi + wd * *wi);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SgdFit {
    pub model: FactorModel,
    pub logs: Vec<EpochLog>,
}

pub fn sgd_fit(matrix: &InteractionMatrix, cfg: &SgdConfig) -> Result<SgdFit> {
    let mut trainer = SgdTrainer::new(matrix, cfg.clone())?;
    let mut logs = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        logs.push(trainer.run_epoch()?);
    }
    Ok(SgdFit { model: trainer.into_model(), logs })
}

/// Mean full softmax loss over all positive pairs plus (wd/2)‖·‖² on every
/// row a full batch would touch: the objective a full-batch SM step descends.
pub fn sm_objective(matrix: &InteractionMatrix, model: &FactorModel, weight_decay: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut reg = 0.0;
    for x in 0..matrix.n_rows() {
        let row = matrix.row(x);
        if row.is_empty() {
            continue;
        }
        let o = model.scores(x);
        super::loss::check_finite(&o)?;
        let lse = log_sum_exp(&o);
        total += row.iter().map(|&y| lse - o[y as usize]).sum::<f64>();
        let p = model.p_row(x);
        reg += dot(p, p);
    }
    reg += dot(model.q(), model.q());
    Ok(total / matrix.nnz() as f64 + 0.5 * weight_decay * reg)
}
