//! Top-K ranking metrics with binary relevance.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{InteractionMatrix, InteractionSet};
use crate::error::{Error, Result};
use crate::model::FactorModel;

/// How MAP@K is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum MapNormalization {
    /// 1 / min(|relevant|, K); a perfect top-K scores 1.
    #[default]
    Truncated,
    /// 1 / |relevant| regardless of the cutoff.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricConfig {
    pub cutoff: usize,
    pub log_base: f64,
    pub map_normalization: MapNormalization,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig { cutoff: 10, log_base: 2.0, map_normalization: MapNormalization::Truncated }
    }
}

impl MetricConfig {
    pub fn with_cutoff(cutoff: usize) -> Self {
        MetricConfig { cutoff, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.cutoff == 0 {
            return Err(Error::precondition("cutoff K must be >= 1"));
        }
        if !(self.log_base > 1.0) {
            return Err(Error::precondition("log base must be > 1"));
        }
        Ok(())
    }

    /// 1 / log_b(1 + rank) for a 1-based rank.
    #[inline]
    pub fn discount(&self, rank: usize) -> f64 {
        self.log_base.ln() / ((1 + rank) as f64).ln()
    }
}

#[inline]
fn by_score(scores: &[f64], a: u32, b: u32) -> Ordering {
    scores[b as usize].total_cmp(&scores[a as usize]).then(a.cmp(&b))
}

fn candidates(n: usize, exclude: &[u32]) -> Result<Vec<u32>> {
    let mut skip = vec![false; n];
    for &y in exclude {
        match skip.get_mut(y as usize) {
            Some(s) => *s = true,
            None => return Err(Error::precondition(format!("excluded id {y} outside [0, {n})"))),
        }
    }
    let ids: Vec<u32> = (0..n as u32).filter(|&y| !skip[y as usize]).collect();
    if ids.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    Ok(ids)
}

/// Non-excluded ids by descending score, ties by ascending id.
pub fn rank_items(scores: &[f64], exclude: &[u32]) -> Result<Vec<u32>> {
    let mut ids = candidates(scores.len(), exclude)?;
    ids.sort_unstable_by(|&a, &b| by_score(scores, a, b));
    Ok(ids)
}

/// The first `k` entries of [`rank_items`] without sorting the whole row.
pub fn top_k(scores: &[f64], exclude: &[u32], k: usize) -> Result<Vec<u32>> {
    let mut ids = candidates(scores.len(), exclude)?;
    if k < ids.len() {
        ids.select_nth_unstable_by(k, |&a, &b| by_score(scores, a, b));
        ids.truncate(k);
    }
    ids.sort_unstable_by(|&a, &b| by_score(scores, a, b));
    Ok(ids)
}

fn is_relevant(relevant: &[u32], y: u32) -> bool {
    relevant.contains(&y)
}

/// Σ over ranks i ≤ K holding a relevant item of 1/log_b(1+i).
/// `None` when there is nothing relevant.
pub fn dcg_at_k(ranking: &[u32], relevant: &[u32], cfg: &MetricConfig) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    Some(
        ranking
            .iter()
            .take(cfg.cutoff)
            .enumerate()
            .filter(|(_, &y)| is_relevant(relevant, y))
            .map(|(i, _)| cfg.discount(i + 1))
            .sum(),
    )
}

/// DCG of the ideal ordering truncated at K.
pub fn ideal_dcg(n_relevant: usize, cfg: &MetricConfig) -> f64 {
    (1..=n_relevant.min(cfg.cutoff)).map(|i| cfg.discount(i)).sum()
}

pub fn ndcg_at_k(ranking: &[u32], relevant: &[u32], cfg: &MetricConfig) -> Option<f64> {
    dcg_at_k(ranking, relevant, cfg).map(|d| d / ideal_dcg(relevant.len(), cfg))
}

/// Reciprocal rank of the first relevant item within the cutoff.
pub fn mrr_at_k(ranking: &[u32], relevant: &[u32], cfg: &MetricConfig) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    Some(
        ranking
            .iter()
            .take(cfg.cutoff)
            .position(|&y| is_relevant(relevant, y))
            .map_or(0.0, |i| 1.0 / (i + 1) as f64),
    )
}

pub fn map_at_k(ranking: &[u32], relevant: &[u32], cfg: &MetricConfig) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &y) in ranking.iter().take(cfg.cutoff).enumerate() {
        if is_relevant(relevant, y) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    let norm = match cfg.map_normalization {
        MapNormalization::Truncated => relevant.len().min(cfg.cutoff),
        MapNormalization::Strict => relevant.len(),
    };
    Some(sum / norm as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContextMetrics {
    pub context: u32,
    pub ndcg: f64,
    pub mrr: f64,
    pub map: f64,
    pub dcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingResult {
    pub cutoff: usize,
    pub evaluated_contexts: usize,
    /// Contexts without held-out positives; not part of the means.
    pub skipped_contexts: usize,
    pub ndcg: f64,
    pub mrr: f64,
    pub map: f64,
    pub dcg: f64,
    #[serde(skip)]
    pub per_context: Vec<ContextMetrics>,
}

impl RankingResult {
    /// True when no context had a held-out positive; the means are then 0.
    pub fn is_empty(&self) -> bool {
        self.evaluated_contexts == 0
    }

    /// One-line JSON record with one key per metric and an `empty` flag.
    pub fn to_record(&self) -> String {
        let mut v = serde_json::to_value(self).expect("plain numeric record");
        v["empty"] = self.is_empty().into();
        v.to_string()
    }
}

/// Metrics for one context from its score row.
pub fn context_metrics(
    context: u32,
    scores: &[f64],
    relevant: &[u32],
    exclude: &[u32],
    cfg: &MetricConfig,
) -> Result<Option<ContextMetrics>> {
    if relevant.is_empty() {
        return Ok(None);
    }
    let ranking = top_k(scores, exclude, cfg.cutoff)?;
    let dcg = dcg_at_k(&ranking, relevant, cfg).unwrap();
    Ok(Some(ContextMetrics {
        context,
        ndcg: dcg / ideal_dcg(relevant.len(), cfg),
        mrr: mrr_at_k(&ranking, relevant, cfg).unwrap(),
        map: map_at_k(&ranking, relevant, cfg).unwrap(),
        dcg,
    }))
}

/// Scores every context with held-out positives against all objects except
/// its training positives, then averages over those contexts.
pub fn evaluate(
    model: &FactorModel,
    heldout: &InteractionSet,
    train: &InteractionMatrix,
    cfg: &MetricConfig,
) -> Result<RankingResult> {
    cfg.validate()?;
    let (m, n) = (model.n_contexts(), model.n_objects());
    if heldout.n_contexts() != m || heldout.n_objects() != n || train.n_rows() != m || train.n_cols() != n {
        return Err(Error::dims(format!(
            "model {m}x{n}, held-out {}x{}, train {}x{}",
            heldout.n_contexts(),
            heldout.n_objects(),
            train.n_rows(),
            train.n_cols()
        )));
    }
    let mut relevant: Vec<Vec<u32>> = vec![Vec::new(); m];
    for &(x, y) in heldout.entries() {
        relevant[x as usize].push(y);
    }
    let rows: Vec<Option<ContextMetrics>> = (0..m)
        .into_par_iter()
        .map(|x| {
            if relevant[x].is_empty() {
                return Ok(None);
            }
            context_metrics(x as u32, &model.scores(x), &relevant[x], train.row(x), cfg)
        })
        .collect::<Result<_>>()?;
    let per_context: Vec<ContextMetrics> = rows.into_iter().flatten().collect();
    let count = per_context.len();
    let mean = |f: fn(&ContextMetrics) -> f64| {
        if count == 0 {
            0.0
        } else {
            per_context.iter().map(f).sum::<f64>() / count as f64
        }
    };
    Ok(RankingResult {
        cutoff: cfg.cutoff,
        evaluated_contexts: count,
        skipped_contexts: m - count,
        ndcg: mean(|c| c.ndcg),
        mrr: mean(|c| c.mrr),
        map: mean(|c| c.map),
        dcg: mean(|c| c.dcg),
        per_context,
    })
}
