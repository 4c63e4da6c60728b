//! Low-rank synthetic implicit feedback.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::InteractionSet;
use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub contexts: usize,
    pub objects: usize,
    pub rank: usize,
    /// Positives kept per context (the top-scoring objects).
    pub positives: usize,
    /// Standard deviation of gaussian noise added to the true scores.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { contexts: 200, objects: 100, rank: 8, positives: 20, noise: 0.0, seed: 0 }
    }
}

/// Draws P*, Q* with standard normal entries and keeps, for every context,
/// the `positives` objects with the largest (optionally noisy) score P*_x·Q*_y.
pub fn low_rank_interactions(cfg: &SyntheticConfig) -> Result<InteractionSet> {
    if cfg.rank == 0 || cfg.positives == 0 || cfg.positives > cfg.objects || cfg.contexts == 0 {
        return Err(Error::config("need rank >= 1 and 1 <= positives <= objects"));
    }
    if !(cfg.noise >= 0.0) {
        return Err(Error::config("noise must be >= 0"));
    }
    // Separate stream so a model initialized with the same seed is not
    // a scaled copy of the generating factors.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0x7379_6e74);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let k = cfg.rank;
    let p: Vec<f64> = (0..cfg.contexts * k).map(|_| unit.sample(&mut rng)).collect();
    let q: Vec<f64> = (0..cfg.objects * k).map(|_| unit.sample(&mut rng)).collect();
    let mut entries = Vec::with_capacity(cfg.contexts * cfg.positives);
    let mut ids: Vec<u32> = Vec::with_capacity(cfg.objects);
    let mut scores = vec![0.0; cfg.objects];
    for x in 0..cfg.contexts {
        let px = &p[x * k..(x + 1) * k];
        for (y, s) in scores.iter_mut().enumerate() {
            *s = dot(px, &q[y * k..(y + 1) * k]);
            if cfg.noise > 0.0 {
                *s += cfg.noise * unit.sample(&mut rng);
            }
        }
        ids.clear();
        ids.extend(0..cfg.objects as u32);
        ids.sort_unstable_by(|&a, &b| scores[b as usize].total_cmp(&scores[a as usize]).then(a.cmp(&b)));
        entries.extend(ids[..cfg.positives].iter().map(|&y| (x as u32, y)));
    }
    InteractionSet::new(cfg.contexts, cfg.objects, entries)
}
