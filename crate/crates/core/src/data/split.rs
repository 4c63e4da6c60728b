use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::InteractionSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.8, valid: 0.1, test: 0.1 }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.valid, self.test];
        if all.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::precondition("split ratios must be positive"));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::precondition("split ratios must sum to 1"));
        }
        Ok(())
    }

    /// (train, valid, test) sizes for a context with `count` interactions.
    /// Valid and test get `floor(ratio * count)` with a minimum of one once
    /// `count >= 3`; train keeps the remainder and never drops below one.
    pub fn sizes(&self, count: usize) -> (usize, usize, usize) {
        if count < 3 {
            return (count, 0, 0);
        }
        let mut valid = ((self.valid * count as f64).floor() as usize).max(1);
        let mut test = ((self.test * count as f64).floor() as usize).max(1);
        while valid + test >= count {
            if valid >= test && valid > 1 {
                valid -= 1;
            } else {
                test -= 1;
            }
        }
        (count - valid - test, valid, test)
    }
}

/// What to do with contexts that have fewer than three interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmallContextPolicy {
    #[default]
    TrainOnly,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitBundle {
    pub train: InteractionSet,
    pub valid: InteractionSet,
    pub test: InteractionSet,
    pub seed: u64,
    /// Contexts that went entirely to train because they had < 3 interactions.
    pub train_only_contexts: usize,
}

/// Shuffles each context's interactions with a seeded generator and deals
/// them into train/valid/test according to [`SplitRatios::sizes`].
pub fn split_per_user(
    set: &InteractionSet,
    ratios: SplitRatios,
    seed: u64,
    policy: SmallContextPolicy,
) -> Result<SplitBundle> {
    ratios.validate()?;
    let (m, n) = (set.n_contexts(), set.n_objects());
    let mut per_context: Vec<Vec<u32>> = vec![Vec::new(); m];
    for &(x, y) in set.entries() {
        per_context[x as usize].push(y);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new());
    let mut train_only_contexts = 0;
    for (x, objects) in per_context.iter_mut().enumerate() {
        let count = objects.len();
        if count == 0 {
            continue;
        }
        if count < 3 {
            if policy == SmallContextPolicy::Error {
                return Err(Error::SmallContext { context: x as u32, count });
            }
            train_only_contexts += 1;
        }
        objects.sort_unstable();
        objects.shuffle(&mut rng);
        let (_, n_valid, n_test) = ratios.sizes(count);
        let x = x as u32;
        let (head, rest) = objects.split_at(n_valid);
        let (mid, tail) = rest.split_at(n_test);
        valid.extend(head.iter().map(|&y| (x, y)));
        test.extend(mid.iter().map(|&y| (x, y)));
        train.extend(tail.iter().map(|&y| (x, y)));
    }

    Ok(SplitBundle {
        train: InteractionSet::new(m, n, train)?,
        valid: InteractionSet::new(m, n, valid)?,
        test: InteractionSet::new(m, n, test)?,
        seed,
        train_only_contexts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_follow_floor_with_minimum_one() {
        let r = SplitRatios::default();
        assert_eq!(r.sizes(10), (8, 1, 1));
        assert_eq!(r.sizes(5), (3, 1, 1));
        assert_eq!(r.sizes(3), (1, 1, 1));
        assert_eq!(r.sizes(2), (2, 0, 0));
        assert_eq!(r.sizes(25), (21, 2, 2));
    }

    #[test]
    fn lopsided_ratios_keep_one_training_item() {
        let r = SplitRatios { train: 0.1, valid: 0.7, test: 0.2 };
        let (t, v, s) = r.sizes(3);
        assert_eq!(t + v + s, 3);
        assert!(t >= 1 && v >= 1 && s >= 1);
    }

    #[test]
    fn small_contexts_follow_policy() {
        let s = InteractionSet::new(2, 4, vec![(0, 0), (0, 1), (1, 0), (1, 1), (1, 2)]).unwrap();
        let b = split_per_user(&s, SplitRatios::default(), 1, SmallContextPolicy::TrainOnly).unwrap();
        assert_eq!(b.train_only_contexts, 1);
        assert_eq!(b.train.len(), 3);
        let e = split_per_user(&s, SplitRatios::default(), 1, SmallContextPolicy::Error);
        assert!(matches!(e, Err(Error::SmallContext { context: 0, count: 2 })));
    }

    #[test]
    fn bad_ratios_rejected() {
        let s = InteractionSet::new(1, 1, vec![(0, 0)]).unwrap();
        let r = SplitRatios { train: 0.5, valid: 0.5, test: 0.5 };
        assert!(split_per_user(&s, r, 0, SmallContextPolicy::TrainOnly).is_err());
    }
}
