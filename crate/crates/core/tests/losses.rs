mod common;

use proptest::collection::vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{fd_gradient, random_matrix, rel_dev};
use rgrank::loss::{
    bce_loss, bpr_loss, rg2_absorbed, rg2_context_loss, rg2_squared_form, rgx_context_loss, sm_context_loss, sm_loss,
    squared_targets, ssm_loss, wsl_loss, Proposal, SampledBatch, ScoreVector,
};
use rgrank::Error;

/// Scores with a sorted, non-empty positive set drawn from them.
fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<u32>)> {
    (2usize..16).prop_flat_map(|n| {
        (vec(-4.0f64..4.0, n), vec(any::<bool>(), n)).prop_map(|(o, mask)| {
            let mut pos: Vec<u32> = (0..o.len() as u32).filter(|&i| mask[i as usize]).collect();
            if pos.is_empty() {
                pos.push(0);
            }
            (o, pos)
        })
    })
}

fn shift(o: &[f64], c: f64) -> Vec<f64> {
    o.iter().map(|v| v + c).collect()
}

proptest! {
    #[test]
    fn softmax_is_shift_invariant((o, pos) in scored(), c in -50.0f64..50.0) {
        let a = sm_context_loss(ScoreVector::new(&o, &pos).unwrap(), true).unwrap();
        let shifted = shift(&o, c);
        let b = sm_context_loss(ScoreVector::new(&shifted, &pos).unwrap(), true).unwrap();
        prop_assert!((a.value - b.value).abs() < 1e-9);
        prop_assert!(rel_dev(&a.gradient.unwrap(), &b.gradient.unwrap()) < 1e-12);
    }

    #[test]
    fn rgx_is_shift_invariant_and_rg2_is_not_in_general((o, pos) in scored(), c in -5.0f64..5.0) {
        let shifted = shift(&o, c);
        let x0 = rgx_context_loss(ScoreVector::new(&o, &pos).unwrap(), false).unwrap().value;
        let x1 = rgx_context_loss(ScoreVector::new(&shifted, &pos).unwrap(), false).unwrap().value;
        prop_assert!((x0 - x1).abs() < 1e-9 * x0.abs().max(1.0));
    }

    #[test]
    fn context_softmax_sums_single_positive_losses((o, pos) in scored()) {
        let total = sm_context_loss(ScoreVector::new(&o, &pos).unwrap(), false).unwrap().value;
        let sum: f64 = pos.iter().map(|&y| sm_loss(&o, y as usize, false).unwrap().value).sum();
        prop_assert!((total - sum).abs() < 1e-10 * sum.max(1.0));
    }

    #[test]
    fn squared_targets_zero_the_rg2_gradient((o, pos) in scored()) {
        let sv = ScoreVector::new(&o, &pos).unwrap();
        let s = squared_targets(sv);
        let at = rg2_context_loss(ScoreVector::new(&s, &pos).unwrap(), true).unwrap();
        prop_assert!(at.gradient.unwrap().iter().all(|g| g.abs() < 1e-12));
        prop_assert!(rg2_squared_form(ScoreVector::new(&s, &pos).unwrap()) < 1e-24);
    }

    #[test]
    fn absorbed_scale_is_two_n_times_squared_form((o, pos) in scored()) {
        let sv = ScoreVector::new(&o, &pos).unwrap();
        let n = o.len() as f64;
        prop_assert!((rg2_absorbed(sv) - 2.0 * n * rg2_squared_form(sv)).abs() < 1e-9 * rg2_absorbed(sv).max(1.0));
    }

    #[test]
    fn pairwise_losses_are_softplus(p in -30.0f64..30.0, q in -30.0f64..30.0) {
        let softplus = |z: f64| (1.0 + z.exp()).ln();
        prop_assert!((bpr_loss(p, q, false).unwrap().value - softplus(q - p)).abs() < 1e-12);
        prop_assert!((bce_loss(p, true, false).unwrap().value - softplus(-p)).abs() < 1e-12);
        prop_assert!((bce_loss(p, false, false).unwrap().value - softplus(p)).abs() < 1e-12);
    }

    #[test]
    fn sampled_softmax_gradient_matches_differences(vals in vec(-3.0f64..3.0, 2..10), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 12;
        let negatives: Vec<u32> = (1..vals.len()).map(|_| rng.random_range(0..n as u32)).collect();
        let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let z: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= z);
        let batch = SampledBatch { positive: 0, negatives, proposal: Proposal::Probabilities(q), n_objects: n };
        let g = ssm_loss(&batch, &vals, true).unwrap().gradient.unwrap();
        let fd = fd_gradient(&vals, 1e-6, |v| ssm_loss(&batch, v, false).unwrap().value);
        prop_assert!(rel_dev(&g, &fd) < 1e-6);
        // the gradient of a log-sum-exp minus one coordinate sums to zero
        prop_assert!(g.iter().sum::<f64>().abs() < 1e-12);
    }
}

#[test]
fn extreme_scores_stay_finite() {
    let o = [800.0, -800.0, 0.0];
    let v = sm_context_loss(ScoreVector::new(&o, &[1]).unwrap(), true).unwrap();
    assert!((v.value - 1600.0).abs() < 1e-9);
    assert!(v.gradient.unwrap().iter().all(|g| g.is_finite()));
    assert!(sm_loss(&o, 0, false).unwrap().value.abs() < 1e-300);
    assert!((bpr_loss(-800.0, 800.0, false).unwrap().value - 1600.0).abs() < 1e-9);
    assert!(bce_loss(1e4, true, false).unwrap().value >= 0.0);
}

#[test]
fn non_finite_scores_are_rejected() {
    let o = [0.0, f64::NAN, 1.0];
    assert!(matches!(
        sm_context_loss(ScoreVector::new(&o, &[0]).unwrap(), false),
        Err(Error::InvalidScore { index: 1 })
    ));
    assert!(matches!(rg2_context_loss(ScoreVector::new(&o, &[0]).unwrap(), false), Err(Error::InvalidScore { .. })));
}

#[test]
fn score_vector_preconditions() {
    let o = [0.0; 4];
    assert!(ScoreVector::new(&o, &[]).is_err());
    assert!(ScoreVector::new(&o, &[2, 1]).is_err());
    assert!(ScoreVector::new(&o, &[1, 1]).is_err());
    assert!(ScoreVector::new(&o, &[4]).is_err());
    assert!(ScoreVector::new(&o, &[0, 3]).is_ok());
}

#[test]
fn sampled_softmax_rejects_bad_proposals() {
    let zero = SampledBatch {
        positive: 0,
        negatives: vec![1],
        proposal: Proposal::Probabilities(vec![0.5, 0.0, 0.5]),
        n_objects: 3,
    };
    assert!(matches!(ssm_loss(&zero, &[0.0, 0.0], false), Err(Error::InvalidProposal { object: 1, .. })));
    let unnormalized = SampledBatch { proposal: Proposal::Probabilities(vec![0.5, 0.5, 0.5]), ..zero.clone() };
    assert!(ssm_loss(&unnormalized, &[0.0, 0.0], false).is_err());
    let empty = SampledBatch::uniform(0, vec![], 3);
    assert!(ssm_loss(&empty, &[0.0], false).is_err());
    let short = SampledBatch::uniform(0, vec![1, 2], 3);
    assert!(matches!(ssm_loss(&short, &[0.0, 0.0], false), Err(Error::DimensionMismatch(_))));
}

#[test]
fn logit_correction_makes_the_negative_sum_unbiased() {
    // with v = ssm value, e^{o_y}(e^v − 1) is the corrected negative mass;
    // drawing n = N negatives from q, its mean is Σ_j e^{o_j}
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 6;
    let o: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    let q = vec![0.4, 0.05, 0.1, 0.2, 0.15, 0.1];
    let cdf: Vec<f64> = q.iter().scan(0.0, |acc, v| {
        *acc += v;
        Some(*acc)
    }).collect();
    let draws = 40_000;
    let mut mass = 0.0;
    for _ in 0..draws {
        let negatives: Vec<u32> = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                cdf.iter().position(|&c| u < c).unwrap_or(n - 1) as u32
            })
            .collect();
        let mut vals = vec![o[0]];
        vals.extend(negatives.iter().map(|&j| o[j as usize]));
        let batch = SampledBatch { positive: 0, negatives, proposal: Proposal::Probabilities(q.clone()), n_objects: n };
        let v = ssm_loss(&batch, &vals, false).unwrap().value;
        mass += o[0].exp() * v.exp_m1();
    }
    let expected: f64 = o.iter().map(|v| v.exp()).sum();
    let got = mass / draws as f64;
    assert!((got - expected).abs() < 0.02 * expected, "{got} vs {expected}");
}

#[test]
fn weighted_squared_loss_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let (m, n) = (rng.random_range(1..6), rng.random_range(2..7));
        let matrix = random_matrix(&mut rng, m, n);
        let scores: Vec<f64> = (0..m * n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let alpha = rng.random_range(0.0..10.0);
        let mut expect = 0.0;
        for x in 0..m {
            for y in 0..n {
                let pos = matrix.contains(x, y as u32);
                let (w, r) = if pos { (alpha + 1.0, 1.0) } else { (1.0, 0.0) };
                expect += w * (scores[x * n + y] - r) * (scores[x * n + y] - r);
            }
        }
        let got = wsl_loss(&matrix, &scores, alpha, false).unwrap().value;
        assert!((got - expect).abs() < 1e-10 * expect.max(1.0));
    }
    let matrix = random_matrix(&mut rng, 2, 3);
    assert!(wsl_loss(&matrix, &[0.0; 5], 1.0, false).is_err());
    assert!(wsl_loss(&matrix, &[0.0; 6], -1.0, false).is_err());
}
