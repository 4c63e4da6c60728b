use std::fs;

use proptest::prelude::*;

use rgrank::data::{read_set, split_per_user, InteractionSet, SmallContextPolicy, SplitRatios};
use rgrank::harness::{
    best_point, emit_convergence_curve, grid_search, prep, read_curve, read_logs, run_eval, run_train, train_on,
    write_curve, write_logs, CurveMetric, GridSpec, LossName, OptimizerName, PrepOptions, RunConfig, StopMetric,
    TargetChoice, KEYS,
};
use rgrank::synthetic::{low_rank_interactions, SyntheticConfig};
use rgrank::{EpochLog, Error};

fn data() -> (InteractionSet, InteractionSet, InteractionSet) {
    let cfg = SyntheticConfig { contexts: 60, objects: 40, rank: 4, positives: 10, noise: 0.5, seed: 3 };
    let set = low_rank_interactions(&cfg).unwrap();
    let b = split_per_user(&set, SplitRatios::default(), 1, SmallContextPolicy::TrainOnly).unwrap();
    (b.train, b.valid, b.test)
}

fn base() -> RunConfig {
    RunConfig { factors: 4, epochs: 12, patience: 3, train: Some("-".into()), ..Default::default() }
}

fn configs() -> Vec<RunConfig> {
    let b = base();
    vec![
        RunConfig { loss: LossName::Rgx, lambda: 0.05, ..b.clone() },
        RunConfig { loss: LossName::Rg2, targets: TargetChoice::Hyper, alpha: 0.3, ..b.clone() },
        RunConfig { loss: LossName::Wrmf, alpha: 2.0, lambda: 0.01, ..b.clone() },
        RunConfig { loss: LossName::Rgx, optimizer: OptimizerName::AlsFull, ..b.clone() },
        RunConfig { loss: LossName::Sm, optimizer: OptimizerName::Sgd, learning_rate: 0.05, batch_size: 32, ..b.clone() },
        RunConfig { loss: LossName::Bpr, optimizer: OptimizerName::Sgd, batch_size: 32, ..b },
    ]
}

#[test]
fn one_epoch_without_patience_gives_one_record() {
    let (train, valid, _) = data();
    for cfg in configs() {
        let cfg = RunConfig { epochs: 1, patience: 0, ..cfg };
        let out = train_on(&cfg, &train, &valid).unwrap();
        assert_eq!(out.logs.len(), 1, "{}", cfg.loss);
        assert_eq!(out.best_epoch, 1);
        assert!(!out.stopped_early);
    }
}

#[test]
fn best_record_and_early_stopping_are_consistent() {
    let (train, valid, _) = data();
    for cfg in configs() {
        let out = train_on(&cfg, &train, &valid).unwrap();
        let values: Vec<f64> = out.logs.iter().map(|l| l.ndcg.unwrap()).collect();
        let best = values.iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(out.best_value, Some(best), "{}", cfg.loss);
        assert_eq!(values[out.best_epoch - 1], best);
        assert!(best >= *values.last().unwrap());
        assert!(out.logs.len() <= out.best_epoch + cfg.patience);
        if out.stopped_early {
            assert_eq!(out.logs.len(), out.best_epoch + cfg.patience);
        } else {
            assert_eq!(out.logs.len(), cfg.epochs);
        }
        assert!(out.logs.iter().enumerate().all(|(i, l)| l.epoch == i + 1));
        assert!(out.logs.windows(2).all(|w| w[1].wall_clock_s >= w[0].wall_clock_s));
        assert!(out.logs.iter().all(|l| l.eval_s.is_some()));

        let again = train_on(&cfg, &train, &valid).unwrap();
        assert_eq!(again.best, out.best);
        let again_values: Vec<f64> = again.logs.iter().map(|l| l.ndcg.unwrap()).collect();
        assert_eq!(again_values, values);
    }
}

#[test]
fn map_can_drive_early_stopping() {
    let (train, valid, _) = data();
    let cfg = RunConfig { early_stop: StopMetric::Map, ..configs().remove(0) };
    let out = train_on(&cfg, &train, &valid).unwrap();
    let best = out.logs.iter().map(|l| l.map.unwrap()).fold(f64::MIN, f64::max);
    assert_eq!(out.best_value, Some(best));
}

#[test]
fn without_validation_nothing_is_evaluated() {
    let (train, _, _) = data();
    let empty = InteractionSet::empty(train.n_contexts(), train.n_objects());
    let out = train_on(&RunConfig { patience: 1, ..configs().remove(0) }, &train, &empty).unwrap();
    assert_eq!(out.logs.len(), 12);
    assert_eq!(out.best_value, None);
    assert_eq!(out.best, out.model);
    assert!(out.logs.iter().all(|l| l.ndcg.is_none()));
}

#[test]
fn stored_snapshot_reproduces_the_logged_best() {
    let dir = tempfile::tempdir().unwrap();
    let (train, valid, test) = data();
    for (name, s) in [("train.txt", &train), ("valid.txt", &valid), ("test.txt", &test)] {
        let mut buf = Vec::new();
        rgrank::data::write_set(s, &mut buf).unwrap();
        fs::write(dir.path().join(name), buf).unwrap();
    }
    for (i, cfg) in configs().into_iter().enumerate() {
        let ext = if i % 2 == 0 { "bin" } else { "txt" };
        let cfg = RunConfig {
            train: Some(dir.path().join("train.txt")),
            valid: Some(dir.path().join("valid.txt")),
            test: Some(dir.path().join("test.txt")),
            snapshot: Some(dir.path().join(format!("model{i}.{ext}"))),
            log: Some(dir.path().join(format!("log{i}.jsonl"))),
            ..cfg
        };
        let out = run_train(&cfg).unwrap();
        let snap = cfg.snapshot.as_ref().unwrap();
        let r = run_eval(snap, &valid, &train, cfg.cutoff).unwrap();
        assert!((r.ndcg - out.best_value.unwrap()).abs() <= 1e-12);
        let logs = read_logs(fs::File::open(cfg.log.as_ref().unwrap()).unwrap()).unwrap();
        assert_eq!(logs, out.logs);

        let empty = InteractionSet::empty(train.n_contexts(), train.n_objects());
        let r = run_eval(snap, &empty, &train, 10).unwrap();
        assert!(r.is_empty());
        assert!(r.to_record().contains("\"empty\":true"));
        let wrong = InteractionSet::empty(train.n_contexts() + 1, train.n_objects());
        assert!(matches!(run_eval(snap, &wrong, &wrong, 10), Err(Error::DimensionMismatch(_))));
    }
}

#[test]
fn logs_round_trip() {
    let mut a = EpochLog::new(1, 0.25, 3.5);
    a.ndcg = Some(0.1);
    let logs = vec![a, EpochLog::new(2, 0.5, 3.0)];
    let mut buf = Vec::new();
    write_logs(&logs, &mut buf).unwrap();
    assert_eq!(read_logs(&buf[..]).unwrap(), logs);
    assert!(matches!(read_logs("{}\nnot json\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
}

#[test]
fn curves_sort_and_round_trip() {
    let log = |epoch, t, ndcg: Option<f64>| EpochLog { ndcg, ..EpochLog::new(epoch, t, 1.0) };
    let runs = vec![
        ("sm".to_string(), vec![log(1, 0.5, Some(0.2)), log(2, 1.0, None), log(3, 1.5, Some(0.3))]),
        ("rgx".to_string(), vec![log(1, 0.1, Some(0.1 + 0.2))]),
    ];
    let points = emit_convergence_curve(&runs, CurveMetric::Ndcg).unwrap();
    assert_eq!(points.iter().map(|p| p.run.as_str()).collect::<Vec<_>>(), ["rgx", "sm", "sm"]);
    let mut buf = Vec::new();
    write_curve(&points, &mut buf).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("run,wall_clock_s,metric\n"));
    assert_eq!(read_curve(&buf[..]).unwrap(), points);
    assert!(emit_convergence_curve(&[], CurveMetric::Map).is_err());
    assert!(emit_convergence_curve(&[("a,b".into(), runs[0].1.clone())], CurveMetric::Ndcg).is_err());
    assert!(read_curve("bad header\n".as_bytes()).is_err());
}

#[test]
fn grid_search_records_failing_points() {
    let (train, valid, _) = data();
    let cfg = RunConfig { loss: LossName::Rgx, targets: TargetChoice::Hyper, epochs: 3, ..base() };
    let spec = GridSpec {
        lambdas: vec![0.05],
        alphas: vec![0.5],
        betas: vec![0.0, 1e3],
        learning_rates: vec![cfg.learning_rate],
        weight_decays: vec![cfg.weight_decay],
    };
    let points = grid_search(&cfg, &spec, &train, &valid).unwrap();
    assert_eq!(points.len(), 2);
    assert!(points[0].error.is_none() && points[0].best_value.is_some());
    assert!(points[1].error.is_some() && points[1].best_value.is_none());
    assert_eq!(best_point(&points), Some(0));

    assert_eq!(GridSpec::for_config(&RunConfig { targets: TargetChoice::Hyper, ..base() }).len(), 8 * 8 * 8);
    assert_eq!(GridSpec::for_config(&RunConfig { targets: TargetChoice::Hyper, loss: LossName::Rg2, ..base() }).len(), 64);
    assert_eq!(GridSpec::for_config(&base()).len(), 8);
    assert_eq!(GridSpec::for_config(&RunConfig { loss: LossName::Wrmf, ..base() }).len(), 20);
    let sgd = RunConfig { loss: LossName::Sm, optimizer: OptimizerName::Sgd, ..base() };
    assert_eq!(GridSpec::for_config(&sgd).len(), 12);
}

#[test]
fn prep_writes_a_consistent_split() {
    let dir = tempfile::tempdir().unwrap();
    let mut raw = String::new();
    for x in 0..30 {
        for y in 0..20 {
            if (x * 7 + y * 3) % 5 < 2 {
                raw.push_str(&format!("u{x} i{y}\n"));
            }
        }
    }
    raw.push_str("u0 i0\nlonely thing\n");
    let s = prep(raw.as_bytes(), &PrepOptions { min_degree: 2, ..Default::default() }, dir.path()).unwrap();
    assert_eq!(s.duplicates, 1);
    assert_eq!(s.contexts, 30);
    let read = |n: &str| read_set(fs::File::open(dir.path().join(n)).unwrap()).unwrap();
    let (train, valid, test) = (read("train.txt"), read("valid.txt"), read("test.txt"));
    assert_eq!((train.len(), valid.len(), test.len()), (s.train, s.valid, s.test));
    assert_eq!(s.train + s.valid + s.test, s.raw_pairs - 1);
    let ids = fs::read_to_string(dir.path().join("ids.txt")).unwrap();
    assert!(!ids.contains("lonely"));
}

#[test]
fn config_validation_and_parse_errors() {
    assert!(RunConfig { loss: LossName::Sm, ..base() }.validate().is_err());
    assert!(RunConfig { optimizer: OptimizerName::Sgd, ..base() }.validate().is_err());
    assert!(RunConfig { factors: 0, ..base() }.validate().is_err());
    assert!(RunConfig { lambda: -1.0, ..base() }.validate().is_err());
    assert!(RunConfig { train: None, ..base() }.validate().is_err());
    assert!(base().validate().is_ok());
    assert!(matches!(RunConfig::parse("loss = rgx\nloss = sm\n"), Err(Error::Parse { line: 2, .. })));
    assert!(matches!(RunConfig::parse("# c\n\nfoo = 1\n"), Err(Error::Parse { line: 3, .. })));
    assert!(matches!(RunConfig::parse("factors\n"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(RunConfig::parse("factors = x\n"), Err(Error::Parse { line: 1, .. })));
    assert_eq!(KEYS.len(), 26);
}

fn config_strategy() -> impl Strategy<Value = RunConfig> {
    let losses = prop::sample::select(vec![
        LossName::Rg2,
        LossName::Rgx,
        LossName::Wrmf,
        LossName::Sm,
        LossName::Ssm,
        LossName::Bpr,
        LossName::Bce,
    ]);
    let opts = prop::sample::select(vec![OptimizerName::Als, OptimizerName::AlsFull, OptimizerName::Sgd]);
    let targets = prop::sample::select(vec![TargetChoice::Full, TargetChoice::Sampled, TargetChoice::Hyper]);
    (
        (losses, opts, targets, 1usize..64, 0.0f64..10.0, 0.0f64..10.0, 0.0f64..1.0),
        (1usize..100, 1e-5f64..1.0, 0.0f64..1e-3, 1usize..4096, 1usize..50, any::<bool>(), any::<u64>()),
        (proptest::option::of("[a-z]{1,8}"), any::<bool>(), 0usize..20),
    )
        .prop_map(|((loss, optimizer, targets, factors, lambda, alpha, beta), b, (path, parallel, kcore))| {
            let (n_negatives, learning_rate, weight_decay, batch_size, patience, map, seed) = b;
            RunConfig {
                loss,
                optimizer,
                targets,
                factors,
                lambda,
                alpha,
                beta,
                n_negatives,
                learning_rate,
                weight_decay,
                batch_size,
                patience,
                early_stop: if map { StopMetric::Map } else { StopMetric::Ndcg },
                seed,
                parallel,
                kcore,
                train: path.as_ref().map(|p| format!("{p}/train.txt").into()),
                snapshot: path.map(|p| format!("{p}.bin").into()),
                split: (0.7, 0.2, 0.1),
                ..Default::default()
            }
        })
}

proptest! {
    #[test]
    fn config_text_round_trip(cfg in config_strategy()) {
        prop_assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}
