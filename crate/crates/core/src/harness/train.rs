use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use super::config::{LossName, OptimizerName, RunConfig, StopMetric, TargetChoice};
use crate::als::{full_matrix_objective, full_matrix_step, AlsConfig, AlsTrainer};
use crate::data::{
    build_matrix, build_targets, kcore_filter, load_interactions, read_set, split_per_user, DelimitedFormat,
    InteractionMatrix, InteractionSet, SmallContextPolicy, SplitRatios, TargetMatrices, TargetVariant,
};
use crate::epoch::EpochLog;
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::metrics::{evaluate, MetricConfig, RankingResult};
use crate::model::{FactorModel, Init};
use crate::sgd::{SgdConfig, SgdLoss, SgdTrainer};

#[derive(Debug, Clone)]
pub struct Datasets {
    pub train: InteractionSet,
    pub valid: InteractionSet,
    pub test: InteractionSet,
}

pub fn read_set_file(path: &Path) -> Result<InteractionSet> {
    read_set(File::open(path)?)
}

/// Loads the sets named by the config, or builds them from `raw` by k-core
/// filtering and a seeded per-context split. Missing valid/test sets are empty.
pub fn load_datasets(cfg: &RunConfig) -> Result<Datasets> {
    if let Some(raw) = &cfg.raw {
        let format = DelimitedFormat { delimiter: cfg.delimiter, ..Default::default() };
        let mut set = load_interactions(File::open(raw)?, &format, None)?.set;
        if cfg.kcore > 0 {
            set = kcore_filter(&set, cfg.kcore);
        }
        if set.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let (train, valid, test) = cfg.split;
        let ratios = SplitRatios { train, valid, test };
        let b = split_per_user(&set, ratios, cfg.seed, SmallContextPolicy::TrainOnly)?;
        return Ok(Datasets { train: b.train, valid: b.valid, test: b.test });
    }
    let train_path = cfg.train.as_ref().ok_or_else(|| Error::config("no training set given"))?;
    let train = read_set_file(train_path)?;
    let (m, n) = (train.n_contexts(), train.n_objects());
    let other = |p: &Option<std::path::PathBuf>| -> Result<InteractionSet> {
        match p {
            Some(p) => {
                let s = read_set_file(p)?;
                if s.n_contexts() != m || s.n_objects() != n {
                    return Err(Error::dims(format!(
                        "{} is {}x{}, training set is {m}x{n}",
                        p.display(),
                        s.n_contexts(),
                        s.n_objects()
                    )));
                }
                Ok(s)
            }
            None => Ok(InteractionSet::empty(m, n)),
        }
    };
    Ok(Datasets { valid: other(&cfg.valid)?, test: other(&cfg.test)?, train })
}

pub fn target_variant(cfg: &RunConfig) -> TargetVariant {
    match (cfg.loss, cfg.targets) {
        (LossName::Wrmf, _) => TargetVariant::Wrmf { alpha: cfg.alpha },
        (_, TargetChoice::Full) => TargetVariant::Full,
        (_, TargetChoice::Sampled) => TargetVariant::SampledDerived { negatives: cfg.n_negatives },
        (_, TargetChoice::Hyper) => TargetVariant::Hyperparameterized { alpha: cfg.alpha, beta: cfg.beta },
    }
}

pub fn als_config(cfg: &RunConfig) -> AlsConfig {
    AlsConfig {
        factors: cfg.factors,
        lambda: cfg.lambda,
        kind: if cfg.loss == LossName::Rgx { LossKind::Rgx } else { LossKind::Rg2 },
        max_iters: cfg.epochs,
        seed: cfg.seed,
        parallel: cfg.parallel,
        ..Default::default()
    }
}

pub fn sgd_config(cfg: &RunConfig) -> SgdConfig {
    let loss = match cfg.loss {
        LossName::Ssm => SgdLoss::Ssm,
        LossName::Bpr => SgdLoss::Bpr,
        LossName::Bce => SgdLoss::Bce,
        _ => SgdLoss::Sm,
    };
    SgdConfig {
        loss,
        factors: cfg.factors,
        learning_rate: cfg.learning_rate,
        weight_decay: cfg.weight_decay,
        batch_size: cfg.batch_size,
        n_negatives: cfg.n_negatives,
        epochs: cfg.epochs,
        seed: cfg.seed,
        ..Default::default()
    }
}

struct FullMatrix<'a> {
    model: FactorModel,
    matrix: &'a InteractionMatrix,
    targets: &'a TargetMatrices,
    lambda: f64,
    elapsed: f64,
    iteration: usize,
}

enum Engine<'a> {
    Als(AlsTrainer<'a>),
    Full(FullMatrix<'a>),
    Sgd(SgdTrainer<'a>),
}

impl Engine<'_> {
    fn step(&mut self) -> Result<EpochLog> {
        match self {
            Engine::Als(t) => t.step(),
            Engine::Sgd(t) => t.run_epoch(),
            Engine::Full(f) => {
                let start = Instant::now();
                full_matrix_step(&mut f.model, f.matrix, f.targets, f.lambda)?;
                f.elapsed += start.elapsed().as_secs_f64();
                f.iteration += 1;
                let loss = full_matrix_objective(f.matrix, &f.model, f.targets, f.lambda)?;
                if !loss.is_finite() {
                    return Err(Error::Diverged { epoch: f.iteration, loss });
                }
                Ok(EpochLog::new(f.iteration, f.elapsed, loss))
            }
        }
    }

    fn model(&self) -> &FactorModel {
        match self {
            Engine::Als(t) => t.model(),
            Engine::Sgd(t) => t.model(),
            Engine::Full(f) => &f.model,
        }
    }

    fn into_model(self) -> FactorModel {
        match self {
            Engine::Als(t) => t.into_model(),
            Engine::Sgd(t) => t.into_model(),
            Engine::Full(f) => f.model,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FactorModel,
    /// Model at the best validation value; the final model when nothing
    /// was evaluated.
    pub best: FactorModel,
    /// Epoch of `best` (0 means the initial model was never beaten).
    pub best_epoch: usize,
    pub best_value: Option<f64>,
    pub logs: Vec<EpochLog>,
    pub stopped_early: bool,
}

fn stop_value(r: &RankingResult, metric: StopMetric) -> f64 {
    match metric {
        StopMetric::Ndcg => r.ndcg,
        StopMetric::Map => r.map,
    }
}

/// Trains on `train`, evaluating on `valid` after every epoch (one ALS
/// iteration counts as one epoch). Stops once the stop metric has not
/// improved for `patience` evaluations (at least one).
pub fn train_on(cfg: &RunConfig, train: &InteractionSet, valid: &InteractionSet) -> Result<TrainOutcome> {
    cfg.validate_training()?;
    let matrix = build_matrix(train)?;
    let targets = if cfg.loss.is_squared() { Some(build_targets(&matrix, target_variant(cfg))?) } else { None };
    let mut engine = match (cfg.optimizer, &targets) {
        (OptimizerName::Als, Some(t)) => Engine::Als(AlsTrainer::new(&matrix, t, als_config(cfg))?),
        (OptimizerName::AlsFull, Some(t)) => {
            if !t.is_row_constant() {
                return Err(Error::config("als-full needs one weight per context (targets = full)"));
            }
            let model = FactorModel::init(matrix.n_rows(), matrix.n_cols(), cfg.factors, Init::default(), cfg.seed)?;
            Engine::Full(FullMatrix { model, matrix: &matrix, targets: t, lambda: cfg.lambda, elapsed: 0.0, iteration: 0 })
        }
        _ => Engine::Sgd(SgdTrainer::new(&matrix, sgd_config(cfg))?),
    };

    let mc = MetricConfig::with_cutoff(cfg.cutoff);
    let mut logs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, FactorModel)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;
    for _ in 0..cfg.epochs {
        let mut log = engine.step()?;
        if !valid.is_empty() {
            let start = Instant::now();
            let r = evaluate(engine.model(), valid, &matrix, &mc)?;
            log.eval_s = Some(start.elapsed().as_secs_f64());
            if !r.is_empty() {
                log.ndcg = Some(r.ndcg);
                log.mrr = Some(r.mrr);
                log.map = Some(r.map);
                let v = stop_value(&r, cfg.early_stop);
                if best.as_ref().is_none_or(|b| v > b.1) {
                    best = Some((log.epoch, v, engine.model().clone()));
                    since_best = 0;
                } else {
                    since_best += 1;
                }
            }
        }
        logs.push(log);
        if since_best > 0 && since_best >= cfg.patience {
            stopped_early = true;
            break;
        }
    }
    let model = engine.into_model();
    let (best_epoch, best_value, best) = match best {
        Some((e, v, m)) => (e, Some(v), m),
        None => (logs.last().map_or(0, |l| l.epoch), None, model.clone()),
    };
    Ok(TrainOutcome { model, best, best_epoch, best_value, logs, stopped_early })
}

pub fn write_snapshot(model: &FactorModel, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if path.extension().is_some_and(|e| e == "bin") {
        model.write_binary(&mut w)?;
    } else {
        model.write_text(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_logs<W: Write>(logs: &[EpochLog], mut w: W) -> Result<()> {
    for log in logs {
        writeln!(w, "{}", serde_json::to_string(log).map_err(|e| Error::config(e.to_string()))?)?;
    }
    Ok(())
}

pub fn read_logs<R: std::io::Read>(r: R) -> Result<Vec<EpochLog>> {
    use std::io::BufRead;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(r).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?,
        );
    }
    Ok(out)
}

/// Loads data, trains, and writes the log and best snapshot if configured.
pub fn run_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let data = load_datasets(cfg)?;
    let out = train_on(cfg, &data.train, &data.valid)?;
    if let Some(path) = &cfg.log {
        let mut w = BufWriter::new(File::create(path)?);
        write_logs(&out.logs, &mut w)?;
        w.flush()?;
    }
    if let Some(path) = &cfg.snapshot {
        write_snapshot(&out.best, path)?;
    }
    Ok(out)
}

/// Evaluates a stored snapshot on `heldout`, excluding `train` positives.
pub fn run_eval(snapshot: &Path, heldout: &InteractionSet, train: &InteractionSet, cutoff: usize) -> Result<RankingResult> {
    let model = FactorModel::read_snapshot(File::open(snapshot)?)?;
    if train.n_contexts() != model.n_contexts() || train.n_objects() != model.n_objects() {
        return Err(Error::dims(format!(
            "snapshot is {}x{}, training set is {}x{}",
            model.n_contexts(),
            model.n_objects(),
            train.n_contexts(),
            train.n_objects()
        )));
    }
    let matrix = build_matrix(train)?;
    evaluate(&model, heldout, &matrix, &MetricConfig::with_cutoff(cutoff))
}

impl RunConfig {
    /// Checks everything except the dataset source.
    fn validate_training(&self) -> Result<()> {
        let mut probe = self.clone();
        probe.raw = None;
        probe.train = Some("-".into());
        probe.validate()
    }
}
