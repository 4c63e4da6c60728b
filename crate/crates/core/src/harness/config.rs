use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossName {
    Rg2,
    Rgx,
    Wrmf,
    Sm,
    Ssm,
    Bpr,
    Bce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerName {
    Als,
    AlsFull,
    Sgd,
}

/// Which target construction the squared losses use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetChoice {
    /// Derived from the full softmax.
    Full,
    /// Derived from uniformly sampled softmax with `n_negatives` samples.
    Sampled,
    /// Weights and interaction coefficient from `alpha` and `beta`.
    Hyper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopMetric {
    Ndcg,
    Map,
}

macro_rules! names {
    ($ty:ident { $($variant:ident => $name:literal),* $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $name),* }
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($ty::$variant),)*
                    other => Err(Error::config(format!(
                        "unknown {} '{other}' (expected one of: {})",
                        stringify!($ty),
                        [$($name),*].join(", ")
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

names!(LossName { Rg2 => "rg2", Rgx => "rgx", Wrmf => "wrmf", Sm => "sm", Ssm => "ssm", Bpr => "bpr", Bce => "bce" });
names!(OptimizerName { Als => "als", AlsFull => "als-full", Sgd => "sgd" });
names!(TargetChoice { Full => "full", Sampled => "sampled", Hyper => "hyper" });
names!(StopMetric { Ndcg => "ndcg", Map => "map" });

impl LossName {
    pub fn is_squared(self) -> bool {
        matches!(self, LossName::Rg2 | LossName::Rgx | LossName::Wrmf)
    }
}

/// Every key accepted in a config file, in the order `to_text` writes them.
pub const KEYS: &[&str] = &[
    "train",
    "valid",
    "test",
    "raw",
    "delimiter",
    "kcore",
    "split",
    "loss",
    "optimizer",
    "targets",
    "factors",
    "lambda",
    "alpha",
    "beta",
    "n_negatives",
    "learning_rate",
    "weight_decay",
    "batch_size",
    "cutoff",
    "epochs",
    "early_stop",
    "patience",
    "seed",
    "parallel",
    "log",
    "snapshot",
];

/// One training run. Paths are optional so a config can be completed from
/// command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub valid: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Raw delimited interactions to k-core filter and split in memory.
    pub raw: Option<PathBuf>,
    pub delimiter: crate::data::Delimiter,
    pub kcore: usize,
    /// Train/valid/test ratios used with `raw`.
    pub split: (f64, f64, f64),
    pub loss: LossName,
    pub optimizer: OptimizerName,
    pub targets: TargetChoice,
    pub factors: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_negatives: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub cutoff: usize,
    /// Epochs for SGD, iterations for ALS.
    pub epochs: usize,
    pub early_stop: StopMetric,
    pub patience: usize,
    pub seed: u64,
    pub parallel: bool,
    /// JSON-lines epoch log.
    pub log: Option<PathBuf>,
    /// Best-checkpoint snapshot.
    pub snapshot: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: None,
            valid: None,
            test: None,
            raw: None,
            delimiter: crate::data::Delimiter::Whitespace,
            kcore: 0,
            split: (0.8, 0.1, 0.1),
            loss: LossName::Rgx,
            optimizer: OptimizerName::Als,
            targets: TargetChoice::Full,
            factors: 8,
            lambda: 0.1,
            alpha: 1.0,
            beta: 0.0,
            n_negatives: 10,
            learning_rate: 0.01,
            weight_decay: 0.0,
            batch_size: 256,
            cutoff: 10,
            epochs: 50,
            early_stop: StopMetric::Ndcg,
            patience: 5,
            seed: 0,
            parallel: false,
            log: None,
            snapshot: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::config(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(format!("{key}: expected true or false, got '{value}'"))),
    }
}

fn parse_split(value: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<f64> = value.split(',').map(|v| parse_num("split", v)).collect::<Result<_>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(Error::config("split: expected three comma-separated ratios")),
    }
}

fn delimiter_name(d: crate::data::Delimiter) -> &'static str {
    match d {
        crate::data::Delimiter::Tab => "tab",
        crate::data::Delimiter::Comma => "comma",
        crate::data::Delimiter::Whitespace => "whitespace",
    }
}

impl RunConfig {
    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    /// Unknown keys and repeated keys are errors.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(Error::Parse { line: i + 1, message: format!("duplicate key '{key}'") });
            }
            seen.push(key);
            cfg.set(key, value.trim()).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let path = || Some(PathBuf::from(value));
        match key {
            "train" => self.train = path(),
            "valid" => self.valid = path(),
            "test" => self.test = path(),
            "raw" => self.raw = path(),
            "delimiter" => self.delimiter = value.parse()?,
            "kcore" => self.kcore = parse_num(key, value)?,
            "split" => self.split = parse_split(value)?,
            "loss" => self.loss = value.parse()?,
            "optimizer" => self.optimizer = value.parse()?,
            "targets" => self.targets = value.parse()?,
            "factors" => self.factors = parse_num(key, value)?,
            "lambda" => self.lambda = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "beta" => self.beta = parse_num(key, value)?,
            "n_negatives" => self.n_negatives = parse_num(key, value)?,
            "learning_rate" => self.learning_rate = parse_num(key, value)?,
            "weight_decay" => self.weight_decay = parse_num(key, value)?,
            "batch_size" => self.batch_size = parse_num(key, value)?,
            "cutoff" => self.cutoff = parse_num(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "early_stop" => self.early_stop = value.parse()?,
            "patience" => self.patience = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "parallel" => self.parallel = parse_bool(key, value)?,
            "log" => self.log = path(),
            "snapshot" => self.snapshot = path(),
            other => return Err(Error::config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Current value of `key` as it would appear in a config file; `None`
    /// for unset paths.
    pub fn get(&self, key: &str) -> Option<String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        Some(match key {
            "train" => return path(&self.train),
            "valid" => return path(&self.valid),
            "test" => return path(&self.test),
            "raw" => return path(&self.raw),
            "delimiter" => delimiter_name(self.delimiter).to_string(),
            "kcore" => self.kcore.to_string(),
            "split" => format!("{},{},{}", self.split.0, self.split.1, self.split.2),
            "loss" => self.loss.to_string(),
            "optimizer" => self.optimizer.to_string(),
            "targets" => self.targets.to_string(),
            "factors" => self.factors.to_string(),
            "lambda" => self.lambda.to_string(),
            "alpha" => self.alpha.to_string(),
            "beta" => self.beta.to_string(),
            "n_negatives" => self.n_negatives.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "weight_decay" => self.weight_decay.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "cutoff" => self.cutoff.to_string(),
            "epochs" => self.epochs.to_string(),
            "early_stop" => self.early_stop.to_string(),
            "patience" => self.patience.to_string(),
            "seed" => self.seed.to_string(),
            "parallel" => self.parallel.to_string(),
            "log" => return path(&self.log),
            "snapshot" => return path(&self.snapshot),
            _ => return None,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            if let Some(v) = self.get(key) {
                out.push_str(&format!("{key} = {v}\n"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let squared = self.loss.is_squared();
        match self.optimizer {
            OptimizerName::Als | OptimizerName::AlsFull if !squared => {
                return Err(Error::config(format!(
                    "optimizer {} needs loss rg2, rgx or wrmf (got {})",
                    self.optimizer, self.loss
                )))
            }
            OptimizerName::Sgd if squared => {
                return Err(Error::config(format!("optimizer sgd needs loss sm, ssm, bpr or bce (got {})", self.loss)))
            }
            _ => {}
        }
        if self.factors == 0 || self.cutoff == 0 || self.epochs == 0 {
            return Err(Error::config("factors, cutoff and epochs must be >= 1"));
        }
        for (name, v) in [("lambda", self.lambda), ("alpha", self.alpha), ("beta", self.beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be a finite value >= 0")));
            }
        }
        if self.raw.is_none() && self.train.is_none() {
            return Err(Error::config("either train or raw must be given"));
        }
        if self.raw.is_some() && self.train.is_some() {
            return Err(Error::config("give either train or raw, not both"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_rules() {
        let mut c = RunConfig { train: Some("t".into()), ..Default::default() };
        assert!(c.validate().is_ok());
        c.loss = LossName::Sm;
        assert!(c.validate().is_err());
        c.optimizer = OptimizerName::Sgd;
        assert!(c.validate().is_ok());
        c.loss = LossName::Wrmf;
        assert!(c.validate().is_err());
    }

    #[test]
    fn parse_reports_line() {
        let err = RunConfig::parse("# c\nloss = rg2\nfactors = x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(RunConfig::parse("nope = 1").is_err());
        assert!(RunConfig::parse("seed = 1\nseed = 2").is_err());
    }

    #[test]
    fn text_round_trip() {
        let c = RunConfig {
            train: Some("a/train.txt".into()),
            loss: LossName::Bpr,
            optimizer: OptimizerName::Sgd,
            lambda: 0.005,
            split: (0.7, 0.2, 0.1),
            parallel: true,
            ..Default::default()
        };
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }
}
