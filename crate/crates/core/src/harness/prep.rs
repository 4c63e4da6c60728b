use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::data::{
    kcore_filter_with_map, load_interactions, split_per_user, write_set, DelimitedFormat, SmallContextPolicy,
    SplitRatios,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PrepOptions {
    pub format: DelimitedFormat,
    pub rating_threshold: Option<f64>,
    pub min_degree: usize,
    pub ratios: SplitRatios,
    pub seed: u64,
    pub policy: SmallContextPolicy,
}

impl Default for PrepOptions {
    fn default() -> Self {
        PrepOptions {
            format: DelimitedFormat::default(),
            rating_threshold: None,
            min_degree: 0,
            ratios: SplitRatios::default(),
            seed: 0,
            policy: SmallContextPolicy::TrainOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrepSummary {
    pub raw_pairs: usize,
    pub duplicates: usize,
    pub below_threshold: usize,
    pub contexts: usize,
    pub objects: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub train_only_contexts: usize,
}

/// Ingests raw interactions, k-core filters, splits, and writes
/// `train.txt`, `valid.txt`, `test.txt` and `ids.txt` into `out_dir`.
pub fn prep<R: Read>(source: R, opts: &PrepOptions, out_dir: &Path) -> Result<PrepSummary> {
    let loaded = load_interactions(source, &opts.format, opts.rating_threshold)?;
    let raw_pairs = loaded.set.len();
    let (set, ids) = if opts.min_degree > 0 {
        let (set, reindex) = kcore_filter_with_map(&loaded.set, opts.min_degree);
        (set, loaded.ids.project(&reindex))
    } else {
        (loaded.set, loaded.ids)
    };
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let b = split_per_user(&set, opts.ratios, opts.seed, opts.policy)?;
    fs::create_dir_all(out_dir)?;
    for (name, s) in [("train.txt", &b.train), ("valid.txt", &b.valid), ("test.txt", &b.test)] {
        let mut w = BufWriter::new(File::create(out_dir.join(name))?);
        write_set(s, &mut w)?;
        w.flush()?;
    }
    let mut w = BufWriter::new(File::create(out_dir.join("ids.txt"))?);
    ids.write(&mut w)?;
    w.flush()?;
    Ok(PrepSummary {
        raw_pairs,
        duplicates: loaded.duplicates,
        below_threshold: loaded.below_threshold,
        contexts: set.n_contexts(),
        objects: set.n_objects(),
        train: b.train.len(),
        valid: b.valid.len(),
        test: b.test.len(),
        train_only_contexts: b.train_only_contexts,
    })
}
