//! Implicit-feedback interaction data: ingestion, k-core filtering, per-context
//! splitting, the compressed row layout, and the ALS target/weight matrices.

mod io;
mod kcore;
mod matrix;
mod split;
mod targets;

use std::collections::HashSet;

pub use io::{load_interactions, read_set, write_set, Delimiter, DelimitedFormat, IdMap, Loaded};
pub use kcore::{kcore_filter, kcore_filter_with_map};
pub use matrix::{build_matrix, InteractionMatrix, SnapshotEncoding};
pub use split::{split_per_user, SmallContextPolicy, SplitBundle, SplitRatios};
pub use targets::{build_targets, TargetMatrices, TargetVariant};

use crate::error::{Error, Result};

/// A deduplicated set of observed (context, object) pairs with dense ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionSet {
    entries: Vec<(u32, u32)>,
    n_contexts: usize,
    n_objects: usize,
}

impl InteractionSet {
    /// Builds a set, dropping repeated pairs (first occurrence wins).
    pub fn new(n_contexts: usize, n_objects: usize, entries: Vec<(u32, u32)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        let mut kept = Vec::with_capacity(entries.len());
        for (x, y) in entries {
            if x as usize >= n_contexts || y as usize >= n_objects {
                return Err(Error::dims(format!(
                    "pair ({x}, {y}) outside {n_contexts}x{n_objects}"
                )));
            }
            if seen.insert((x, y)) {
                kept.push((x, y));
            }
        }
        Ok(InteractionSet { entries: kept, n_contexts, n_objects })
    }

    pub fn empty(n_contexts: usize, n_objects: usize) -> Self {
        InteractionSet { entries: Vec::new(), n_contexts, n_objects }
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn n_contexts(&self) -> usize {
        self.n_contexts
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        self.entries.iter().any(|&e| e == (x, y))
    }

    pub fn context_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_contexts];
        for &(x, _) in &self.entries {
            deg[x as usize] += 1;
        }
        deg
    }

    pub fn object_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_objects];
        for &(_, y) in &self.entries {
            deg[y as usize] += 1;
        }
        deg
    }

    /// Entries sorted by (context, object); handy for set comparisons.
    pub fn sorted_entries(&self) -> Vec<(u32, u32)> {
        let mut e = self.entries.clone();
        e.sort_unstable();
        e
    }

    /// Keeps the pairs accepted by `keep` and renumbers the surviving ids
    /// densely, preserving their relative order.
    pub(crate) fn compact<F>(&self, mut keep: F) -> (InteractionSet, Reindex)
    where
        F: FnMut(u32, u32) -> bool,
    {
        let kept: Vec<(u32, u32)> =
            self.entries.iter().copied().filter(|&(x, y)| keep(x, y)).collect();
        let mut ctx_used = vec![false; self.n_contexts];
        let mut obj_used = vec![false; self.n_objects];
        for &(x, y) in &kept {
            ctx_used[x as usize] = true;
            obj_used[y as usize] = true;
        }
        let (ctx_new, contexts) = renumber(&ctx_used);
        let (obj_new, objects) = renumber(&obj_used);
        let entries = kept
            .into_iter()
            .map(|(x, y)| (ctx_new[x as usize], obj_new[y as usize]))
            .collect();
        let set = InteractionSet { entries, n_contexts: contexts.len(), n_objects: objects.len() };
        (set, Reindex { contexts, objects })
    }
}

fn renumber(used: &[bool]) -> (Vec<u32>, Vec<u32>) {
    let mut new_id = vec![u32::MAX; used.len()];
    let mut old_ids = Vec::new();
    for (old, &u) in used.iter().enumerate() {
        if u {
            new_id[old] = old_ids.len() as u32;
            old_ids.push(old as u32);
        }
    }
    (new_id, old_ids)
}

/// Old id of every surviving context/object, indexed by new id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Reindex {
    pub contexts: Vec<u32>,
    pub objects: Vec<u32>,
}
