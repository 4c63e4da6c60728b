use std::collections::VecDeque;

use super::{InteractionSet, Reindex};

/// Iteratively removes contexts and objects with fewer than `min_degree`
/// interactions until every survivor meets the threshold on both sides.
/// Surviving ids are renumbered densely.
pub fn kcore_filter(set: &InteractionSet, min_degree: usize) -> InteractionSet {
    kcore_filter_with_map(set, min_degree).0
}

/// Like [`kcore_filter`], also returning the old id of every survivor.
pub fn kcore_filter_with_map(set: &InteractionSet, min_degree: usize) -> (InteractionSet, Reindex) {
    let (m, n) = (set.n_contexts(), set.n_objects());
    let entries = set.entries();

    // Edge lists per node; node ids are contexts in [0, m) and objects in [m, m + n).
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n];
    for (e, &(x, y)) in entries.iter().enumerate() {
        adj[x as usize].push(e);
        adj[m + y as usize].push(e);
    }
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut removed = vec![false; m + n];
    let mut edge_alive = vec![true; entries.len()];

    let mut queue: VecDeque<usize> =
        (0..m + n).filter(|&v| degree[v] > 0 && degree[v] < min_degree).collect();
    for &v in &queue {
        removed[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &e in &adj[v] {
            if !edge_alive[e] {
                continue;
            }
            edge_alive[e] = false;
            let (x, y) = entries[e];
            let other = if v < m { m + y as usize } else { x as usize };
            degree[other] -= 1;
            if !removed[other] && degree[other] < min_degree {
                removed[other] = true;
                queue.push_back(other);
            }
        }
        degree[v] = 0;
    }

    let mut e = 0;
    set.compact(|_, _| {
        let alive = edge_alive[e];
        e += 1;
        alive
    })
}
