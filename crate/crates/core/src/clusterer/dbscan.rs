use std::collections::VecDeque;

use super::{canonical_labels, DistanceMatrix};

/// DBSCAN over precomputed distances.
///
/// A point's neighbourhood is every point (itself included) within `eps`
/// that is not cannot-linked to it; it is a core point when the
/// neighbourhood has at least `min_samples` members. Clusters are grown from
/// unvisited core points in index order, so a border point reachable from two
/// clusters joins the first one found. Noise points become singletons.
pub fn dbscan_cluster(matrix: &DistanceMatrix, eps: f64, min_samples: usize) -> Vec<usize> {
    let n = matrix.len();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| i == j || (matrix.get(i, j) <= eps && !matrix.cannot_link(i, j)))
                .collect()
        })
        .collect();
    let is_core: Vec<bool> = neighbours
        .iter()
        .map(|nb| nb.len() >= min_samples)
        .collect();

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for start in 0..n {
        if label[start].is_some() || !is_core[start] {
            continue;
        }
        let cluster = next;
        next += 1;
        label[start] = Some(cluster);
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            if !is_core[p] {
                continue;
            }
            for &q in &neighbours[p] {
                if label[q].is_none() {
                    label[q] = Some(cluster);
                    queue.push_back(q);
                }
            }
        }
    }
    let raw: Vec<usize> = label
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.unwrap_or(next + i))
        .collect();
    canonical_labels(&raw)
}
