use serde::{Deserialize, Serialize};

use super::{canonical_labels, DistanceMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Average,
    Single,
    Complete,
    Ward,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [
        Linkage::Average,
        Linkage::Single,
        Linkage::Complete,
        Linkage::Ward,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Linkage::Average => "average",
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Ward => "ward",
        }
    }

    /// Lance-Williams update for the dissimilarity between `k` and the
    /// union of `i` and `j`. Ward works on squared distances.
    pub fn update(self, dik: f64, djk: f64, dij: f64, ni: f64, nj: f64, nk: f64) -> f64 {
        match self {
            Linkage::Average => (ni * dik + nj * djk) / (ni + nj),
            Linkage::Single => dik.min(djk),
            Linkage::Complete => dik.max(djk),
            Linkage::Ward => ((ni + nk) * dik + (nj + nk) * djk - nk * dij) / (ni + nj + nk),
        }
    }
}

impl std::str::FromStr for Linkage {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Linkage::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| crate::Error::UnknownKey {
                what: "linkage",
                key: s.to_string(),
            })
    }
}

/// Row-wise nearest eligible neighbour among higher indices.
#[derive(Clone, Copy)]
struct Nearest {
    value: f64,
    index: usize,
}

struct State {
    n: usize,
    d: Vec<f64>,
    veto: Vec<bool>,
    active: Vec<bool>,
    size: Vec<f64>,
    nearest: Vec<Option<Nearest>>,
}

impl State {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.d[i * self.n + j] = v;
        self.d[j * self.n + i] = v;
    }

    fn scan_row(&self, i: usize) -> Option<Nearest> {
        let mut best: Option<Nearest> = None;
        for j in i + 1..self.n {
            if !self.active[j] || self.veto[i * self.n + j] {
                continue;
            }
            let v = self.at(i, j);
            if best.is_none_or(|b| v < b.value) {
                best = Some(Nearest { value: v, index: j });
            }
        }
        best
    }
}

/// Agglomerative clustering of one block.
///
/// Repeatedly merges the closest eligible pair of clusters while their
/// dissimilarity is at most `eps`. Pairs whose members include a cannot-link
/// pair are never merged. Ties go to the smallest lower cluster index, then
/// the smallest higher index; a merged cluster keeps the lower index. Ward
/// runs the variance-increase recurrence on squared distances and stops at
/// `eps` squared.
/// Returns one label per point, numbered by first appearance.
pub fn hac_cluster(matrix: &DistanceMatrix, linkage: Linkage, eps: f64) -> Vec<usize> {
    let n = matrix.len();
    let mut d = matrix.values().to_vec();
    let mut threshold = eps;
    if linkage == Linkage::Ward {
        d.iter_mut().for_each(|v| *v *= *v);
        threshold = eps * eps;
    }
    let mut state = State {
        n,
        d,
        veto: matrix.cannot_link_mask().to_vec(),
        active: vec![true; n],
        size: vec![1.0; n],
        nearest: Vec::new(),
    };
    state.nearest = (0..n).map(|i| state.scan_row(i)).collect();
    let mut parent: Vec<usize> = (0..n).collect();

    loop {
        let mut pick: Option<(usize, Nearest)> = None;
        for i in 0..n {
            if !state.active[i] {
                continue;
            }
            if let Some(nb) = state.nearest[i] {
                if pick.is_none_or(|(_, b)| nb.value < b.value) {
                    pick = Some((i, nb));
                }
            }
        }
        let Some((i, Nearest { value, index: j })) = pick else {
            break;
        };
        if value > threshold {
            break;
        }

        let (ni, nj) = (state.size[i], state.size[j]);
        let dij = state.at(i, j);
        for k in 0..n {
            if !state.active[k] || k == i || k == j {
                continue;
            }
            let v = linkage.update(state.at(i, k), state.at(j, k), dij, ni, nj, state.size[k]);
            state.set(i, k, v);
            let vetoed = state.veto[i * n + k] || state.veto[j * n + k];
            state.veto[i * n + k] = vetoed;
            state.veto[k * n + i] = vetoed;
        }
        state.active[j] = false;
        state.size[i] = ni + nj;
        state.nearest[j] = None;
        parent[j] = i;

        state.nearest[i] = state.scan_row(i);
        for k in 0..i {
            if !state.active[k] {
                continue;
            }
            let stale = match state.nearest[k] {
                None => true,
                Some(nb) => {
                    let now = state.at(k, i);
                    nb.index == i
                        || nb.index == j
                        || now < nb.value
                        || (now == nb.value && i < nb.index)
                }
            };
            if stale {
                state.nearest[k] = state.scan_row(k);
            }
        }
        for k in i + 1..j {
            if state.active[k] && state.nearest[k].is_some_and(|nb| nb.index == j) {
                state.nearest[k] = state.scan_row(k);
            }
        }
    }

    let roots: Vec<usize> = (0..n)
        .map(|mut x| {
            while parent[x] != x {
                x = parent[x];
            }
            x
        })
        .collect();
    canonical_labels(&roots)
}
