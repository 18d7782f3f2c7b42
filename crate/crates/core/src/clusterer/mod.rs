//! Per-block clustering over classifier-derived distances.

mod dbscan;
mod hac;

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocking::{build_blocks, Block};
use crate::corpus::Partition;
use crate::error::{Error, Result};
use crate::evaluation::b3;
use crate::featurizer::Featurizer;
use crate::pairwise_model::EnsembleClassifier;

pub use dbscan::dbscan_cluster;
pub use hac::{hac_cluster, Linkage};

/// Symmetric distances with a zero diagonal and a cannot-link mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
    cannot_link: Vec<bool>,
}

impl DistanceMatrix {
    /// All-zero matrix with no cannot-link pairs.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            d: vec![0.0; n * n],
            cannot_link: vec![false; n * n],
        }
    }

    /// Builds a matrix from `f(i, j)` evaluated for `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.d[i * self.n + j] = v;
        self.d[j * self.n + i] = v;
    }

    pub fn cannot_link(&self, i: usize, j: usize) -> bool {
        self.cannot_link[i * self.n + j]
    }

    /// Marks a pair as cannot-link and overrides its distance to 1.
    pub fn forbid(&mut self, i: usize, j: usize) {
        self.set(i, j, 1.0);
        self.cannot_link[i * self.n + j] = true;
        self.cannot_link[j * self.n + i] = true;
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.d
    }

    pub(crate) fn cannot_link_mask(&self) -> &[bool] {
        &self.cannot_link
    }

    /// Reorders rows and columns: entry `(a, b)` of the result is entry
    /// `(order[a], order[b])` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for a in 0..n {
            for b in 0..n {
                out.d[a * n + b] = self.get(order[a], order[b]);
                out.cannot_link[a * n + b] = self.cannot_link(order[a], order[b]);
            }
        }
        out
    }
}

/// Relabels so that labels are numbered by first appearance.
pub(crate) fn canonical_labels(raw: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    raw.iter()
        .map(|r| {
            let next = map.len();
            *map.entry(*r).or_insert(next)
        })
        .collect()
}

/// Two normalized first names may belong to one person when either is
/// missing, they are equal, or one is a prefix of the other (an initial
/// matches any name it starts).
pub fn names_compatible(a: &str, b: &str) -> bool {
    a.is_empty() || b.is_empty() || a.starts_with(b) || b.starts_with(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Hac,
    Dbscan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    pub method: Method,
    pub linkage: Linkage,
    /// Merge-stop threshold for HAC, neighbourhood radius for DBSCAN.
    pub eps: f64,
    pub min_samples: usize,
    /// Apply the first-name cannot-link rule.
    pub name_rules: bool,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            method: Method::Hac,
            linkage: Linkage::Average,
            eps: 0.5,
            min_samples: 2,
            name_rules: true,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(Error::InvalidConfig(format!(
                "eps {} outside [0, 1]",
                self.eps
            )));
        }
        if self.min_samples == 0 {
            return Err(Error::InvalidConfig(
                "min_samples must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Clusters one block; labels are numbered by first appearance.
pub fn cluster_matrix(matrix: &DistanceMatrix, params: &ClusterParams) -> Vec<usize> {
    match params.method {
        Method::Hac => hac_cluster(matrix, params.linkage, params.eps),
        Method::Dbscan => dbscan_cluster(matrix, params.eps, params.min_samples),
    }
}

/// `d[i][j] = 1 - p(same author)`; name-incompatible pairs are set to 1 and
/// marked cannot-link when `name_rules` is on.
pub fn distance_matrix(
    block: &Block,
    classifier: &EnsembleClassifier,
    featurizer: &Featurizer<'_>,
    name_rules: bool,
) -> Result<DistanceMatrix> {
    classifier.check_schema(featurizer.schema())?;
    let n = block.len();
    let first_name = |id: &str| {
        featurizer
            .name_of(id)
            .map(|name| name.first.as_str())
            .ok_or_else(|| Error::Integrity(format!("unknown signature {id}")))
    };
    let firsts: Vec<&str> = block
        .members
        .iter()
        .map(|m| first_name(m))
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<(f64, bool)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    if name_rules && !names_compatible(firsts[i], firsts[j]) {
                        return Ok((1.0, true));
                    }
                    let v = featurizer.featurize(&block.members[i], &block.members[j])?;
                    Ok((1.0 - classifier.predict_vector(v.values())?, false))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut m = DistanceMatrix::zeros(n);
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, (d, forbidden)) in row.into_iter().enumerate() {
            let j = i + 1 + offset;
            if forbidden {
                m.forbid(i, j);
            } else {
                m.set(i, j, d);
            }
        }
    }
    Ok(m)
}

/// A block with its distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub block: Block,
    pub matrix: DistanceMatrix,
}

pub fn block_matrices(
    blocks: &[Block],
    classifier: &EnsembleClassifier,
    featurizer: &Featurizer<'_>,
    name_rules: bool,
) -> Result<Vec<BlockMatrix>> {
    blocks
        .par_iter()
        .map(|b| {
            Ok(BlockMatrix {
                block: b.clone(),
                matrix: distance_matrix(b, classifier, featurizer, name_rules)?,
            })
        })
        .collect()
}

/// Clusters precomputed blocks into one partition with ids `"{block}/{k}"`.
pub fn partition_from_matrices(blocks: &[BlockMatrix], params: &ClusterParams) -> Partition {
    let labelled: Vec<Vec<(String, String)>> = blocks
        .par_iter()
        .map(|bm| {
            let labels = cluster_matrix(&bm.matrix, params);
            bm.block
                .members
                .iter()
                .zip(labels)
                .map(|(m, l)| (m.clone(), format!("{}/{l}", bm.block.key)))
                .collect()
        })
        .collect();
    Partition::from_assignment(labelled.into_iter().flatten().collect::<BTreeMap<_, _>>())
}

pub fn cluster_blocks(
    blocks: &[Block],
    classifier: &EnsembleClassifier,
    featurizer: &Featurizer<'_>,
    params: &ClusterParams,
) -> Result<Partition> {
    params.validate()?;
    let matrices = block_matrices(blocks, classifier, featurizer, params.name_rules)?;
    Ok(partition_from_matrices(&matrices, params))
}

/// Blocks, scores and clusters every signature of the featurizer's dataset.
pub fn cluster_corpus(
    classifier: &EnsembleClassifier,
    featurizer: &Featurizer<'_>,
    params: &ClusterParams,
) -> Result<Partition> {
    let blocks = build_blocks(featurizer.dataset())?;
    cluster_blocks(&blocks, classifier, featurizer, params)
}

/// Seeded search for the `eps` maximizing B³ F1 over the union of the
/// validation blocks.
///
/// The first half of the budget (rounded up) probes uniform random values;
/// the rest perturbs the current choice with a shrinking radius. When several
/// probes reach the best F1 the lower median of their `eps` values is taken,
/// which keeps the choice away from the edges of a flat optimum. Returns
/// `(eps, B³ F1)`.
pub fn tune_eps(
    blocks: &[BlockMatrix],
    gold: &Partition,
    params: &ClusterParams,
    budget: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if budget == 0 {
        return Err(Error::InvalidConfig("eps budget must be at least 1".into()));
    }
    if blocks.iter().all(|b| b.block.is_empty()) {
        return Err(Error::Empty("validation blocks".into()));
    }
    let gold = gold.restrict(
        blocks
            .iter()
            .flat_map(|b| b.block.members.iter().map(String::as_str)),
    );
    let score = |eps: f64| -> Result<f64> {
        let probe = ClusterParams {
            eps,
            ..params.clone()
        };
        Ok(b3(&partition_from_matrices(blocks, &probe), &gold)?.f1)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_random = budget.div_ceil(2);
    let mut best_f1 = f64::NEG_INFINITY;
    let mut tied: Vec<f64> = Vec::new();
    let mut choice = f64::NAN;
    for probe in 0..budget {
        let eps = if probe < n_random {
            rng.random_range(0.0..=1.0)
        } else {
            let radius = 0.1 * 0.75f64.powi((probe - n_random) as i32);
            (choice + rng.random_range(-radius..=radius)).clamp(0.0, 1.0)
        };
        let f1 = score(eps)?;
        if f1 > best_f1 {
            best_f1 = f1;
            tied.clear();
        }
        if f1 == best_f1 {
            tied.push(eps);
            let mut sorted = tied.clone();
            sorted.sort_by(f64::total_cmp);
            choice = sorted[(sorted.len() - 1) / 2];
        }
    }
    Ok((choice, best_f1))
}
