//! Histogram gradient boosting for logistic loss.
//!
//! Trees grow leaf-wise. Missing values get their own histogram bin and each
//! split learns which child they follow. Monotone constraints are enforced
//! with per-node bounds on leaf values: a split on a `+1` feature must put a
//! smaller weight left than right, and the two subtrees are then confined to
//! either side of the midpoint of those weights.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HyperParams, LabeledPair};
use crate::error::{Error, Result};
use crate::featurizer::FeatureSchema;

const MAX_LOGIT: f64 = 30.0;

/// Logistic link, clamped so the result stays strictly inside (0, 1).
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z.clamp(-MAX_LOGIT, MAX_LOGIT)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Present values `<= threshold` go left; missing values follow
    /// `default_left`.
    Split {
        feature: usize,
        threshold: f64,
        default_left: bool,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root first; children always come after their parent.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                } => {
                    let v = x[feature];
                    let go_left = if v.is_nan() {
                        default_left
                    } else {
                        v <= threshold
                    };
                    i = if go_left { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsembleModel {
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    /// Initial log-odds.
    pub base_score: f64,
    pub schema_hash: String,
    /// One entry per feature, each -1, 0 or +1.
    pub constraints: Vec<i8>,
}

impl TreeEnsembleModel {
    pub fn num_features(&self) -> usize {
        self.constraints.len()
    }

    /// `base_score + learning_rate * sum of leaf values`, without length checks.
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.leaf_value(x)).sum();
        self.base_score + self.learning_rate * sum
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        check_len(x.len(), self.num_features())?;
        Ok(sigmoid(self.raw_score(x)))
    }

    pub fn predict_batch<R: AsRef<[f64]> + Sync>(&self, rows: &[R]) -> Result<Vec<f64>> {
        rows.par_iter()
            .map(|r| self.predict_proba(r.as_ref()))
            .collect()
    }

    /// Structural checks for models read from disk.
    pub fn validate(&self) -> Result<()> {
        if self.constraints.iter().any(|c| !(-1..=1).contains(c)) {
            return Err(Error::Integrity("constraints must be -1, 0 or +1".into()));
        }
        for (t, tree) in self.trees.iter().enumerate() {
            if tree.nodes.is_empty() {
                return Err(Error::Integrity(format!("tree {t} has no nodes")));
            }
            for (i, node) in tree.nodes.iter().enumerate() {
                let ok = match *node {
                    Node::Leaf { value } => value.is_finite(),
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                        ..
                    } => {
                        feature < self.num_features()
                            && !threshold.is_nan()
                            && left > i
                            && right > i
                            && left < tree.nodes.len()
                            && right < tree.nodes.len()
                    }
                };
                if !ok {
                    return Err(Error::Integrity(format!("tree {t} node {i} is malformed")));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_len(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::SchemaMismatch {
            expected: format!("{expected} features"),
            found: format!("{found} features"),
        });
    }
    Ok(())
}

pub(crate) fn check_training_pairs(pairs: &[LabeledPair], schema: &FeatureSchema) -> Result<()> {
    for p in pairs {
        check_len(p.features.len(), schema.len())?;
    }
    let positives = pairs.iter().filter(|p| p.label).count();
    if positives == 0 || positives == pairs.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Trains a boosted ensemble. Deterministic for fixed inputs and seed.
pub fn train_gbt(
    pairs: &[LabeledPair],
    schema: &FeatureSchema,
    hp: &HyperParams,
    constraints: &[i8],
    seed: u64,
) -> Result<TreeEnsembleModel> {
    hp.validate()?;
    if constraints.len() != schema.len() {
        return Err(Error::InvalidConfig(format!(
            "{} constraints for {} features",
            constraints.len(),
            schema.len()
        )));
    }
    if constraints.iter().any(|c| !(-1..=1).contains(c)) {
        return Err(Error::InvalidConfig(
            "constraints must be -1, 0 or +1".into(),
        ));
    }
    check_training_pairs(pairs, schema)?;

    let rows: Vec<&[f64]> = pairs.iter().map(|p| p.features.values()).collect();
    let labels: Vec<f64> = pairs.iter().map(|p| f64::from(u8::from(p.label))).collect();
    let data = Binned::new(&rows, schema.len(), hp.max_bins);

    let positive_rate = labels.iter().sum::<f64>() / labels.len() as f64;
    let base_score = (positive_rate / (1.0 - positive_rate)).ln();
    let mut scores = vec![base_score; rows.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trees = Vec::with_capacity(hp.n_trees);
    let mut grad = vec![0.0; rows.len()];
    let mut hess = vec![0.0; rows.len()];

    for _ in 0..hp.n_trees {
        for i in 0..rows.len() {
            let p = sigmoid(scores[i]);
            grad[i] = p - labels[i];
            hess[i] = (p * (1.0 - p)).max(1e-16);
        }
        let sample_rows = subsample(&mut rng, rows.len(), hp.bagging_fraction);
        let features = subsample(&mut rng, schema.len(), hp.feature_fraction);
        let grower = Grower {
            data: &data,
            grad: &grad,
            hess: &hess,
            features: &features,
            constraints,
            hp,
        };
        let tree = grower.grow(sample_rows);
        for (s, r) in scores.iter_mut().zip(&rows) {
            *s += hp.learning_rate * tree.leaf_value(r);
        }
        trees.push(tree);
    }

    Ok(TreeEnsembleModel {
        trees,
        learning_rate: hp.learning_rate,
        base_score,
        schema_hash: schema.hash(),
        constraints: constraints.to_vec(),
    })
}

fn subsample(rng: &mut ChaCha8Rng, n: usize, fraction: f64) -> Vec<u32> {
    let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
    let mut picked: Vec<u32> = index::sample(rng, n, k)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    picked.sort_unstable();
    picked
}

/// Column-major bin codes: 0 for missing, `1 + #{cuts < v}` otherwise, so a
/// present value satisfies `v <= cuts[c]` exactly when its code is `<= c + 1`.
struct Binned {
    n_rows: usize,
    codes: Vec<u16>,
    cuts: Vec<Vec<f64>>,
}

impl Binned {
    fn new(rows: &[&[f64]], n_features: usize, max_bins: usize) -> Self {
        let n_rows = rows.len();
        let columns: Vec<(Vec<f64>, Vec<u16>)> = (0..n_features)
            .into_par_iter()
            .map(|f| {
                let cuts = feature_cuts(rows.iter().map(|r| r[f]), max_bins);
                let codes = rows
                    .iter()
                    .map(|r| {
                        let v = r[f];
                        if v.is_nan() {
                            0
                        } else {
                            1 + cuts.partition_point(|&c| c < v) as u16
                        }
                    })
                    .collect();
                (cuts, codes)
            })
            .collect();
        let mut codes = Vec::with_capacity(n_rows * n_features);
        let mut cuts = Vec::with_capacity(n_features);
        for (c, k) in columns {
            cuts.push(c);
            codes.extend(k);
        }
        Self {
            n_rows,
            codes,
            cuts,
        }
    }

    fn code(&self, feature: usize, row: u32) -> u16 {
        self.codes[feature * self.n_rows + row as usize]
    }

    fn n_bins(&self, feature: usize) -> usize {
        self.cuts[feature].len() + 2
    }
}

/// Midpoints between adjacent distinct values, thinned to at most
/// `max_bins - 1` cuts of roughly equal mass.
fn feature_cuts(values: impl Iterator<Item = f64>, max_bins: usize) -> Vec<f64> {
    let mut vals: Vec<f64> = values.filter(|v| !v.is_nan()).collect();
    vals.sort_by(f64::total_cmp);
    let mut uniq: Vec<(f64, usize)> = Vec::new();
    for v in &vals {
        match uniq.last_mut() {
            Some((u, c)) if *u == *v => *c += 1,
            _ => uniq.push((*v, 1)),
        }
    }
    let midpoint = |a: f64, b: f64| {
        let m = a + (b - a) / 2.0;
        if m >= b {
            a
        } else {
            m
        }
    };
    if uniq.len() < 2 {
        return Vec::new();
    }
    let max_cuts = max_bins.saturating_sub(1).max(1);
    if uniq.len() - 1 <= max_cuts {
        return uniq.windows(2).map(|w| midpoint(w[0].0, w[1].0)).collect();
    }
    let per_bin = vals.len() as f64 / (max_cuts + 1) as f64;
    let mut next = per_bin;
    let mut cum = 0usize;
    let mut cuts = Vec::new();
    for w in uniq.windows(2) {
        cum += w[0].1;
        if cum as f64 >= next {
            cuts.push(midpoint(w[0].0, w[1].0));
            while next <= cum as f64 {
                next += per_bin;
            }
        }
    }
    cuts
}

#[derive(Clone, Default)]
struct FeatureHist {
    g: Vec<f64>,
    h: Vec<f64>,
    c: Vec<u32>,
}

struct Grower<'a> {
    data: &'a Binned,
    grad: &'a [f64],
    hess: &'a [f64],
    features: &'a [u32],
    constraints: &'a [i8],
    hp: &'a HyperParams,
}

struct Candidate {
    feature: usize,
    cut: usize,
    default_left: bool,
    gain: f64,
    left_weight: f64,
    right_weight: f64,
}

struct Leaf {
    node: usize,
    rows: Vec<u32>,
    hist: Vec<FeatureHist>,
    g: f64,
    h: f64,
    lower: f64,
    upper: f64,
    best: Option<Candidate>,
}

fn soft_threshold(g: f64, l1: f64) -> f64 {
    g.signum() * (g.abs() - l1).max(0.0)
}

impl Grower<'_> {
    fn weight(&self, g: f64, h: f64, lower: f64, upper: f64) -> f64 {
        (-soft_threshold(g, self.hp.lambda_l1) / (h + self.hp.lambda_l2)).clamp(lower, upper)
    }

    /// Second-order loss of a leaf holding weight `w`.
    fn objective(&self, g: f64, h: f64, w: f64) -> f64 {
        g * w + 0.5 * (h + self.hp.lambda_l2) * w * w + self.hp.lambda_l1 * w.abs()
    }

    fn histogram(&self, rows: &[u32]) -> Vec<FeatureHist> {
        let mut selected = vec![false; self.data.cuts.len()];
        for &f in self.features {
            selected[f as usize] = true;
        }
        (0..self.data.cuts.len())
            .into_par_iter()
            .map(|f| {
                if !selected[f] || self.data.cuts[f].is_empty() {
                    return FeatureHist::default();
                }
                let n = self.data.n_bins(f);
                let mut hist = FeatureHist {
                    g: vec![0.0; n],
                    h: vec![0.0; n],
                    c: vec![0; n],
                };
                for &r in rows {
                    let b = self.data.code(f, r) as usize;
                    hist.g[b] += self.grad[r as usize];
                    hist.h[b] += self.hess[r as usize];
                    hist.c[b] += 1;
                }
                hist
            })
            .collect()
    }

    fn best_split(&self, leaf: &Leaf) -> Option<Candidate> {
        let parent_w = self.weight(leaf.g, leaf.h, leaf.lower, leaf.upper);
        let parent_obj = self.objective(leaf.g, leaf.h, parent_w);
        let n = leaf.rows.len() as u32;
        let per_feature: Vec<Option<Candidate>> = leaf
            .hist
            .par_iter()
            .enumerate()
            .map(|(f, hist)| self.best_for_feature(f, hist, leaf, n, parent_obj))
            .collect();
        let mut best: Option<Candidate> = None;
        for cand in per_feature.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| cand.gain > b.gain) {
                best = Some(cand);
            }
        }
        best.filter(|b| b.gain > self.hp.min_split_gain.max(1e-12))
    }

    fn best_for_feature(
        &self,
        f: usize,
        hist: &FeatureHist,
        leaf: &Leaf,
        n: u32,
        parent_obj: f64,
    ) -> Option<Candidate> {
        if hist.c.is_empty() {
            return None;
        }
        let hp = self.hp;
        let constraint = self.constraints[f];
        let (miss_g, miss_h, miss_c) = (hist.g[0], hist.h[0], hist.c[0]);
        let directions: &[bool] = if miss_c > 0 { &[true, false] } else { &[true] };
        let mut best: Option<Candidate> = None;
        let (mut gl, mut hl, mut cl) = (0.0, 0.0, 0u32);
        for cut in 0..self.data.cuts[f].len() {
            gl += hist.g[cut + 1];
            hl += hist.h[cut + 1];
            cl += hist.c[cut + 1];
            for &default_left in directions {
                let (g_left, h_left, c_left) = if default_left {
                    (gl + miss_g, hl + miss_h, cl + miss_c)
                } else {
                    (gl, hl, cl)
                };
                let (g_right, h_right, c_right) = (leaf.g - g_left, leaf.h - h_left, n - c_left);
                if (c_left as usize) < hp.min_samples_leaf
                    || (c_right as usize) < hp.min_samples_leaf
                    || c_left == 0
                    || c_right == 0
                    || h_left < hp.min_child_weight
                    || h_right < hp.min_child_weight
                {
                    continue;
                }
                let wl = self.weight(g_left, h_left, leaf.lower, leaf.upper);
                let wr = self.weight(g_right, h_right, leaf.lower, leaf.upper);
                if (constraint > 0 && wl > wr) || (constraint < 0 && wl < wr) {
                    continue;
                }
                let gain = parent_obj
                    - self.objective(g_left, h_left, wl)
                    - self.objective(g_right, h_right, wr);
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    // with nothing missing here, send future missing values
                    // to the heavier child
                    let default_left = if miss_c > 0 {
                        default_left
                    } else {
                        h_left >= h_right
                    };
                    best = Some(Candidate {
                        feature: f,
                        cut,
                        default_left,
                        gain,
                        left_weight: wl,
                        right_weight: wr,
                    });
                }
            }
        }
        best
    }

    fn make_leaf(
        &self,
        node: usize,
        rows: Vec<u32>,
        hist: Vec<FeatureHist>,
        bounds: (f64, f64),
    ) -> Leaf {
        let g = rows.iter().map(|&r| self.grad[r as usize]).sum();
        let h = rows.iter().map(|&r| self.hess[r as usize]).sum();
        let mut leaf = Leaf {
            node,
            rows,
            hist,
            g,
            h,
            lower: bounds.0,
            upper: bounds.1,
            best: None,
        };
        leaf.best = self.best_split(&leaf);
        leaf
    }

    fn grow(&self, rows: Vec<u32>) -> Tree {
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let root_hist = self.histogram(&rows);
        let mut leaves =
            vec![self.make_leaf(0, rows, root_hist, (f64::NEG_INFINITY, f64::INFINITY))];

        while leaves.len() < self.hp.max_leaves {
            let mut pick: Option<usize> = None;
            for (i, leaf) in leaves.iter().enumerate() {
                if let Some(b) = &leaf.best {
                    if pick.is_none_or(|p| b.gain > leaves[p].best.as_ref().expect("picked").gain) {
                        pick = Some(i);
                    }
                }
            }
            let Some(i) = pick else { break };
            let leaf = leaves.swap_remove(i);
            let (left, right) = self.split(leaf, &mut nodes);
            leaves.push(left);
            leaves.push(right);
            // keep creation order stable so ties resolve the same way
            leaves.sort_by_key(|l| l.node);
        }

        for leaf in &leaves {
            nodes[leaf.node] = Node::Leaf {
                value: self.weight(leaf.g, leaf.h, leaf.lower, leaf.upper),
            };
        }
        Tree { nodes }
    }

    fn split(&self, leaf: Leaf, nodes: &mut Vec<Node>) -> (Leaf, Leaf) {
        let best = leaf.best.as_ref().expect("split requires a candidate");
        let f = best.feature;
        let limit = best.cut as u16 + 1;
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = leaf.rows.iter().partition(|&&r| {
            let code = self.data.code(f, r);
            if code == 0 {
                best.default_left
            } else {
                code <= limit
            }
        });

        let (small_rows, small_is_left) = if left_rows.len() <= right_rows.len() {
            (&left_rows, true)
        } else {
            (&right_rows, false)
        };
        let small = self.histogram(small_rows);
        let large: Vec<FeatureHist> = leaf
            .hist
            .iter()
            .zip(&small)
            .map(|(p, s)| FeatureHist {
                g: p.g.iter().zip(&s.g).map(|(a, b)| a - b).collect(),
                h: p.h.iter().zip(&s.h).map(|(a, b)| a - b).collect(),
                c: p.c.iter().zip(&s.c).map(|(a, b)| a - b).collect(),
            })
            .collect();
        let (left_hist, right_hist) = if small_is_left {
            (small, large)
        } else {
            (large, small)
        };

        let mid = 0.5 * (best.left_weight + best.right_weight);
        let (lo, up) = (leaf.lower, leaf.upper);
        let (left_bounds, right_bounds) = match self.constraints[f] {
            c if c > 0 => ((lo, up.min(mid)), (lo.max(mid), up)),
            c if c < 0 => ((lo.max(mid), up), (lo, up.min(mid))),
            _ => ((lo, up), (lo, up)),
        };

        let left_id = nodes.len();
        let right_id = left_id + 1;
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[leaf.node] = Node::Split {
            feature: f,
            threshold: self.data.cuts[f][best.cut],
            default_left: best.default_left,
            left: left_id,
            right: right_id,
        };
        (
            self.make_leaf(left_id, left_rows, left_hist, left_bounds),
            self.make_leaf(right_id, right_rows, right_hist, right_bounds),
        )
    }
}

#[cfg(test)]
mod tests;
