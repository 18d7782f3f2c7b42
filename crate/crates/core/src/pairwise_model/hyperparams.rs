use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declared search interval of one hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Range {
    Int {
        lo: usize,
        hi: usize,
    },
    Float {
        lo: f64,
        hi: f64,
    },
    /// Sampled uniformly in log space.
    LogFloat {
        lo: f64,
        hi: f64,
    },
}

impl Range {
    fn contains(self, v: f64) -> bool {
        match self {
            Range::Int { lo, hi } => v.fract() == 0.0 && v >= lo as f64 && v <= hi as f64,
            Range::Float { lo, hi } | Range::LogFloat { lo, hi } => v >= lo && v <= hi,
        }
    }

    fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            Range::Int { lo, hi } => rng.random_range(lo..=hi) as f64,
            Range::Float { lo, hi } => rng.random_range(lo..=hi),
            Range::LogFloat { lo, hi } => rng.random_range(lo.ln()..=hi.ln()).exp().clamp(lo, hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub n_trees: usize,
    pub max_leaves: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Minimum hessian sum in a child.
    pub min_child_weight: f64,
    /// Fraction of features considered by each tree.
    pub feature_fraction: f64,
    /// Fraction of rows used to grow each tree.
    pub bagging_fraction: f64,
    pub lambda_l2: f64,
    pub lambda_l1: f64,
    pub min_split_gain: f64,
    pub max_bins: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_leaves: 16,
            learning_rate: 0.1,
            min_samples_leaf: 10,
            min_child_weight: 1e-3,
            feature_fraction: 0.8,
            bagging_fraction: 0.8,
            lambda_l2: 1.0,
            lambda_l1: 0.0,
            min_split_gain: 0.0,
            max_bins: 64,
        }
    }
}

impl HyperParams {
    pub const RANGES: [(&'static str, Range); 11] = [
        ("n_trees", Range::Int { lo: 50, hi: 500 }),
        ("max_leaves", Range::Int { lo: 4, hi: 64 }),
        ("learning_rate", Range::LogFloat { lo: 0.01, hi: 0.3 }),
        ("min_samples_leaf", Range::Int { lo: 1, hi: 50 }),
        ("min_child_weight", Range::LogFloat { lo: 1e-3, hi: 10.0 }),
        ("feature_fraction", Range::Float { lo: 0.5, hi: 1.0 }),
        ("bagging_fraction", Range::Float { lo: 0.5, hi: 1.0 }),
        (
            "lambda_l2",
            Range::LogFloat {
                lo: 1e-3,
                hi: 100.0,
            },
        ),
        ("lambda_l1", Range::Float { lo: 0.0, hi: 5.0 }),
        ("min_split_gain", Range::Float { lo: 0.0, hi: 1.0 }),
        ("max_bins", Range::Int { lo: 16, hi: 255 }),
    ];

    /// Values in the order of [`HyperParams::RANGES`].
    pub fn values(&self) -> [f64; 11] {
        [
            self.n_trees as f64,
            self.max_leaves as f64,
            self.learning_rate,
            self.min_samples_leaf as f64,
            self.min_child_weight,
            self.feature_fraction,
            self.bagging_fraction,
            self.lambda_l2,
            self.lambda_l1,
            self.min_split_gain,
            self.max_bins as f64,
        ]
    }

    fn from_values(v: [f64; 11]) -> Self {
        Self {
            n_trees: v[0] as usize,
            max_leaves: v[1] as usize,
            learning_rate: v[2],
            min_samples_leaf: v[3] as usize,
            min_child_weight: v[4],
            feature_fraction: v[5],
            bagging_fraction: v[6],
            lambda_l2: v[7],
            lambda_l1: v[8],
            min_split_gain: v[9],
            max_bins: v[10] as usize,
        }
    }

    /// Draws every parameter independently, in declaration order.
    pub fn sample<R: Rng>(rng: &mut R) -> Self {
        let mut v = [0.0; 11];
        for (slot, (_, range)) in v.iter_mut().zip(Self::RANGES) {
            *slot = range.sample(rng);
        }
        Self::from_values(v)
    }

    pub fn validate(&self) -> Result<()> {
        for ((name, range), v) in Self::RANGES.iter().zip(self.values()) {
            if !range.contains(v) {
                return Err(Error::InvalidConfig(format!(
                    "hyperparameter {name} = {v} outside {range:?}"
                )));
            }
        }
        Ok(())
    }
}
