use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Split};
use crate::blocking::build_blocks;
use crate::error::{Error, Result};

/// Assigns every block to train, val or test.
///
/// Block keys are sorted, shuffled with a seeded generator and cut into
/// `floor(n * val)` val blocks and `floor(n * test)` test blocks; the rounding
/// remainder goes to train. A split with a positive fraction always receives
/// at least one block.
pub fn split_blocks(dataset: &Dataset, seed: u64, fractions: (f64, f64, f64)) -> Result<Dataset> {
    let (train, val, test) = fractions;
    if [train, val, test].iter().any(|f| !(0.0..=1.0).contains(f))
        || ((train + val + test) - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidConfig(format!(
            "split fractions {fractions:?} must lie in [0, 1] and sum to 1"
        )));
    }
    let mut keys: Vec<String> = build_blocks(dataset)?.into_iter().map(|b| b.key).collect();
    let n = keys.len();
    if n < 3 {
        return Err(Error::DegenerateSplit(format!(
            "{n} blocks cannot be split three ways"
        )));
    }
    let count = |f: f64| {
        let c = (f * n as f64 + 1e-9).floor() as usize;
        if f > 0.0 {
            c.max(1)
        } else {
            c
        }
    };
    let n_val = count(val);
    let n_test = count(test);
    if n_val + n_test >= n && train > 0.0 {
        return Err(Error::DegenerateSplit(format!(
            "{n} blocks leave no training blocks"
        )));
    }

    keys.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    keys.shuffle(&mut rng);

    let mut splits = BTreeMap::new();
    for (i, key) in keys.into_iter().enumerate() {
        let split = if i < n_val {
            Split::Val
        } else if i < n_val + n_test {
            Split::Test
        } else {
            Split::Train
        };
        splits.insert(key, split);
    }
    let mut out = dataset.clone();
    out.splits = Some(splits);
    Ok(out)
}
