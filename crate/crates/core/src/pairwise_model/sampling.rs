use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::blocking::build_blocks;
use crate::corpus::{Dataset, Split};
use crate::error::{Error, Result};
use crate::featurizer::{Featurizer, PairFeatureVector};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub sig_a: String,
    pub sig_b: String,
    /// Same gold author.
    pub label: bool,
    pub features: PairFeatureVector,
}

/// Draws up to `cap` within-block pairs from blocks of one split, uniformly
/// without replacement. Pairs come back ordered by block key, then by member
/// position, with `sig_a < sig_b`.
pub fn sample_pair_ids(
    dataset: &Dataset,
    split: Split,
    cap: usize,
    seed: u64,
) -> Result<Vec<(String, String)>> {
    if dataset.splits.is_none() {
        return Err(Error::Integrity("dataset has no block splits".into()));
    }
    let blocks: Vec<_> = build_blocks(dataset)?
        .into_iter()
        .filter(|b| dataset.split_of(&b.key) == Some(split))
        .collect();
    if blocks.is_empty() {
        return Err(Error::Empty(format!("{split} split has no blocks")));
    }
    if cap == 0 {
        return Ok(Vec::new());
    }

    // offsets[i] = number of pairs in blocks before block i
    let mut offsets = Vec::with_capacity(blocks.len() + 1);
    let mut total = 0usize;
    for b in &blocks {
        offsets.push(total);
        total += b.len() * b.len().saturating_sub(1) / 2;
    }
    offsets.push(total);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, total, cap.min(total)).into_vec();
    picked.sort_unstable();

    let mut out = Vec::with_capacity(picked.len());
    let mut block = 0;
    for k in picked {
        while offsets[block + 1] <= k {
            block += 1;
        }
        let members = &blocks[block].members;
        let (i, j) = unrank_pair(k - offsets[block], members.len());
        out.push((members[i].clone(), members[j].clone()));
    }
    Ok(out)
}

/// Maps `0..n(n-1)/2` onto pairs `(i, j)` with `i < j`, row by row.
fn unrank_pair(mut k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    while k >= n - 1 - i {
        k -= n - 1 - i;
        i += 1;
    }
    (i, i + 1 + k)
}

/// Featurizes and labels pairs against the dataset's gold partition.
pub fn label_pairs(
    featurizer: &Featurizer<'_>,
    ids: &[(String, String)],
) -> Result<Vec<LabeledPair>> {
    let gold = featurizer.dataset().gold()?;
    ids.par_iter()
        .map(|(a, b)| {
            let label = match (gold.cluster_of(a), gold.cluster_of(b)) {
                (Some(x), Some(y)) => x == y,
                _ => {
                    return Err(Error::Coverage(format!(
                        "gold partition does not cover pair ({a}, {b})"
                    )))
                }
            };
            Ok(LabeledPair {
                sig_a: a.clone(),
                sig_b: b.clone(),
                label,
                features: featurizer.featurize(a, b)?,
            })
        })
        .collect()
}

pub fn sample_pairs(
    featurizer: &Featurizer<'_>,
    split: Split,
    cap: usize,
    seed: u64,
) -> Result<Vec<LabeledPair>> {
    let ids = sample_pair_ids(featurizer.dataset(), split, cap, seed)?;
    label_pairs(featurizer, &ids)
}
