use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{train_gbt, HyperParams, LabeledPair};
use crate::error::{Error, Result};
use crate::evaluation::auroc;
use crate::featurizer::FeatureSchema;

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub hyperparams: HyperParams,
    pub val_auroc: f64,
}

/// Runs `budget` random-search trials. Configurations are drawn in order
/// from one seeded stream and trial `t` trains with seed `seed + t`, so a
/// larger budget extends a smaller one.
pub fn random_search(
    train: &[LabeledPair],
    val: &[LabeledPair],
    schema: &FeatureSchema,
    constraints: &[i8],
    budget: usize,
    seed: u64,
) -> Result<Vec<Trial>> {
    if budget == 0 {
        return Err(Error::InvalidConfig(
            "tuning budget must be at least 1".into(),
        ));
    }
    if val.is_empty() {
        return Err(Error::Empty("validation pairs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs: Vec<HyperParams> = (0..budget).map(|_| HyperParams::sample(&mut rng)).collect();
    let labels: Vec<bool> = val.iter().map(|p| p.label).collect();
    let rows: Vec<&[f64]> = val.iter().map(|p| p.features.values()).collect();

    configs
        .into_par_iter()
        .enumerate()
        .map(|(t, hp)| {
            let model = train_gbt(train, schema, &hp, constraints, seed.wrapping_add(t as u64))?;
            let scores = model.predict_batch(&rows)?;
            Ok(Trial {
                val_auroc: auroc(&scores, &labels)?,
                hyperparams: hp,
            })
        })
        .collect()
}

/// Best configuration by validation AUROC; the earliest trial wins ties.
pub fn tune_hyperparameters(
    train: &[LabeledPair],
    val: &[LabeledPair],
    schema: &FeatureSchema,
    constraints: &[i8],
    budget: usize,
    seed: u64,
) -> Result<(HyperParams, f64)> {
    let trials = random_search(train, val, schema, constraints, budget, seed)?;
    let mut best = &trials[0];
    for t in &trials[1..] {
        if t.val_auroc > best.val_auroc {
            best = t;
        }
    }
    Ok((best.hyperparams.clone(), best.val_auroc))
}
