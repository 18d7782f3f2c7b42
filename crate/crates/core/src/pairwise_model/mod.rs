//! Pair sampling and same-author classifiers.

mod ensemble;
mod gbt;
mod hyperparams;
mod linear;
mod sampling;
mod tuning;

pub use ensemble::{
    predict_ensemble, EnsembleClassifier, ModelFile, PairModel, MODEL_FORMAT_VERSION,
};
pub use gbt::{sigmoid, train_gbt, Node, Tree, TreeEnsembleModel};
pub use hyperparams::{HyperParams, Range};
pub use linear::{train_linear, LinearModel};
pub use sampling::{label_pairs, sample_pair_ids, sample_pairs, LabeledPair};
pub use tuning::{random_search, tune_hyperparameters, Trial};

use crate::featurizer::{mask_nameless, FeatureSchema};

/// Copies of `pairs` with the nameless slots masked, for training the twin
/// model.
pub fn mask_pairs(pairs: &[LabeledPair], schema: &FeatureSchema) -> Vec<LabeledPair> {
    pairs
        .iter()
        .map(|p| LabeledPair {
            features: mask_nameless(&p.features, schema),
            ..p.clone()
        })
        .collect()
}
