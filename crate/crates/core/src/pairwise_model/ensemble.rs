use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HyperParams, LinearModel, TreeEnsembleModel};
use crate::clusterer::ClusterParams;
use crate::error::{Error, Result};
use crate::featurizer::{mask_nameless_in_place, FeatureSchema, Featurizer};

/// Any classifier with a same-author probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairModel {
    Trees(TreeEnsembleModel),
    Linear(LinearModel),
}

impl PairModel {
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        match self {
            PairModel::Trees(m) => m.predict_proba(x),
            PairModel::Linear(m) => m.predict_proba(x),
        }
    }

    pub fn schema_hash(&self) -> &str {
        match self {
            PairModel::Trees(m) => &m.schema_hash,
            PairModel::Linear(m) => &m.schema_hash,
        }
    }
}

/// A full model plus an optional twin trained on vectors with the focal
/// name features masked; the prediction is the mean of the two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleClassifier {
    pub schema: FeatureSchema,
    pub full: PairModel,
    pub nameless: Option<PairModel>,
}

impl EnsembleClassifier {
    pub fn new(
        schema: FeatureSchema,
        full: PairModel,
        nameless: Option<PairModel>,
    ) -> Result<Self> {
        let ens = Self {
            schema,
            full,
            nameless,
        };
        ens.check_members()?;
        Ok(ens)
    }

    fn check_members(&self) -> Result<()> {
        let hash = self.schema.hash();
        for member in std::iter::once(&self.full).chain(&self.nameless) {
            if member.schema_hash() != hash {
                return Err(Error::SchemaMismatch {
                    expected: hash,
                    found: member.schema_hash().to_string(),
                });
            }
            if let PairModel::Trees(t) = member {
                t.validate()?;
            }
        }
        Ok(())
    }

    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<()> {
        let (expected, found) = (schema.hash(), self.schema.hash());
        if expected != found {
            return Err(Error::SchemaMismatch { expected, found });
        }
        Ok(())
    }

    /// `(p_full, p_nameless)`.
    pub fn member_probabilities(&self, x: &[f64]) -> Result<(f64, Option<f64>)> {
        let full = self.full.predict_proba(x)?;
        let nameless = match &self.nameless {
            Some(m) => {
                let mut masked = x.to_vec();
                mask_nameless_in_place(&mut masked, &self.schema);
                Some(m.predict_proba(&masked)?)
            }
            None => None,
        };
        Ok((full, nameless))
    }

    pub fn predict_vector(&self, x: &[f64]) -> Result<f64> {
        Ok(match self.member_probabilities(x)? {
            (full, Some(nameless)) => 0.5 * (full + nameless),
            (full, None) => full,
        })
    }
}

/// Same-author probability of two signatures.
pub fn predict_ensemble(
    ens: &EnsembleClassifier,
    sig_a: &str,
    sig_b: &str,
    featurizer: &Featurizer<'_>,
) -> Result<f64> {
    ens.check_schema(featurizer.schema())?;
    ens.predict_vector(featurizer.featurize(sig_a, sig_b)?.values())
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Self-describing model container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub schema_hash: String,
    pub constraints: Vec<i8>,
    pub hyperparams: HyperParams,
    pub seed: u64,
    pub classifier: EnsembleClassifier,
    pub cluster: ClusterParams,
}

impl ModelFile {
    pub fn new(
        classifier: EnsembleClassifier,
        constraints: Vec<i8>,
        hyperparams: HyperParams,
        seed: u64,
        cluster: ClusterParams,
    ) -> Self {
        Self {
            version: MODEL_FORMAT_VERSION,
            schema_hash: classifier.schema.hash(),
            constraints,
            hyperparams,
            seed,
            classifier,
            cluster,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Parses a container and checks it against the schema the caller will
    /// featurize with.
    pub fn from_json(text: &str, expected: &FeatureSchema) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::parse("model file", e))?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::parse(
                "model file",
                format!("unsupported version {}", file.version),
            ));
        }
        if file.classifier.schema.hash() != file.schema_hash {
            return Err(Error::Integrity(
                "model schema does not match its recorded hash".into(),
            ));
        }
        if file.schema_hash != expected.hash() {
            return Err(Error::SchemaMismatch {
                expected: expected.hash(),
                found: file.schema_hash,
            });
        }
        file.classifier.check_members()?;
        file.cluster.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path, expected: &FeatureSchema) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, expected)
    }
}
