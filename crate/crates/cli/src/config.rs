//! Declarative run configuration.
//!
//! Every field has a default, so an empty file is a valid config. Command
//! line flags are applied on top of the file and the resolved result is
//! written next to each command's outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use disambig_core::clusterer::ClusterParams;
use disambig_core::corpus::DatasetPaths;
use disambig_core::featurizer::{FeatureGroup, FeatureSchema};
use disambig_core::pairwise_model::HyperParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; `None` defers to `DISAMBIG_JOBS` or all cores.
    pub jobs: Option<usize>,
    pub data: DataConfig,
    pub split: SplitConfig,
    pub caps: PairCaps,
    pub model: ModelConfig,
    pub tuning: TuningConfig,
    pub cluster: ClusterParams,
    pub knockout: KnockoutConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output_dir: PathBuf::from("out"),
            jobs: None,
            data: DataConfig::default(),
            split: SplitConfig::default(),
            caps: PairCaps::default(),
            model: ModelConfig::default(),
            tuning: TuningConfig::default(),
            cluster: ClusterParams::default(),
            knockout: KnockoutConfig::default(),
        }
    }
}

/// Corpus file locations. `dir` supplies conventional names for any path
/// left unset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub dir: Option<PathBuf>,
    pub papers: Option<PathBuf>,
    pub signatures: Option<PathBuf>,
    pub clusters: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Block split file; generated from `split` when absent.
    pub splits: Option<PathBuf>,
    /// Optional name-count sidecar; counts come from the corpus otherwise.
    pub name_counts: Option<PathBuf>,
}

impl DataConfig {
    pub fn paths(&self) -> Result<DatasetPaths, CliError> {
        let defaults = self.dir.as_deref().map(DatasetPaths::in_dir);
        let existing = |p: Option<PathBuf>| p.filter(|p| p.exists());
        let pick =
            |explicit: &Option<PathBuf>, fallback: Option<PathBuf>| explicit.clone().or(fallback);
        let papers = pick(&self.papers, defaults.as_ref().map(|d| d.papers.clone()));
        let signatures = pick(
            &self.signatures,
            defaults.as_ref().map(|d| d.signatures.clone()),
        );
        let (Some(papers), Some(signatures)) = (papers, signatures) else {
            return Err(CliError::Usage(
                "dataset location missing: set data.dir or data.papers and data.signatures".into(),
            ));
        };
        Ok(DatasetPaths {
            papers,
            signatures,
            clusters: self
                .clusters
                .clone()
                .or_else(|| existing(defaults.as_ref().and_then(|d| d.clusters.clone()))),
            embeddings: self
                .embeddings
                .clone()
                .or_else(|| existing(defaults.as_ref().and_then(|d| d.embeddings.clone()))),
        })
    }

    pub fn splits_path(&self) -> Option<PathBuf> {
        self.splits.clone().or_else(|| {
            self.dir
                .as_ref()
                .map(|d| d.join("splits.json"))
                .filter(|p| p.exists())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairCaps {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for PairCaps {
    fn default() -> Self {
        Self {
            train: 100_000,
            val: 10_000,
            test: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Gbt,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub classifier: ClassifierKind,
    pub hyperparams: HyperParams,
    pub linear_regularization: f64,
    /// Train the nameless twin and average it with the full model.
    pub nameless: bool,
    /// Apply monotone constraints; when off every feature is unconstrained.
    pub monotone: bool,
    /// Per-feature overrides of the default constraint, by feature name.
    pub constraints: BTreeMap<String, i8>,
    /// Feature groups forced to missing.
    pub drop_groups: Vec<FeatureGroup>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            classifier: ClassifierKind::Gbt,
            hyperparams: HyperParams::default(),
            linear_regularization: 1e-2,
            nameless: true,
            monotone: true,
            constraints: BTreeMap::new(),
            drop_groups: Vec::new(),
        }
    }
}

impl ModelConfig {
    pub fn constraint_vector(&self, schema: &FeatureSchema) -> Result<Vec<i8>, CliError> {
        if !self.monotone {
            return Ok(vec![0; schema.len()]);
        }
        let mut out = schema.default_constraints();
        for (name, c) in &self.constraints {
            let i = schema.index_of(name).ok_or_else(|| {
                CliError::Usage(format!("constraint override for unknown feature {name}"))
            })?;
            if !(-1..=1).contains(c) {
                return Err(CliError::Usage(format!(
                    "constraint for {name} must be -1, 0 or 1"
                )));
            }
            out[i] = *c;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    /// Random-search trials; 0 trains with `model.hyperparams` as given.
    pub hp_budget: usize,
    pub eps_budget: usize,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            hp_budget: 0,
            eps_budget: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnockoutConfig {
    /// Append a knocked-out copy of every training pair.
    pub enabled: bool,
    pub probabilities: BTreeMap<String, f64>,
}

impl Default for KnockoutConfig {
    fn default() -> Self {
        let metadata = [
            "affiliation",
            "email",
            "abstract",
            "venue",
            "embedding",
            "references",
        ];
        let mut probabilities: BTreeMap<String, f64> =
            metadata.iter().map(|k| (k.to_string(), 0.5)).collect();
        probabilities.insert("first_name".into(), 0.1);
        Self {
            enabled: false,
            probabilities,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn write_resolved(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(RESOLVED_CONFIG), self.to_toml())?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.hyperparams.validate()?;
        self.cluster.validate()?;
        if self.tuning.eps_budget == 0 {
            return Err(CliError::Usage(
                "tuning.eps_budget must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
