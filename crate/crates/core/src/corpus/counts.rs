use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::blocking::{normalize_signature, NormalizedName};

/// Occurrence counts of normalized name parts across a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameCountsTable {
    #[serde(default)]
    pub first: BTreeMap<String, u64>,
    #[serde(default)]
    pub last: BTreeMap<String, u64>,
    #[serde(default)]
    pub first_last: BTreeMap<String, u64>,
    #[serde(default)]
    pub first_initial_last: BTreeMap<String, u64>,
}

/// Count lookups for one normalized name. `None` marks a missing key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NameCounts {
    pub first: Option<u64>,
    pub last: Option<u64>,
    pub first_last: Option<u64>,
    pub first_initial_last: Option<u64>,
}

impl NameCountsTable {
    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
            && self.last.is_empty()
            && self.first_last.is_empty()
            && self.first_initial_last.is_empty()
    }

    pub fn add(&mut self, name: &NormalizedName) {
        *self.last.entry(name.last.clone()).or_default() += 1;
        if !name.first.is_empty() {
            *self.first.entry(name.first.clone()).or_default() += 1;
            *self
                .first_last
                .entry(format!("{} {}", name.first, name.last))
                .or_default() += 1;
            *self
                .first_initial_last
                .entry(format!("{} {}", name.first_initial, name.last))
                .or_default() += 1;
        }
    }

    pub fn lookup(&self, name: &NormalizedName) -> NameCounts {
        let has_first = !name.first.is_empty();
        NameCounts {
            last: self.last.get(&name.last).copied(),
            first: has_first
                .then(|| self.first.get(&name.first).copied())
                .flatten(),
            first_last: has_first
                .then(|| {
                    self.first_last
                        .get(&format!("{} {}", name.first, name.last))
                        .copied()
                })
                .flatten(),
            first_initial_last: has_first
                .then(|| {
                    self.first_initial_last
                        .get(&format!("{} {}", name.first_initial, name.last))
                        .copied()
                })
                .flatten(),
        }
    }
}

/// Counts normalized name parts over every signature in the dataset.
pub fn build_name_counts(dataset: &Dataset) -> NameCountsTable {
    let mut table = NameCountsTable::default();
    for sig in dataset.signatures.values() {
        // Loaded datasets are validated, so normalization cannot fail here.
        if let Ok(name) = normalize_signature(sig) {
            table.add(&name);
        }
    }
    table
}
