//! Bibliographic data model and corpus-level utilities.
//!
//! A [`Dataset`] owns papers, the signatures (author-name occurrences) that
//! point into them, an optional gold [`Partition`] and an optional block-level
//! train/val/test assignment. Everything downstream treats a loaded dataset
//! as immutable.

mod counts;
mod io;
mod knockout;
mod split;
pub mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::blocking;
use crate::error::{Error, Result};

pub use counts::{build_name_counts, NameCounts, NameCountsTable};
pub use io::{
    load_clusters, load_dataset, load_name_counts, load_splits, save_clusters, save_dataset,
    save_name_counts, save_splits, DatasetPaths,
};
pub use knockout::{knockout_augment, KnockoutGroup};
pub use split::split_blocks;
pub use synth::{generate_synthetic_corpus, SynthConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Paper {
    pub paper_id: String,
    pub title: String,
    pub abstract_text: Option<String>,
    pub venue: Option<String>,
    pub journal: Option<String>,
    pub year: Option<i32>,
    /// Raw author names; index `i` holds author position `i + 1`.
    pub author_names: Vec<String>,
    pub reference_ids: BTreeSet<String>,
    pub language: Option<String>,
    pub embedding: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub signature_id: String,
    pub paper_id: String,
    /// 1-based position in the paper's author list.
    pub author_position: usize,
    pub first: Option<String>,
    pub middle: Option<String>,
    pub last: String,
    pub suffix: Option<String>,
    pub affiliations: Vec<String>,
    pub email: Option<String>,
}

/// Assignment of signature ids to opaque cluster labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    assignment: BTreeMap<String, String>,
}

impl Partition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_assignment(assignment: BTreeMap<String, String>) -> Self {
        Self { assignment }
    }

    /// Builds a partition from `cluster_id -> members`, rejecting members that
    /// appear in more than one cluster.
    pub fn from_clusters<I, M>(clusters: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, M)>,
        M: IntoIterator<Item = String>,
    {
        let mut assignment = BTreeMap::new();
        for (cluster, members) in clusters {
            for sig in members {
                if let Some(prev) = assignment.insert(sig.clone(), cluster.clone()) {
                    return Err(Error::Integrity(format!(
                        "signature {sig} assigned to both {prev} and {cluster}"
                    )));
                }
            }
        }
        Ok(Self { assignment })
    }

    pub fn insert(&mut self, signature_id: impl Into<String>, cluster_id: impl Into<String>) {
        self.assignment
            .insert(signature_id.into(), cluster_id.into());
    }

    pub fn cluster_of(&self, signature_id: &str) -> Option<&str> {
        self.assignment.get(signature_id).map(String::as_str)
    }

    pub fn assignment(&self) -> &BTreeMap<String, String> {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn signature_ids(&self) -> impl Iterator<Item = &str> {
        self.assignment.keys().map(String::as_str)
    }

    /// `cluster_id -> sorted members`.
    pub fn clusters(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (sig, cluster) in &self.assignment {
            out.entry(cluster.as_str()).or_default().push(sig.as_str());
        }
        out
    }

    pub fn num_clusters(&self) -> usize {
        self.assignment.values().collect::<BTreeSet<_>>().len()
    }

    /// Restricts the partition to the given signatures.
    pub fn restrict<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Partition {
        let assignment = ids
            .into_iter()
            .filter_map(|id| self.assignment.get(id).map(|c| (id.to_string(), c.clone())))
            .collect();
        Partition { assignment }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::UnknownKey {
                what: "split",
                key: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub papers: BTreeMap<String, Paper>,
    pub signatures: BTreeMap<String, Signature>,
    pub gold: Option<Partition>,
    pub splits: Option<BTreeMap<String, Split>>,
}

impl Dataset {
    /// Assembles and validates a dataset. Duplicate ids are rejected.
    pub fn new(
        papers: impl IntoIterator<Item = Paper>,
        signatures: impl IntoIterator<Item = Signature>,
        gold: Option<Partition>,
    ) -> Result<Self> {
        let mut paper_map = BTreeMap::new();
        for paper in papers {
            let id = paper.paper_id.clone();
            if paper_map.insert(id.clone(), paper).is_some() {
                return Err(Error::Integrity(format!("duplicate paper id {id}")));
            }
        }
        let mut sig_map = BTreeMap::new();
        for sig in signatures {
            let id = sig.signature_id.clone();
            if sig_map.insert(id.clone(), sig).is_some() {
                return Err(Error::Integrity(format!("duplicate signature id {id}")));
            }
        }
        let dataset = Dataset {
            papers: paper_map,
            signatures: sig_map,
            gold,
            splits: None,
        };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn validate(&self) -> Result<()> {
        let mut dim: Option<(usize, &str)> = None;
        for (id, paper) in &self.papers {
            if id != &paper.paper_id {
                return Err(Error::Integrity(format!(
                    "paper keyed {id} carries id {}",
                    paper.paper_id
                )));
            }
            if paper.author_names.is_empty() {
                return Err(Error::Integrity(format!("paper {id} has no authors")));
            }
            if paper.reference_ids.contains(id) {
                return Err(Error::Integrity(format!("paper {id} references itself")));
            }
            if let Some(emb) = &paper.embedding {
                match dim {
                    None => dim = Some((emb.len(), id)),
                    Some((d, first)) if d != emb.len() => {
                        return Err(Error::Dimension(format!(
                            "paper {first} has embedding length {d} but {id} has {}",
                            emb.len()
                        )))
                    }
                    _ => {}
                }
            }
        }
        for (id, sig) in &self.signatures {
            if id != &sig.signature_id {
                return Err(Error::Integrity(format!(
                    "signature keyed {id} carries id {}",
                    sig.signature_id
                )));
            }
            let paper = self.papers.get(&sig.paper_id).ok_or_else(|| {
                Error::Integrity(format!(
                    "signature {id} references missing paper {}",
                    sig.paper_id
                ))
            })?;
            if sig.author_position == 0 || sig.author_position > paper.author_names.len() {
                return Err(Error::Integrity(format!(
                    "signature {id} has author position {} but paper {} has {} authors",
                    sig.author_position,
                    paper.paper_id,
                    paper.author_names.len()
                )));
            }
            blocking::normalize_name(sig.first.as_deref(), sig.middle.as_deref(), &sig.last)
                .map_err(|e| Error::Integrity(format!("signature {id}: {e}")))?;
        }
        if let Some(gold) = &self.gold {
            for id in self.signatures.keys() {
                if gold.cluster_of(id).is_none() {
                    return Err(Error::Integrity(format!(
                        "gold partition does not cover signature {id}"
                    )));
                }
            }
            for id in gold.signature_ids() {
                if !self.signatures.contains_key(id) {
                    return Err(Error::Integrity(format!(
                        "gold partition names unknown signature {id}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn paper_of(&self, sig: &Signature) -> Result<&Paper> {
        self.papers.get(&sig.paper_id).ok_or_else(|| {
            Error::Integrity(format!(
                "signature {} references missing paper {}",
                sig.signature_id, sig.paper_id
            ))
        })
    }

    pub fn signature(&self, id: &str) -> Result<&Signature> {
        self.signatures
            .get(id)
            .ok_or_else(|| Error::Integrity(format!("unknown signature {id}")))
    }

    pub fn embedding_dim(&self) -> Option<usize> {
        self.papers
            .values()
            .find_map(|p| p.embedding.as_ref().map(Vec::len))
    }

    pub fn split_of(&self, block_key: &str) -> Option<Split> {
        self.splits.as_ref()?.get(block_key).copied()
    }

    pub fn gold(&self) -> Result<&Partition> {
        self.gold
            .as_ref()
            .ok_or_else(|| Error::Integrity("dataset has no gold partition".into()))
    }
}
