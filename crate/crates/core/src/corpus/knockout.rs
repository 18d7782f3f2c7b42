use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Metadata that knockout augmentation can remove.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KnockoutGroup {
    Affiliation,
    Email,
    Abstract,
    /// Venue and journal together.
    Venue,
    Embedding,
    References,
    /// Reduces a full first name to its initial.
    FirstName,
}

impl KnockoutGroup {
    pub const ALL: [KnockoutGroup; 7] = [
        KnockoutGroup::Affiliation,
        KnockoutGroup::Email,
        KnockoutGroup::Abstract,
        KnockoutGroup::Venue,
        KnockoutGroup::Embedding,
        KnockoutGroup::References,
        KnockoutGroup::FirstName,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KnockoutGroup::Affiliation => "affiliation",
            KnockoutGroup::Email => "email",
            KnockoutGroup::Abstract => "abstract",
            KnockoutGroup::Venue => "venue",
            KnockoutGroup::Embedding => "embedding",
            KnockoutGroup::References => "references",
            KnockoutGroup::FirstName => "first_name",
        }
    }
}

impl FromStr for KnockoutGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KnockoutGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::UnknownKey {
                what: "knockout group",
                key: s.to_string(),
            })
    }
}

/// Returns a copy of `dataset` where each signature and paper independently
/// loses fields with the configured per-group probability.
///
/// Signatures are visited in id order, then papers in id order, drawing one
/// uniform per group per record, so the output is a function of the seed.
pub fn knockout_augment(
    dataset: &Dataset,
    seed: u64,
    drop_probabilities: &BTreeMap<String, f64>,
) -> Result<Dataset> {
    let mut probs: BTreeMap<KnockoutGroup, f64> = BTreeMap::new();
    for (key, &p) in drop_probabilities {
        let group: KnockoutGroup = key.parse()?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!(
                "knockout probability for {key} is {p}, expected [0, 1]"
            )));
        }
        probs.insert(group, p);
    }
    let p = |g: KnockoutGroup| probs.get(&g).copied().unwrap_or(0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = dataset.clone();

    for sig in out.signatures.values_mut() {
        if rng.random::<f64>() < p(KnockoutGroup::Affiliation) {
            sig.affiliations.clear();
        }
        if rng.random::<f64>() < p(KnockoutGroup::Email) {
            sig.email = None;
        }
        if rng.random::<f64>() < p(KnockoutGroup::FirstName) {
            if let Some(first) = &sig.first {
                if let Some(initial) = first.chars().find(|c| c.is_alphanumeric()) {
                    sig.first = Some(initial.to_string());
                }
            }
        }
    }
    for paper in out.papers.values_mut() {
        if rng.random::<f64>() < p(KnockoutGroup::Abstract) {
            paper.abstract_text = None;
        }
        if rng.random::<f64>() < p(KnockoutGroup::Venue) {
            paper.venue = None;
            paper.journal = None;
        }
        if rng.random::<f64>() < p(KnockoutGroup::Embedding) {
            paper.embedding = None;
        }
        if rng.random::<f64>() < p(KnockoutGroup::References) {
            paper.reference_ids.clear();
        }
    }
    Ok(out)
}
