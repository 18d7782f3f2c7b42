use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Metadata source a feature is derived from. Used for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    FirstName,
    MiddleName,
    Affiliation,
    Email,
    Coauthor,
    Venue,
    Year,
    Title,
    References,
    Position,
    Abstract,
    Language,
    NameCounts,
    Embedding,
    Journal,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 15] = [
        FeatureGroup::FirstName,
        FeatureGroup::MiddleName,
        FeatureGroup::Affiliation,
        FeatureGroup::Email,
        FeatureGroup::Coauthor,
        FeatureGroup::Venue,
        FeatureGroup::Year,
        FeatureGroup::Title,
        FeatureGroup::References,
        FeatureGroup::Position,
        FeatureGroup::Abstract,
        FeatureGroup::Language,
        FeatureGroup::NameCounts,
        FeatureGroup::Embedding,
        FeatureGroup::Journal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::FirstName => "first_name",
            FeatureGroup::MiddleName => "middle_name",
            FeatureGroup::Affiliation => "affiliation",
            FeatureGroup::Email => "email",
            FeatureGroup::Coauthor => "coauthor",
            FeatureGroup::Venue => "venue",
            FeatureGroup::Year => "year",
            FeatureGroup::Title => "title",
            FeatureGroup::References => "references",
            FeatureGroup::Position => "position",
            FeatureGroup::Abstract => "abstract",
            FeatureGroup::Language => "language",
            FeatureGroup::NameCounts => "name_counts",
            FeatureGroup::Embedding => "embedding",
            FeatureGroup::Journal => "journal",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::UnknownKey {
                what: "feature group",
                key: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub group: FeatureGroup,
    /// Default monotonicity hint: +1, -1 or 0.
    pub monotone: i8,
    /// Derived from the focal author's own name surface form.
    pub nameless: bool,
}

/// Ordered feature layout shared by the featurizer and trained models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub features: Vec<FeatureSpec>,
}

pub const SCHEMA_VERSION: u32 = 1;

use FeatureGroup as G;

const LAYOUT: &[(&str, FeatureGroup, i8, bool)] = &[
    ("first_equal", G::FirstName, 1, true),
    ("first_full", G::FirstName, 0, true),
    ("first_prefix_distance", G::FirstName, 0, true),
    ("first_levenshtein", G::FirstName, 0, true),
    ("first_lcs_distance", G::FirstName, 0, true),
    ("first_jaro_winkler", G::FirstName, 1, true),
    ("middle_initials_jaccard", G::MiddleName, 1, true),
    ("middle_equal", G::MiddleName, 1, true),
    ("middle_count", G::MiddleName, 0, true),
    ("middle_full", G::MiddleName, 0, true),
    ("affiliation_word_jaccard", G::Affiliation, 1, false),
    ("email_prefix_equal", G::Email, 1, false),
    ("email_suffix_equal", G::Email, 1, false),
    ("coauthor_key_jaccard", G::Coauthor, 1, false),
    ("coauthor_name_jaccard", G::Coauthor, 1, false),
    ("coauthor_char_jaccard", G::Coauthor, 1, false),
    ("venue_char_jaccard", G::Venue, 1, false),
    ("year_diff", G::Year, -1, false),
    ("title_word_jaccard", G::Title, 1, false),
    ("title_char_jaccard", G::Title, 1, false),
    ("ref_author_char_jaccard", G::References, 1, false),
    ("ref_title_char_jaccard", G::References, 1, false),
    ("ref_venue_char_jaccard", G::References, 1, false),
    ("ref_key_char_jaccard", G::References, 1, false),
    ("cite_each_other", G::References, 1, false),
    ("cocitation_jaccard", G::References, 1, false),
    ("position_diff", G::Position, -1, false),
    ("abstract_count", G::Abstract, 0, false),
    ("english_count", G::Language, 0, false),
    ("same_language", G::Language, 1, false),
    ("languages_identified", G::Language, 0, false),
    ("min_first_count", G::NameCounts, -1, true),
    ("min_first_last_count", G::NameCounts, -1, true),
    ("min_last_count", G::NameCounts, -1, true),
    ("min_initial_last_count", G::NameCounts, -1, true),
    ("max_first_count", G::NameCounts, 0, true),
    ("max_first_last_count", G::NameCounts, 0, true),
    ("embedding_cosine", G::Embedding, 1, false),
    ("journal_char_jaccard", G::Journal, 1, false),
];

/// Slot indices, in schema order.
pub mod slot {
    pub const FIRST_EQUAL: usize = 0;
    pub const FIRST_FULL: usize = 1;
    pub const FIRST_PREFIX: usize = 2;
    pub const FIRST_LEVENSHTEIN: usize = 3;
    pub const FIRST_LCS: usize = 4;
    pub const FIRST_JARO_WINKLER: usize = 5;
    pub const MIDDLE_INITIALS: usize = 6;
    pub const MIDDLE_EQUAL: usize = 7;
    pub const MIDDLE_COUNT: usize = 8;
    pub const MIDDLE_FULL: usize = 9;
    pub const AFFILIATION: usize = 10;
    pub const EMAIL_PREFIX: usize = 11;
    pub const EMAIL_SUFFIX: usize = 12;
    pub const COAUTHOR_KEYS: usize = 13;
    pub const COAUTHOR_NAMES: usize = 14;
    pub const COAUTHOR_CHARS: usize = 15;
    pub const VENUE: usize = 16;
    pub const YEAR_DIFF: usize = 17;
    pub const TITLE_WORDS: usize = 18;
    pub const TITLE_CHARS: usize = 19;
    pub const REF_AUTHORS: usize = 20;
    pub const REF_TITLES: usize = 21;
    pub const REF_VENUES: usize = 22;
    pub const REF_KEYS: usize = 23;
    pub const CITE_EACH_OTHER: usize = 24;
    pub const COCITATION: usize = 25;
    pub const POSITION_DIFF: usize = 26;
    pub const ABSTRACT_COUNT: usize = 27;
    pub const ENGLISH_COUNT: usize = 28;
    pub const SAME_LANGUAGE: usize = 29;
    pub const LANGUAGES_IDENTIFIED: usize = 30;
    pub const MIN_FIRST_COUNT: usize = 31;
    pub const MIN_FIRST_LAST_COUNT: usize = 32;
    pub const MIN_LAST_COUNT: usize = 33;
    pub const MIN_INITIAL_LAST_COUNT: usize = 34;
    pub const MAX_FIRST_COUNT: usize = 35;
    pub const MAX_FIRST_LAST_COUNT: usize = 36;
    pub const EMBEDDING_COSINE: usize = 37;
    pub const JOURNAL: usize = 38;
    pub const COUNT: usize = 39;
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self {
            version: SCHEMA_VERSION,
            features: LAYOUT
                .iter()
                .map(|&(name, group, monotone, nameless)| FeatureSpec {
                    name: name.to_string(),
                    group,
                    monotone,
                    nameless,
                })
                .collect(),
        }
    }
}

impl FeatureSchema {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn indices_of_group(&self, group: FeatureGroup) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.group == group)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn default_constraints(&self) -> Vec<i8> {
        self.features.iter().map(|f| f.monotone).collect()
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
