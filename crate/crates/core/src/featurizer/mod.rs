//! Pairwise feature vectors for two signatures.
//!
//! Missing values are `NaN` ([`MISSING`]); a slot is missing exactly when an
//! underlying field is absent on either side. Nothing is imputed here.

mod schema;
pub mod strings;

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::blocking::{normalize_raw_name, normalize_signature, NormalizedName};
use crate::corpus::{Dataset, NameCountsTable, Signature};
use crate::error::{Error, Result};

pub use schema::{slot, FeatureGroup, FeatureSchema, FeatureSpec, SCHEMA_VERSION};
use strings::{
    jaccard, jaro_winkler, lcs_distance, levenshtein, ngram_set, prefix_distance, NgramSet,
    NgramUnit,
};

/// Missing-value sentinel.
pub const MISSING: f64 = f64::NAN;

pub fn is_missing(v: f64) -> bool {
    v.is_nan()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFeatureVector(pub Vec<f64>);

impl PairFeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Slot-wise equality that treats two missing values as equal.
    pub fn same_as(&self, other: &PairFeatureVector) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| (a.is_nan() && b.is_nan()) || a == b)
    }
}

/// Sets every nameless-flagged slot to missing.
pub fn mask_nameless(v: &PairFeatureVector, schema: &FeatureSchema) -> PairFeatureVector {
    let mut out = v.clone();
    mask_nameless_in_place(&mut out.0, schema);
    out
}

pub fn mask_nameless_in_place(values: &mut [f64], schema: &FeatureSchema) {
    for (v, spec) in values.iter_mut().zip(&schema.features) {
        if spec.nameless {
            *v = MISSING;
        }
    }
}

const CHAR_RANGE: (usize, usize) = (2, 4);
const WORD_RANGE: (usize, usize) = (1, 3);

/// Per-signature precomputation; every field that can be absent is an `Option`.
#[derive(Debug, Clone)]
struct Profile {
    paper_id: String,
    position: usize,
    name: NormalizedName,
    has_first: bool,
    has_middle: bool,
    middle_initials: BTreeSet<char>,
    counts: crate::corpus::NameCounts,
    affiliation_words: Option<NgramSet>,
    email: Option<(String, String)>,
    coauthor_keys: Option<BTreeSet<String>>,
    coauthor_names: Option<BTreeSet<String>>,
    coauthor_grams: Option<NgramSet>,
    venue_grams: Option<NgramSet>,
    journal_grams: Option<NgramSet>,
    year: Option<i32>,
    title_words: Option<NgramSet>,
    title_grams: Option<NgramSet>,
    references: Option<ReferenceProfile>,
    has_abstract: bool,
    language: Option<String>,
    embedding: Option<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone)]
struct ReferenceProfile {
    ids: BTreeSet<String>,
    author_grams: NgramSet,
    title_grams: NgramSet,
    venue_grams: NgramSet,
    key_grams: NgramSet,
}

fn is_full(part: &str) -> bool {
    part.split(' ')
        .next()
        .is_some_and(|t| t.chars().count() > 1)
}

fn nonempty_set<T: Ord>(set: BTreeSet<T>) -> Option<BTreeSet<T>> {
    (!set.is_empty()).then_some(set)
}

impl Profile {
    fn build(sig: &Signature, dataset: &Dataset, counts: &NameCountsTable) -> Result<Profile> {
        let paper = dataset.paper_of(sig)?;
        let name = normalize_signature(sig)?;

        let coauthors: Vec<NormalizedName> = paper
            .author_names
            .iter()
            .enumerate()
            .filter(|(i, _)| i + 1 != sig.author_position)
            .filter_map(|(_, raw)| normalize_raw_name(raw))
            .collect();
        let coauthor_full: Vec<String> = coauthors.iter().map(NormalizedName::full).collect();

        let references = (!paper.reference_ids.is_empty()).then(|| {
            let cited: Vec<_> = paper
                .reference_ids
                .iter()
                .filter_map(|id| dataset.papers.get(id))
                .collect();
            let authors: Vec<NormalizedName> = cited
                .iter()
                .flat_map(|p| p.author_names.iter().filter_map(|n| normalize_raw_name(n)))
                .collect();
            let author_names: Vec<String> = authors.iter().map(NormalizedName::full).collect();
            let keys: Vec<String> = authors.iter().map(NormalizedName::block_key).collect();
            let titles: Vec<&str> = cited.iter().map(|p| p.title.as_str()).collect();
            let venues: Vec<&str> = cited
                .iter()
                .flat_map(|p| p.venue.iter().chain(p.journal.iter()).map(String::as_str))
                .collect();
            ReferenceProfile {
                ids: paper.reference_ids.clone(),
                author_grams: ngram_set(&author_names, NgramUnit::Char, CHAR_RANGE),
                title_grams: ngram_set(&titles, NgramUnit::Char, CHAR_RANGE),
                venue_grams: ngram_set(&venues, NgramUnit::Char, CHAR_RANGE),
                key_grams: ngram_set(&keys, NgramUnit::Char, CHAR_RANGE),
            }
        });

        let email = sig.email.as_ref().map(|e| {
            let lower = e.trim().to_lowercase();
            match lower.split_once('@') {
                Some((p, s)) => (p.to_string(), s.to_string()),
                None => (lower, String::new()),
            }
        });

        let embedding = paper.embedding.as_ref().and_then(|e| {
            let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            (norm > 0.0 && norm.is_finite()).then(|| (e.clone(), norm))
        });

        let title = paper.title.trim();
        Ok(Profile {
            paper_id: paper.paper_id.clone(),
            position: sig.author_position,
            has_first: !name.first.is_empty(),
            has_middle: !name.middle.is_empty(),
            middle_initials: name
                .middle
                .split(' ')
                .filter_map(|t| t.chars().next())
                .collect(),
            counts: counts.lookup(&name),
            name,
            affiliation_words: (!sig.affiliations.is_empty())
                .then(|| ngram_set(&[sig.affiliations.join(" ")], NgramUnit::Word, WORD_RANGE)),
            email,
            coauthor_keys: nonempty_set(coauthors.iter().map(NormalizedName::block_key).collect()),
            coauthor_names: nonempty_set(coauthor_full.iter().cloned().collect()),
            coauthor_grams: (!coauthor_full.is_empty())
                .then(|| ngram_set(&coauthor_full, NgramUnit::Char, CHAR_RANGE)),
            venue_grams: paper
                .venue
                .as_ref()
                .map(|v| ngram_set(&[v], NgramUnit::Char, CHAR_RANGE)),
            journal_grams: paper
                .journal
                .as_ref()
                .map(|j| ngram_set(&[j], NgramUnit::Char, CHAR_RANGE)),
            year: paper.year,
            title_words: (!title.is_empty())
                .then(|| ngram_set(&[title], NgramUnit::Word, WORD_RANGE)),
            title_grams: (!title.is_empty())
                .then(|| ngram_set(&[title], NgramUnit::Char, CHAR_RANGE)),
            references,
            has_abstract: paper.abstract_text.is_some(),
            language: paper.language.as_ref().map(|l| l.trim().to_lowercase()),
            embedding,
        })
    }
}

fn both<'a, T>(a: &'a Option<T>, b: &'a Option<T>) -> Option<(&'a T, &'a T)> {
    Some((a.as_ref()?, b.as_ref()?))
}

fn set_jaccard<T: Ord>(a: &Option<BTreeSet<T>>, b: &Option<BTreeSet<T>>) -> f64 {
    both(a, b).map_or(MISSING, |(a, b)| jaccard(a, b))
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn full_encoding(a: bool, b: bool) -> f64 {
    (indicator(a) + indicator(b)) / 2.0
}

fn count_pair(a: Option<u64>, b: Option<u64>, pick: fn(u64, u64) -> u64) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) => pick(a, b) as f64,
        _ => MISSING,
    }
}

fn compute(a: &Profile, b: &Profile) -> Vec<f64> {
    let mut v = vec![MISSING; slot::COUNT];

    if a.has_first && b.has_first {
        let (fa, fb) = (&a.name.first, &b.name.first);
        v[slot::FIRST_EQUAL] = indicator(fa == fb);
        v[slot::FIRST_FULL] = full_encoding(is_full(fa), is_full(fb));
        v[slot::FIRST_PREFIX] = prefix_distance(fa, fb);
        v[slot::FIRST_LEVENSHTEIN] = levenshtein(fa, fb) as f64;
        v[slot::FIRST_LCS] = lcs_distance(fa, fb);
        v[slot::FIRST_JARO_WINKLER] = jaro_winkler(fa, fb);
    }
    if a.has_middle && b.has_middle {
        v[slot::MIDDLE_INITIALS] = jaccard(&a.middle_initials, &b.middle_initials);
        v[slot::MIDDLE_EQUAL] = indicator(a.name.middle == b.name.middle);
        v[slot::MIDDLE_FULL] = full_encoding(is_full(&a.name.middle), is_full(&b.name.middle));
    }
    v[slot::MIDDLE_COUNT] = indicator(a.has_middle) + indicator(b.has_middle);

    v[slot::AFFILIATION] = set_jaccard(&a.affiliation_words, &b.affiliation_words);
    if let Some(((pa, sa), (pb, sb))) = both(&a.email, &b.email) {
        v[slot::EMAIL_PREFIX] = indicator(pa == pb);
        v[slot::EMAIL_SUFFIX] = indicator(sa == sb);
    }
    v[slot::COAUTHOR_KEYS] = set_jaccard(&a.coauthor_keys, &b.coauthor_keys);
    v[slot::COAUTHOR_NAMES] = set_jaccard(&a.coauthor_names, &b.coauthor_names);
    v[slot::COAUTHOR_CHARS] = set_jaccard(&a.coauthor_grams, &b.coauthor_grams);
    v[slot::VENUE] = set_jaccard(&a.venue_grams, &b.venue_grams);
    v[slot::JOURNAL] = set_jaccard(&a.journal_grams, &b.journal_grams);
    if let (Some(ya), Some(yb)) = (a.year, b.year) {
        v[slot::YEAR_DIFF] = f64::from((ya - yb).abs());
    }
    v[slot::TITLE_WORDS] = set_jaccard(&a.title_words, &b.title_words);
    v[slot::TITLE_CHARS] = set_jaccard(&a.title_grams, &b.title_grams);

    if let Some((ra, rb)) = both(&a.references, &b.references) {
        v[slot::REF_AUTHORS] = jaccard(&ra.author_grams, &rb.author_grams);
        v[slot::REF_TITLES] = jaccard(&ra.title_grams, &rb.title_grams);
        v[slot::REF_VENUES] = jaccard(&ra.venue_grams, &rb.venue_grams);
        v[slot::REF_KEYS] = jaccard(&ra.key_grams, &rb.key_grams);
        v[slot::COCITATION] = jaccard(&ra.ids, &rb.ids);
    }
    let cites = |p: &Profile, target: &str| {
        p.references
            .as_ref()
            .is_some_and(|r| r.ids.contains(target))
    };
    v[slot::CITE_EACH_OTHER] = indicator(cites(a, &b.paper_id) || cites(b, &a.paper_id));

    v[slot::POSITION_DIFF] = a.position.abs_diff(b.position) as f64;
    v[slot::ABSTRACT_COUNT] = indicator(a.has_abstract) + indicator(b.has_abstract);

    let english = |p: &Profile| indicator(p.language.as_deref() == Some("en"));
    v[slot::ENGLISH_COUNT] = english(a) + english(b);
    if let Some((la, lb)) = both(&a.language, &b.language) {
        v[slot::SAME_LANGUAGE] = indicator(la == lb);
    }
    v[slot::LANGUAGES_IDENTIFIED] =
        indicator(a.language.is_some()) + indicator(b.language.is_some());

    let (ca, cb) = (&a.counts, &b.counts);
    v[slot::MIN_FIRST_COUNT] = count_pair(ca.first, cb.first, u64::min);
    v[slot::MIN_FIRST_LAST_COUNT] = count_pair(ca.first_last, cb.first_last, u64::min);
    v[slot::MIN_LAST_COUNT] = count_pair(ca.last, cb.last, u64::min);
    v[slot::MIN_INITIAL_LAST_COUNT] =
        count_pair(ca.first_initial_last, cb.first_initial_last, u64::min);
    v[slot::MAX_FIRST_COUNT] = count_pair(ca.first, cb.first, u64::max);
    v[slot::MAX_FIRST_LAST_COUNT] = count_pair(ca.first_last, cb.first_last, u64::max);

    if let Some(((ea, na), (eb, nb))) = both(&a.embedding, &b.embedding) {
        let dot: f64 = ea.iter().zip(eb).map(|(x, y)| x * y).sum();
        v[slot::EMBEDDING_COSINE] = (dot / (na * nb)).clamp(-1.0, 1.0);
    }
    v
}

fn check_schema(schema: &FeatureSchema) -> Result<()> {
    let expected = FeatureSchema::default();
    if schema.hash() != expected.hash() {
        return Err(Error::SchemaMismatch {
            expected: expected.hash(),
            found: schema.hash(),
        });
    }
    Ok(())
}

/// Computes one feature vector from scratch.
pub fn featurize_pair(
    s1: &Signature,
    s2: &Signature,
    dataset: &Dataset,
    counts: &NameCountsTable,
    schema: &FeatureSchema,
) -> Result<PairFeatureVector> {
    check_schema(schema)?;
    let a = Profile::build(s1, dataset, counts)?;
    let b = Profile::build(s2, dataset, counts)?;
    Ok(PairFeatureVector(compute(&a, &b)))
}

/// Featurizer with per-signature profiles computed once up front.
pub struct Featurizer<'a> {
    dataset: &'a Dataset,
    schema: FeatureSchema,
    profiles: HashMap<&'a str, Profile>,
    dropped: Vec<usize>,
}

impl<'a> Featurizer<'a> {
    pub fn new(dataset: &'a Dataset, counts: &NameCountsTable) -> Result<Self> {
        let profiles = dataset
            .signatures
            .par_iter()
            .map(|(id, sig)| Ok((id.as_str(), Profile::build(sig, dataset, counts)?)))
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(Self {
            dataset,
            schema: FeatureSchema::default(),
            profiles,
            dropped: Vec::new(),
        })
    }

    /// Forces every slot of the given groups to missing.
    pub fn with_dropped_groups(mut self, groups: &BTreeSet<FeatureGroup>) -> Self {
        self.dropped = groups
            .iter()
            .flat_map(|g| self.schema.indices_of_group(*g))
            .collect();
        self.dropped.sort_unstable();
        self
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn featurize(&self, sig_a: &str, sig_b: &str) -> Result<PairFeatureVector> {
        let lookup = |id: &str| {
            self.profiles
                .get(id)
                .ok_or_else(|| Error::Integrity(format!("unknown signature {id}")))
        };
        let mut values = compute(lookup(sig_a)?, lookup(sig_b)?);
        for &i in &self.dropped {
            values[i] = MISSING;
        }
        Ok(PairFeatureVector(values))
    }

    /// Normalized name of a signature, as used for name rules.
    pub fn name_of(&self, sig: &str) -> Option<&NormalizedName> {
        self.profiles.get(sig).map(|p| &p.name)
    }
}
