//! Name normalization and first-initial + last-name blocking.

use std::collections::BTreeMap;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{Dataset, Signature};
use crate::error::{Error, Result};

/// Key marker used in place of the first initial when the first name is missing.
pub const EMPTY_INITIAL: &str = "_";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NormalizedName {
    pub first: String,
    pub middle: String,
    pub last: String,
    pub first_initial: String,
}

impl NormalizedName {
    /// First, middle and last joined with single spaces, skipping empty parts.
    pub fn full(&self) -> String {
        [&self.first, &self.middle, &self.last]
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn block_key(&self) -> String {
        let initial = if self.first_initial.is_empty() {
            EMPTY_INITIAL
        } else {
            &self.first_initial
        };
        format!("{initial} {}", self.last)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub key: String,
    pub members: Vec<String>,
}

impl Block {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Lowercases, folds diacritics, drops punctuation and collapses whitespace.
pub fn normalize_text(raw: &str) -> String {
    let folded: String = raw
        .nfkd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_whitespace() { ' ' } else { c })
        .filter(|c| c.is_alphanumeric() || *c == ' ')
        .collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn normalize_name(
    raw_first: Option<&str>,
    raw_middle: Option<&str>,
    raw_last: &str,
) -> Result<NormalizedName> {
    // Hyphenated and multi-token surnames become one token so that a
    // signature falls in exactly one block.
    let last = normalize_text(raw_last).replace(' ', "");
    if last.is_empty() {
        return Err(Error::InvalidName(format!(
            "last name {raw_last:?} is empty after normalization"
        )));
    }
    let first = raw_first.map(normalize_text).unwrap_or_default();
    let middle = raw_middle.map(normalize_text).unwrap_or_default();
    let first_initial = first.chars().next().map(String::from).unwrap_or_default();
    Ok(NormalizedName {
        first,
        middle,
        last,
        first_initial,
    })
}

pub fn normalize_signature(sig: &Signature) -> Result<NormalizedName> {
    normalize_name(sig.first.as_deref(), sig.middle.as_deref(), &sig.last)
}

pub fn block_key(sig: &Signature) -> Result<String> {
    Ok(normalize_signature(sig)?.block_key())
}

/// Splits a raw "First Middle Last" string into parts. The final token is the
/// last name; a single token is treated as a last name alone.
pub fn split_raw_name(raw: &str) -> Option<(Option<String>, Option<String>, String)> {
    let tokens: Vec<&str> = raw.split_whitespace().collect();
    match tokens.as_slice() {
        [] => None,
        [last] => Some((None, None, last.to_string())),
        [first, last] => Some((Some(first.to_string()), None, last.to_string())),
        [first, middle @ .., last] => Some((
            Some(first.to_string()),
            Some(middle.join(" ")),
            last.to_string(),
        )),
    }
}

/// Normalizes a raw name string, returning `None` when no usable last name remains.
pub fn normalize_raw_name(raw: &str) -> Option<NormalizedName> {
    let (first, middle, last) = split_raw_name(raw)?;
    normalize_name(first.as_deref(), middle.as_deref(), &last).ok()
}

/// Partitions all signatures into blocks, sorted by key; members sorted by id.
pub fn build_blocks(dataset: &Dataset) -> Result<Vec<Block>> {
    let mut by_key: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (id, sig) in &dataset.signatures {
        by_key.entry(block_key(sig)?).or_default().push(id.clone());
    }
    Ok(by_key
        .into_iter()
        .map(|(key, members)| Block { key, members })
        .collect())
}
