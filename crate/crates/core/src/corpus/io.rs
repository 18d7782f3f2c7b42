//! On-disk corpus schema.
//!
//! * `signatures.json`: array of signature objects; absent, null or empty
//!   strings mean missing.
//! * `papers.json`: object `paper_id -> paper`.
//! * `clusters.json`: object `cluster_id -> [signature_id]`.
//! * embeddings: whitespace-separated text, header line `<count> <dim>`, then
//!   one `paper_id v1 .. vdim` line per paper.
//! * `name_counts.json`: the four count maps of [`NameCountsTable`].
//! * `splits.json`: object `block_key -> "train" | "val" | "test"`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use super::{Dataset, NameCountsTable, Paper, Partition, Signature, Split};
use crate::error::{Error, Result};

/// Locations of the files making up one corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetPaths {
    pub papers: PathBuf,
    pub signatures: PathBuf,
    #[serde(default)]
    pub clusters: Option<PathBuf>,
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
}

impl DatasetPaths {
    /// Conventional file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            papers: dir.join("papers.json"),
            signatures: dir.join("signatures.json"),
            clusters: Some(dir.join("clusters.json")),
            embeddings: Some(dir.join("embeddings.txt")),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SignatureRecord {
    signature_id: String,
    paper_id: String,
    author_position: usize,
    #[serde(default)]
    first: Option<String>,
    #[serde(default)]
    middle: Option<String>,
    #[serde(default)]
    last: Option<String>,
    #[serde(default)]
    suffix: Option<String>,
    #[serde(default)]
    affiliations: Vec<String>,
    #[serde(default)]
    email: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AuthorRecord {
    position: usize,
    name: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct PaperRecord {
    #[serde(default)]
    title: Option<String>,
    #[serde(default, rename = "abstract")]
    abstract_text: Option<String>,
    #[serde(default)]
    venue: Option<String>,
    #[serde(default)]
    journal: Option<String>,
    #[serde(default)]
    year: Option<i32>,
    authors: Vec<AuthorRecord>,
    #[serde(default)]
    references: Vec<String>,
    #[serde(default)]
    language: Option<String>,
}

/// JSON object read as an ordered entry list so duplicate keys can be rejected.
struct Entries<V>(Vec<(String, V)>);

impl<'de, V: Deserialize<'de>> Deserialize<'de> for Entries<V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor<V>(PhantomData<V>);

        impl<'de, V: Deserialize<'de>> Visitor<'de> for EntriesVisitor<V> {
            type Value = Entries<V>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::with_capacity(map.size_hint().unwrap_or(0));
                while let Some(entry) = map.next_entry()? {
                    out.push(entry);
                }
                Ok(Entries(out))
            }
        }

        deserializer.deserialize_map(EntriesVisitor(PhantomData))
    }
}

impl<V> Entries<V> {
    fn into_unique_map(self, what: &str) -> Result<BTreeMap<String, V>> {
        let mut map = BTreeMap::new();
        for (k, v) in self.0 {
            if map.contains_key(&k) {
                return Err(Error::Integrity(format!("duplicate {what} id {k}")));
            }
            map.insert(k, v);
        }
        Ok(map)
    }
}

fn present(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.trim().is_empty())
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_papers(path: &Path) -> Result<Vec<Paper>> {
    let entries: Entries<PaperRecord> = read_json(path)?;
    let records = entries.into_unique_map("paper")?;
    let mut papers = Vec::with_capacity(records.len());
    for (paper_id, rec) in records {
        let mut authors = rec.authors;
        authors.sort_by_key(|a| a.position);
        for (i, a) in authors.iter().enumerate() {
            if a.position != i + 1 {
                return Err(Error::Integrity(format!(
                    "paper {paper_id}: author positions must be 1..=n without gaps"
                )));
            }
        }
        let mut reference_ids = BTreeSet::new();
        for r in rec.references {
            if !reference_ids.insert(r.clone()) {
                return Err(Error::Integrity(format!(
                    "paper {paper_id}: duplicate reference {r}"
                )));
            }
        }
        papers.push(Paper {
            paper_id,
            title: rec.title.unwrap_or_default(),
            abstract_text: present(rec.abstract_text),
            venue: present(rec.venue),
            journal: present(rec.journal),
            year: rec.year,
            author_names: authors.into_iter().map(|a| a.name).collect(),
            reference_ids,
            language: present(rec.language),
            embedding: None,
        });
    }
    Ok(papers)
}

fn parse_signatures(path: &Path) -> Result<Vec<Signature>> {
    let records: Vec<SignatureRecord> = read_json(path)?;
    records
        .into_iter()
        .map(|rec| {
            let last = present(rec.last).ok_or_else(|| {
                Error::Integrity(format!("signature {} has no last name", rec.signature_id))
            })?;
            Ok(Signature {
                signature_id: rec.signature_id,
                paper_id: rec.paper_id,
                author_position: rec.author_position,
                first: present(rec.first),
                middle: present(rec.middle),
                last,
                suffix: present(rec.suffix),
                affiliations: rec
                    .affiliations
                    .into_iter()
                    .filter(|a| !a.trim().is_empty())
                    .collect(),
                email: present(rec.email),
            })
        })
        .collect()
}

/// Reads `clusters.json` into a partition.
pub fn load_clusters(path: &Path) -> Result<Partition> {
    let entries: Entries<Vec<String>> = read_json(path)?;
    Partition::from_clusters(entries.into_unique_map("cluster")?)
}

pub fn save_clusters(path: &Path, partition: &Partition) -> Result<()> {
    write_json(path, &partition.clusters())
}

/// Parses an embeddings table. Returns `paper_id -> vector`.
pub fn load_embeddings(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let text = read_to_string(path)?;
    let ctx = || path.display().to_string();
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(ctx(), "missing header"))?;
    let mut parts = header.split_whitespace();
    let count: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(ctx(), "header must be `<count> <dim>`"))?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(ctx(), "header must be `<count> <dim>`"))?;
    let mut out = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        let mut tokens = line.split_whitespace();
        let id = tokens.next().unwrap_or_default().to_string();
        let values = tokens
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(format!("{}:{}", ctx(), lineno + 2), e))?;
        if values.len() != dim {
            return Err(Error::Dimension(format!(
                "embedding for {id} has length {} but header declares {dim}",
                values.len()
            )));
        }
        if out.insert(id.clone(), values).is_some() {
            return Err(Error::Integrity(format!("duplicate embedding for {id}")));
        }
    }
    if out.len() != count {
        return Err(Error::parse(
            ctx(),
            format!("header declares {count} rows, found {}", out.len()),
        ));
    }
    Ok(out)
}

fn save_embeddings(path: &Path, papers: &BTreeMap<String, Paper>) -> Result<()> {
    let rows: Vec<(&String, &Vec<f64>)> = papers
        .iter()
        .filter_map(|(id, p)| p.embedding.as_ref().map(|e| (id, e)))
        .collect();
    let dim = rows.first().map(|(_, e)| e.len()).unwrap_or(0);
    let mut out = format!("{} {dim}\n", rows.len());
    for (id, emb) in rows {
        if id.chars().any(char::is_whitespace) {
            return Err(Error::Integrity(format!(
                "paper id {id:?} contains whitespace and cannot be written to an embeddings table"
            )));
        }
        out.push_str(id);
        for v in emb {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads and validates a corpus.
pub fn load_dataset(
    papers_file: &Path,
    signatures_file: &Path,
    clusters_file: Option<&Path>,
    embeddings_file: Option<&Path>,
) -> Result<Dataset> {
    let mut papers = parse_papers(papers_file)?;
    let signatures = parse_signatures(signatures_file)?;
    let gold = clusters_file.map(load_clusters).transpose()?;
    if let Some(path) = embeddings_file {
        let mut embeddings = load_embeddings(path)?;
        for paper in &mut papers {
            paper.embedding = embeddings.remove(&paper.paper_id);
        }
        if let Some(id) = embeddings.keys().next() {
            return Err(Error::Integrity(format!(
                "embedding given for unknown paper {id}"
            )));
        }
    }
    Dataset::new(papers, signatures, gold)
}

impl DatasetPaths {
    pub fn load(&self) -> Result<Dataset> {
        load_dataset(
            &self.papers,
            &self.signatures,
            self.clusters.as_deref(),
            self.embeddings.as_deref(),
        )
    }
}

/// Writes papers, signatures, and (when present) clusters and embeddings using
/// the conventional names of [`DatasetPaths::in_dir`]. Returns the paths of
/// the files actually written.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<DatasetPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = DatasetPaths::in_dir(dir);

    let papers: BTreeMap<&String, PaperRecord> = dataset
        .papers
        .iter()
        .map(|(id, p)| {
            (
                id,
                PaperRecord {
                    title: Some(p.title.clone()),
                    abstract_text: p.abstract_text.clone(),
                    venue: p.venue.clone(),
                    journal: p.journal.clone(),
                    year: p.year,
                    authors: p
                        .author_names
                        .iter()
                        .enumerate()
                        .map(|(i, name)| AuthorRecord {
                            position: i + 1,
                            name: name.clone(),
                        })
                        .collect(),
                    references: p.reference_ids.iter().cloned().collect(),
                    language: p.language.clone(),
                },
            )
        })
        .collect();
    write_json(&paths.papers, &papers)?;

    let signatures: Vec<SignatureRecord> = dataset
        .signatures
        .values()
        .map(|s| SignatureRecord {
            signature_id: s.signature_id.clone(),
            paper_id: s.paper_id.clone(),
            author_position: s.author_position,
            first: s.first.clone(),
            middle: s.middle.clone(),
            last: Some(s.last.clone()),
            suffix: s.suffix.clone(),
            affiliations: s.affiliations.clone(),
            email: s.email.clone(),
        })
        .collect();
    write_json(&paths.signatures, &signatures)?;

    match &dataset.gold {
        Some(gold) => save_clusters(paths.clusters.as_ref().expect("set by in_dir"), gold)?,
        None => paths.clusters = None,
    }
    if dataset.papers.values().any(|p| p.embedding.is_some()) {
        save_embeddings(
            paths.embeddings.as_ref().expect("set by in_dir"),
            &dataset.papers,
        )?;
    } else {
        paths.embeddings = None;
    }
    if let Some(splits) = &dataset.splits {
        save_splits(&dir.join("splits.json"), splits)?;
    }
    Ok(paths)
}

pub fn load_splits(path: &Path) -> Result<BTreeMap<String, Split>> {
    let entries: Entries<Split> = read_json(path)?;
    entries.into_unique_map("block")
}

pub fn save_splits(path: &Path, splits: &BTreeMap<String, Split>) -> Result<()> {
    write_json(path, splits)
}

pub fn load_name_counts(path: &Path) -> Result<NameCountsTable> {
    read_json(path)
}

pub fn save_name_counts(path: &Path, counts: &NameCountsTable) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let text = serde_json::to_string_pretty(counts)
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    writeln!(f, "{text}").map_err(|e| Error::io(path, e))
}
